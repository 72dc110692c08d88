#pragma once

// The command-line surface: one function per subcommand plus the argv entry
// point. Only this layer touches the file system besides checkpoint/bundle.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dfcn/bundle.hpp"
#include "dfcn/trainer.hpp"

#include <json.hpp>

namespace dfcn {

enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitDivergence = 2, kExitIo = 3 };

struct PrepareOptions {
  std::filesystem::path attributes;
  std::optional<std::filesystem::path> edges;
  std::filesystem::path meta;  // {"n", "d", "k", optional "labels_file"}
  std::optional<std::size_t> knn;
  std::optional<double> heat;
  DegreeMode degree_mode = DegreeMode::self_loop;
  std::filesystem::path out;
};

struct SynthOptions {
  SbmSpec spec;
  std::filesystem::path out;
};

struct TrainOptions {
  std::filesystem::path bundle;
  std::optional<std::filesystem::path> config;
  std::filesystem::path out;
  /// "no-fusion", "single-kl", "lw-only" or "la-only"
  std::optional<std::string> ablate;
};

struct EvalOptions {
  std::filesystem::path bundle;
  std::optional<std::filesystem::path> labels;
  std::optional<std::filesystem::path> checkpoint;
};

struct SweepOptions {
  std::filesystem::path bundle;
  std::optional<std::filesystem::path> config;
  std::string param;                // "lambda" or "gamma"
  std::vector<std::string> values;  // echoed verbatim in the output
  std::filesystem::path out;        // CSV
};

GraphData cmd_prepare(const PrepareOptions& opt);
GraphData cmd_synth(const SynthOptions& opt);

/// Config file (or defaults), then the ablation shorthand, then DFCN_SEED.
TrainConfig resolve_config(const std::optional<std::filesystem::path>& path,
                           const std::optional<std::string>& ablate = std::nullopt);

/// Writes checkpoint.json/.bin, report.json, losses.csv, fusion.csv,
/// embedding.csv, labels.csv and run_manifest.json into opt.out. On divergence
/// the partial loss log and a "diverged" report are written before rethrowing.
TrainReport cmd_train(const TrainOptions& opt);

nlohmann::json cmd_eval(const EvalOptions& opt);

/// One row per requested value: param,value,acc,nmi,ari,f1,final_loss.
std::string cmd_sweep(const SweepOptions& opt);

std::string losses_csv(const std::vector<LossRecord>& history);
std::string fusion_csv(const std::vector<LossRecord>& history);
nlohmann::json eval_to_json(const EvalReport& r);

/// Parses argv, runs the subcommand, maps exceptions to exit codes.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dfcn
