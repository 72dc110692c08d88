#pragma once

// Three-phase training: independent pretraining of both autoencoders, joint
// pretraining through the fusion module, then self-supervised fine-tuning
// against the sharpened target distribution.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dfcn/adam.hpp"
#include "dfcn/errors.hpp"
#include "dfcn/graph.hpp"
#include "dfcn/metrics.hpp"
#include "dfcn/saif.hpp"
#include "dfcn/selfsup.hpp"

#include <json.hpp>

namespace dfcn {

enum class Supervision { triplet, single };

Supervision parse_supervision(std::string_view s);
std::string_view to_string(Supervision s);

struct TrainConfig {
  double gamma = 0.1;
  double lambda = 10.0;
  /// Target distribution refresh interval, in fine-tuning iterations.
  std::size_t T = 1;
  std::size_t iters_pre = 30;
  std::size_t iters_joint = 100;
  /// Minimum fine-tuning iterations; early stopping is only considered after these.
  std::size_t iters_finetune = 200;
  /// Hard cap on fine-tuning iterations (raised to iters_finetune if smaller).
  std::size_t iters_finetune_max = 200;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  /// Fine-tuning stops after this many iterations without a total-loss
  /// improvement larger than min_delta. 0 disables early stopping.
  std::size_t patience = 50;
  double min_delta = 1e-6;

  bool fusion = true;
  Supervision supervision = Supervision::triplet;
  IgaeLossMode igae_loss = IgaeLossMode::both;
  bool multi_level_adjacency = false;

  std::vector<std::size_t> ae_hidden{128, 256, 512};
  std::vector<std::size_t> igae_hidden{128, 256};
  std::size_t latent_dim = 20;
  Activation ae_activation = Activation::leaky_relu;
  Activation gcn_activation = Activation::tanh;
  double student_t_dof = 1.0;
  std::size_t kmeans_restarts = 20;

  /// Throws ParameterError on out-of-range values.
  void validate() const;
  AdamOptions adam() const { return {lr, beta1, beta2, adam_eps}; }
  ForwardOptions forward_options() const { return {fusion, multi_level_adjacency}; }
};

/// Learning rates per dataset family ("usps", "hhar", "reut", "dblp", "cite", "acm").
double lr_preset(std::string_view name);

/// Keys are the TrainConfig field names. Missing keys keep their defaults; an
/// optional "lr_preset" sets lr when "lr" itself is absent. Unknown keys are rejected.
TrainConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const TrainConfig& c);

/// One optimizer step; losses are evaluated before the update.
struct LossRecord {
  std::string phase;  ///< "pretrain_ae", "pretrain_igae", "joint" or "finetune"
  std::size_t iteration = 0;  ///< 1-based within the phase
  double l_ae = 0.0;
  double l_w = 0.0;
  double l_a = 0.0;
  double l_igae = 0.0;
  double l_kl = 0.0;
  double total = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
};

using IterationCallback = std::function<void(const LossRecord&)>;

struct TrainReport {
  std::vector<LossRecord> history;
  ModelParams params;
  Matrix embedding;  ///< final consensus embedding
  Labels labels;     ///< K-means on the final embedding
  std::optional<EvalReport> metrics;
  std::size_t finetune_iterations = 0;
  bool early_stopped = false;
  std::vector<std::pair<std::string, double>> phase_seconds;

  std::vector<LossRecord> phase(std::string_view name) const;
};

/// Raised when a loss turns non-finite; carries every record logged before it.
class DivergenceError : public TrainingError {
 public:
  DivergenceError(std::string phase, std::size_t iteration, std::vector<LossRecord> history)
      : TrainingError(phase, iteration,
                      "training diverged in " + phase + " at iteration " + std::to_string(iteration)),
        history_(std::move(history)) {}
  const std::vector<LossRecord>& history() const noexcept { return history_; }

 private:
  std::vector<LossRecord> history_;
};

/// Fresh parameters for `data` per the config's dimensions and seed.
ModelParams init_model(std::size_t input_dim, const TrainConfig& config);

/// AE alone, decoder fed Z_AE.
AeParams pretrain_ae(const GraphData& data, const TrainConfig& config, AeParams init,
                     std::vector<LossRecord>* log = nullptr);
AeParams pretrain_ae(const GraphData& data, const TrainConfig& config);

/// IGAE alone, decoder and A_hat fed Z_IGAE.
IgaeParams pretrain_igae(const GraphData& data, const TrainConfig& config, IgaeParams init,
                         std::vector<LossRecord>* log = nullptr);
IgaeParams pretrain_igae(const GraphData& data, const TrainConfig& config);

/// L_AE + L_IGAE through the full fused forward pass; alpha and beta learn too.
ModelParams joint_pretrain(const GraphData& data, ModelParams params, const TrainConfig& config,
                           std::vector<LossRecord>* log = nullptr);

/// K-means centers of the consensus embedding.
Centers init_centers(const Matrix& z_tilde, std::size_t k, const TrainConfig& config);

/// Loss terms of one fine-tuning step on an existing tape.
struct JointLoss {
  Var l_ae, l_w, l_a, l_igae, l_kl, total;
  ForwardTrace trace;
  Var q, q_igae, q_ae;
};

/// Builds L = L_AE + L_IGAE + lambda L_KL. P is treated as a constant; when
/// `refresh_target` is set (or `target` is empty) it is first recomputed from Q.
JointLoss joint_loss(Tape& tape, const GraphData& data, const ModelVars& vars, Matrix& target,
                     bool refresh_target, const TrainConfig& config);

/// Target distribution of the current model (Q from Z~).
Matrix current_target(const GraphData& data, const ModelParams& params, const TrainConfig& config);

TrainReport finetune(const GraphData& data, ModelParams params, const Centers& centers,
                     const TrainConfig& config, const IterationCallback& on_iteration = {});

/// All three phases plus final clustering and, when labels exist, metrics.
TrainReport train(const GraphData& data, const TrainConfig& config,
                  const IterationCallback& on_iteration = {});

/// The graph autoencoder on its own: `iterations` steps of IGAE training under
/// config.igae_loss, then K-means on Z_IGAE. Used for the reconstruction ablation.
TrainReport train_igae_only(const GraphData& data, const TrainConfig& config, std::size_t iterations);

}  // namespace dfcn
