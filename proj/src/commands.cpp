#include "dfcn/commands.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <iostream>
#include <sstream>

#include "dfcn/checkpoint.hpp"
#include "dfcn/cluster.hpp"
#include "dfcn/errors.hpp"
#include "dfcn/rng.hpp"

#include <CLI11.hpp>

namespace dfcn {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json read_json(const fs::path& p) {
  try {
    return json::parse(read_text(p));
  } catch (const json::parse_error& e) {
    throw ValidationError(p.string() + ": " + e.what());
  }
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

std::string utc_timestamp() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

json metrics_or_null(const std::optional<EvalReport>& m) { return m ? eval_to_json(*m) : json(nullptr); }

}  // namespace

json eval_to_json(const EvalReport& r) {
  return {{"acc", r.acc}, {"nmi", r.nmi}, {"ari", r.ari}, {"f1", r.f1}, {"contingency", r.table}, {"mapping", r.mapping}};
}

std::string losses_csv(const std::vector<LossRecord>& history) {
  std::string out = "phase,iteration,l_ae,l_w,l_a,l_igae,l_kl,total\n";
  for (const auto& r : history) {
    out += r.phase + ',' + std::to_string(r.iteration);
    for (double v : {r.l_ae, r.l_w, r.l_a, r.l_igae, r.l_kl, r.total}) out += ',' + format_double(v);
    out += '\n';
  }
  return out;
}

std::string fusion_csv(const std::vector<LossRecord>& history) {
  std::string out = "phase,iteration,alpha,beta\n";
  for (const auto& r : history) {
    if (r.phase != "joint" && r.phase != "finetune") continue;
    out += r.phase + ',' + std::to_string(r.iteration) + ',' + format_double(r.alpha) + ',' + format_double(r.beta) + '\n';
  }
  return out;
}

GraphData cmd_prepare(const PrepareOptions& opt) {
  const json meta = read_json(opt.meta);
  std::size_t n, d, k;
  try {
    n = meta.at("n").get<std::size_t>();
    d = meta.at("d").get<std::size_t>();
    k = meta.at("k").get<std::size_t>();
  } catch (const json::exception& e) {
    throw ValidationError(opt.meta.string() + ": " + e.what());
  }
  Matrix x = read_matrix_csv(opt.attributes);
  if (x.rows() != n)
    throw ValidationError("meta field 'n' is " + std::to_string(n) + " but " + opt.attributes.string() + " has " +
                          std::to_string(x.rows()) + " rows");
  if (x.cols() != d)
    throw ValidationError("meta field 'd' is " + std::to_string(d) + " but " + opt.attributes.string() + " has " +
                          std::to_string(x.cols()) + " columns");

  std::optional<Labels> labels;
  if (meta.contains("labels_file")) {
    labels = read_labels(opt.meta.parent_path() / meta.at("labels_file").get<std::string>());
    if (labels->size() != n)
      throw ValidationError("labels file has " + std::to_string(labels->size()) + " entries, meta field 'n' is " +
                            std::to_string(n));
  }

  if (opt.edges.has_value() == opt.knn.has_value())
    throw ParameterError("prepare: give exactly one of an edge list or --knn");
  if (opt.heat && !opt.knn) throw ParameterError("prepare: --heat requires --knn");
  CsrMatrix a = opt.knn ? knn_heat_graph(x, *opt.knn, opt.heat) : adjacency_from_edges(n, read_edges(*opt.edges));

  GraphData g = make_graph(std::move(x), std::move(a), std::move(labels), k, opt.degree_mode);
  write_bundle(opt.out, g, opt.degree_mode);
  return g;
}

GraphData cmd_synth(const SynthOptions& opt) {
  GraphData g = sbm_synthesize(opt.spec);
  write_bundle(opt.out, g);
  return g;
}

TrainConfig resolve_config(const std::optional<fs::path>& path, const std::optional<std::string>& ablate) {
  TrainConfig c = path ? config_from_json(read_json(*path)) : TrainConfig{};
  if (ablate) {
    if (*ablate == "no-fusion") {
      c.fusion = false;
      c.supervision = Supervision::single;
    } else if (*ablate == "single-kl") {
      c.supervision = Supervision::single;
    } else if (*ablate == "lw-only") {
      c.igae_loss = IgaeLossMode::w_only;
    } else if (*ablate == "la-only") {
      c.igae_loss = IgaeLossMode::a_only;
    } else {
      throw ParameterError("unknown ablation '" + *ablate + "'");
    }
  }
  if (const char* env = std::getenv("DFCN_SEED")) {
    try {
      std::size_t used = 0;
      c.seed = std::stoull(env, &used);
      if (env[used] != '\0') throw std::invalid_argument(env);
    } catch (const std::exception&) {
      throw ParameterError(std::string("DFCN_SEED is not an unsigned integer: '") + env + "'");
    }
  }
  c.validate();
  return c;
}

TrainReport cmd_train(const TrainOptions& opt) {
  BundleInfo info;
  const GraphData g = read_bundle(opt.bundle, &info);
  const TrainConfig config = resolve_config(opt.config, opt.ablate);
  ensure_dir(opt.out);

  TrainReport rep;
  try {
    rep = train(g, config);
  } catch (const DivergenceError& e) {
    write_text(opt.out / "losses.csv", losses_csv(e.history()));
    write_text(opt.out / "fusion.csv", fusion_csv(e.history()));
    const json report{{"status", "diverged"},
                      {"phase", e.phase()},
                      {"iteration", e.iteration()},
                      {"config", config_to_json(config)}};
    write_text(opt.out / "report.json", report.dump(2) + '\n');
    throw;
  }

  save_checkpoint(opt.out / "checkpoint.json", rep.params, "finetune", config);
  const auto& last = rep.history.back();
  const json report{{"status", "ok"},
                    {"config", config_to_json(config)},
                    {"n", g.n()},
                    {"k", g.k},
                    {"finetune_iterations", rep.finetune_iterations},
                    {"early_stopped", rep.early_stopped},
                    {"final_loss", last.total},
                    {"alpha", rep.params.fusion.alpha.item()},
                    {"beta", rep.params.fusion.beta.item()},
                    {"metrics", metrics_or_null(rep.metrics)}};
  const std::vector<std::pair<std::string, std::string>> outputs{
      {"report.json", report.dump(2) + '\n'},
      {"losses.csv", losses_csv(rep.history)},
      {"fusion.csv", fusion_csv(rep.history)},
      {"embedding.csv", matrix_to_csv(rep.embedding)},
      {"labels.csv", labels_to_text(rep.labels)}};
  json out_digests = json::object();
  for (const auto& [name, text] : outputs) {
    write_text(opt.out / name, text);
    out_digests[name] = sha256_hex(text);
  }
  out_digests["checkpoint.json"] = sha256_file(opt.out / "checkpoint.json");
  out_digests["checkpoint.bin"] = sha256_file(opt.out / "checkpoint.bin");

  json inputs = json::object();
  for (const auto& [name, digest] : info.digests) inputs[name] = digest;
  json timings = json::object();
  for (const auto& [phase, s] : rep.phase_seconds) timings[phase] = s;
  const json manifest{{"created", utc_timestamp()},
                      {"bundle", fs::absolute(opt.bundle).lexically_normal().string()},
                      {"config", config_to_json(config)},
                      {"seed", config.seed},
                      {"inputs", inputs},
                      {"outputs", out_digests},
                      {"phase_seconds", timings}};
  write_text(opt.out / "run_manifest.json", manifest.dump(2) + '\n');
  return rep;
}

json cmd_eval(const EvalOptions& opt) {
  const GraphData g = read_bundle(opt.bundle);
  if (!g.labels) throw ValidationError("eval: bundle " + opt.bundle.string() + " has no labels");
  if (opt.labels.has_value() == opt.checkpoint.has_value())
    throw ParameterError("eval: give exactly one of --labels or --checkpoint");

  Labels pred;
  if (opt.labels) {
    pred = read_labels(*opt.labels);
  } else {
    const Checkpoint ck = load_checkpoint(*opt.checkpoint);
    if (ck.params.ae.input_dim() != g.dim())
      throw ShapeError("eval: checkpoint expects d=" + std::to_string(ck.params.ae.input_dim()) + ", bundle has d=" +
                       std::to_string(g.dim()));
    const TrainConfig cfg = config_from_json(ck.config);
    KMeansOptions km;
    km.restarts = cfg.kmeans_restarts;
    km.seed = derive_seed(cfg.seed, 4);
    pred = kmeans(consensus_embedding(g, ck.params, cfg.forward_options()), g.k, km).labels;
  }
  if (pred.size() != g.n())
    throw ValidationError("eval: " + std::to_string(pred.size()) + " predicted labels for " + std::to_string(g.n()) +
                          " nodes");
  return eval_to_json(evaluate(*g.labels, pred, g.k));
}

std::string cmd_sweep(const SweepOptions& opt) {
  const GraphData g = read_bundle(opt.bundle);
  if (!g.labels) throw ValidationError("sweep: bundle " + opt.bundle.string() + " has no labels");
  if (opt.param != "lambda" && opt.param != "gamma")
    throw ParameterError("sweep: --param must be lambda or gamma, got '" + opt.param + "'");
  if (opt.values.empty()) throw ParameterError("sweep: no values");
  const TrainConfig base = resolve_config(opt.config);

  std::string csv = "param,value,acc,nmi,ari,f1,final_loss\n";
  for (const std::string& text : opt.values) {
    double v;
    try {
      std::size_t used = 0;
      v = std::stod(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
    } catch (const std::exception&) {
      throw ParameterError("sweep: not a number: '" + text + "'");
    }
    TrainConfig c = base;
    (opt.param == "lambda" ? c.lambda : c.gamma) = v;
    c.validate();
    const TrainReport r = train(g, c);
    csv += opt.param + ',' + text;
    for (double m : {r.metrics->acc, r.metrics->nmi, r.metrics->ari, r.metrics->f1, r.history.back().total})
      csv += ',' + format_double(m);
    csv += '\n';
  }
  if (!opt.out.empty()) write_text(opt.out, csv);
  return csv;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Deep fusion clustering of attributed graphs", "dfcn"};
  app.require_subcommand(1);

  PrepareOptions prep;
  std::string degree_mode = "self_loop";
  auto* sp = app.add_subcommand("prepare", "Build a graph bundle from attributes plus edges or a kNN graph");
  sp->add_option("--attributes", prep.attributes, "N x d attribute CSV")->required();
  sp->add_option("--edges", prep.edges, "edge list, one 'u v' per line");
  sp->add_option("--meta", prep.meta, "JSON with n, d, k and optional labels_file")->required();
  sp->add_option("--knn", prep.knn, "build a heat-kernel kNN graph with this many neighbours");
  sp->add_option("--heat", prep.heat, "heat-kernel bandwidth (default: mean squared distance)");
  sp->add_option("--degree-mode", degree_mode, "self_loop or literal");
  sp->add_option("--out", prep.out, "bundle directory")->required();

  SynthOptions syn;
  auto* ss = app.add_subcommand("synth", "Generate a stochastic block model bundle");
  ss->add_option("--blocks", syn.spec.k, "number of blocks");
  ss->add_option("--sizes", syn.spec.sizes, "nodes per block")->delimiter(',');
  ss->add_option("--p-in", syn.spec.p_in, "within-block edge probability");
  ss->add_option("--p-out", syn.spec.p_out, "between-block edge probability");
  ss->add_option("--dim", syn.spec.attr_dim, "attribute dimension");
  ss->add_option("--sep", syn.spec.attr_sep, "distance between attribute centers");
  ss->add_option("--seed", syn.spec.seed, "random seed");
  ss->add_option("--out", syn.out, "bundle directory")->required();

  TrainOptions tr;
  auto* st = app.add_subcommand("train", "Run all three training phases");
  st->add_option("bundle", tr.bundle, "graph bundle directory")->required();
  st->add_option("--config", tr.config, "JSON config; keys are TrainConfig field names");
  st->add_option("--out", tr.out, "output directory")->required();
  st->add_option("--ablate", tr.ablate, "no-fusion, single-kl, lw-only or la-only");

  EvalOptions ev;
  auto* se = app.add_subcommand("eval", "Score predicted labels against the bundle's labels");
  se->add_option("bundle", ev.bundle, "graph bundle directory")->required();
  se->add_option("--labels", ev.labels, "predicted labels, one per line");
  se->add_option("--checkpoint", ev.checkpoint, "checkpoint manifest to cluster with");

  SweepOptions sw;
  std::string values;
  auto* sv = app.add_subcommand("sweep", "Train once per hyper-parameter value");
  sv->add_option("bundle", sw.bundle, "graph bundle directory")->required();
  sv->add_option("--config", sw.config, "base JSON config");
  sv->add_option("--param", sw.param, "lambda or gamma")->required();
  sv->add_option("--values", values, "comma-separated values")->required();
  sv->add_option("--out", sw.out, "CSV output (stdout if omitted)");

  try {
    app.parse(argc, argv);
    if (*sp) {
      prep.degree_mode = parse_degree_mode(degree_mode);
      const GraphData g = cmd_prepare(prep);
      out << "wrote " << prep.out.string() << " (n=" << g.n() << ", d=" << g.dim() << ", edges=" << g.adjacency.nnz() / 2 << ")\n";
    } else if (*ss) {
      if (!ss->count("--sizes")) {
        syn.spec.sizes.assign(syn.spec.k, 50);
      } else if (!ss->count("--blocks")) {
        syn.spec.k = syn.spec.sizes.size();
      } else if (syn.spec.sizes.size() != syn.spec.k) {
        throw ParameterError("synth: --sizes lists " + std::to_string(syn.spec.sizes.size()) + " blocks, --blocks is " +
                             std::to_string(syn.spec.k));
      }
      const GraphData g = cmd_synth(syn);
      out << "wrote " << syn.out.string() << " (n=" << g.n() << ", d=" << g.dim() << ", edges=" << g.adjacency.nnz() / 2 << ")\n";
    } else if (*st) {
      const TrainReport r = cmd_train(tr);
      out << "trained " << r.finetune_iterations << " fine-tuning iterations";
      if (r.metrics) out << "; acc=" << r.metrics->acc << " nmi=" << r.metrics->nmi << " ari=" << r.metrics->ari << " f1=" << r.metrics->f1;
      out << '\n';
    } else if (*se) {
      out << cmd_eval(ev).dump(2) << '\n';
    } else if (*sv) {
      std::stringstream ss_values(values);
      for (std::string v; std::getline(ss_values, v, ',');) sw.values.push_back(v);
      const std::string csv = cmd_sweep(sw);
      if (sw.out.empty()) out << csv;
    }
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitValidation;
  } catch (const DivergenceError& e) {
    err << "dfcn: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const IoError& e) {
    err << "dfcn: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << "dfcn: " << e.what() << '\n';
    return kExitValidation;
  }
}

}  // namespace dfcn
