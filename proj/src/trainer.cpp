#include "dfcn/trainer.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <map>

#include "dfcn/cluster.hpp"
#include "dfcn/kernels.hpp"
#include "dfcn/rng.hpp"

namespace dfcn {

namespace {

// Seed streams derived from TrainConfig::seed.
constexpr std::uint64_t kStreamAe = 1;
constexpr std::uint64_t kStreamIgae = 2;
constexpr std::uint64_t kStreamCenters = 3;
constexpr std::uint64_t kStreamFinal = 4;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

/// Constant inputs shared by every step.
struct StepInputs {
  Matrix ax;       // A_norm X
  Matrix a_dense;  // densified A_norm
  explicit StepInputs(const GraphData& g) : ax(spmm(*g.adj_norm, g.x)), a_dense(g.adj_norm->to_dense()) {}
};

struct PhaseLog {
  std::vector<LossRecord>* sink;
  const IterationCallback* callback;
  std::vector<LossRecord> local;

  void push(const LossRecord& r) {
    local.push_back(r);
    if (sink) sink->push_back(r);
    if (callback && *callback) (*callback)(r);
  }
  [[noreturn]] void diverged(const LossRecord& r) {
    throw DivergenceError(r.phase, r.iteration, sink ? *sink : local);
  }
};

std::vector<Var> ordered_leaves(const AeVars& v) {
  std::vector<Var> out;
  for (std::size_t i = 0; i < v.enc_w.size(); ++i) {
    out.push_back(v.enc_w[i]);
    out.push_back(v.enc_b[i]);
  }
  for (std::size_t i = 0; i < v.dec_w.size(); ++i) {
    out.push_back(v.dec_w[i]);
    out.push_back(v.dec_b[i]);
  }
  return out;
}

std::vector<Var> ordered_leaves(const IgaeVars& v) {
  std::vector<Var> out(v.enc_w);
  out.insert(out.end(), v.dec_w.begin(), v.dec_w.end());
  return out;
}

std::vector<Var> ordered_leaves(const ModelVars& v) {
  std::vector<Var> out = ordered_leaves(v.ae);
  for (Var x : ordered_leaves(v.igae)) out.push_back(x);
  out.push_back(v.alpha);
  out.push_back(v.beta);
  if (v.centers) out.push_back(*v.centers);
  return out;
}

std::vector<Matrix> gradients(const Tape& tape, const std::vector<Var>& leaves) {
  std::vector<Matrix> g;
  g.reserve(leaves.size());
  for (Var v : leaves) g.push_back(tape.grad(v));
  return g;
}

bool finite(const LossRecord& r) { return std::isfinite(r.total); }

}  // namespace

Supervision parse_supervision(std::string_view s) {
  if (s == "triplet") return Supervision::triplet;
  if (s == "single") return Supervision::single;
  throw ParameterError("unknown supervision '" + std::string(s) + "'");
}

std::string_view to_string(Supervision s) { return s == Supervision::triplet ? "triplet" : "single"; }

void TrainConfig::validate() const {
  auto fail = [](const std::string& m) { throw ParameterError("config: " + m); };
  if (!(gamma >= 0.0)) fail("gamma must be >= 0");
  if (!(lambda >= 0.0)) fail("lambda must be >= 0");
  if (T < 1) fail("T must be >= 1");
  if (iters_pre < 1 || iters_joint < 1 || iters_finetune < 1) fail("iteration counts must be >= 1");
  if (!(lr >= 0.0)) fail("lr must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) fail("Adam betas must lie in [0, 1)");
  if (!(adam_eps > 0.0)) fail("adam_eps must be > 0");
  if (!(min_delta >= 0.0)) fail("min_delta must be >= 0");
  if (latent_dim < 1) fail("latent_dim must be >= 1");
  for (std::size_t h : ae_hidden)
    if (h < 1) fail("ae_hidden entries must be >= 1");
  for (std::size_t h : igae_hidden)
    if (h < 1) fail("igae_hidden entries must be >= 1");
  if (!(student_t_dof > 0.0)) fail("student_t_dof must be > 0");
  if (kmeans_restarts < 1) fail("kmeans_restarts must be >= 1");
}

double lr_preset(std::string_view name) {
  static const std::map<std::string, double, std::less<>> presets{
      {"usps", 1e-3}, {"hhar", 1e-3}, {"reut", 1e-4}, {"dblp", 1e-4}, {"cite", 1e-4}, {"acm", 5e-5}};
  const auto it = presets.find(name);
  if (it == presets.end()) throw ParameterError("unknown lr_preset '" + std::string(name) + "'");
  return it->second;
}

TrainConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParameterError("config must be a JSON object");
  TrainConfig c;
  static const std::vector<std::string> known{
      "gamma", "lambda", "T", "iters_pre", "iters_joint", "iters_finetune", "iters_finetune_max",
      "lr", "lr_preset", "beta1", "beta2", "adam_eps", "seed", "patience", "min_delta", "fusion",
      "supervision", "igae_loss", "multi_level_adjacency", "ae_hidden", "igae_hidden",
      "latent_dim", "ae_activation", "gcn_activation", "student_t_dof", "kmeans_restarts"};
  for (const auto& [key, _] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ParameterError("config: unknown key '" + key + "'");
  try {
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::remove_reference_t<decltype(field)>>();
    };
    get("gamma", c.gamma);
    get("lambda", c.lambda);
    get("T", c.T);
    get("iters_pre", c.iters_pre);
    get("iters_joint", c.iters_joint);
    get("iters_finetune", c.iters_finetune);
    c.iters_finetune_max = c.iters_finetune;
    get("iters_finetune_max", c.iters_finetune_max);
    if (j.contains("lr_preset")) c.lr = lr_preset(j.at("lr_preset").get<std::string>());
    get("lr", c.lr);
    get("beta1", c.beta1);
    get("beta2", c.beta2);
    get("adam_eps", c.adam_eps);
    get("seed", c.seed);
    get("patience", c.patience);
    get("min_delta", c.min_delta);
    get("fusion", c.fusion);
    if (j.contains("supervision")) c.supervision = parse_supervision(j.at("supervision").get<std::string>());
    if (j.contains("igae_loss")) c.igae_loss = parse_igae_loss_mode(j.at("igae_loss").get<std::string>());
    get("multi_level_adjacency", c.multi_level_adjacency);
    get("ae_hidden", c.ae_hidden);
    get("igae_hidden", c.igae_hidden);
    get("latent_dim", c.latent_dim);
    if (j.contains("ae_activation")) c.ae_activation = parse_activation(j.at("ae_activation").get<std::string>());
    if (j.contains("gcn_activation")) c.gcn_activation = parse_activation(j.at("gcn_activation").get<std::string>());
    get("student_t_dof", c.student_t_dof);
    get("kmeans_restarts", c.kmeans_restarts);
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::json config_to_json(const TrainConfig& c) {
  return {{"gamma", c.gamma},
          {"lambda", c.lambda},
          {"T", c.T},
          {"iters_pre", c.iters_pre},
          {"iters_joint", c.iters_joint},
          {"iters_finetune", c.iters_finetune},
          {"iters_finetune_max", c.iters_finetune_max},
          {"lr", c.lr},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"adam_eps", c.adam_eps},
          {"seed", c.seed},
          {"patience", c.patience},
          {"min_delta", c.min_delta},
          {"fusion", c.fusion},
          {"supervision", std::string(to_string(c.supervision))},
          {"igae_loss", std::string(to_string(c.igae_loss))},
          {"multi_level_adjacency", c.multi_level_adjacency},
          {"ae_hidden", c.ae_hidden},
          {"igae_hidden", c.igae_hidden},
          {"latent_dim", c.latent_dim},
          {"ae_activation", std::string(to_string(c.ae_activation))},
          {"gcn_activation", std::string(to_string(c.gcn_activation))},
          {"student_t_dof", c.student_t_dof},
          {"kmeans_restarts", c.kmeans_restarts}};
}

std::vector<LossRecord> TrainReport::phase(std::string_view name) const {
  std::vector<LossRecord> out;
  for (const auto& r : history)
    if (r.phase == name) out.push_back(r);
  return out;
}

ModelParams init_model(std::size_t input_dim, const TrainConfig& config) {
  config.validate();
  ModelParams m;
  m.ae = init_ae(input_dim, config.ae_hidden, config.latent_dim, derive_seed(config.seed, kStreamAe));
  m.ae.activation = config.ae_activation;
  m.igae = init_igae(input_dim, config.igae_hidden, config.latent_dim, derive_seed(config.seed, kStreamIgae));
  m.igae.activation = config.gcn_activation;
  return m;
}

namespace {

AeParams run_pretrain_ae(const GraphData& data, const TrainConfig& config, AeParams p, PhaseLog& log) {
  AdamState state;
  for (std::size_t it = 1; it <= config.iters_pre; ++it) {
    Tape tape;
    const AeVars v = bind(tape, p, true);
    Var x = tape.constant(data.x);
    Var loss = ae_loss(x, ae_decode(ae_encode(x, v), v));
    LossRecord r{"pretrain_ae", it};
    r.l_ae = r.total = loss.value().item();
    if (!finite(r)) log.diverged(r);
    log.push(r);
    tape.backward(loss);
    adam_step(p.named_params(), gradients(tape, ordered_leaves(v)), state, config.adam());
  }
  return p;
}

IgaeParams run_pretrain_igae(const GraphData& data, const TrainConfig& config, IgaeParams p,
                             PhaseLog& log) {
  const StepInputs in(data);
  AdamState state;
  for (std::size_t it = 1; it <= config.iters_pre; ++it) {
    Tape tape;
    const IgaeVars v = bind(tape, p, true);
    Var x = tape.constant(data.x);
    Var z = igae_encode(data.adj_norm, x, v);
    const IgaeDecoded dec = igae_decode(data.adj_norm, z, v);
    Var a_hat = config.multi_level_adjacency ? reconstruct_adjacency_multilevel(z, dec.last_hidden)
                                             : reconstruct_adjacency(z);
    const IgaeLossVars loss =
        igae_loss(tape.constant(in.ax), tape.constant(in.a_dense), dec.z_hat, a_hat, config.gamma, config.igae_loss);
    LossRecord r{"pretrain_igae", it};
    r.l_w = loss.l_w.value().item();
    r.l_a = loss.l_a.value().item();
    r.l_igae = r.total = loss.total.value().item();
    if (!finite(r)) log.diverged(r);
    log.push(r);
    tape.backward(loss.total);
    adam_step(p.named_params(), gradients(tape, ordered_leaves(v)), state, config.adam());
  }
  return p;
}

ModelParams run_joint(const GraphData& data, ModelParams p, const TrainConfig& config, PhaseLog& log) {
  const StepInputs in(data);
  p.centers = Matrix{};
  AdamState state;
  for (std::size_t it = 1; it <= config.iters_joint; ++it) {
    Tape tape;
    const ModelVars v = bind(tape, p, true);
    Var x = tape.constant(data.x);
    const ForwardTrace tr = saif_forward(x, data.adj_norm, v, config.forward_options());
    Var l_ae = ae_loss(x, tr.x_hat);
    const IgaeLossVars ig = igae_loss(tape.constant(in.ax), tape.constant(in.a_dense), tr.z_hat,
                                      tr.a_hat, config.gamma, config.igae_loss);
    Var total = ad::add(l_ae, ig.total);
    LossRecord r{"joint", it};
    r.l_ae = l_ae.value().item();
    r.l_w = ig.l_w.value().item();
    r.l_a = ig.l_a.value().item();
    r.l_igae = ig.total.value().item();
    r.total = total.value().item();
    r.alpha = p.fusion.alpha.item();
    r.beta = p.fusion.beta.item();
    if (!finite(r)) log.diverged(r);
    log.push(r);
    tape.backward(total);
    adam_step(p.named_params(), gradients(tape, ordered_leaves(v)), state, config.adam());
  }
  return p;
}

TrainReport run_finetune(const GraphData& data, ModelParams params, const Centers& centers,
                         const TrainConfig& config, PhaseLog& log) {
  config.validate();
  if (centers.u.rows() != data.k)
    throw ParameterError("finetune: " + std::to_string(centers.u.rows()) + " centers for K=" +
                         std::to_string(data.k));
  params.centers = centers.u;
  TrainConfig cfg = config;
  cfg.student_t_dof = centers.dof;

  AdamState state;
  Matrix target;
  double best = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  const std::size_t max_iters = std::max(cfg.iters_finetune, cfg.iters_finetune_max);
  TrainReport report;
  for (std::size_t it = 1; it <= max_iters; ++it) {
    Tape tape;
    const ModelVars v = bind(tape, params, true);
    const bool refresh = it == 1 || it % cfg.T == 0;
    const JointLoss jl = joint_loss(tape, data, v, target, refresh, cfg);
    LossRecord r{"finetune", it};
    r.l_ae = jl.l_ae.value().item();
    r.l_w = jl.l_w.value().item();
    r.l_a = jl.l_a.value().item();
    r.l_igae = jl.l_igae.value().item();
    r.l_kl = jl.l_kl.value().item();
    r.total = jl.total.value().item();
    r.alpha = params.fusion.alpha.item();
    r.beta = params.fusion.beta.item();
    if (!finite(r)) log.diverged(r);
    log.push(r);
    tape.backward(jl.total);
    adam_step(params.named_params(), gradients(tape, ordered_leaves(v)), state, cfg.adam());
    report.finetune_iterations = it;

    if (r.total < best - cfg.min_delta) {
      best = r.total;
      since_best = 0;
    } else {
      ++since_best;
    }
    if (cfg.patience > 0 && it >= cfg.iters_finetune && since_best >= cfg.patience) {
      report.early_stopped = true;
      break;
    }
  }
  if (!params.fusion.alpha.all_finite()) log.diverged(log.local.back());

  report.embedding = consensus_embedding(data, params, cfg.forward_options());
  KMeansOptions km;
  km.restarts = cfg.kmeans_restarts;
  km.seed = derive_seed(cfg.seed, kStreamFinal);
  report.labels = kmeans(report.embedding, data.k, km).labels;
  if (data.labels) report.metrics = evaluate(*data.labels, report.labels, data.k);
  report.params = std::move(params);
  return report;
}

}  // namespace

AeParams pretrain_ae(const GraphData& data, const TrainConfig& config, AeParams init,
                     std::vector<LossRecord>* log) {
  config.validate();
  PhaseLog pl{log, nullptr, {}};
  return run_pretrain_ae(data, config, std::move(init), pl);
}

AeParams pretrain_ae(const GraphData& data, const TrainConfig& config) {
  return pretrain_ae(data, config, init_model(data.dim(), config).ae);
}

IgaeParams pretrain_igae(const GraphData& data, const TrainConfig& config, IgaeParams init,
                         std::vector<LossRecord>* log) {
  config.validate();
  PhaseLog pl{log, nullptr, {}};
  return run_pretrain_igae(data, config, std::move(init), pl);
}

IgaeParams pretrain_igae(const GraphData& data, const TrainConfig& config) {
  return pretrain_igae(data, config, init_model(data.dim(), config).igae);
}

ModelParams joint_pretrain(const GraphData& data, ModelParams params, const TrainConfig& config,
                           std::vector<LossRecord>* log) {
  config.validate();
  PhaseLog pl{log, nullptr, {}};
  return run_joint(data, std::move(params), config, pl);
}

Centers init_centers(const Matrix& z_tilde, std::size_t k, const TrainConfig& config) {
  if (k > z_tilde.rows())
    throw ParameterError("init_centers: K=" + std::to_string(k) + " exceeds N=" + std::to_string(z_tilde.rows()));
  KMeansOptions km;
  km.restarts = config.kmeans_restarts;
  km.seed = derive_seed(config.seed, kStreamCenters);
  return Centers{kmeans(z_tilde, k, km).centers, config.student_t_dof};
}

JointLoss joint_loss(Tape& tape, const GraphData& data, const ModelVars& vars, Matrix& target,
                     bool refresh_target, const TrainConfig& config) {
  if (!vars.centers) throw ContractError("joint_loss: model has no cluster centers");
  JointLoss jl;
  Var x = tape.constant(data.x);
  jl.trace = saif_forward(x, data.adj_norm, vars, config.forward_options());
  jl.l_ae = ae_loss(x, jl.trace.x_hat);
  const IgaeLossVars ig =
      igae_loss(tape.constant(spmm(*data.adj_norm, data.x)), tape.constant(data.adj_norm->to_dense()),
                jl.trace.z_hat, jl.trace.a_hat, config.gamma, config.igae_loss);
  jl.l_w = ig.l_w;
  jl.l_a = ig.l_a;
  jl.l_igae = ig.total;

  const Var u = *vars.centers;
  jl.q = soft_assign(jl.trace.z_tilde, u, config.student_t_dof);
  jl.q_igae = soft_assign(jl.trace.z_igae, u, config.student_t_dof);
  jl.q_ae = soft_assign(jl.trace.z_ae, u, config.student_t_dof);
  if (refresh_target || target.empty()) target = target_distribution(jl.q.value());
  jl.l_kl = config.supervision == Supervision::triplet ? triplet_kl(target, jl.q, jl.q_igae, jl.q_ae)
                                                       : single_kl(target, jl.q);
  jl.total = ad::add(ad::add(jl.l_ae, jl.l_igae), ad::scale(jl.l_kl, config.lambda));
  return jl;
}

Matrix current_target(const GraphData& data, const ModelParams& params, const TrainConfig& config) {
  if (params.centers.empty()) throw ContractError("current_target: model has no cluster centers");
  const Matrix z = consensus_embedding(data, params, config.forward_options());
  return target_distribution(soft_assign(z, Centers{params.centers, config.student_t_dof}));
}

TrainReport finetune(const GraphData& data, ModelParams params, const Centers& centers,
                     const TrainConfig& config, const IterationCallback& on_iteration) {
  std::vector<LossRecord> history;
  PhaseLog pl{&history, &on_iteration, {}};
  TrainReport r = run_finetune(data, std::move(params), centers, config, pl);
  r.history = std::move(history);
  return r;
}

TrainReport train(const GraphData& data, const TrainConfig& config, const IterationCallback& on_iteration) {
  config.validate();
  data.validate();
  std::vector<LossRecord> history;
  PhaseLog pl{&history, &on_iteration, {}};
  std::vector<std::pair<std::string, double>> timings;

  ModelParams m = init_model(data.dim(), config);
  auto t0 = Clock::now();
  m.ae = run_pretrain_ae(data, config, std::move(m.ae), pl);
  timings.emplace_back("pretrain_ae", seconds_since(t0));
  t0 = Clock::now();
  m.igae = run_pretrain_igae(data, config, std::move(m.igae), pl);
  timings.emplace_back("pretrain_igae", seconds_since(t0));
  t0 = Clock::now();
  m = run_joint(data, std::move(m), config, pl);
  timings.emplace_back("joint", seconds_since(t0));
  t0 = Clock::now();
  const Centers centers = init_centers(consensus_embedding(data, m, config.forward_options()), data.k, config);
  timings.emplace_back("init_centers", seconds_since(t0));
  t0 = Clock::now();
  TrainReport report = run_finetune(data, std::move(m), centers, config, pl);
  timings.emplace_back("finetune", seconds_since(t0));
  report.history = std::move(history);
  report.phase_seconds = std::move(timings);
  return report;
}

TrainReport train_igae_only(const GraphData& data, const TrainConfig& config, std::size_t iterations) {
  TrainConfig cfg = config;
  cfg.iters_pre = iterations;
  cfg.validate();
  data.validate();
  std::vector<LossRecord> history;
  PhaseLog pl{&history, nullptr, {}};
  const auto t0 = Clock::now();
  TrainReport report;
  report.params = init_model(data.dim(), cfg);
  report.params.igae = run_pretrain_igae(data, cfg, std::move(report.params.igae), pl);
  report.phase_seconds.emplace_back("pretrain_igae", seconds_since(t0));

  Tape tape;
  const IgaeVars v = bind(tape, report.params.igae, false);
  report.embedding = igae_encode(data.adj_norm, tape.constant(data.x), v).value();
  KMeansOptions km;
  km.restarts = cfg.kmeans_restarts;
  km.seed = derive_seed(cfg.seed, kStreamFinal);
  report.labels = kmeans(report.embedding, data.k, km).labels;
  if (data.labels) report.metrics = evaluate(*data.labels, report.labels, data.k);
  report.history = std::move(history);
  return report;
}

}  // namespace dfcn
