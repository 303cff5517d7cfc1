#include "rgd/pipeline.hpp"

#include <chrono>
#include <cstdio>

#include "rgd/csv.hpp"
#include "rgd/io.hpp"
#include "rgd/parallel.hpp"
#include "rgd/svg.hpp"

namespace rgd::pipeline {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSaltDiffusion = 0xd1f5u;
constexpr std::uint64_t kSaltProxy = 0x9907u;
constexpr std::uint64_t kSaltRefine = 0x4ef1u;
constexpr std::uint64_t kSaltMean = 0x6ea7u;

class Manifest {
 public:
  Manifest(const RunConfig& cfg, const std::string& stage) : stage_(stage) {
    j_["stage"] = stage;
    j_["schema_version"] = 1;
    j_["toolkit_version"] = "0.1.0";
    j_["resolved_config"] = cfg.raw();
    j_["config_digest"] = cfg.digest();
    j_["inputs"] = json::object();
    j_["outputs"] = json::object();
    j_["wall_clock_seconds"] = json::object();
  }
  void input(const std::string& name, const fs::path& p) {
    j_["inputs"][name] = file_checksum(p);
  }
  void output(const std::string& name, const fs::path& p) {
    j_["outputs"][name] = file_checksum(p);
  }
  void note(const std::string& key, const json& value) { j_[key] = value; }
  void phase(const std::string& name, double seconds) {
    j_["wall_clock_seconds"][name] = seconds;
  }
  void write(const fs::path& out_dir) const {
    write_text_file(out_dir / ("manifest_" + stage_ + ".json"), j_.dump(2) + "\n");
  }

 private:
  std::string stage_;
  json j_;
};

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - start_).count();
    start_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

void write_loss_csv(const fs::path& path, const std::vector<double>& loss) {
  CsvWriter csv(path);
  csv.header({"step", "loss"});
  for (std::size_t i = 0; i < loss.size(); ++i)
    csv.row({static_cast<double>(i), loss[i]});
}

ScoreNet load_diffusion(const RunConfig& cfg) {
  return ScoreNet::load(diffusion_dir(cfg));
}

ProxyModel load_proxy_for(const RunConfig& cfg, bool refined) {
  const fs::path dir = refined ? refined_proxy_dir(cfg) : proxy_dir(cfg);
  if (refined && !fs::exists(dir / "manifest.json")) return ProxyModel::load(proxy_dir(cfg));
  return ProxyModel::load(dir);
}

double resolve_condition(const RunConfig::SamplerParams& sp, const OfflineDataset& ds) {
  const double base = sp.y_cond_from_data ? ds.y_max() : sp.sampler.y_cond;
  return sp.y_cond_from_data ? base * sp.y_ratio : base;
}

}  // namespace

fs::path dataset_dir(const RunConfig& cfg) { return cfg.out_dir() / "dataset"; }
fs::path diffusion_dir(const RunConfig& cfg) { return cfg.out_dir() / "diffusion"; }
fs::path proxy_dir(const RunConfig& cfg) { return cfg.out_dir() / "proxy"; }
fs::path refined_proxy_dir(const RunConfig& cfg) { return cfg.out_dir() / "proxy_refined"; }
fs::path candidates_path(const RunConfig& cfg, const std::string& variant) {
  return cfg.out_dir() / ("candidates_" + variant + ".csv");
}
fs::path omega_path(const RunConfig& cfg, const std::string& variant) {
  return cfg.out_dir() / ("omega_" + variant + ".csv");
}

void cmd_gen_data(const RunConfig& cfg) {
  fs::create_directories(cfg.out_dir());
  Manifest man(cfg, "gen_data");
  Stopwatch clock;
  const Task task = cfg.task();
  const auto dp = cfg.dataset();
  const OfflineDataset ds = generate_dataset(task, dp.n, dp.cap, dp.pool_size, cfg.seed());
  man.phase("generate", clock.lap());
  save_dataset(ds, dataset_dir(cfg));
  man.output("dataset.bin", dataset_dir(cfg) / "dataset.bin");
  man.output("dataset.json", dataset_dir(cfg) / "dataset.json");
  man.note("dataset_max_normalized",
           normalize(ds.y_max(), ds.y_min_ref, ds.y_max_true));
  man.phase("save", clock.lap());
  man.write(cfg.out_dir());
}

void cmd_train(const RunConfig& cfg, const std::string& which, bool resume) {
  if (which != "proxy" && which != "diffusion")
    throw ConfigError("train expects 'proxy' or 'diffusion', got: " + which);
  const OfflineDataset ds = load_dataset(dataset_dir(cfg));
  const MatrixXd X = ds.designs_model();
  Manifest man(cfg, "train_" + which);
  man.input("dataset.bin", dataset_dir(cfg) / "dataset.bin");
  Stopwatch clock;

  if (which == "diffusion") {
    const auto dp = cfg.diffusion();
    const fs::path dir = diffusion_dir(cfg);
    ScoreNet net;
    AdamState adam;
    std::int64_t remaining = dp.train.steps;
    if (resume && fs::exists(dir / "weights.bin")) {
      net = ScoreNet::load(dir);
      const auto raw = read_f64_le(dir / "adam.bin");
      adam = AdamState::deserialize(
          Eigen::Map<const VectorXd>(raw.data(), static_cast<Eigen::Index>(raw.size())),
          {dp.train.lr});
      remaining = dp.train.steps - adam.steps();
      if (remaining < 0) throw ConfigError("checkpoint already trained past train_steps");
    } else {
      net = ScoreNet(ds.dim(), dp.hidden, dp.hidden_layers, dp.fourier, dp.schedule, ds.y_mean,
                     ds.y_std, fold_seed({cfg.seed(), kSaltDiffusion}));
      adam = AdamState(net.mlp().param_count(), {dp.train.lr});
    }
    TrainBatchSpec spec = dp.train;
    spec.steps = remaining;
    const TrainTrace trace =
        net.train(X, ds.scores, spec, fold_seed({cfg.seed(), kSaltDiffusion}), &adam);
    man.phase("train", clock.lap());
    net.save(dir, cfg.raw().at("diffusion"));
    const VectorXd adam_raw = adam.serialize();
    write_f64_le(dir / "adam.bin", adam_raw.data(), static_cast<std::size_t>(adam_raw.size()));
    write_loss_csv(cfg.out_dir() / "diffusion_loss.csv", trace.loss);
    man.output("weights.bin", dir / "weights.bin");
    man.output("loss_csv", cfg.out_dir() / "diffusion_loss.csv");
    man.note("skipped_updates", trace.skipped_updates);
    man.note("total_steps", adam.steps());
  } else {
    const auto pp = cfg.proxy();
    const fs::path dir = proxy_dir(cfg);
    ProxyModel net;
    AdamState adam;
    std::int64_t remaining = pp.train.steps;
    if (resume && fs::exists(dir / "weights.bin")) {
      net = ProxyModel::load(dir);
      const auto raw = read_f64_le(dir / "adam.bin");
      adam = AdamState::deserialize(
          Eigen::Map<const VectorXd>(raw.data(), static_cast<Eigen::Index>(raw.size())),
          {pp.train.lr});
      remaining = pp.train.steps - adam.steps();
      if (remaining < 0) throw ConfigError("checkpoint already trained past train_steps");
    } else {
      net = ProxyModel(ds.dim(), pp.hidden, pp.hidden_layers, ds.x_mean, ds.x_std, ds.y_mean,
                       ds.y_std, fold_seed({cfg.seed(), kSaltProxy}), pp.log_std_min,
                       pp.log_std_max);
      adam = AdamState(net.mlp().param_count(), {pp.train.lr});
    }
    ProxyTrainSpec spec = pp.train;
    spec.steps = remaining;
    const TrainTrace trace =
        net.train(X, ds.scores, spec, fold_seed({cfg.seed(), kSaltProxy}), &adam);
    man.phase("train", clock.lap());
    net.save(dir, cfg.raw().at("proxy"));
    const VectorXd adam_raw = adam.serialize();
    write_f64_le(dir / "adam.bin", adam_raw.data(), static_cast<std::size_t>(adam_raw.size()));
    write_loss_csv(cfg.out_dir() / "proxy_loss.csv", trace.loss);
    man.output("weights.bin", dir / "weights.bin");
    man.output("loss_csv", cfg.out_dir() / "proxy_loss.csv");
    man.note("skipped_updates", trace.skipped_updates);
    man.note("total_steps", adam.steps());
  }
  man.phase("save", clock.lap());
  man.write(cfg.out_dir());
}

void cmd_refine(const RunConfig& cfg) {
  const OfflineDataset ds = load_dataset(dataset_dir(cfg));
  const ScoreNet score_net = load_diffusion(cfg);
  ProxyModel proxy = ProxyModel::load(proxy_dir(cfg));
  const Task task = cfg.task();
  const auto rp = cfg.refinement();
  const FlowOdeConfig ode = cfg.likelihood();

  Manifest man(cfg, "refine");
  man.input("dataset.bin", dataset_dir(cfg) / "dataset.bin");
  man.input("diffusion_weights", diffusion_dir(cfg) / "weights.bin");
  man.input("proxy_weights", proxy_dir(cfg) / "weights.bin");
  Stopwatch clock;

  const MatrixXd X = ds.designs_model();
  const AdversarialSet adv =
      build_adversarial_set(proxy, X, ds.scores, rp.ascent, rp.k_adversarial);
  man.phase("adversarial", clock.lap());
  man.note("adversarial_qualified", adv.qualified);
  man.note("adversarial_fallback", adv.fallback_used);

  const KdeModel kde = make_kde(ds.scores);
  const int K = static_cast<int>(adv.designs.cols());
  std::vector<PosteriorRecord> records(static_cast<std::size_t>(K));
  for (int j = 0; j < K; ++j) records[static_cast<std::size_t>(j)].x_hat = adv.designs.col(j);
  auto posterior = [&](int j, const VectorXd& xh, double y) {
    return posterior_logpdf(score_net, score_net.schedule(), kde,
                            records[static_cast<std::size_t>(j)], y, ode);
    (void)xh;
  };

  // diagnostics before refinement: proxy mean, oracle, optional diffusion mean
  VectorXd j_before(K), oracle_y(K), diff_mean(K), diff_ess(K);
  diff_mean.setConstant(std::numeric_limits<double>::quiet_NaN());
  diff_ess.setConstant(std::numeric_limits<double>::quiet_NaN());
  for (int j = 0; j < K; ++j) {
    j_before[j] = proxy.mean_raw(VectorXd(adv.designs.col(j)));
    oracle_y[j] = task.oracle(ds.to_raw(adv.designs.col(j)));
  }
  if (rp.mean_samples > 0) {
    parallel_for(K, rp.refine.workers, [&](int j) {
      const MeanEstimate est = diffusion_mean(
          proxy, [&](const VectorXd& xh, double y) { return posterior(j, xh, y); },
          VectorXd(adv.designs.col(j)), rp.mean_samples,
          fold_seed({cfg.seed(), kSaltMean, static_cast<std::uint64_t>(j)}));
      diff_mean[j] = est.value;
      diff_ess[j] = est.ess;
    });
  }
  man.phase("diagnostics", clock.lap());

  AlphaState alpha;
  alpha.log_alpha = std::log(rp.alpha_init);
  alpha.outer_lr = rp.outer_lr;
  const RefineResult res =
      refine_proxy(proxy, X, ds.scores, adv, posterior, alpha, rp.refine,
                   fold_seed({cfg.seed(), kSaltRefine}));
  man.phase("refine", clock.lap());

  proxy.save(refined_proxy_dir(cfg), cfg.raw().at("refinement"));
  {
    CsvWriter csv(cfg.out_dir() / "alpha_trace.csv");
    csv.header({"step", "alpha", "kl", "train_nll", "val_nll"});
    for (std::size_t i = 0; i < res.alpha_trace.size(); ++i)
      csv.row({static_cast<double>(i), res.alpha_trace[i], res.kl_trace[i],
               res.train_nll_trace[i], res.val_nll_trace[i]});
  }
  {
    CsvWriter csv(cfg.out_dir() / "adversarial_table.csv");
    csv.header({"design", "start_index", "proxy_mean_before", "proxy_mean_after",
                "diffusion_mean", "diffusion_mean_ess", "oracle"});
    for (int j = 0; j < K; ++j)
      csv.row({static_cast<double>(j),
               static_cast<double>(j < static_cast<int>(adv.start_index.size())
                                       ? adv.start_index[static_cast<std::size_t>(j)]
                                       : -1),
               j_before[j], proxy.mean_raw(VectorXd(adv.designs.col(j))), diff_mean[j],
               diff_ess[j], oracle_y[j]});
  }
  man.output("refined_weights", refined_proxy_dir(cfg) / "weights.bin");
  man.output("alpha_trace", cfg.out_dir() / "alpha_trace.csv");
  man.output("adversarial_table", cfg.out_dir() / "adversarial_table.csv");
  man.note("ode_steps", ode.ode_steps);
  man.note("mc_samples", rp.refine.mc_samples);
  man.note("alpha_final", alpha.alpha());
  man.note("alpha_clamped", res.alpha_clamped);
  man.phase("save", clock.lap());
  man.write(cfg.out_dir());
}

VariantPlan plan_variant(const RunConfig::SamplerParams& base, const std::string& variant) {
  VariantPlan plan;
  plan.sampler = base.sampler;
  if (variant == "rgd") {
    plan.sampler.strategy = Strategy::kRgd;
  } else if (variant == "rgd_unrefined") {
    plan.sampler.strategy = Strategy::kRgd;
    plan.use_refined_proxy = false;
  } else if (variant == "fixed_omega") {
    plan.sampler.strategy = Strategy::kFixedOmega;
  } else if (variant == "fixed_omega_high") {
    plan.sampler.strategy = Strategy::kFixedOmega;
    plan.sampler.omega0 = 4.0;
  } else if (variant == "direct_grad") {
    plan.sampler.strategy = Strategy::kDirectGrad;
  } else if (variant == "cosine_increase") {
    plan.sampler.strategy = Strategy::kCosineIncrease;
  } else if (variant == "cosine_decrease") {
    plan.sampler.strategy = Strategy::kCosineDecrease;
  } else {
    throw ConfigError("unknown sampling variant: " + variant);
  }
  return plan;
}

namespace {

struct SampleArtifacts {
  BatchResult batch;
  double condition = 0.0;
};

SampleArtifacts run_sampling(const RunConfig& cfg, const std::string& variant,
                             const OfflineDataset& ds, const ScoreNet& score_net,
                             const ProxyModel& proxy, std::uint64_t base_seed) {
  const auto sp = cfg.sampler();
  VariantPlan plan = plan_variant(sp, variant);
  plan.sampler.y_cond = resolve_condition(sp, ds);
  SampleArtifacts art;
  art.condition = plan.sampler.y_cond;
  art.batch = sample_batch(score_net, score_net.schedule(), proxy, plan.sampler, sp.n_chains,
                           base_seed, sp.workers);
  return art;
}

}  // namespace

void cmd_sample(const RunConfig& cfg, const std::string& variant) {
  const OfflineDataset ds = load_dataset(dataset_dir(cfg));
  const ScoreNet score_net = load_diffusion(cfg);
  const VariantPlan plan = plan_variant(cfg.sampler(), variant);
  const ProxyModel proxy = load_proxy_for(cfg, plan.use_refined_proxy);

  Manifest man(cfg, "sample_" + variant);
  man.input("dataset.bin", dataset_dir(cfg) / "dataset.bin");
  man.input("diffusion_weights", diffusion_dir(cfg) / "weights.bin");
  Stopwatch clock;

  const SampleArtifacts art = run_sampling(cfg, variant, ds, score_net, proxy, cfg.seed());
  man.phase("sample", clock.lap());

  {
    CsvWriter csv(candidates_path(cfg, variant));
    std::vector<std::string> head = {"chain", "seed", "final_omega", "condition"};
    for (int j = 0; j < ds.dim(); ++j) head.push_back("x" + std::to_string(j));
    csv.header(head);
    for (std::size_t i = 0; i < art.batch.chains.size(); ++i) {
      if (!art.batch.chains[i]) continue;
      const auto& c = *art.batch.chains[i];
      std::vector<double> row = {static_cast<double>(i),
                                 static_cast<double>(cfg.seed() + i),
                                 c.candidate.final_omega, c.candidate.condition};
      const VectorXd raw = ds.to_raw(c.candidate.x0_model);
      for (int j = 0; j < ds.dim(); ++j) row.push_back(raw[j]);
      csv.row(row);
    }
  }
  {
    CsvWriter csv(omega_path(cfg, variant));
    std::vector<std::string> head = {"chain"};
    for (int t = 1; t <= plan.sampler.T; ++t) head.push_back("step" + std::to_string(t));
    csv.header(head);
    for (std::size_t i = 0; i < art.batch.chains.size(); ++i) {
      if (!art.batch.chains[i]) continue;
      std::vector<double> row = {static_cast<double>(i)};
      const VectorXd& traj = art.batch.chains[i]->state.omega_traj;
      for (Eigen::Index t = 0; t < traj.size(); ++t) row.push_back(traj[t]);
      csv.row(row);
    }
  }
  json errors = json::array();
  for (std::size_t i = 0; i < art.batch.chain_errors.size(); ++i)
    if (!art.batch.chain_errors[i].empty())
      errors.push_back({{"chain", i}, {"error", art.batch.chain_errors[i]}});
  man.note("chain_failures", errors);
  man.note("condition", art.condition);
  man.note("proxy_refined", plan.use_refined_proxy);
  man.output("candidates", candidates_path(cfg, variant));
  man.output("omega", omega_path(cfg, variant));
  man.phase("save", clock.lap());
  man.write(cfg.out_dir());
}

json cmd_evaluate(const RunConfig& cfg, const std::string& variant) {
  const OfflineDataset ds = load_dataset(dataset_dir(cfg));
  const Task task = cfg.task();
  const CsvTable table = read_csv(candidates_path(cfg, variant));
  Manifest man(cfg, "evaluate_" + variant);
  man.input("candidates", candidates_path(cfg, variant));
  Stopwatch clock;

  std::vector<Candidate> cands;
  const int x0_col = table.column("x0");
  for (const auto& row : table.rows) {
    Candidate c;
    VectorXd raw(ds.dim());
    for (int j = 0; j < ds.dim(); ++j) raw[j] = row[static_cast<std::size_t>(x0_col + j)];
    c.x0_model = ds.to_model(raw);
    c.final_omega = row[static_cast<std::size_t>(table.column("final_omega"))];
    c.condition = row[static_cast<std::size_t>(table.column("condition"))];
    cands.push_back(std::move(c));
  }
  const EvalReport rep = evaluate(cands, task, ds, cfg.eval_budget());
  man.phase("evaluate", clock.lap());

  json out;
  out["variant"] = variant;
  out["count"] = rep.count;
  out["max_normalized"] = rep.max_normalized;       // 100th percentile
  out["median_normalized"] = rep.median_normalized; // 50th percentile
  out["max_raw"] = rep.max_raw;
  out["median_raw"] = rep.median_raw;
  out["seed"] = cfg.seed();
  out["config_digest"] = cfg.digest();
  write_text_file(cfg.out_dir() / ("eval_" + variant + ".json"), out.dump(2) + "\n");
  {
    CsvWriter csv(cfg.out_dir() / ("eval_" + variant + "_candidates.csv"));
    csv.header({"candidate", "oracle", "normalized"});
    for (int i = 0; i < rep.count; ++i)
      csv.row({static_cast<double>(i), rep.oracle_scores[i], rep.normalized[i]});
  }
  man.output("report", cfg.out_dir() / ("eval_" + variant + ".json"));
  man.output("per_candidate", cfg.out_dir() / ("eval_" + variant + "_candidates.csv"));
  man.phase("save", clock.lap());
  man.write(cfg.out_dir());
  return out;
}

void cmd_ablate(const RunConfig& cfg) {
  const OfflineDataset ds = load_dataset(dataset_dir(cfg));
  const ScoreNet score_net = load_diffusion(cfg);
  const ProxyModel proxy_plain = ProxyModel::load(proxy_dir(cfg));
  const ProxyModel proxy_refined = load_proxy_for(cfg, true);
  const Task task = cfg.task();
  const auto ab = cfg.ablate();
  const auto sp = cfg.sampler();

  Manifest man(cfg, "ablate");
  man.input("dataset.bin", dataset_dir(cfg) / "dataset.bin");
  Stopwatch clock;

  CsvWriter csv(cfg.out_dir() / "ablation.csv");
  csv.header({"variant", "seed", "T", "y_ratio", "eta", "max_normalized", "median_normalized",
              "status"});

  auto one = [&](const std::string& variant, std::uint64_t seed, int T, double y_ratio,
                 double eta) {
    char buf[512];
    try {
      VariantPlan plan = plan_variant(sp, variant);
      plan.sampler.T = T;
      plan.sampler.eta = eta;
      plan.sampler.y_cond = sp.y_cond_from_data ? ds.y_max() * y_ratio : sp.sampler.y_cond;
      const ProxyModel& proxy = plan.use_refined_proxy ? proxy_refined : proxy_plain;
      const BatchResult batch = sample_batch(score_net, score_net.schedule(), proxy,
                                             plan.sampler, sp.n_chains, seed, sp.workers);
      std::vector<Candidate> cands = batch.candidates();
      const EvalReport rep = evaluate(cands, task, ds, static_cast<int>(cands.size()));
      std::snprintf(buf, sizeof(buf), "%s,%llu,%d,%.17g,%.17g,%.17g,%.17g,ok",
                    variant.c_str(), static_cast<unsigned long long>(seed), T, y_ratio, eta,
                    rep.max_normalized, rep.median_normalized);
    } catch (const std::exception& e) {
      std::snprintf(buf, sizeof(buf), "%s,%llu,%d,%.17g,%.17g,nan,nan,error",
                    variant.c_str(), static_cast<unsigned long long>(seed), T, y_ratio, eta);
      std::fprintf(stderr, "ablate: %s seed %llu failed: %s\n", variant.c_str(),
                   static_cast<unsigned long long>(seed), e.what());
    }
    csv.raw_row(buf);
  };

  for (const auto& variant : ab.variants)
    for (const std::uint64_t seed : ab.seeds)
      one(variant, seed, sp.sampler.T, sp.y_ratio, sp.sampler.eta);
  for (const int T : ab.sweep_T)
    for (const std::uint64_t seed : ab.seeds) one("rgd", seed, T, sp.y_ratio, sp.sampler.eta);
  for (const double r : ab.sweep_y_ratio)
    for (const std::uint64_t seed : ab.seeds) one("rgd", seed, sp.sampler.T, r, sp.sampler.eta);
  for (const double eta : ab.sweep_eta)
    for (const std::uint64_t seed : ab.seeds) one("rgd", seed, sp.sampler.T, sp.y_ratio, eta);

  man.phase("ablate", clock.lap());
  man.output("ablation", cfg.out_dir() / "ablation.csv");
  man.write(cfg.out_dir());
}

void cmd_plot(const RunConfig& cfg, const std::string& kind) {
  Manifest man(cfg, "plot_" + kind);
  Stopwatch clock;
  if (kind == "fig1") {
    const Task task = cfg.task();
    if (task.dim != 2) throw ConfigError("fig1 needs a 2-d task");
    const OfflineDataset ds = load_dataset(dataset_dir(cfg));
    const CsvTable rgd = read_csv(candidates_path(cfg, "rgd"));
    const CsvTable fixed = read_csv(candidates_path(cfg, "fixed_omega"));
    if (rgd.rows.empty() || fixed.rows.empty())
      throw ConfigError("fig1 needs non-empty candidate sets");
    man.input("rgd_candidates", candidates_path(cfg, "rgd"));
    man.input("fixed_candidates", candidates_path(cfg, "fixed_omega"));

    auto group = [&](const CsvTable& t, const std::string& label, const std::string& color) {
      ScatterGroup g{label, color, {}};
      const int x0 = t.column("x0");
      for (const auto& row : t.rows)
        g.points.emplace_back(row[static_cast<std::size_t>(x0)],
                              row[static_cast<std::size_t>(x0 + 1)]);
      return g;
    };
    ScatterGroup data{"dataset", "#e377c2", {}};
    const Eigen::Index stride = std::max<Eigen::Index>(1, ds.size() / 256);
    for (Eigen::Index i = 0; i < ds.size(); i += stride)
      data.points.emplace_back(ds.designs(0, i), ds.designs(1, i));

    write_design_scatter_svg(
        cfg.out_dir() / "fig1.svg",
        [&](double a, double b) {
          VectorXd x(2);
          x << a, b;
          return task.oracle(x);
        },
        task.box_lo, task.box_hi, {-1.0, -10.0, -100.0, -1000.0},
        {data, group(fixed, "guided, fixed strength", "#1f77b4"),
         group(rgd, "guided, adaptive strength", "#d62728")});
    man.output("svg", cfg.out_dir() / "fig1.svg");
  } else if (kind == "fig4") {
    const CsvTable omega = read_csv(omega_path(cfg, "rgd"));
    if (omega.rows.empty()) throw ConfigError("fig4 needs a non-empty strength trajectory csv");
    man.input("omega", omega_path(cfg, "rgd"));
    const double omega0 = cfg.sampler().sampler.omega0;
    if (omega0 == 0.0) throw ConfigError("fig4 needs a nonzero initial strength");
    MatrixXd ratios(static_cast<Eigen::Index>(omega.rows.size()),
                    static_cast<Eigen::Index>(omega.header.size()) - 1);
    for (std::size_t i = 0; i < omega.rows.size(); ++i)
      for (std::size_t j = 1; j < omega.header.size(); ++j)
        ratios(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j - 1)) =
            omega.rows[i][j] / omega0;
    write_trajectory_svg(cfg.out_dir() / "fig4.svg", ratios, "strength ratio");
    man.output("svg", cfg.out_dir() / "fig4.svg");
  } else {
    throw ConfigError("plot kind must be fig1 or fig4, got: " + kind);
  }
  man.phase("plot", clock.lap());
  man.write(cfg.out_dir());
}

}  // namespace rgd::pipeline
