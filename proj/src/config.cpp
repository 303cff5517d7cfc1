#include "rgd/config.hpp"

#include <thread>

#include "rgd/io.hpp"

namespace rgd {

using nlohmann::json;

json RunConfig::defaults() {
  return json{
      {"task", {{"name", "rosenbrock"}, {"dim", 60}, {"box_lo", -2.0}, {"box_hi", 2.0}}},
      {"dataset", {{"n", 50000}, {"cap", 0.52}, {"pool_size", 250000}}},
      {"diffusion",
       {{"beta_min", 0.1},
        {"beta_max", 20.0},
        {"t_eps", 1e-3},
        {"hidden", 256},
        {"hidden_layers", 3},
        {"fourier", 16},
        {"train_steps", 100000},
        {"batch", 128},
        {"p_drop", 0.2},
        {"lr", 1e-3},
        {"lr_decay_horizon", 0},
        {"lr_final_frac", 1.0}}},
      {"proxy",
       {{"hidden", 256},
        {"hidden_layers", 3},
        {"train_steps", 10000},
        {"batch", 128},
        {"lr", 1e-3},
        {"log_std_min", -5.0},
        {"log_std_max", 2.0},
        {"lr_decay_horizon", 0},
        {"lr_final_frac", 1.0}}},
      {"likelihood", {{"ode_steps", 100}, {"divergence", "exact"}, {"probes", 8}}},
      {"refinement",
       {{"k_adversarial", 128},
        {"ascent_eta", 0.05},
        {"ascent_steps", 300},
        {"mc_samples", 8},
        {"steps", 200},
        {"kl_refresh", 50},
        {"adv_batch", 16},
        {"inner_batch", 256},
        {"val_batch", 256},
        {"inner_lr", 1e-3},
        {"alpha_init", 1.0},
        {"outer_lr", 0.01},
        {"val_fraction", 0.1},
        {"mean_samples", 128},
        {"workers", 0}}},
      {"sampler",
       {{"T", 1000},
        {"y_cond", nullptr},
        {"y_ratio", 1.0},
        {"omega0", 2.0},
        {"eta", 0.01},
        {"k_omega", 1},
        {"strategy", "rgd"},
        {"cos_lo", 0.0},
        {"cos_hi", 4.0},
        {"direct_lr", 0.1},
        {"n_chains", 128},
        {"workers", 0}}},
      {"evaluation", {{"budget", 128}}},
      {"ablate",
       {{"seeds", {0, 1, 2, 3, 4, 5, 6, 7}},
        {"variants",
         {"rgd", "fixed_omega", "rgd_unrefined", "direct_grad", "cosine_increase",
          "cosine_decrease", "fixed_omega_high"}},
        {"sweep_T", json::array()},
        {"sweep_y_ratio", json::array()},
        {"sweep_eta", json::array()}}},
      {"seed", 0},
      {"out", "runs/default"},
  };
}

namespace {

void deep_merge(json& base, const json& overlay) {
  if (!overlay.is_object() || !base.is_object()) {
    base = overlay;
    return;
  }
  for (const auto& [key, value] : overlay.items()) {
    if (base.contains(key) && base[key].is_object() && value.is_object())
      deep_merge(base[key], value);
    else
      base[key] = value;
  }
}

json parse_scalar(const std::string& text) {
  const json parsed = json::parse(text, nullptr, false);
  if (!parsed.is_discarded()) return parsed;
  return json(text);  // plain string
}

// case-insensitive key lookup so RGD_SAMPLER_T hits "T"
std::string match_key(const json& section, const std::string& key) {
  for (const auto& [existing, _] : section.items()) {
    if (existing.size() != key.size()) continue;
    bool same = true;
    for (std::size_t i = 0; i < key.size(); ++i)
      if (std::tolower(existing[i]) != std::tolower(key[i])) {
        same = false;
        break;
      }
    if (same) return existing;
  }
  return key;
}

void apply_env(json& root, const std::string& entry) {
  const auto eq = entry.find('=');
  if (eq == std::string::npos) return;
  const std::string name = entry.substr(0, eq);
  const std::string value = entry.substr(eq + 1);
  if (name.rfind("RGD_", 0) != 0) return;
  const std::string rest = name.substr(4);
  const auto cut = rest.find('_');
  std::string section = rest.substr(0, cut == std::string::npos ? rest.size() : cut);
  for (auto& c : section) c = static_cast<char>(std::tolower(c));
  if (cut == std::string::npos) {
    // top-level scalar such as RGD_SEED / RGD_OUT
    root[match_key(root, section)] = parse_scalar(value);
    return;
  }
  std::string key = rest.substr(cut + 1);
  for (auto& c : key) c = static_cast<char>(std::tolower(c));
  if (!root.contains(section) || !root[section].is_object())
    throw ConfigError("unknown config section in env override: " + name);
  json& sec = root[section];
  sec[match_key(sec, key)] = parse_scalar(value);
}

void apply_set(json& root, const std::string& entry) {
  const auto eq = entry.find('=');
  if (eq == std::string::npos)
    throw ConfigError("--set expects section.key=value, got: " + entry);
  std::string path = entry.substr(0, eq);
  const json value = parse_scalar(entry.substr(eq + 1));
  json* node = &root;
  std::size_t pos = 0;
  while (true) {
    const auto dot = path.find('.', pos);
    const std::string key = path.substr(pos, dot == std::string::npos ? std::string::npos
                                                                      : dot - pos);
    if (dot == std::string::npos) {
      (*node)[match_key(*node, key)] = value;
      break;
    }
    node = &(*node)[match_key(*node, key)];
    pos = dot + 1;
  }
}

}  // namespace

RunConfig RunConfig::resolve(const std::optional<std::filesystem::path>& file,
                             const std::vector<std::string>& env,
                             const std::vector<std::string>& sets) {
  RunConfig cfg;
  cfg.root_ = defaults();
  if (file) {
    const json loaded = json::parse(read_text_file(*file), nullptr, false);
    if (loaded.is_discarded()) throw ConfigError("config file is not valid JSON: " + file->string());
    deep_merge(cfg.root_, loaded);
  }
  for (const auto& e : env) apply_env(cfg.root_, e);
  for (const auto& s : sets) apply_set(cfg.root_, s);
  return cfg;
}

std::string RunConfig::digest() const {
  const std::string dump = root_.dump();
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(fnv1a64(dump.data(), dump.size())));
  return hex;
}

Task RunConfig::task() const {
  const auto& t = root_.at("task");
  const std::string name = t.at("name").get<std::string>();
  if (name != "rosenbrock") throw ConfigError("unknown task: " + name);
  return make_rosenbrock_task(t.at("dim").get<int>(), t.at("box_lo").get<double>(),
                              t.at("box_hi").get<double>());
}

RunConfig::DatasetParams RunConfig::dataset() const {
  const auto& d = root_.at("dataset");
  return {d.at("n").get<Eigen::Index>(), d.at("cap").get<double>(),
          d.at("pool_size").get<std::int64_t>()};
}

RunConfig::DiffusionParams RunConfig::diffusion() const {
  const auto& d = root_.at("diffusion");
  DiffusionParams p;
  p.schedule.beta_min = d.at("beta_min").get<double>();
  p.schedule.beta_max = d.at("beta_max").get<double>();
  p.schedule.t_eps = d.at("t_eps").get<double>();
  p.hidden = d.at("hidden").get<int>();
  p.hidden_layers = d.at("hidden_layers").get<int>();
  p.fourier = d.at("fourier").get<int>();
  p.train.batch = d.at("batch").get<int>();
  p.train.steps = d.at("train_steps").get<std::int64_t>();
  p.train.p_drop = d.at("p_drop").get<double>();
  p.train.lr = d.at("lr").get<double>();
  p.train.lr_decay_horizon = d.at("lr_decay_horizon").get<std::int64_t>();
  p.train.lr_final_frac = d.at("lr_final_frac").get<double>();
  return p;
}

RunConfig::ProxyParams RunConfig::proxy() const {
  const auto& d = root_.at("proxy");
  ProxyParams p;
  p.hidden = d.at("hidden").get<int>();
  p.hidden_layers = d.at("hidden_layers").get<int>();
  p.log_std_min = d.at("log_std_min").get<double>();
  p.log_std_max = d.at("log_std_max").get<double>();
  p.train.batch = d.at("batch").get<int>();
  p.train.steps = d.at("train_steps").get<std::int64_t>();
  p.train.lr = d.at("lr").get<double>();
  p.train.lr_decay_horizon = d.at("lr_decay_horizon").get<std::int64_t>();
  p.train.lr_final_frac = d.at("lr_final_frac").get<double>();
  return p;
}

FlowOdeConfig RunConfig::likelihood() const {
  const auto& d = root_.at("likelihood");
  FlowOdeConfig cfg;
  cfg.ode_steps = d.at("ode_steps").get<int>();
  const std::string mode = d.at("divergence").get<std::string>();
  if (mode == "exact")
    cfg.divergence = FlowOdeConfig::Divergence::kExact;
  else if (mode == "hutchinson")
    cfg.divergence = FlowOdeConfig::Divergence::kHutchinson;
  else
    throw ConfigError("unknown divergence mode: " + mode);
  cfg.probes = d.at("probes").get<int>();
  return cfg;
}

RunConfig::RefinementParams RunConfig::refinement() const {
  const auto& d = root_.at("refinement");
  RefinementParams p;
  p.k_adversarial = d.at("k_adversarial").get<int>();
  p.ascent.eta = d.at("ascent_eta").get<double>();
  p.ascent.steps = d.at("ascent_steps").get<int>();
  p.refine.steps = d.at("steps").get<std::int64_t>();
  p.refine.kl_refresh = d.at("kl_refresh").get<std::int64_t>();
  p.refine.adv_batch = d.at("adv_batch").get<int>();
  p.refine.mc_samples = d.at("mc_samples").get<int>();
  p.refine.inner_batch = d.at("inner_batch").get<int>();
  p.refine.val_batch = d.at("val_batch").get<int>();
  p.refine.inner_lr = d.at("inner_lr").get<double>();
  p.refine.val_fraction = d.at("val_fraction").get<double>();
  p.refine.workers = resolve_workers(d.at("workers").get<int>());
  p.alpha_init = d.at("alpha_init").get<double>();
  p.outer_lr = d.at("outer_lr").get<double>();
  p.mean_samples = d.at("mean_samples").get<int>();
  return p;
}

RunConfig::SamplerParams RunConfig::sampler() const {
  const auto& d = root_.at("sampler");
  SamplerParams p;
  p.sampler.T = d.at("T").get<int>();
  p.y_cond_from_data = d.at("y_cond").is_null();
  p.sampler.y_cond = p.y_cond_from_data ? 0.0 : d.at("y_cond").get<double>();
  p.y_ratio = d.at("y_ratio").get<double>();
  p.sampler.omega0 = d.at("omega0").get<double>();
  p.sampler.eta = d.at("eta").get<double>();
  p.sampler.k_omega = d.at("k_omega").get<int>();
  p.sampler.strategy = strategy_from_string(d.at("strategy").get<std::string>());
  p.sampler.cos_lo = d.at("cos_lo").get<double>();
  p.sampler.cos_hi = d.at("cos_hi").get<double>();
  p.sampler.direct_lr = d.at("direct_lr").get<double>();
  p.n_chains = d.at("n_chains").get<int>();
  p.workers = resolve_workers(d.at("workers").get<int>());
  return p;
}

int RunConfig::eval_budget() const {
  return root_.at("evaluation").at("budget").get<int>();
}

RunConfig::AblateParams RunConfig::ablate() const {
  const auto& d = root_.at("ablate");
  AblateParams p;
  p.seeds = d.at("seeds").get<std::vector<std::uint64_t>>();
  p.variants = d.at("variants").get<std::vector<std::string>>();
  p.sweep_T = d.at("sweep_T").get<std::vector<int>>();
  p.sweep_y_ratio = d.at("sweep_y_ratio").get<std::vector<double>>();
  p.sweep_eta = d.at("sweep_eta").get<std::vector<double>>();
  return p;
}

int RunConfig::resolve_workers(int requested) const {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace rgd
