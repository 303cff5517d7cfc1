#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rgd/benchmark.hpp"
#include "rgd/likelihood.hpp"
#include "rgd/proxy.hpp"
#include "rgd/refinement.hpp"
#include "rgd/sampler.hpp"
#include "rgd/score_net.hpp"

namespace rgd {

// Declarative run configuration: code defaults, overlaid by a JSON config
// file, overlaid by RGD_<SECTION>_<KEY> environment variables, overlaid by
// command-line settings (in that precedence order).
class RunConfig {
 public:
  static nlohmann::json defaults();

  // env entries are raw "NAME=value" strings (pass environ); set entries are
  // "section.key=value" dotted paths.
  static RunConfig resolve(const std::optional<std::filesystem::path>& file,
                           const std::vector<std::string>& env,
                           const std::vector<std::string>& sets);

  const nlohmann::json& raw() const { return root_; }
  nlohmann::json& raw() { return root_; }
  std::string digest() const;

  std::uint64_t seed() const { return root_.at("seed").get<std::uint64_t>(); }
  std::filesystem::path out_dir() const { return root_.at("out").get<std::string>(); }

  Task task() const;

  struct DatasetParams {
    Eigen::Index n;
    double cap;
    std::int64_t pool_size;
  };
  DatasetParams dataset() const;

  struct DiffusionParams {
    DiffusionSchedule schedule;
    int hidden, hidden_layers, fourier;
    TrainBatchSpec train;
  };
  DiffusionParams diffusion() const;

  struct ProxyParams {
    int hidden, hidden_layers;
    double log_std_min, log_std_max;
    ProxyTrainSpec train;
  };
  ProxyParams proxy() const;

  FlowOdeConfig likelihood() const;

  struct RefinementParams {
    int k_adversarial;
    AscentConfig ascent;
    RefineConfig refine;
    double alpha_init;
    double outer_lr;
    int mean_samples;  // draws for the diffusion-mean diagnostic; 0 disables
  };
  RefinementParams refinement() const;

  struct SamplerParams {
    SamplerConfig sampler;  // y_cond filled from the dataset when null
    bool y_cond_from_data;
    double y_ratio;  // scales the data-derived condition
    int n_chains;
    int workers;
  };
  SamplerParams sampler() const;

  int eval_budget() const;

  struct AblateParams {
    std::vector<std::uint64_t> seeds;
    std::vector<std::string> variants;
    std::vector<int> sweep_T;
    std::vector<double> sweep_y_ratio;
    std::vector<double> sweep_eta;
  };
  AblateParams ablate() const;

  int resolve_workers(int requested) const;

 private:
  nlohmann::json root_;
};

}  // namespace rgd
