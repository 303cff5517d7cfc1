#pragma once

#include <optional>
#include <string>

#include "rgd/config.hpp"

namespace rgd::pipeline {

// Stage entry points shared by the command-line tool and the acceptance
// harness. All artifacts land under the config's output directory with
// stable names; every stage writes a manifest_<stage>.json capturing the
// resolved config and input/output checksums.

std::filesystem::path dataset_dir(const RunConfig& cfg);
std::filesystem::path diffusion_dir(const RunConfig& cfg);
std::filesystem::path proxy_dir(const RunConfig& cfg);
std::filesystem::path refined_proxy_dir(const RunConfig& cfg);
std::filesystem::path candidates_path(const RunConfig& cfg, const std::string& variant);
std::filesystem::path omega_path(const RunConfig& cfg, const std::string& variant);

void cmd_gen_data(const RunConfig& cfg);
void cmd_train(const RunConfig& cfg, const std::string& which, bool resume = false);
void cmd_refine(const RunConfig& cfg);

// `variant` is a sampling variant name: rgd, fixed_omega, rgd_unrefined,
// direct_grad, cosine_increase, cosine_decrease, fixed_omega_high.
void cmd_sample(const RunConfig& cfg, const std::string& variant);
nlohmann::json cmd_evaluate(const RunConfig& cfg, const std::string& variant);
void cmd_ablate(const RunConfig& cfg);
void cmd_plot(const RunConfig& cfg, const std::string& kind);

// Applies a variant name to the sampler parameters and reports which proxy
// checkpoint the variant samples with.
struct VariantPlan {
  SamplerConfig sampler;
  bool use_refined_proxy = true;
};
VariantPlan plan_variant(const RunConfig::SamplerParams& base, const std::string& variant);

}  // namespace rgd::pipeline
