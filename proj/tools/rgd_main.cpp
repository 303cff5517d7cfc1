#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rgd/pipeline.hpp"

extern char** environ;

namespace {

std::vector<std::string> environment() {
  std::vector<std::string> env;
  for (char** e = environ; *e != nullptr; ++e) env.emplace_back(*e);
  return env;
}

struct GlobalOpts {
  std::optional<std::string> config_file;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> workers;
  std::vector<std::string> sets;

  rgd::RunConfig resolve() const {
    std::vector<std::string> all_sets;
    if (seed) all_sets.push_back("seed=" + std::to_string(*seed));
    if (out) all_sets.push_back("out=" + *out);
    if (workers) {
      all_sets.push_back("sampler.workers=" + std::to_string(*workers));
      all_sets.push_back("refinement.workers=" + std::to_string(*workers));
    }
    all_sets.insert(all_sets.end(), sets.begin(), sets.end());
    return rgd::RunConfig::resolve(
        config_file ? std::optional<std::filesystem::path>(*config_file) : std::nullopt,
        environment(), all_sets);
  }
};

void add_global(CLI::App* cmd, GlobalOpts& g) {
  cmd->add_option("--config", g.config_file, "JSON config file");
  cmd->add_option("--seed", g.seed, "global seed");
  cmd->add_option("--out", g.out, "output directory");
  cmd->add_option("--workers", g.workers, "worker threads for chains and posterior solves");
  cmd->add_option("--set", g.sets, "override config entries, section.key=value")
      ->take_all();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Offline black-box optimization with guided diffusion"};
  app.require_subcommand(1);
  GlobalOpts g;

  auto* gen = app.add_subcommand("gen-data", "generate the offline dataset");
  add_global(gen, g);

  std::string which = "diffusion";
  bool resume = false;
  auto* train = app.add_subcommand("train", "train the proxy or the diffusion model");
  add_global(train, g);
  train->add_option("--which", which, "proxy | diffusion")->required();
  train->add_flag("--resume", resume, "continue from an existing checkpoint");

  auto* refine = app.add_subcommand("refine", "refine the proxy against model likelihoods");
  add_global(refine, g);

  std::string strategy;
  auto* sample = app.add_subcommand("sample", "run reverse-sampling chains");
  add_global(sample, g);
  sample->add_option("--strategy", strategy,
                     "rgd | fixed_omega | rgd_unrefined | direct_grad | cosine_increase | "
                     "cosine_decrease | fixed_omega_high");

  std::string eval_strategy;
  auto* evaluate = app.add_subcommand("evaluate", "oracle-score sampled candidates");
  add_global(evaluate, g);
  evaluate->add_option("--strategy", eval_strategy, "candidate set to evaluate");

  auto* ablate = app.add_subcommand("ablate", "run the ablation/sweep table");
  add_global(ablate, g);

  std::string kind;
  auto* plot = app.add_subcommand("plot", "emit a static SVG figure");
  add_global(plot, g);
  plot->add_option("--kind", kind, "fig1 | fig4")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    const rgd::RunConfig cfg = g.resolve();
    if (gen->parsed()) {
      rgd::pipeline::cmd_gen_data(cfg);
    } else if (train->parsed()) {
      rgd::pipeline::cmd_train(cfg, which, resume);
    } else if (refine->parsed()) {
      rgd::pipeline::cmd_refine(cfg);
    } else if (sample->parsed()) {
      const std::string variant =
          strategy.empty() ? cfg.raw().at("sampler").at("strategy").get<std::string>()
                           : strategy;
      rgd::pipeline::cmd_sample(cfg, variant);
    } else if (evaluate->parsed()) {
      const std::string variant =
          eval_strategy.empty() ? cfg.raw().at("sampler").at("strategy").get<std::string>()
                                : eval_strategy;
      const auto report = rgd::pipeline::cmd_evaluate(cfg, variant);
      std::printf("%s\n", report.dump(2).c_str());
    } else if (ablate->parsed()) {
      rgd::pipeline::cmd_ablate(cfg);
    } else if (plot->parsed()) {
      rgd::pipeline::cmd_plot(cfg, kind);
    }
  } catch (const rgd::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const rgd::NumericError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "failure: %s\n", e.what());
    return 2;
  }
  return 0;
}
