#include "rgd/sampler.hpp"

namespace rgd {

Strategy strategy_from_string(const std::string& name) {
  if (name == "rgd") return Strategy::kRgd;
  if (name == "fixed_omega") return Strategy::kFixedOmega;
  if (name == "cosine_increase") return Strategy::kCosineIncrease;
  if (name == "cosine_decrease") return Strategy::kCosineDecrease;
  if (name == "direct_grad") return Strategy::kDirectGrad;
  throw ConfigError("unknown sampling strategy: " + name);
}

std::string strategy_name(Strategy s) {
  switch (s) {
    case Strategy::kRgd: return "rgd";
    case Strategy::kFixedOmega: return "fixed_omega";
    case Strategy::kCosineIncrease: return "cosine_increase";
    case Strategy::kCosineDecrease: return "cosine_decrease";
    case Strategy::kDirectGrad: return "direct_grad";
  }
  throw ConfigError("unknown strategy value");
}

}  // namespace rgd
