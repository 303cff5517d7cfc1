#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include "rgd/types.hpp"

namespace rgd {

// Mixes an arbitrary list of 64-bit words into one seed (splitmix64 chain).
// Used to fork independent, reproducible streams per (seed, step, purpose).
std::uint64_t fold_seed(std::initializer_list<std::uint64_t> words);

// Stream purposes. Keeping these stable is what makes "resume == uninterrupted"
// and "frozen-alpha refinement == plain training continuation" hold bitwise.
inline constexpr std::uint64_t kStreamTrainBatch = 0x7261696e62617463ULL;
inline constexpr std::uint64_t kStreamValBatch = 0x76616c6261746368ULL;
inline constexpr std::uint64_t kStreamKlDraw = 0x6b6c5f647261775fULL;
inline constexpr std::uint64_t kStreamChain = 0x636861696e5f5f5fULL;
inline constexpr std::uint64_t kStreamInit = 0x696e69745f5f5f5fULL;
inline constexpr std::uint64_t kStreamSplit = 0x73706c69745f5f5fULL;
inline constexpr std::uint64_t kStreamPool = 0x706f6f6c5f5f5f5fULL;
inline constexpr std::uint64_t kStreamProbe = 0x70726f62655f5f5fULL;

// Deterministic RNG. Normals come from Box-Muller on the raw 64-bit stream,
// so draws do not depend on libstdc++'s distribution internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // uniform in [0, 1)
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  // uniform in (0, 1]
  double uniform_open() { return 1.0 - uniform(); }

  double uniform_in(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    const double u1 = uniform_open();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

  VectorXd normal_vec(Eigen::Index n) {
    VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
    return v;
  }

  // uniform index in [0, n)
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>((static_cast<__uint128_t>(gen_()) * n) >> 64);
  }

  double rademacher() { return (gen_() & 1u) ? 1.0 : -1.0; }

 private:
  static constexpr double kPi = 3.14159265358979323846;
  std::mt19937_64 gen_;
};

}  // namespace rgd
