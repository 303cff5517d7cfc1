#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "rgd/mlp.hpp"

namespace rgd {

inline constexpr int kCheckpointSchemaVersion = 1;

// Checkpoint directory layout: manifest.json describing the architecture and
// whatever the owning module stores under "extra", plus weights.bin with all
// parameters concatenated in the declared order (per layer: weight matrix
// column-major, then bias), little-endian float64. Round-trips bit-exact.
void save_checkpoint(const std::filesystem::path& dir, const Mlp& net,
                     const std::string& kind, const nlohmann::json& hyperparameters,
                     const nlohmann::json& extra);

struct LoadedCheckpoint {
  Mlp net;
  nlohmann::json manifest;
};

LoadedCheckpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace rgd
