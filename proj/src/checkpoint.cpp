#include "rgd/checkpoint.hpp"

#include "rgd/errors.hpp"
#include "rgd/io.hpp"

namespace rgd {

using nlohmann::json;

void save_checkpoint(const std::filesystem::path& dir, const Mlp& net, const std::string& kind,
                     const json& hyperparameters, const json& extra) {
  std::filesystem::create_directories(dir);
  json manifest;
  manifest["schema_version"] = kCheckpointSchemaVersion;
  manifest["kind"] = kind;
  manifest["layer_sizes"] = net.layer_dims();
  manifest["activation"] = net.hidden_activation() == Activation::kSilu ? "silu" : "identity";
  manifest["creation_seed"] = net.creation_seed();
  manifest["param_count"] = net.param_count();
  manifest["param_layout"] = "per-layer weight column-major, then bias";
  manifest["hyperparameters"] = hyperparameters;
  manifest["extra"] = extra;
  write_f64_le(dir / "weights.bin", net.params().data(),
               static_cast<std::size_t>(net.param_count()));
  manifest["weights_checksum"] = file_checksum(dir / "weights.bin");
  write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& dir) {
  const json manifest = json::parse(read_text_file(dir / "manifest.json"));
  if (manifest.at("schema_version").get<int>() != kCheckpointSchemaVersion)
    throw ConfigError("unsupported checkpoint schema in " + dir.string());
  const auto dims = manifest.at("layer_sizes").get<std::vector<Eigen::Index>>();
  const std::string act = manifest.at("activation").get<std::string>();
  Mlp net(dims, act == "silu" ? Activation::kSilu : Activation::kIdentity,
          manifest.at("creation_seed").get<std::uint64_t>());
  const auto raw = read_f64_le(dir / "weights.bin");
  if (static_cast<Eigen::Index>(raw.size()) != net.param_count())
    throw ConfigError("weights.bin size does not match manifest in " + dir.string());
  net.set_params(Eigen::Map<const VectorXd>(raw.data(), static_cast<Eigen::Index>(raw.size())));
  return {std::move(net), manifest};
}

}  // namespace rgd
