#include "shaftpower/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "shaftpower/errors.hpp"

namespace shaftpower {

std::string checkpoint_to_json(const Checkpoint& ckpt) {
  const auto& p = ckpt.params;
  nlohmann::ordered_json j;
  j["layer_dims"] = p.layer_dims;
  auto weights = nlohmann::ordered_json::array();
  auto biases = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < p.num_layers(); ++i) {
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(p.weights[i].size()));
    for (Eigen::Index r = 0; r < p.weights[i].rows(); ++r) {
      for (Eigen::Index c = 0; c < p.weights[i].cols(); ++c) flat.push_back(p.weights[i](r, c));
    }
    weights.push_back(flat);
    biases.push_back(std::vector<double>(p.biases[i].data(), p.biases[i].data() + p.biases[i].size()));
  }
  j["weights"] = std::move(weights);
  j["biases"] = std::move(biases);
  j["feature_means"] = ckpt.stats.feature_means;
  j["feature_stds"] = ckpt.stats.feature_stds;
  j["target_mean"] = ckpt.stats.target_mean;
  j["target_std"] = ckpt.stats.target_std;
  j["encode_directions"] = ckpt.encode_directions;
  j["seed"] = ckpt.seed;
  j["trained_on"] = ckpt.trained_on;
  return j.dump(1) + "\n";
}

Checkpoint checkpoint_from_json(const std::string& text) {
  Checkpoint ckpt;
  try {
    const auto j = nlohmann::json::parse(text);
    auto& p = ckpt.params;
    p.layer_dims = j.at("layer_dims").get<std::vector<int>>();
    const auto& weights = j.at("weights");
    const auto& biases = j.at("biases");
    if (p.layer_dims.size() < 2 || weights.size() + 1 != p.layer_dims.size() ||
        biases.size() != weights.size()) {
      throw DataError("checkpoint layer count does not match layer_dims");
    }
    for (std::size_t i = 0; i + 1 < p.layer_dims.size(); ++i) {
      const int rows = p.layer_dims[i + 1];
      const int cols = p.layer_dims[i];
      const auto flat = weights[i].get<std::vector<double>>();
      const auto bias = biases[i].get<std::vector<double>>();
      if (flat.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols) ||
          bias.size() != static_cast<std::size_t>(rows)) {
        throw DataError(fmt::format("checkpoint layer {} has the wrong number of entries", i + 1));
      }
      Eigen::MatrixXd w(rows, cols);
      for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) w(r, c) = flat[static_cast<std::size_t>(r * cols + c)];
      }
      p.weights.push_back(std::move(w));
      p.biases.emplace_back(Eigen::Map<const Eigen::VectorXd>(bias.data(), rows));
    }
    ckpt.stats.feature_means = j.at("feature_means").get<std::vector<double>>();
    ckpt.stats.feature_stds = j.at("feature_stds").get<std::vector<double>>();
    ckpt.stats.target_mean = j.value("target_mean", 0.0);
    ckpt.stats.target_std = j.value("target_std", 1.0);
    ckpt.encode_directions = j.value("encode_directions", false);
    ckpt.seed = j.at("seed").get<std::uint64_t>();
    ckpt.trained_on = j.at("trained_on").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(fmt::format("malformed checkpoint: {}", e.what()));
  }
  if (ckpt.stats.feature_means.size() != static_cast<std::size_t>(ckpt.params.input_dim()) ||
      ckpt.stats.feature_stds.size() != ckpt.stats.feature_means.size()) {
    throw DataError("checkpoint feature statistics do not match the input width");
  }
  if (!ckpt.params.all_finite()) throw DataError("checkpoint contains non-finite parameters");
  return ckpt;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(fmt::format("cannot write checkpoint '{}'", path));
  out << checkpoint_to_json(ckpt);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open checkpoint '{}'", path));
  std::ostringstream buf;
  buf << in.rdbuf();
  return checkpoint_from_json(buf.str());
}

}  // namespace shaftpower
