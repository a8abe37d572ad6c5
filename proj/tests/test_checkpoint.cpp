#include <gtest/gtest.h>

#include <fstream>
#include <iterator>
#include <random>

#include "oracles.hpp"
#include "shaftpower/checkpoint.hpp"
#include "shaftpower/errors.hpp"

using namespace shaftpower;

namespace {

Checkpoint sample_checkpoint() {
  Checkpoint c;
  c.params = nn::init_params(nn::kDefaultArchitecture, 77);
  std::mt19937_64 rng(77);
  std::normal_distribution<double> g(0.0, 1e-3);
  for (auto& b : c.params.biases) {
    for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = g(rng);
  }
  c.params.biases[0](0) = 5e-324;
  c.params.biases[0](1) = -1.0 / 3.0;
  c.stats.feature_means = {12.3, 80.1, 9.5, 1.7, 1.0, 180.0, 179.9};
  c.stats.feature_stds = {2.1, 9.9, 1.2, 0.8, 0.4, 103.9, 0.1 + 0.2};
  c.stats.target_mean = 0.0;
  c.stats.target_std = 2345.678901234567;
  c.encode_directions = false;
  c.seed = 18446744073709551615ULL;
  c.trained_on = "S_V1/sensor";
  return c;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST(Checkpoint, SaveLoadSaveIsByteIdentical) {
  const auto c = sample_checkpoint();
  const auto dir = oracle::temp_dir("ckpt");
  save_checkpoint((dir / "a.json").string(), c);
  const auto loaded = load_checkpoint((dir / "a.json").string());
  EXPECT_EQ(loaded, c);
  save_checkpoint((dir / "b.json").string(), loaded);
  EXPECT_EQ(slurp((dir / "a.json").string()), slurp((dir / "b.json").string()));
}

TEST(Checkpoint, DocumentHasTheDocumentedFields) {
  const auto text = checkpoint_to_json(sample_checkpoint());
  for (const char* key : {"layer_dims", "weights", "biases", "feature_means", "feature_stds", "seed",
                          "trained_on", "target_mean", "target_std"}) {
    EXPECT_NE(text.find(std::string("\"") + key + "\""), std::string::npos) << key;
  }
}

TEST(Checkpoint, MalformedInputIsADataError) {
  EXPECT_THROW(load_checkpoint("/nonexistent/ckpt.json"), DataError);
  EXPECT_THROW(checkpoint_from_json("{not json"), DataError);
  EXPECT_THROW(checkpoint_from_json(R"({"layer_dims":[2,1],"weights":[[1]],"biases":[[0]]})"),
               DataError);
}
