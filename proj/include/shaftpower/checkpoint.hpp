#pragma once

#include <cstdint>
#include <string>

#include "shaftpower/features.hpp"
#include "shaftpower/mlp.hpp"

namespace shaftpower {

/// A trained network plus everything needed to run it on raw features.
struct Checkpoint {
  nn::MlpParams params;
  features::Standardization stats;
  bool encode_directions = false;
  std::uint64_t seed = 0;
  std::string trained_on;  ///< free-form provenance tag, e.g. "S_V1/sensor"

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

/// Serialized JSON text. Numbers use the shortest representation that
/// round-trips exactly, so save -> load -> save reproduces the same bytes.
std::string checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const std::string& text);

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
/// Throws DataError on a missing or malformed file.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace shaftpower
