#pragma once

// Model persistence: a JSON manifest describing dimensions, activations,
// config and the training phase, next to a raw little-endian f64 blob that
// holds every parameter block back to back.

#include <filesystem>
#include <string>

#include "dfcn/saif.hpp"
#include "dfcn/trainer.hpp"

#include <json.hpp>

namespace dfcn {

inline constexpr const char* kCheckpointFormat = "dfcn-checkpoint";
inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  ModelParams params;
  std::string phase;
  nlohmann::json config;
};

/// Writes `manifest` (JSON) and the sibling blob `manifest` with extension ".bin".
void save_checkpoint(const std::filesystem::path& manifest, const ModelParams& params,
                     std::string_view phase, const TrainConfig& config);

/// Throws IoError on unreadable or truncated files, ShapeError when blocks do
/// not form a valid layer chain.
Checkpoint load_checkpoint(const std::filesystem::path& manifest);

}  // namespace dfcn
