#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include <nlohmann/json.hpp>

#include "saf/model.hpp"
#include "saf/train.hpp"

namespace saf {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  TrainConfig config;
  SafParams params;
  std::int64_t num_nodes = 0;
  std::optional<Split> split;
};

nlohmann::json config_to_json(const TrainConfig& config);
/// Missing keys keep their defaults.
TrainConfig config_from_json(const nlohmann::json& j);

nlohmann::json params_to_json(const SafParams& params);
SafParams params_from_json(const nlohmann::json& j);

/// model.json: parameters as nested arrays plus the config echo and seed.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
/// Throws MissingCheckpoint when the file is absent or unreadable.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace saf
