#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mtrl/policy/networks.hpp"

namespace mtrl::io {

inline constexpr int kCheckpointFormatVersion = 1;

/// Trained networks plus everything needed to rebuild and replay them.
struct Checkpoint {
  int format_version = kCheckpointFormatVersion;
  /// "single", "multitask", "distill" or "finetune".
  std::string kind;
  /// Environment served by each actor head, in head order.
  std::vector<std::string> env_names;
  policy::ActorNetwork actor;
  std::optional<policy::CriticNetwork> critic;
  /// Resolved training configuration, as flat key/value text.
  std::map<std::string, std::string> config;
  std::uint64_t seed = 0;

  /// Head serving `env_name`; single-head actors serve every environment.
  /// Throws std::out_of_range if no head covers it.
  std::size_t head_for(const std::string& env_name) const;

  bool operator==(const Checkpoint&) const = default;
};

/// JSON text with sorted keys and shortest round-trip floats, so
/// save -> load -> save is byte-identical.
std::string serialize_checkpoint(const Checkpoint& checkpoint);
/// Throws CheckpointError for malformed text, a version mismatch or
/// parameters that do not match the stored architecture.
Checkpoint deserialize_checkpoint(const std::string& text);

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace mtrl::io
