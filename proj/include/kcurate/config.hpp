#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "kcurate/retrieval.hpp"

namespace kcurate {

struct Thresholds {
  double energy = 0.11;
  double edge = 0.017;
  double empty = 0.6;
  double dedup = 0.9;
};

// One dataset side of a run: a directory of containers plus its sidecar table.
struct DatasetPaths {
  std::filesystem::path root;
  std::filesystem::path sidecar;
};

// Embedding files produced by the external exporter from the run's patch
// export. Relative paths resolve against the run directory.
struct ExternalEmbeddings {
  std::filesystem::path pool;
  std::filesystem::path validation;
  std::filesystem::path zero;
};

struct RunConfig {
  std::uint64_t seed = 0;
  double acceleration = 4.0;
  Thresholds thresholds;
  double retention = 1.0 / 3.0;
  AlignmentMode mode = AlignmentMode::Plain;
  DatasetPaths pool;
  DatasetPaths validation;
  std::string embedder = "toy";  // "toy" or "external"
  std::optional<ExternalEmbeddings> external;
  std::size_t toy_dim = 64;
  std::size_t bootstrap = 10000;
  double mask_tau = 0.5;
  int workers = 0;  // 0 keeps the OpenMP default
};

// Field-qualified messages, e.g. "thresholds.dedup: must lie in [0, 1], got 1.5".
std::vector<std::string> validate_config(const RunConfig& config);

nlohmann::json to_json(const RunConfig& config);
// Missing keys keep their defaults; unknown keys and wrong types are
// ConfigError.
RunConfig config_from_json(const nlohmann::json& j);

// Key-sorted compact JSON; the hash input for provenance.
std::string canonical_config(const RunConfig& config);

RunConfig load_config(const std::filesystem::path& file);
void save_config(const std::filesystem::path& file, const RunConfig& config);

}  // namespace kcurate
