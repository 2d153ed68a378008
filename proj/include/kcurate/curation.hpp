#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "kcurate/manifest.hpp"

namespace kcurate {

struct CurationEntry {
  std::string volume_id;
  std::size_t slice_index = 0;
  double weight = 1.0;

  bool operator==(const CurationEntry&) const = default;
};

// Selected slices, unique by (volume_id, slice_index) and sorted that way.
// `params` records how the selection was made (mode, k, thresholds, seed...).
struct CurationResult {
  std::vector<CurationEntry> entries;
  nlohmann::json params = nlohmann::json::object();
};

// First line is {"params": {...}}, then one {volume_id, slice_index, weight} per line.
void write_curation(const std::filesystem::path& file, const CurationResult& result);
CurationResult read_curation(const std::filesystem::path& file);

struct RetentionRow {
  std::string source;
  std::size_t kept = 0;
  std::size_t total = 0;
  double fraction = 0.0;
};

// Kept fraction of manifest slices per source; throws DanglingReference for an
// entry that is not in the manifest.
std::vector<RetentionRow> retention_report(const CurationResult& result, const DatasetManifest& manifest);

}  // namespace kcurate
