#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "kcurate/volume.hpp"

namespace kcurate {

struct SliceRecord {
  std::string volume_id;
  std::size_t slice_index = 0;
  std::string source;
  std::string anatomy;
  View view = View::Other;
  std::string contrast;
  double field_strength_tesla = 0.0;
  std::size_t coil_count = 0;

  bool operator==(const SliceRecord&) const = default;
};

// Slices ordered by (volume_id, slice_index), plus where each volume lives.
// Paths are stored relative to the manifest file's directory when written.
struct DatasetManifest {
  std::vector<SliceRecord> records;
  std::map<std::string, std::filesystem::path> containers;

  const SliceRecord* find(const std::string& volume_id, std::size_t slice_index) const;
  // Records of one volume, in slice order.
  std::vector<const SliceRecord*> volume(const std::string& volume_id) const;
  std::vector<std::string> volume_ids() const;
};

// One row of the ingestion sidecar table (JSON lines). `acquisition` is "2d"
// (rank-4 [slice, coil, ky, kx]; a rank-5 [frame, slice, coil, ky, kx]
// container is split into one volume per frame) or "3d" (rank-4
// [coil, kz, ky, kx], split into three view volumes).
struct SidecarRow {
  std::string volume_id;
  std::filesystem::path path;
  std::string source;
  std::string anatomy;
  View view = View::Other;
  std::string contrast;
  double field_strength_tesla = 0.0;
  std::string acquisition = "2d";
};

std::vector<SidecarRow> read_sidecar(const std::filesystem::path& file);
void write_sidecar(const std::filesystem::path& file, const std::vector<SidecarRow>& rows);

// Rows must reference rank-4 2-D containers under `root`. Fails with
// DanglingReference for missing/unparseable containers and DuplicateKey for
// repeated volume ids.
DatasetManifest build_manifest(const std::filesystem::path& root, const std::vector<SidecarRow>& rows);

// Converts 3-D and multi-frame rows into derived 2-D containers written under
// `converted_dir`, then builds the manifest over all resulting rows.
DatasetManifest ingest(const std::filesystem::path& root, const std::vector<SidecarRow>& rows,
                       const std::filesystem::path& converted_dir);

// The manifest file holds exactly the SliceRecord fields, one object per line.
// Container paths go to a companion `<manifest>.volumes.json`.
void write_manifest(const std::filesystem::path& file, const DatasetManifest& manifest);
DatasetManifest read_manifest(const std::filesystem::path& file);
std::filesystem::path volumes_path(const std::filesystem::path& manifest_file);

}  // namespace kcurate
