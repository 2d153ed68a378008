#include "kcurate/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <json.hpp>

#include "kcurate/hdf5_io.hpp"
#include "kcurate/jsonl.hpp"

namespace kcurate {
namespace fs = std::filesystem;
using nlohmann::json;

const SliceRecord* DatasetManifest::find(const std::string& volume_id, std::size_t slice_index) const {
  auto it = std::lower_bound(records.begin(), records.end(), std::pair(volume_id, slice_index),
                             [](const SliceRecord& r, const std::pair<std::string, std::size_t>& key) {
                               return std::tie(r.volume_id, r.slice_index) < std::tie(key.first, key.second);
                             });
  if (it == records.end() || it->volume_id != volume_id || it->slice_index != slice_index) return nullptr;
  return &*it;
}

std::vector<const SliceRecord*> DatasetManifest::volume(const std::string& volume_id) const {
  std::vector<const SliceRecord*> out;
  for (const auto& r : records)
    if (r.volume_id == volume_id) out.push_back(&r);
  return out;
}

std::vector<std::string> DatasetManifest::volume_ids() const {
  std::vector<std::string> ids;
  for (const auto& r : records)
    if (ids.empty() || ids.back() != r.volume_id) ids.push_back(r.volume_id);
  return ids;
}

std::vector<SidecarRow> read_sidecar(const fs::path& file) {
  std::vector<SidecarRow> rows;
  for (const json& j : read_jsonl(file)) {
    SidecarRow row;
    try {
      row.volume_id = j.at("volume_id").get<std::string>();
      row.path = j.at("path").get<std::string>();
      row.source = j.value("source", "");
      row.anatomy = j.value("anatomy", "");
      row.view = view_from_string(j.value("view", "other"));
      row.contrast = j.value("contrast", "");
      row.field_strength_tesla = j.value("field_strength_tesla", 0.0);
      row.acquisition = j.value("acquisition", "2d");
    } catch (const json::exception& e) {
      fail(ErrorCode::FormatError, file.string() + ": " + e.what());
    }
    require(row.acquisition == "2d" || row.acquisition == "3d", ErrorCode::FormatError,
            "acquisition must be 2d or 3d for " + row.volume_id);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_sidecar(const fs::path& file, const std::vector<SidecarRow>& rows) {
  std::vector<json> out;
  for (const auto& r : rows)
    out.push_back({{"volume_id", r.volume_id},
                   {"path", r.path.generic_string()},
                   {"source", r.source},
                   {"anatomy", r.anatomy},
                   {"view", to_string(r.view)},
                   {"contrast", r.contrast},
                   {"field_strength_tesla", r.field_strength_tesla},
                   {"acquisition", r.acquisition}});
  write_jsonl(file, out);
}

DatasetManifest build_manifest(const fs::path& root, const std::vector<SidecarRow>& rows) {
  DatasetManifest m;
  for (const auto& row : rows) {
    if (m.containers.count(row.volume_id)) fail(ErrorCode::DuplicateKey, "volume_id '" + row.volume_id + "' repeated");
    const fs::path path = row.path.is_absolute() ? row.path : root / row.path;
    std::vector<std::size_t> shape;
    try {
      shape = h5::kspace_shape(path);
    } catch (const Error& e) {
      fail(ErrorCode::DanglingReference, "volume '" + row.volume_id + "' -> " + path.string() + " (" + e.what() + ")");
    }
    if (shape.size() != 4 || shape[0] < 1 || shape[1] < 1 || shape[2] < 8 || shape[3] < 8)
      fail(ErrorCode::DanglingReference, "volume '" + row.volume_id + "' is not a [slice, coil, ky, kx] container");
    m.containers[row.volume_id] = path;
    for (std::size_t s = 0; s < shape[0]; ++s)
      m.records.push_back({row.volume_id, s, row.source, row.anatomy, row.view, row.contrast,
                           row.field_strength_tesla, shape[1]});
  }
  std::sort(m.records.begin(), m.records.end(), [](const SliceRecord& a, const SliceRecord& b) {
    return std::tie(a.volume_id, a.slice_index) < std::tie(b.volume_id, b.slice_index);
  });
  return m;
}

DatasetManifest ingest(const fs::path& root, const std::vector<SidecarRow>& rows, const fs::path& converted_dir) {
  std::vector<SidecarRow> flat;
  std::set<std::string> seen;
  for (const auto& row : rows) {
    if (!seen.insert(row.volume_id).second)
      fail(ErrorCode::DuplicateKey, "volume_id '" + row.volume_id + "' repeated");
    const fs::path path = row.path.is_absolute() ? row.path : root / row.path;
    if (!fs::exists(path)) fail(ErrorCode::DanglingReference, "volume '" + row.volume_id + "' -> " + path.string());
    if (row.acquisition == "3d") {
      KSpace3D vol = h5::load_kspace_3d(path);
      vol.volume_id = row.volume_id;
      for (auto& [view, v] : split_3d_to_views(vol)) {
        SidecarRow derived = row;
        derived.volume_id = v.volume_id;
        derived.view = view;
        derived.acquisition = "2d";
        derived.path = converted_dir / (v.volume_id + ".h5");
        h5::save_volume(derived.path, v, {{"parent_volume_id", row.volume_id}, {"view", to_string(view)}});
        flat.push_back(std::move(derived));
      }
      continue;
    }
    const auto shape = h5::kspace_shape(path);
    if (shape.size() == 5) {
      h5::RawKSpace raw = h5::read_kspace_raw(path);
      const std::size_t per = shape[1] * shape[2] * shape[3] * shape[4];
      for (std::size_t f = 0; f < shape[0]; ++f) {
        KSpaceVolume v(row.volume_id + "_f" + std::to_string(f), shape[1], shape[2], shape[3], shape[4]);
        std::copy_n(raw.data.begin() + static_cast<std::ptrdiff_t>(f * per), per, v.data.begin());
        SidecarRow derived = row;
        derived.volume_id = v.volume_id;
        derived.path = converted_dir / (v.volume_id + ".h5");
        h5::save_volume(derived.path, v, {{"parent_volume_id", row.volume_id}, {"source_index", std::to_string(f)}});
        flat.push_back(std::move(derived));
      }
      continue;
    }
    SidecarRow direct = row;
    direct.path = path;
    flat.push_back(std::move(direct));
  }
  return build_manifest(root, flat);
}

fs::path volumes_path(const fs::path& manifest_file) {
  fs::path p = manifest_file;
  p += ".volumes.json";
  return p;
}

void write_manifest(const fs::path& file, const DatasetManifest& manifest) {
  std::vector<json> lines;
  lines.reserve(manifest.records.size());
  for (const auto& r : manifest.records)
    lines.push_back({{"volume_id", r.volume_id},
                     {"slice_index", r.slice_index},
                     {"source", r.source},
                     {"anatomy", r.anatomy},
                     {"view", to_string(r.view)},
                     {"contrast", r.contrast},
                     {"field_strength_tesla", r.field_strength_tesla},
                     {"coil_count", r.coil_count}});
  write_jsonl(file, lines);

  const fs::path base = fs::absolute(file).parent_path();
  json vols = json::object();
  for (const auto& [id, path] : manifest.containers)
    vols[id] = fs::absolute(path).lexically_relative(base).generic_string();
  std::ofstream out(volumes_path(file), std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::IoError, "cannot write " + volumes_path(file).string());
  out << vols.dump(2) << '\n';
}

DatasetManifest read_manifest(const fs::path& file) {
  DatasetManifest m;
  for (const json& j : read_jsonl(file)) {
    try {
      m.records.push_back({j.at("volume_id").get<std::string>(), j.at("slice_index").get<std::size_t>(),
                           j.at("source").get<std::string>(), j.at("anatomy").get<std::string>(),
                           view_from_string(j.at("view").get<std::string>()), j.at("contrast").get<std::string>(),
                           j.at("field_strength_tesla").get<double>(), j.at("coil_count").get<std::size_t>()});
    } catch (const json::exception& e) {
      fail(ErrorCode::FormatError, file.string() + ": " + e.what());
    }
  }
  std::sort(m.records.begin(), m.records.end(), [](const SliceRecord& a, const SliceRecord& b) {
    return std::tie(a.volume_id, a.slice_index) < std::tie(b.volume_id, b.slice_index);
  });
  for (std::size_t i = 1; i < m.records.size(); ++i)
    if (m.records[i].volume_id == m.records[i - 1].volume_id && m.records[i].slice_index == m.records[i - 1].slice_index)
      fail(ErrorCode::DuplicateKey, m.records[i].volume_id + "/" + std::to_string(m.records[i].slice_index));

  const fs::path vp = volumes_path(file);
  if (fs::exists(vp)) {
    std::ifstream in(vp);
    json vols = json::parse(in, nullptr, false);
    require(!vols.is_discarded() && vols.is_object(), ErrorCode::FormatError, vp.string());
    const fs::path base = fs::absolute(file).parent_path();
    for (auto it = vols.begin(); it != vols.end(); ++it) m.containers[it.key()] = base / it.value().get<std::string>();
  }
  return m;
}

}  // namespace kcurate
