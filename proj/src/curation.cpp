#include "kcurate/curation.hpp"

#include "kcurate/jsonl.hpp"

namespace kcurate {
namespace fs = std::filesystem;
using nlohmann::json;

void write_curation(const fs::path& file, const CurationResult& result) {
  std::vector<json> lines;
  lines.reserve(result.entries.size() + 1);
  lines.push_back({{"params", result.params}});
  for (const auto& e : result.entries)
    lines.push_back({{"volume_id", e.volume_id}, {"slice_index", e.slice_index}, {"weight", e.weight}});
  write_jsonl(file, lines);
}

CurationResult read_curation(const fs::path& file) {
  auto lines = read_jsonl(file);
  CurationResult r;
  std::size_t i = 0;
  if (!lines.empty() && lines[0].contains("params")) {
    r.params = lines[0]["params"];
    i = 1;
  }
  for (; i < lines.size(); ++i) {
    try {
      r.entries.push_back({lines[i].at("volume_id").get<std::string>(), lines[i].at("slice_index").get<std::size_t>(),
                           lines[i].at("weight").get<double>()});
    } catch (const json::exception& e) {
      fail(ErrorCode::FormatError, file.string() + ": " + e.what());
    }
  }
  return r;
}

std::vector<RetentionRow> retention_report(const CurationResult& result, const DatasetManifest& manifest) {
  std::map<std::string, RetentionRow> rows;
  for (const auto& rec : manifest.records) {
    auto& row = rows[rec.source];
    row.source = rec.source;
    ++row.total;
  }
  for (const auto& e : result.entries) {
    const SliceRecord* rec = manifest.find(e.volume_id, e.slice_index);
    if (!rec)
      fail(ErrorCode::DanglingReference,
           "curation entry " + e.volume_id + "/" + std::to_string(e.slice_index) + " is not in the manifest");
    ++rows[rec->source].kept;
  }
  std::vector<RetentionRow> out;
  for (auto& [source, row] : rows) {
    row.fraction = row.total ? static_cast<double>(row.kept) / static_cast<double>(row.total) : 0.0;
    out.push_back(row);
  }
  return out;
}

}  // namespace kcurate
