#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace kcurate {

std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& file);
void write_jsonl(const std::filesystem::path& file, const std::vector<nlohmann::json>& lines);

// Compact, key-sorted rendering used for every line-oriented artifact.
std::string dump_line(const nlohmann::json& j);

}  // namespace kcurate
