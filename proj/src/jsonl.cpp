#include "kcurate/jsonl.hpp"

#include <fstream>

#include "kcurate/error.hpp"

namespace kcurate {
namespace fs = std::filesystem;

std::vector<nlohmann::json> read_jsonl(const fs::path& file) {
  if (!fs::exists(file)) fail(ErrorCode::MissingFile, file.string());
  std::ifstream in(file);
  require(static_cast<bool>(in), ErrorCode::IoError, "cannot read " + file.string());
  std::vector<nlohmann::json> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) fail(ErrorCode::FormatError, file.string() + ":" + std::to_string(lineno) + ": bad JSON");
    out.push_back(std::move(j));
  }
  return out;
}

std::string dump_line(const nlohmann::json& j) { return j.dump(); }

void write_jsonl(const fs::path& file, const std::vector<nlohmann::json>& lines) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::IoError, "cannot write " + file.string());
  for (const auto& j : lines) out << dump_line(j) << '\n';
}

}  // namespace kcurate
