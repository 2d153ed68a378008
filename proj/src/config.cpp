#include "kcurate/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "kcurate/error.hpp"

namespace kcurate {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string num(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

void unit_interval(std::vector<std::string>& out, const std::string& field, double v) {
  if (!(v >= 0.0 && v <= 1.0)) out.push_back(field + ": must lie in [0, 1], got " + num(v));
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) fail(ErrorCode::ConfigError, where + ": expected an object");
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) fail(ErrorCode::ConfigError, "unknown config key '" + where + key + "'");
}

template <class T>
void take(const json& j, const char* key, T& dst, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    dst = j.at(key).get<T>();
  } catch (const json::exception&) {
    fail(ErrorCode::ConfigError, "config key '" + where + key + "' has the wrong type");
  }
}

void take_path(const json& j, const char* key, fs::path& dst, const std::string& where) {
  std::string s = dst.string();
  take(j, key, s, where);
  dst = s;
}

json dataset_json(const DatasetPaths& p) { return {{"root", p.root.string()}, {"sidecar", p.sidecar.string()}}; }

DatasetPaths dataset_from(const json& j, const std::string& where) {
  check_keys(j, {"root", "sidecar"}, where);
  DatasetPaths p;
  take_path(j, "root", p.root, where);
  take_path(j, "sidecar", p.sidecar, where);
  return p;
}

}  // namespace

std::vector<std::string> validate_config(const RunConfig& c) {
  std::vector<std::string> v;
  unit_interval(v, "thresholds.energy", c.thresholds.energy);
  unit_interval(v, "thresholds.edge", c.thresholds.edge);
  unit_interval(v, "thresholds.empty", c.thresholds.empty);
  unit_interval(v, "thresholds.dedup", c.thresholds.dedup);
  if (!(c.retention > 0.0 && c.retention <= 1.0)) v.push_back("retention: must lie in (0, 1], got " + num(c.retention));
  if (!(c.acceleration >= 1.0) || !std::isfinite(c.acceleration))
    v.push_back("acceleration: must be a finite value >= 1, got " + num(c.acceleration));
  unit_interval(v, "mask_tau", c.mask_tau);
  if (c.workers < 0) v.push_back("workers: must be >= 0, got " + std::to_string(c.workers));
  if (c.embedder != "toy" && c.embedder != "external")
    v.push_back("embedder: must be 'toy' or 'external', got '" + c.embedder + "'");
  if (c.embedder == "external" && !c.external) v.push_back("external: required when embedder is 'external'");
  if (c.embedder == "toy" && c.toy_dim < 2) v.push_back("toy_dim: must be >= 2");
  return v;
}

json to_json(const RunConfig& c) {
  json j = {
      {"seed", c.seed},
      {"acceleration", c.acceleration},
      {"thresholds", {{"energy", c.thresholds.energy}, {"edge", c.thresholds.edge},
                      {"empty", c.thresholds.empty}, {"dedup", c.thresholds.dedup}}},
      {"retention", c.retention},
      {"mode", to_string(c.mode)},
      {"pool", dataset_json(c.pool)},
      {"validation", dataset_json(c.validation)},
      {"embedder", c.embedder},
      {"toy_dim", c.toy_dim},
      {"bootstrap", c.bootstrap},
      {"mask_tau", c.mask_tau},
      {"workers", c.workers},
  };
  if (c.external)
    j["external"] = {{"pool", c.external->pool.string()},
                     {"validation", c.external->validation.string()},
                     {"zero", c.external->zero.string()}};
  return j;
}

RunConfig config_from_json(const json& j) {
  check_keys(j, {"seed", "acceleration", "thresholds", "retention", "mode", "pool", "validation", "embedder",
                 "external", "toy_dim", "bootstrap", "mask_tau", "workers"},
             "");
  RunConfig c;
  take(j, "seed", c.seed, "");
  take(j, "acceleration", c.acceleration, "");
  take(j, "retention", c.retention, "");
  take(j, "embedder", c.embedder, "");
  take(j, "toy_dim", c.toy_dim, "");
  take(j, "bootstrap", c.bootstrap, "");
  take(j, "mask_tau", c.mask_tau, "");
  take(j, "workers", c.workers, "");
  if (j.contains("mode")) {
    std::string m;
    take(j, "mode", m, "");
    try {
      c.mode = alignment_mode_from_string(m);
    } catch (const Error& e) {
      fail(ErrorCode::ConfigError, std::string("mode: ") + e.what());
    }
  }
  if (j.contains("thresholds")) {
    const json& t = j["thresholds"];
    check_keys(t, {"energy", "edge", "empty", "dedup"}, "thresholds.");
    take(t, "energy", c.thresholds.energy, "thresholds.");
    take(t, "edge", c.thresholds.edge, "thresholds.");
    take(t, "empty", c.thresholds.empty, "thresholds.");
    take(t, "dedup", c.thresholds.dedup, "thresholds.");
  }
  if (j.contains("pool")) c.pool = dataset_from(j["pool"], "pool.");
  if (j.contains("validation")) c.validation = dataset_from(j["validation"], "validation.");
  if (j.contains("external")) {
    const json& e = j["external"];
    check_keys(e, {"pool", "validation", "zero"}, "external.");
    ExternalEmbeddings x;
    take_path(e, "pool", x.pool, "external.");
    take_path(e, "validation", x.validation, "external.");
    take_path(e, "zero", x.zero, "external.");
    c.external = x;
  }
  return c;
}

std::string canonical_config(const RunConfig& config) { return to_json(config).dump(); }

RunConfig load_config(const fs::path& file) {
  if (!fs::exists(file)) fail(ErrorCode::ConfigError, "config file not found: " + file.string());
  std::ifstream in(file);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) fail(ErrorCode::ConfigError, file.string() + ": not valid JSON");
  return config_from_json(j);
}

void save_config(const fs::path& file, const RunConfig& config) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::IoError, "cannot write " + file.string());
  out << to_json(config).dump(2) << '\n';
}

}  // namespace kcurate
