#include "kcurate/provenance.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <memory>

#include <openssl/evp.h>

#include "kcurate/error.hpp"
#include "kcurate/jsonl.hpp"

namespace kcurate {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Digest {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx{EVP_MD_CTX_new(), &EVP_MD_CTX_free};

  Digest() {
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
      fail(ErrorCode::IoError, "SHA-256 initialisation failed");
  }
  void update(const void* data, std::size_t n) { EVP_DigestUpdate(ctx.get(), data, n); }
  std::string hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
    std::string out;
    char buf[3];
    for (unsigned int i = 0; i < len; ++i) {
      std::snprintf(buf, sizeof buf, "%02x", md[i]);
      out += buf;
    }
    return out;
  }
};

json hashes_json(const std::vector<ArtifactHash>& v) {
  json a = json::array();
  for (const auto& h : v) a.push_back({{"path", h.path}, {"sha256", h.sha256}});
  return a;
}

std::vector<ArtifactHash> hashes_from(const json& a) {
  std::vector<ArtifactHash> out;
  for (const auto& h : a) out.push_back({h.at("path").get<std::string>(), h.at("sha256").get<std::string>()});
  return out;
}

json body(const StageRecord& r) {
  return {{"stage", r.stage}, {"config_sha256", r.config_sha256}, {"inputs", hashes_json(r.inputs)},
          {"outputs", hashes_json(r.outputs)}, {"prev", r.prev}};
}

std::string chain_of(const StageRecord& r) { return sha256_hex(body(r).dump()); }

std::string relative_to(const fs::path& p, const fs::path& run_dir) {
  const fs::path abs = fs::weakly_canonical(p.is_absolute() ? p : run_dir / p);
  const fs::path base = fs::weakly_canonical(run_dir);
  return abs.lexically_relative(base).generic_string();
}

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  Digest d;
  d.update(bytes.data(), bytes.size());
  return d.hex();
}

std::string sha256_file(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) fail(ErrorCode::MissingArtifact, "cannot hash missing file " + file.string());
  Digest d;
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    d.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return d.hex();
}

ProvenanceLog::ProvenanceLog(fs::path run_dir, std::string config_sha256)
    : run_dir_(fs::absolute(run_dir)), config_sha256_(std::move(config_sha256)) {
  fs::create_directories(run_dir_);
  std::ofstream(file(), std::ios::trunc);
}

void ProvenanceLog::record(const std::string& stage, const std::vector<fs::path>& inputs,
                           const std::vector<fs::path>& outputs, double duration_s) {
  StageRecord r;
  r.stage = stage;
  r.config_sha256 = config_sha256_;
  auto hash_all = [&](const std::vector<fs::path>& files) {
    std::vector<ArtifactHash> out;
    for (const auto& f : files) {
      const fs::path abs = fs::absolute(f);
      out.push_back({relative_to(abs, run_dir_), sha256_file(abs)});
    }
    return out;
  };
  r.inputs = hash_all(inputs);
  r.outputs = hash_all(outputs);
  r.duration_s = duration_s;
  r.prev = records_.empty() ? std::string(64, '0') : records_.back().chain;
  r.chain = chain_of(r);
  records_.push_back(r);

  json line = body(r);
  line["chain"] = r.chain;
  line["duration_s"] = r.duration_s;
  std::ofstream out(file(), std::ios::binary | std::ios::app);
  require(static_cast<bool>(out), ErrorCode::IoError, "cannot append to " + file().string());
  out << dump_line(line) << '\n';
}

std::vector<StageRecord> read_provenance(const fs::path& run_dir) {
  std::vector<StageRecord> out;
  for (const auto& j : read_jsonl(run_dir / "provenance.jsonl")) {
    try {
      StageRecord r;
      r.stage = j.at("stage").get<std::string>();
      r.config_sha256 = j.at("config_sha256").get<std::string>();
      r.inputs = hashes_from(j.at("inputs"));
      r.outputs = hashes_from(j.at("outputs"));
      r.duration_s = j.at("duration_s").get<double>();
      r.prev = j.at("prev").get<std::string>();
      r.chain = j.at("chain").get<std::string>();
      out.push_back(std::move(r));
    } catch (const json::exception& e) {
      fail(ErrorCode::FormatError, "provenance line: " + std::string(e.what()));
    }
  }
  return out;
}

std::vector<std::string> verify_provenance(const fs::path& run_dir) {
  std::vector<std::string> problems;
  const auto records = read_provenance(run_dir);
  std::string prev(64, '0');
  for (const auto& r : records) {
    if (r.prev != prev) problems.push_back(r.stage + ": chain link broken");
    if (chain_of(r) != r.chain) problems.push_back(r.stage + ": record altered");
    prev = r.chain;
    for (const auto* group : {&r.inputs, &r.outputs})
      for (const auto& h : *group) {
        if (h.path.starts_with("..")) continue;
        const fs::path f = run_dir / h.path;
        if (!fs::exists(f))
          problems.push_back(r.stage + ": " + h.path + " is missing");
        else if (sha256_file(f) != h.sha256)
          problems.push_back(r.stage + ": " + h.path + " changed");
      }
  }
  return problems;
}

}  // namespace kcurate
