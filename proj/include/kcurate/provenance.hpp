#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace kcurate {

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& file);

struct ArtifactHash {
  std::string path;  // relative to the run directory
  std::string sha256;
};

// One line of `provenance.jsonl`. `chain` hashes the previous line's chain
// together with everything here except the duration, so two identical runs
// produce the same chain.
struct StageRecord {
  std::string stage;
  std::string config_sha256;
  std::vector<ArtifactHash> inputs;
  std::vector<ArtifactHash> outputs;
  double duration_s = 0.0;
  std::string prev;
  std::string chain;
};

class ProvenanceLog {
 public:
  ProvenanceLog(std::filesystem::path run_dir, std::string config_sha256);

  // Hashes the listed files (relative ones against the working directory) and appends a line.
  void record(const std::string& stage, const std::vector<std::filesystem::path>& inputs,
              const std::vector<std::filesystem::path>& outputs, double duration_s);

  const std::vector<StageRecord>& records() const { return records_; }
  std::filesystem::path file() const { return run_dir_ / "provenance.jsonl"; }

 private:
  std::filesystem::path run_dir_;
  std::string config_sha256_;
  std::vector<StageRecord> records_;
};

std::vector<StageRecord> read_provenance(const std::filesystem::path& run_dir);

// Re-derives the chain and re-hashes every artifact that lives inside the
// run directory. Returns one message per problem; empty means intact.
std::vector<std::string> verify_provenance(const std::filesystem::path& run_dir);

}  // namespace kcurate
