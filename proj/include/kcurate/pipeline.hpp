#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "kcurate/config.hpp"
#include "kcurate/curation.hpp"
#include "kcurate/embedding.hpp"
#include "kcurate/manifest.hpp"
#include "kcurate/recon.hpp"

namespace kcurate {

// Phantom corpus written as one container per volume plus a sidecar table.
// Volume i uses ellipse family `first_family + i % families`; even families
// are labelled anatomy "brain", odd ones "knee", and the source is
// `source_prefix + anatomy`.
struct PhantomCorpusSpec {
  std::size_t count = 4;
  std::size_t slices = 6;
  std::size_t size = 64;
  std::size_t coils = 4;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  int families = 1;
  int first_family = 0;
  std::string id_prefix = "ph";
  std::string source_prefix = "phantom-";
  std::string contrast = "pd";
};

// Writes `<dir>/<id>.h5` and `<dir>/sidecar.jsonl`; returns the sidecar rows.
std::vector<SidecarRow> write_phantom_corpus(const std::filesystem::path& dir, const PhantomCorpusSpec& spec);

// Seed of the undersampling mask of one volume.
std::uint64_t mask_seed(std::uint64_t run_seed, const std::string& volume_id);

struct ReconJob {
  ReconMethod method = ReconMethod::Mvue;
  double acceleration = 1.0;  // 1 means fully sampled
  std::uint64_t seed = 0;
  ReconOptions options;
};

// One `<out>/<volume_id>.h5` reconstruction per manifest volume. Returns the
// written files in volume order.
std::vector<std::filesystem::path> reconstruct_manifest(const DatasetManifest& manifest, const ReconJob& job,
                                                        const std::filesystem::path& out_dir);

// Volume-max normalized magnitudes of `recon_dir/<id>.h5`, tiled into
// patches. With `keep`, only listed slices contribute.
std::vector<Patch> collect_patches(const DatasetManifest& manifest, const std::filesystem::path& recon_dir,
                                   const CurationResult* keep = nullptr);

// Rows whose parent slice is in `selection`.
EmbeddingSet restrict_to(const EmbeddingSet& set, const CurationResult& selection);

struct RunSummary {
  std::filesystem::path run_dir;
  std::size_t pool_slices = 0;
  std::size_t heuristic_kept = 0;
  std::size_t aligned_slices = 0;
  double fdd_unfiltered = 0.0;
  double fdd_filtered = 0.0;
  double val_ssim = 0.0;
};

// Stages in order: ingest, recon_ref, recon_zf, heuristic, patches, embed,
// clean, align, fdd, eval, report. Each appends to `run_dir/provenance.jsonl`.
// ConfigError lists every violation before any work; MissingArtifact names
// the file a stage could not find.
RunSummary run_pipeline(const RunConfig& config, const std::filesystem::path& run_dir);

// Map-estimate settings used for every reference reconstruction of a run.
ReconOptions reference_recon_options();

}  // namespace kcurate
