#include "kcurate/pipeline.hpp"

#include <chrono>
#include <fstream>
#include <set>

#include "kcurate/frechet.hpp"
#include "kcurate/hdf5_io.hpp"
#include "kcurate/heuristic.hpp"
#include "kcurate/jsonl.hpp"
#include "kcurate/metrics.hpp"
#include "kcurate/parallel.hpp"
#include "kcurate/phantom.hpp"
#include "kcurate/philox.hpp"
#include "kcurate/provenance.hpp"
#include "kcurate/retrieval.hpp"
#include "kcurate/toy_embedder.hpp"

namespace kcurate {
namespace fs = std::filesystem;
using nlohmann::json;

std::vector<SidecarRow> write_phantom_corpus(const fs::path& dir, const PhantomCorpusSpec& spec) {
  require(spec.count >= 1 && spec.families >= 1, ErrorCode::InvalidArgument, "phantom corpus needs count, families >= 1");
  fs::create_directories(dir);
  std::vector<SidecarRow> rows;
  for (std::size_t i = 0; i < spec.count; ++i) {
    char id[64];
    std::snprintf(id, sizeof id, "%s%03zu", spec.id_prefix.c_str(), i);
    const int family = spec.first_family + static_cast<int>(i % static_cast<std::size_t>(spec.families));
    const std::uint64_t seed = spec.seed * 1000003ull + i;
    const KSpaceVolume vol = make_phantom_volume(id, spec.slices, spec.size, spec.coils, spec.noise_sigma, seed, family);
    const std::string file = std::string(id) + ".h5";
    h5::save_volume(dir / file, vol);
    const std::string anatomy = family % 2 == 0 ? "brain" : "knee";
    rows.push_back({id, file, spec.source_prefix + anatomy, anatomy, View::Axial, spec.contrast, 3.0, "2d"});
  }
  write_sidecar(dir / "sidecar.jsonl", rows);
  return rows;
}

std::uint64_t mask_seed(std::uint64_t run_seed, const std::string& volume_id) {
  return fnv1a(volume_id.data(), volume_id.size(), fnv1a(&run_seed, sizeof run_seed));
}

ReconOptions reference_recon_options() {
  ReconOptions o;
  o.method = ReconMethod::Mvue;
  o.map_center_fraction = 0.16;
  o.maps.background_fraction = 0.05;
  return o;
}

std::vector<fs::path> reconstruct_manifest(const DatasetManifest& manifest, const ReconJob& job, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  std::vector<fs::path> written;
  for (const auto& id : manifest.volume_ids()) {
    const KSpaceVolume vol = h5::load_volume(manifest.containers.at(id));
    std::optional<UndersamplingMask> mask;
    if (job.acceleration > 1.0 || job.method == ReconMethod::ZeroFilled)
      mask = make_mask(vol.kx(), job.acceleration, mask_seed(job.seed, id));
    ReconOptions opts = job.options;
    opts.method = job.method;
    KSpaceVolume input = vol;
    if (mask && job.method != ReconMethod::ZeroFilled)
      for (std::size_t s = 0; s < input.slices(); ++s) input.set_slice(s, apply_mask(input.slice(s), *mask));
    VolumeRecon rec = reconstruct_volume(input, opts, mask ? &*mask : nullptr);

    h5::ReconVolume out;
    out.volume_id = id;
    out.method = to_string(job.method);
    out.acceleration = job.acceleration;
    out.seed = mask ? mask->seed : 0;
    out.images = std::move(rec.images);
    out.mask = mask ? mask->lines : std::vector<std::uint8_t>(vol.kx(), 1);
    out.maps = std::move(rec.maps);
    const fs::path file = out_dir / (id + ".h5");
    h5::save_recon(file, out);
    written.push_back(file);
  }
  return written;
}

std::vector<Patch> collect_patches(const DatasetManifest& manifest, const fs::path& recon_dir, const CurationResult* keep) {
  std::set<std::pair<std::string, std::size_t>> kept;
  if (keep)
    for (const auto& e : keep->entries) kept.emplace(e.volume_id, e.slice_index);
  std::vector<Patch> out;
  for (const auto& id : manifest.volume_ids()) {
    const fs::path path = recon_dir / (id + ".h5");
    if (!fs::exists(path)) fail(ErrorCode::MissingArtifact, "no reconstruction for volume '" + id + "' at " + path.string());
    const h5::ReconVolume rec = h5::load_recon(path);
    std::vector<MagnitudeImage> mags;
    for (const auto& img : rec.images) mags.push_back({magnitude(img), Normalization::Raw});
    const auto norm = normalize_volume_max(mags);
    for (const auto* r : manifest.volume(id)) {
      if (r->slice_index >= norm.size())
        fail(ErrorCode::MissingArtifact, path.string() + " lacks slice " + std::to_string(r->slice_index));
      if (keep && !kept.count({id, r->slice_index})) continue;
      auto tiles = extract_patches(norm[r->slice_index], id, r->slice_index);
      std::move(tiles.begin(), tiles.end(), std::back_inserter(out));
    }
  }
  return out;
}

EmbeddingSet restrict_to(const EmbeddingSet& set, const CurationResult& selection) {
  std::set<std::pair<std::string, std::size_t>> kept;
  for (const auto& e : selection.entries) kept.emplace(e.volume_id, e.slice_index);
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < set.size(); ++i)
    if (kept.count({set.refs[i].volume_id, set.refs[i].slice_index})) rows.push_back(i);
  return set.subset(rows);
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

void write_json(const fs::path& file, const json& j) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::IoError, "cannot write " + file.string());
  out << j.dump(2) << '\n';
}

json fdd_json(const FddResult& r) {
  return {{"value", r.value}, {"n_a", r.n_a}, {"n_b", r.n_b}, {"d", r.dim}, {"ridge_applied", r.ridge_applied}};
}

EmbeddingSet load_external(const fs::path& file, const fs::path& run_dir, const fs::path& patch_dir) {
  const fs::path p = file.is_absolute() ? file : run_dir / file;
  if (!fs::exists(p))
    fail(ErrorCode::MissingArtifact, "embedding file " + p.string() + " not found; run the exporter on " +
                                         patch_dir.string() + " and write its output there");
  return read_embeddings(p);
}

void check_refs(const EmbeddingSet& set, const std::vector<Patch>& patches, const std::string& what) {
  require(set.size() == patches.size(), ErrorCode::LengthError,
          what + " embeddings have " + std::to_string(set.size()) + " rows for " + std::to_string(patches.size()) +
              " exported patches");
  for (std::size_t i = 0; i < patches.size(); ++i)
    require(set.refs[i] == patches[i].ref, ErrorCode::FormatError,
            what + " embedding row " + std::to_string(i) + " does not match the patch export order");
}

struct Side {
  std::string name;
  fs::path manifest;
  fs::path ref_dir;
  DatasetManifest data;
};

}  // namespace

RunSummary run_pipeline(const RunConfig& config, const fs::path& run_dir_arg) {
  const auto violations = validate_config(config);
  if (!violations.empty()) {
    std::string msg = "invalid run config:";
    for (const auto& v : violations) msg += "\n  " + v;
    fail(ErrorCode::ConfigError, msg);
  }
  if (config.workers > 0) set_worker_count(config.workers);

  const fs::path run_dir = fs::absolute(run_dir_arg);
  fs::create_directories(run_dir);
  const fs::path config_file = run_dir / "config.json";
  {
    std::ofstream out(config_file, std::ios::binary | std::ios::trunc);
    out << canonical_config(config) << '\n';
  }
  ProvenanceLog log(run_dir, sha256_hex(canonical_config(config)));
  RunSummary summary;
  summary.run_dir = run_dir;

  // ingest
  auto t0 = Clock::now();
  Side pool{"pool", run_dir / "pool" / "manifest.jsonl", run_dir / "pool" / "ref", {}};
  Side val{"validation", run_dir / "validation" / "manifest.jsonl", run_dir / "validation" / "ref", {}};
  std::vector<fs::path> ingest_in{config_file};
  for (auto* side : {&pool, &val}) {
    const DatasetPaths& paths = side == &pool ? config.pool : config.validation;
    if (!fs::exists(paths.sidecar))
      fail(ErrorCode::MissingArtifact, side->name + " sidecar table " + paths.sidecar.string() + " not found");
    const auto rows = read_sidecar(paths.sidecar);
    ingest_in.push_back(paths.sidecar);
    side->data = ingest(paths.root, rows, run_dir / side->name / "converted");
    write_manifest(side->manifest, side->data);
    side->data = read_manifest(side->manifest);
    for (const auto& [id, path] : side->data.containers) {
      (void)id;
      ingest_in.push_back(path);
    }
  }
  const auto pool_id_list = pool.data.volume_ids();
  const std::set<std::string> pool_ids(pool_id_list.begin(), pool_id_list.end());
  for (const auto& id : val.data.volume_ids())
    if (pool_ids.count(id)) fail(ErrorCode::DuplicateKey, "volume '" + id + "' appears in both pool and validation");
  log.record("ingest", ingest_in,
             {pool.manifest, volumes_path(pool.manifest), val.manifest, volumes_path(val.manifest)}, seconds_since(t0));

  // recon_ref: fully sampled MVUE, maps kept for the foreground masks
  t0 = Clock::now();
  std::vector<fs::path> ref_out;
  for (auto* side : {&pool, &val}) {
    const auto files = reconstruct_manifest(side->data, {ReconMethod::Mvue, 1.0, config.seed, reference_recon_options()},
                                            side->ref_dir);
    ref_out.insert(ref_out.end(), files.begin(), files.end());
  }
  log.record("recon_ref", {pool.manifest, val.manifest}, ref_out, seconds_since(t0));

  // recon_zf: accelerated zero-filled reconstructions of the validation set
  t0 = Clock::now();
  const fs::path zf_dir = run_dir / "validation" / "zf";
  const auto zf_out =
      reconstruct_manifest(val.data, {ReconMethod::ZeroFilled, config.acceleration, config.seed, {}}, zf_dir);
  log.record("recon_zf", {val.manifest}, zf_out, seconds_since(t0));

  // heuristic
  t0 = Clock::now();
  std::vector<SliceScore> scores;
  CurationResult heuristic =
      heuristic_filter(pool.data, pool.ref_dir, {config.thresholds.energy, config.thresholds.edge}, &scores);
  const fs::path heuristic_file = run_dir / "heuristic" / "curation.jsonl";
  const fs::path scores_file = run_dir / "heuristic" / "scores.jsonl";
  write_curation(heuristic_file, heuristic);
  {
    std::vector<json> lines;
    for (const auto& s : scores)
      lines.push_back({{"volume_id", s.volume_id}, {"slice_index", s.slice_index}, {"energy_ratio", s.energy_ratio},
                       {"edge_density", s.edge_density}});
    write_jsonl(scores_file, lines);
  }
  summary.pool_slices = pool.data.records.size();
  summary.heuristic_kept = heuristic.entries.size();
  std::vector<fs::path> pool_refs = {pool.manifest};
  for (const auto& id : pool.data.volume_ids()) pool_refs.push_back(pool.ref_dir / (id + ".h5"));
  log.record("heuristic", pool_refs, {heuristic_file, scores_file}, seconds_since(t0));
  require(!heuristic.entries.empty(), ErrorCode::EmptyInput, "heuristic filtering removed every pool slice");

  // patches
  t0 = Clock::now();
  const fs::path pool_patch_dir = run_dir / "patches" / "pool";
  const fs::path val_patch_dir = run_dir / "patches" / "validation";
  const auto pool_patches = collect_patches(pool.data, pool.ref_dir, &heuristic);
  const auto val_patches = collect_patches(val.data, val.ref_dir);
  write_patch_export(pool_patch_dir, pool_patches);
  write_patch_export(val_patch_dir, val_patches);
  std::vector<fs::path> patch_in = pool_refs;
  patch_in.push_back(heuristic_file);
  patch_in.push_back(val.manifest);
  for (const auto& id : val.data.volume_ids()) patch_in.push_back(val.ref_dir / (id + ".h5"));
  auto patch_files = [](const fs::path& d) {
    return std::vector<fs::path>{d / "patches.f32", d / "refs.jsonl", d / "patches.json"};
  };
  std::vector<fs::path> patch_out = patch_files(pool_patch_dir);
  for (const auto& f : patch_files(val_patch_dir)) patch_out.push_back(f);
  log.record("patches", patch_in, patch_out, seconds_since(t0));

  // embed
  t0 = Clock::now();
  EmbeddingSet pool_emb, val_emb, zero_emb;
  fs::path pool_emb_file, val_emb_file, zero_emb_file;
  if (config.embedder == "toy") {
    const ToyEmbedder embedder(config.toy_dim, 7);
    pool_emb = embedder.embed_all(pool_patches);
    val_emb = embedder.embed_all(val_patches);
    zero_emb = embedder.zero_embedding();
    pool_emb_file = run_dir / "embeddings" / "pool.kemb";
    val_emb_file = run_dir / "embeddings" / "validation.kemb";
    zero_emb_file = run_dir / "embeddings" / "zero.kemb";
    fs::create_directories(pool_emb_file.parent_path());
    write_embeddings(pool_emb_file, pool_emb);
    write_embeddings(val_emb_file, val_emb);
    write_embeddings(zero_emb_file, zero_emb);
  } else {
    const ExternalEmbeddings& ext = *config.external;
    pool_emb = load_external(ext.pool, run_dir, pool_patch_dir);
    val_emb = load_external(ext.validation, run_dir, val_patch_dir);
    zero_emb = load_external(ext.zero, run_dir, pool_patch_dir);
    auto abs = [&](const fs::path& p) { return p.is_absolute() ? p : run_dir / p; };
    pool_emb_file = abs(ext.pool);
    val_emb_file = abs(ext.validation);
    zero_emb_file = abs(ext.zero);
    require(zero_emb.size() == 1, ErrorCode::LengthError, "zero-patch embedding file must hold exactly one row");
  }
  check_refs(pool_emb, pool_patches, "pool");
  check_refs(val_emb, val_patches, "validation");
  log.record("embed", patch_out, {pool_emb_file, val_emb_file, zero_emb_file}, seconds_since(t0));

  // clean: empty-patch rejection on both sets, dedup inside pool volumes
  t0 = Clock::now();
  const EmbeddingSet pool_clean =
      dedup_within_volume(reject_empty(pool_emb, zero_emb, config.thresholds.empty), config.thresholds.dedup);
  const EmbeddingSet val_clean = reject_empty(val_emb, zero_emb, config.thresholds.empty);
  require(pool_clean.size() > 0, ErrorCode::EmptyInput, "every pool patch was rejected as empty or duplicate");
  require(val_clean.size() > 0, ErrorCode::EmptyInput, "every validation patch was rejected as empty");
  const fs::path pool_clean_file = run_dir / "embeddings" / "pool_clean.kemb";
  const fs::path val_clean_file = run_dir / "embeddings" / "validation_clean.kemb";
  write_embeddings(pool_clean_file, pool_clean);
  write_embeddings(val_clean_file, val_clean);
  log.record("clean", {pool_emb_file, val_emb_file, zero_emb_file}, {pool_clean_file, val_clean_file},
             seconds_since(t0));

  // align
  t0 = Clock::now();
  CurationResult aligned = alignment_filter(pool_clean, val_clean, config.retention, config.mode);
  aligned.params["dedup_level"] = "patch";
  aligned.params["thresholds"] = {{"empty", config.thresholds.empty}, {"dedup", config.thresholds.dedup}};
  aligned.params["model_id"] = pool_clean.model_id;
  const fs::path aligned_file = run_dir / "curation" / "alignment.jsonl";
  write_curation(aligned_file, aligned);
  summary.aligned_slices = aligned.entries.size();
  log.record("align", {pool_clean_file, val_clean_file}, {aligned_file}, seconds_since(t0));

  // fdd on the same patch embeddings the filter used
  t0 = Clock::now();
  const FddResult unfiltered = fdd(pool_clean, val_clean);
  const FddResult filtered = fdd(restrict_to(pool_clean, aligned), val_clean);
  summary.fdd_unfiltered = unfiltered.value;
  summary.fdd_filtered = filtered.value;
  const fs::path fdd_file = run_dir / "fdd.json";
  write_json(fdd_file, {{"unfiltered", fdd_json(unfiltered)}, {"filtered", fdd_json(filtered)},
                        {"embedding_level", "patch"}});
  log.record("fdd", {pool_clean_file, val_clean_file, aligned_file}, {fdd_file}, seconds_since(t0));

  // eval
  t0 = Clock::now();
  EvalOptions eo;
  eo.mask_tau = config.mask_tau;
  eo.bootstrap = config.bootstrap;
  eo.seed = config.seed;
  const MetricReport report = evaluate(val.data, zf_dir, val.ref_dir, eo);
  summary.val_ssim = report.grand_mean.ssim;
  json report_json = to_json(report);
  report_json["foreground_mask"] = {{"tau", config.mask_tau}, {"closing", "3x3"}};
  report_json["recon"] = {{"method", "zerofilled"}, {"acceleration", config.acceleration}};
  const fs::path report_file = run_dir / "eval" / "report.json";
  write_json(report_file, report_json);
  std::vector<fs::path> eval_in = {val.manifest};
  eval_in.insert(eval_in.end(), zf_out.begin(), zf_out.end());
  for (const auto& id : val.data.volume_ids()) eval_in.push_back(val.ref_dir / (id + ".h5"));
  log.record("eval", eval_in, {report_file}, seconds_since(t0));

  // report
  t0 = Clock::now();
  auto retention_json = [](const std::vector<RetentionRow>& rows) {
    json a = json::array();
    for (const auto& r : rows)
      a.push_back({{"source", r.source}, {"kept", r.kept}, {"total", r.total}, {"fraction", r.fraction}});
    return a;
  };
  const fs::path retention_file = run_dir / "report" / "retention.json";
  write_json(retention_file, {{"heuristic", retention_json(retention_report(heuristic, pool.data))},
                              {"alignment", retention_json(retention_report(aligned, pool.data))}});
  const fs::path summary_file = run_dir / "report" / "summary.json";
  write_json(summary_file, {{"pool_slices", summary.pool_slices},
                            {"heuristic_kept", summary.heuristic_kept},
                            {"aligned_slices", summary.aligned_slices},
                            {"pool_patches", pool_emb.size()},
                            {"pool_patches_clean", pool_clean.size()},
                            {"validation_patches", val_emb.size()},
                            {"validation_patches_clean", val_clean.size()},
                            {"fdd_unfiltered", unfiltered.value},
                            {"fdd_filtered", filtered.value},
                            {"validation_ssim", report.grand_mean.ssim},
                            {"choices", {{"dedup", "patch embeddings, within volume"},
                                         {"fdd", "patch embeddings"},
                                         {"foreground_mask", "sum |S|^2 > tau * max, 3x3 closing"}}}});
  log.record("report", {heuristic_file, aligned_file, pool.manifest, report_file, fdd_file},
             {retention_file, summary_file}, seconds_since(t0));
  return summary;
}

}  // namespace kcurate
