#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>

#include <CLI11.hpp>
#include <json.hpp>

#include "kcurate/config.hpp"
#include "kcurate/curation.hpp"
#include "kcurate/embedding.hpp"
#include "kcurate/error.hpp"
#include "kcurate/frechet.hpp"
#include "kcurate/heuristic.hpp"
#include "kcurate/jsonl.hpp"
#include "kcurate/manifest.hpp"
#include "kcurate/metrics.hpp"
#include "kcurate/parallel.hpp"
#include "kcurate/pipeline.hpp"
#include "kcurate/provenance.hpp"
#include "kcurate/retrieval.hpp"
#include "kcurate/toy_embedder.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace kcurate;

namespace {

int exit_code(ErrorCode c) {
  switch (c) {
    case ErrorCode::ConfigError:
      return 2;
    case ErrorCode::MissingArtifact:
    case ErrorCode::MissingFile:
    case ErrorCode::DanglingReference:
      return 3;
    case ErrorCode::NumericFailure:
      return 4;
    default:
      return 1;
  }
}

void write_json(const fs::path& file, const json& j) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::IoError, "cannot write " + file.string());
  out << j.dump(2) << '\n';
}

json retention_json(const std::vector<RetentionRow>& rows) {
  json a = json::array();
  for (const auto& r : rows)
    a.push_back({{"source", r.source}, {"kept", r.kept}, {"total", r.total}, {"fraction", r.fraction}});
  return a;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kcurate: k-space data curation"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "run config whose values override the matching flags");

  // ingest
  auto* ingest_cmd = app.add_subcommand("ingest", "build a manifest from a sidecar table");
  std::string ing_root, ing_meta, ing_out, ing_converted;
  ingest_cmd->add_option("--root", ing_root)->required();
  ingest_cmd->add_option("--meta", ing_meta)->required();
  ingest_cmd->add_option("--out", ing_out)->required();
  ingest_cmd->add_option("--converted", ing_converted, "where derived 2-D containers go");

  // phantom
  auto* phantom_cmd = app.add_subcommand("phantom", "write a phantom corpus");
  PhantomCorpusSpec ph;
  std::string ph_out;
  phantom_cmd->add_option("--count", ph.count)->required();
  phantom_cmd->add_option("--size", ph.size);
  phantom_cmd->add_option("--coils", ph.coils);
  phantom_cmd->add_option("--slices", ph.slices);
  phantom_cmd->add_option("--seed", ph.seed);
  phantom_cmd->add_option("--noise", ph.noise_sigma);
  phantom_cmd->add_option("--families", ph.families);
  phantom_cmd->add_option("--first-family", ph.first_family);
  phantom_cmd->add_option("--prefix", ph.id_prefix);
  phantom_cmd->add_option("--out", ph_out)->required();

  // recon
  auto* recon_cmd = app.add_subcommand("recon", "reconstruct every manifest volume");
  std::string rc_manifest, rc_method = "mvue", rc_out;
  double rc_accel = 1.0;
  std::uint64_t rc_seed = 0;
  recon_cmd->add_option("--manifest", rc_manifest)->required();
  recon_cmd->add_option("--method", rc_method)->check(CLI::IsMember({"mvue", "rss", "zerofilled"}));
  recon_cmd->add_option("--accel", rc_accel);
  recon_cmd->add_option("--seed", rc_seed);
  recon_cmd->add_option("--out", rc_out)->required();

  // patches
  auto* patches_cmd = app.add_subcommand("patches", "export 128x128 patches for the embedding model");
  std::string pa_manifest, pa_recon, pa_out, pa_keep;
  patches_cmd->add_option("--manifest", pa_manifest)->required();
  patches_cmd->add_option("--recon-dir", pa_recon)->required();
  patches_cmd->add_option("--keep", pa_keep, "curation result restricting the slices");
  patches_cmd->add_option("--out", pa_out)->required();

  // embed-toy
  auto* embed_cmd = app.add_subcommand("embed-toy", "embed a patch export with the seeded toy embedder");
  std::string em_patches, em_out, em_zero;
  std::size_t em_dim = 64;
  embed_cmd->add_option("--patches", em_patches)->required();
  embed_cmd->add_option("--out", em_out)->required();
  embed_cmd->add_option("--zero-out", em_zero);
  embed_cmd->add_option("--dim", em_dim);

  // filter
  auto* filter_cmd = app.add_subcommand("filter", "heuristic or alignment filtering");
  filter_cmd->require_subcommand(1);
  auto* heur_cmd = filter_cmd->add_subcommand("heuristic");
  std::string fh_manifest, fh_recon, fh_out, fh_scores;
  HeuristicThresholds fh_th;
  heur_cmd->add_option("--manifest", fh_manifest)->required();
  heur_cmd->add_option("--recon-dir", fh_recon)->required();
  heur_cmd->add_option("--energy-th", fh_th.energy);
  heur_cmd->add_option("--edge-th", fh_th.edge);
  heur_cmd->add_option("--scores", fh_scores);
  heur_cmd->add_option("--out", fh_out)->required();

  auto* align_cmd = filter_cmd->add_subcommand("align");
  std::string fa_pool, fa_val, fa_mode = "plain", fa_manifest, fa_out, fa_zero;
  double fa_retention = 1.0 / 3.0, fa_empty = 0.6, fa_dedup = 0.9;
  align_cmd->add_option("--pool", fa_pool)->required();
  align_cmd->add_option("--val", fa_val)->required();
  align_cmd->add_option("--retention", fa_retention);
  align_cmd->add_option("--mode", fa_mode)->check(CLI::IsMember({"plain", "alignment", "weighted"}));
  align_cmd->add_option("--manifest", fa_manifest);
  align_cmd->add_option("--zero", fa_zero, "zero-patch embedding; enables empty rejection and dedup");
  align_cmd->add_option("--empty-th", fa_empty);
  align_cmd->add_option("--dedup-th", fa_dedup);
  align_cmd->add_option("--out", fa_out)->required();

  // fdd
  auto* fdd_cmd = app.add_subcommand("fdd", "Frechet distance between two embedding files");
  std::string fd_a, fd_b;
  fdd_cmd->add_option("--a", fd_a)->required();
  fdd_cmd->add_option("--b", fd_b)->required();

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "masked, normalized reconstruction metrics");
  std::string ev_recon, ev_ref, ev_manifest, ev_metrics = "ssim,psnr,nmse", ev_out, ev_baseline;
  std::size_t ev_bootstrap = 0;
  std::uint64_t ev_seed = 0;
  double ev_tau = 0.5;
  eval_cmd->add_option("--recon-dir", ev_recon)->required();
  eval_cmd->add_option("--ref-dir", ev_ref)->required();
  eval_cmd->add_option("--manifest", ev_manifest)->required();
  eval_cmd->add_option("--metrics", ev_metrics);
  eval_cmd->add_option("--bootstrap", ev_bootstrap);
  eval_cmd->add_option("--seed", ev_seed);
  eval_cmd->add_option("--mask-tau", ev_tau);
  eval_cmd->add_option("--baseline-dir", ev_baseline, "CI over SSIM differences against this recon");
  eval_cmd->add_option("--out", ev_out)->required();

  // report
  auto* report_cmd = app.add_subcommand("report", "per-source retention of a curation result");
  std::string rp_curation, rp_manifest, rp_out;
  report_cmd->add_option("--curation", rp_curation)->required();
  report_cmd->add_option("--manifest", rp_manifest)->required();
  report_cmd->add_option("--out", rp_out);

  // run / verify
  auto* run_cmd = app.add_subcommand("run", "full pipeline from a run config");
  std::string run_out;
  run_cmd->add_option("--out", run_out)->required();
  auto* verify_cmd = app.add_subcommand("verify", "check a run directory's provenance chain");
  std::string vf_dir;
  verify_cmd->add_option("--run-dir", vf_dir)->required();
  auto* init_cmd = app.add_subcommand("init-config", "write the default run config");
  std::string init_out;
  init_cmd->add_option("--out", init_out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    std::optional<RunConfig> cfg;
    if (!config_path.empty()) {
      cfg = load_config(config_path);
      const auto v = validate_config(*cfg);
      if (!v.empty()) {
        for (const auto& m : v) std::cerr << "config: " << m << '\n';
        return 2;
      }
      rc_seed = ev_seed = cfg->seed;
      rc_accel = cfg->acceleration;
      fh_th = {cfg->thresholds.energy, cfg->thresholds.edge};
      fa_retention = cfg->retention;
      fa_mode = to_string(cfg->mode);
      fa_empty = cfg->thresholds.empty;
      fa_dedup = cfg->thresholds.dedup;
      ev_bootstrap = cfg->bootstrap;
      ev_tau = cfg->mask_tau;
      if (cfg->workers > 0) set_worker_count(cfg->workers);
    }

    if (*ingest_cmd) {
      const fs::path out = ing_out;
      const fs::path converted = ing_converted.empty() ? out.parent_path() / "converted" : fs::path(ing_converted);
      const auto m = ingest(ing_root, read_sidecar(ing_meta), converted);
      write_manifest(out, m);
      std::cout << m.records.size() << " slices from " << m.containers.size() << " volumes\n";
    } else if (*phantom_cmd) {
      const auto rows = write_phantom_corpus(ph_out, ph);
      const fs::path dir = ph_out;
      write_manifest(dir / "manifest.jsonl", build_manifest(dir, rows));
      std::cout << rows.size() << " phantom volumes in " << dir.string() << '\n';
    } else if (*recon_cmd) {
      const auto m = read_manifest(rc_manifest);
      ReconJob job;
      job.method = recon_method_from_string(rc_method);
      job.acceleration = rc_accel;
      job.seed = rc_seed;
      job.options = job.method == ReconMethod::Mvue ? reference_recon_options() : ReconOptions{};
      const auto files = reconstruct_manifest(m, job, rc_out);
      std::cout << files.size() << " reconstructions in " << rc_out << '\n';
    } else if (*patches_cmd) {
      const auto m = read_manifest(pa_manifest);
      std::optional<CurationResult> keep;
      if (!pa_keep.empty()) keep = read_curation(pa_keep);
      const auto patches = collect_patches(m, pa_recon, keep ? &*keep : nullptr);
      write_patch_export(pa_out, patches);
      std::cout << patches.size() << " patches in " << pa_out << '\n';
    } else if (*embed_cmd) {
      const ToyEmbedder embedder(em_dim, 7);
      write_embeddings(em_out, embedder.embed_all(read_patch_export(em_patches)));
      if (!em_zero.empty()) write_embeddings(em_zero, embedder.zero_embedding());
    } else if (*heur_cmd) {
      const auto m = read_manifest(fh_manifest);
      std::vector<SliceScore> scores;
      const auto result = heuristic_filter(m, fh_recon, fh_th, &scores);
      write_curation(fh_out, result);
      if (!fh_scores.empty()) {
        std::vector<json> lines;
        for (const auto& s : scores)
          lines.push_back({{"volume_id", s.volume_id}, {"slice_index", s.slice_index},
                           {"energy_ratio", s.energy_ratio}, {"edge_density", s.edge_density}});
        write_jsonl(fh_scores, lines);
      }
      std::cout << result.entries.size() << " of " << m.records.size() << " slices kept\n";
    } else if (*align_cmd) {
      EmbeddingSet pool = read_embeddings(fa_pool), val = read_embeddings(fa_val);
      if (!fa_zero.empty()) {
        const EmbeddingSet zero = read_embeddings(fa_zero);
        pool = dedup_within_volume(reject_empty(pool, zero, fa_empty), fa_dedup);
        val = reject_empty(val, zero, fa_empty);
      }
      auto result = alignment_filter(pool, val, fa_retention, alignment_mode_from_string(fa_mode));
      if (!fa_manifest.empty()) {
        const auto m = read_manifest(fa_manifest);
        retention_report(result, m);  // rejects entries outside the manifest
      }
      write_curation(fa_out, result);
      std::cout << result.entries.size() << " slices selected at k = " << result.params["k"] << '\n';
    } else if (*fdd_cmd) {
      const auto r = fdd(read_embeddings(fd_a), read_embeddings(fd_b));
      std::printf("%.10g\n", r.value);
      std::cout << json{{"value", r.value}, {"n_a", r.n_a}, {"n_b", r.n_b}, {"d", r.dim},
                        {"ridge_applied", r.ridge_applied}}.dump()
                << '\n';
    } else if (*eval_cmd) {
      EvalOptions opts;
      opts.bootstrap = ev_bootstrap;
      opts.seed = ev_seed;
      opts.mask_tau = ev_tau;
      if (!ev_baseline.empty()) opts.baseline_dir = fs::path(ev_baseline);
      const auto report = evaluate(read_manifest(ev_manifest), ev_recon, ev_ref, opts);
      json j = to_json(report);
      std::set<std::string> wanted;
      for (std::size_t start = 0; start <= ev_metrics.size();) {
        const std::size_t comma = std::min(ev_metrics.find(',', start), ev_metrics.size());
        wanted.insert(ev_metrics.substr(start, comma - start));
        start = comma + 1;
      }
      for (const char* metric : {"ssim", "psnr_db", "nmse"}) {
        const std::string flag = std::string(metric) == "psnr_db" ? "psnr" : metric;
        if (wanted.count(flag)) continue;
        for (auto& row : j["rows"]) row.erase(metric);
        for (auto& d : j["distributions"]) d["means"].erase(metric);
        j["grand_mean"].erase(metric);
      }
      j["foreground_mask"] = {{"tau", ev_tau}, {"closing", "3x3"}};
      write_json(ev_out, j);
      std::cout << j["grand_mean"].dump() << '\n';
    } else if (*report_cmd) {
      const auto rows = retention_report(read_curation(rp_curation), read_manifest(rp_manifest));
      const json j = retention_json(rows);
      if (!rp_out.empty()) write_json(rp_out, j);
      std::cout << j.dump(2) << '\n';
    } else if (*run_cmd) {
      if (!cfg) {
        std::cerr << "run needs --config\n";
        return 2;
      }
      const auto s = run_pipeline(*cfg, run_out);
      std::cout << json{{"pool_slices", s.pool_slices}, {"heuristic_kept", s.heuristic_kept},
                        {"aligned_slices", s.aligned_slices}, {"fdd_unfiltered", s.fdd_unfiltered},
                        {"fdd_filtered", s.fdd_filtered}, {"validation_ssim", s.val_ssim}}.dump(2)
                << '\n';
    } else if (*verify_cmd) {
      const auto problems = verify_provenance(vf_dir);
      for (const auto& p : problems) std::cerr << p << '\n';
      if (!problems.empty()) return 1;
      std::cout << "provenance intact\n";
    } else if (*init_cmd) {
      save_config(init_out, cfg ? *cfg : RunConfig{});
    }
  } catch (const Error& e) {
    std::cerr << "kcurate: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "kcurate: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
