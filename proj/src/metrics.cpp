#include "kcurate/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "kcurate/hdf5_io.hpp"
#include "kcurate/parallel.hpp"
#include "kcurate/philox.hpp"
#include "kcurate/recon.hpp"

namespace kcurate {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void check_shapes(const RealImage& a, const RealImage& b, const BoolImage& mask) {
  require(a.ny == b.ny && a.nx == b.nx && a.ny == mask.ny && a.nx == mask.nx, ErrorCode::ShapeMismatch,
          "images and mask differ in shape");
}

struct Moments {
  double mean = 0.0;
  double var = 0.0;
  std::size_t n = 0;
};

// Running mean keeps constant inputs exact.
Moments masked_moments(const RealImage& img, const BoolImage& mask) {
  Moments m;
  for (std::size_t p = 0; p < img.size(); ++p)
    if (mask.data[p]) {
      ++m.n;
      m.mean += (img.data[p] - m.mean) / static_cast<double>(m.n);
    }
  if (m.n == 0) return m;
  for (std::size_t p = 0; p < img.size(); ++p)
    if (mask.data[p]) m.var += (img.data[p] - m.mean) * (img.data[p] - m.mean);
  m.var /= static_cast<double>(m.n);
  return m;
}

RealImage masked_copy(const RealImage& img, const BoolImage& mask) {
  RealImage out(img.ny, img.nx, 0.0);
  for (std::size_t p = 0; p < img.size(); ++p)
    if (mask.data[p]) out.data[p] = img.data[p];
  return out;
}

double masked_max(const RealImage& img, const BoolImage& mask) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < img.size(); ++p)
    if (mask.data[p]) m = std::max(m, img.data[p]);
  return m;
}

double masked_mse(const RealImage& a, const RealImage& b, const BoolImage& mask, std::size_t& n) {
  double acc = 0.0;
  n = 0;
  for (std::size_t p = 0; p < a.size(); ++p)
    if (mask.data[p]) {
      const double d = a.data[p] - b.data[p];
      acc += d * d;
      ++n;
    }
  return n ? acc / static_cast<double>(n) : 0.0;
}

// Sums over the w x w window whose top-left corner is (r, c), via two
// separable passes; valid for r, c in [0, n - w].
RealImage window_sums(const RealImage& img, std::size_t w) {
  const std::size_t oy = img.ny - w + 1, ox = img.nx - w + 1;
  RealImage rows(img.ny, ox, 0.0);
  for (std::size_t r = 0; r < img.ny; ++r)
    for (std::size_t c = 0; c < ox; ++c) {
      double s = 0.0;
      for (std::size_t j = 0; j < w; ++j) s += img(r, c + j);
      rows(r, c) = s;
    }
  RealImage out(oy, ox, 0.0);
  for (std::size_t r = 0; r < oy; ++r)
    for (std::size_t c = 0; c < ox; ++c) {
      double s = 0.0;
      for (std::size_t j = 0; j < w; ++j) s += rows(r + j, c);
      out(r, c) = s;
    }
  return out;
}

}  // namespace

Normalized normalize_to_reference(const RealImage& recon, const RealImage& reference, const BoolImage& mask) {
  check_shapes(recon, reference, mask);
  const Moments ref = masked_moments(reference, mask);
  if (ref.n == 0) fail(ErrorCode::DegenerateMask, "foreground mask is empty");
  if (!(ref.var > 0.0)) fail(ErrorCode::DegenerateMask, "reference is constant on the foreground mask");
  const Moments rec = masked_moments(recon, mask);
  Normalized out{RealImage(recon.ny, recon.nx, ref.mean), false};
  if (!(rec.var > 0.0)) {
    out.degenerate = true;
    return out;
  }
  const double a = std::sqrt(ref.var / rec.var);
  const double b = ref.mean - a * rec.mean;
  for (std::size_t p = 0; p < recon.size(); ++p) out.image.data[p] = a * recon.data[p] + b;
  return out;
}

double masked_ssim(const RealImage& recon, const RealImage& reference, const BoolImage& mask, const SsimParams& p) {
  check_shapes(recon, reference, mask);
  require(p.window >= 2, ErrorCode::InvalidArgument, "SSIM window must be >= 2");
  if (recon.ny < p.window || recon.nx < p.window) fail(ErrorCode::DegenerateMask, "image smaller than SSIM window");
  const RealImage x = masked_copy(recon, mask), y = masked_copy(reference, mask);
  const double range = masked_max(reference, mask);
  if (!std::isfinite(range)) fail(ErrorCode::DegenerateMask, "foreground mask is empty");
  const double c1 = (p.k1 * range) * (p.k1 * range), c2 = (p.k2 * range) * (p.k2 * range);

  RealImage xx(x.ny, x.nx), yy(x.ny, x.nx), xy(x.ny, x.nx);
  for (std::size_t i = 0; i < x.size(); ++i) {
    xx.data[i] = x.data[i] * x.data[i];
    yy.data[i] = y.data[i] * y.data[i];
    xy.data[i] = x.data[i] * y.data[i];
  }
  const RealImage sx = window_sums(x, p.window), sy = window_sums(y, p.window);
  const RealImage sxx = window_sums(xx, p.window), syy = window_sums(yy, p.window), sxy = window_sums(xy, p.window);
  const double np = static_cast<double>(p.window * p.window);
  const double cov_norm = np / (np - 1.0);
  const std::size_t half = p.window / 2;

  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t r = 0; r < sx.ny; ++r)
    for (std::size_t c = 0; c < sx.nx; ++c) {
      if (!mask(r + half, c + half)) continue;
      const double ux = sx(r, c) / np, uy = sy(r, c) / np;
      const double vx = cov_norm * (sxx(r, c) / np - ux * ux);
      const double vy = cov_norm * (syy(r, c) / np - uy * uy);
      const double vxy = cov_norm * (sxy(r, c) / np - ux * uy);
      total += ((2.0 * ux * uy + c1) * (2.0 * vxy + c2)) / ((ux * ux + uy * uy + c1) * (vx + vy + c2));
      ++count;
    }
  if (count == 0) fail(ErrorCode::DegenerateMask, "no SSIM window centre inside the mask");
  return total / static_cast<double>(count);
}

double masked_psnr(const RealImage& recon, const RealImage& reference, const BoolImage& mask) {
  check_shapes(recon, reference, mask);
  std::size_t n = 0;
  const double mse = masked_mse(recon, reference, mask, n);
  if (n == 0) fail(ErrorCode::DegenerateMask, "foreground mask is empty");
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  const double range = masked_max(reference, mask);
  return 10.0 * std::log10(range * range / mse);
}

double masked_nmse(const RealImage& recon, const RealImage& reference, const BoolImage& mask) {
  check_shapes(recon, reference, mask);
  double num = 0.0, den = 0.0;
  std::size_t n = 0;
  for (std::size_t p = 0; p < recon.size(); ++p)
    if (mask.data[p]) {
      const double d = recon.data[p] - reference.data[p];
      num += d * d;
      den += reference.data[p] * reference.data[p];
      ++n;
    }
  if (n == 0) fail(ErrorCode::DegenerateMask, "foreground mask is empty");
  if (num == 0.0) return 0.0;
  require(den > 0.0, ErrorCode::NumericFailure, "reference has zero energy on the mask");
  return num / den;
}

MetricReport aggregate(const std::vector<MetricRow>& rows) {
  MetricReport rep;
  rep.rows = rows;
  std::map<std::string, DistributionMean> groups;
  for (const auto& r : rows) {
    require(!r.distribution_key.empty(), ErrorCode::InvalidArgument, "metric row without distribution key");
    auto& g = groups[r.distribution_key];
    g.key = r.distribution_key;
    ++g.n;
    const double k = static_cast<double>(g.n);
    g.means.ssim += (r.ssim - g.means.ssim) / k;
    g.means.psnr_db = std::isinf(r.psnr_db) || std::isinf(g.means.psnr_db) ? g.means.psnr_db + r.psnr_db
                                                                            : g.means.psnr_db + (r.psnr_db - g.means.psnr_db) / k;
    g.means.nmse += (r.nmse - g.means.nmse) / k;
  }
  require(!groups.empty(), ErrorCode::EmptyInput, "no metric rows to aggregate");
  std::size_t k = 0;
  for (auto& [key, g] : groups) {
    ++k;
    const double kk = static_cast<double>(k);
    rep.grand_mean.ssim += (g.means.ssim - rep.grand_mean.ssim) / kk;
    rep.grand_mean.psnr_db = std::isinf(g.means.psnr_db) || std::isinf(rep.grand_mean.psnr_db)
                                 ? rep.grand_mean.psnr_db + g.means.psnr_db
                                 : rep.grand_mean.psnr_db + (g.means.psnr_db - rep.grand_mean.psnr_db) / kk;
    rep.grand_mean.nmse += (g.means.nmse - rep.grand_mean.nmse) / kk;
    rep.distributions.push_back(g);
  }
  return rep;
}

double two_stage_mean(std::span<const KeyedValue> values) {
  require(!values.empty(), ErrorCode::EmptyInput, "two-stage mean of no values");
  std::map<std::string, std::pair<std::size_t, double>> groups;
  for (const auto& v : values) {
    auto& [n, mean] = groups[v.key];
    ++n;
    mean += (v.value - mean) / static_cast<double>(n);
  }
  double grand = 0.0;
  std::size_t k = 0;
  for (const auto& [key, g] : groups) grand += (g.second - grand) / static_cast<double>(++k);
  return grand;
}

Interval bootstrap_ci(std::span<const KeyedValue> values, std::size_t resamples, double level, std::uint64_t seed) {
  require(!values.empty(), ErrorCode::EmptyInput, "bootstrap of no values");
  require(resamples >= 1, ErrorCode::InvalidArgument, "bootstrap needs at least one resample");
  require(level > 0.0 && level < 1.0, ErrorCode::InvalidArgument, "confidence level must lie in (0, 1)");
  std::map<std::string, std::vector<double>> groups;
  for (const auto& v : values) groups[v.key].push_back(v.value);
  std::vector<const std::vector<double>*> members;
  for (const auto& [key, g] : groups) members.push_back(&g);

  std::vector<double> stats(resamples);
  parallel_for(static_cast<std::ptrdiff_t>(resamples), [&](std::ptrdiff_t b) {
    CounterRng rng(seed, static_cast<std::uint64_t>(b));
    double grand = 0.0;
    std::size_t k = 0;
    for (const auto* g : members) {
      double mean = 0.0;
      for (std::size_t i = 0; i < g->size(); ++i)
        mean += ((*g)[rng.below(g->size())] - mean) / static_cast<double>(i + 1);
      grand += (mean - grand) / static_cast<double>(++k);
    }
    stats[static_cast<std::size_t>(b)] = grand;
  });
  std::sort(stats.begin(), stats.end());
  // linear interpolation between order statistics
  auto percentile = [&](double q) {
    const double pos = q * static_cast<double>(stats.size() - 1);
    const auto i = static_cast<std::size_t>(std::floor(pos));
    const double frac = pos - static_cast<double>(i);
    if (i + 1 >= stats.size()) return stats.back();
    return frac == 0.0 ? stats[i] : stats[i] + frac * (stats[i + 1] - stats[i]);
  };
  const double tail = (1.0 - level) / 2.0;
  return {percentile(tail), percentile(1.0 - tail), level};
}

std::string distribution_key(const SliceRecord& r) {
  return r.source + "/" + r.anatomy + "/" + to_string(r.view) + "/" + r.contrast;
}

namespace {

RealImage slice_magnitude(const h5::ReconVolume& v, std::size_t s) { return magnitude(v.images.at(s)); }

h5::ReconVolume load_required(const fs::path& dir, const std::string& id) {
  const fs::path p = dir / (id + ".h5");
  if (!fs::exists(p)) fail(ErrorCode::MissingArtifact, "no reconstruction for volume '" + id + "' at " + p.string());
  return h5::load_recon(p);
}

}  // namespace

MetricReport evaluate(const DatasetManifest& manifest, const fs::path& recon_dir, const fs::path& ref_dir,
                      const EvalOptions& opts) {
  struct Job {
    const SliceRecord* rec;
    std::size_t volume;
  };
  std::vector<h5::ReconVolume> recons, refs, baselines;
  std::vector<Job> jobs;
  for (const auto& id : manifest.volume_ids()) {
    recons.push_back(load_required(recon_dir, id));
    refs.push_back(load_required(ref_dir, id));
    if (opts.baseline_dir) baselines.push_back(load_required(*opts.baseline_dir, id));
    if (refs.back().maps.empty())
      fail(ErrorCode::MissingArtifact, "reference for '" + id + "' carries no sensitivity maps");
    for (const auto* r : manifest.volume(id)) {
      if (r->slice_index >= recons.back().images.size() || r->slice_index >= refs.back().images.size())
        fail(ErrorCode::MissingArtifact, "volume '" + id + "' lacks slice " + std::to_string(r->slice_index));
      jobs.push_back({r, recons.size() - 1});
    }
  }

  struct Outcome {
    MetricRow row;
    double baseline_ssim = 0.0;
    bool skipped = false;
  };
  std::vector<Outcome> outcomes(jobs.size());
  parallel_for(static_cast<std::ptrdiff_t>(jobs.size()), [&](std::ptrdiff_t i) {
    const Job& job = jobs[static_cast<std::size_t>(i)];
    const std::size_t s = job.rec->slice_index;
    Outcome& out = outcomes[static_cast<std::size_t>(i)];
    out.row = {job.rec->volume_id, s, distribution_key(*job.rec), 0.0, 0.0, 0.0, false};
    const RealImage ref = slice_magnitude(refs[job.volume], s);
    const BoolImage mask = foreground_mask(refs[job.volume].maps.at(s), opts.mask_tau);
    try {
      const Normalized n = normalize_to_reference(slice_magnitude(recons[job.volume], s), ref, mask);
      out.row.ssim = masked_ssim(n.image, ref, mask);
      out.row.psnr_db = masked_psnr(n.image, ref, mask);
      out.row.nmse = masked_nmse(n.image, ref, mask);
      out.row.flagged = n.degenerate;
      if (opts.baseline_dir) {
        const Normalized b = normalize_to_reference(slice_magnitude(baselines[job.volume], s), ref, mask);
        out.baseline_ssim = masked_ssim(b.image, ref, mask);
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateMask) throw;
      out.skipped = true;
    }
  });

  std::vector<MetricRow> rows;
  std::vector<KeyedValue> ci_values;
  std::vector<std::string> skipped;
  for (const auto& o : outcomes) {
    if (o.skipped) {
      skipped.push_back(o.row.volume_id + "/" + std::to_string(o.row.slice_index));
      continue;
    }
    rows.push_back(o.row);
    ci_values.push_back({o.row.distribution_key, opts.baseline_dir ? o.row.ssim - o.baseline_ssim : o.row.ssim});
  }
  MetricReport rep = aggregate(rows);
  rep.skipped = std::move(skipped);
  if (opts.bootstrap > 0) {
    rep.ci = bootstrap_ci(ci_values, opts.bootstrap, 0.95, opts.seed);
    rep.ci_metric = opts.baseline_dir ? "ssim_difference" : "ssim";
  }
  return rep;
}

namespace {
json number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return nullptr;
  return v;
}
json means_json(const MetricMeans& m) {
  return {{"ssim", number(m.ssim)}, {"psnr_db", number(m.psnr_db)}, {"nmse", number(m.nmse)}};
}
}  // namespace

json to_json(const MetricReport& report) {
  json rows = json::array();
  for (const auto& r : report.rows)
    rows.push_back({{"volume_id", r.volume_id},
                    {"slice_index", r.slice_index},
                    {"distribution_key", r.distribution_key},
                    {"ssim", number(r.ssim)},
                    {"psnr_db", number(r.psnr_db)},
                    {"nmse", number(r.nmse)},
                    {"flagged", r.flagged}});
  json dists = json::array();
  for (const auto& d : report.distributions) dists.push_back({{"key", d.key}, {"n", d.n}, {"means", means_json(d.means)}});
  json out = {{"rows", rows}, {"distributions", dists}, {"grand_mean", means_json(report.grand_mean)},
              {"skipped", report.skipped}};
  if (report.ci)
    out["ci"] = {{"lo", number(report.ci->lo)}, {"hi", number(report.ci->hi)}, {"level", report.ci->level},
                 {"metric", report.ci_metric}};
  return out;
}

}  // namespace kcurate
