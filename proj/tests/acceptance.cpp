// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <Eigen/Dense>
#include <json.hpp>

#include "kcurate/frechet.hpp"
#include "kcurate/heuristic.hpp"
#include "kcurate/metrics.hpp"
#include "kcurate/phantom.hpp"
#include "kcurate/pipeline.hpp"
#include "kcurate/provenance.hpp"
#include "kcurate/recon.hpp"
#include "kcurate/retrieval.hpp"

using namespace kcurate;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;

  void expect(bool cond, const std::string& what) {
    if (!cond && ok) detail = what;
    ok = ok && cond;
  }
};

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

int failures = 0;

void criterion(const std::string& name, double limit_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("threw: ") + e.what()};
  }
  const double t = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (limit_s > 0 && t >= limit_s) o.expect(false, fmt("took %.2f s, limit %.0f s", t, limit_s));
  if (!o.ok) ++failures;
  std::printf("%s  %-22s %7.2f s", o.ok ? "PASS" : "FAIL", name.c_str(), t);
  if (limit_s > 0) std::printf(" (limit %.0f s)", limit_s);
  if (!o.detail.empty()) std::printf("  %s", o.detail.c_str());
  std::printf("\n");
  std::fflush(stdout);
}

std::size_t count_lines(const UndersamplingMask& m) {
  std::size_t n = 0;
  for (auto v : m.lines) n += v != 0;
  return n;
}

// Contiguous sampled run through the middle of k-space.
std::size_t centre_run(const UndersamplingMask& m) {
  const std::size_t mid = m.lines.size() / 2;
  std::size_t lo = mid, hi = mid;
  while (lo > 0 && m.lines[lo - 1]) --lo;
  while (hi + 1 < m.lines.size() && m.lines[hi + 1]) ++hi;
  return m.lines[mid] ? hi - lo + 1 : 0;
}

Outcome mask_counts() {
  Outcome o;
  for (auto [n, r, centre, total] : {std::tuple{368, 4.0, 29, 92}, std::tuple{320, 8.0, 13, 40}}) {
    for (std::uint64_t seed = 0; seed < 64; ++seed) {
      const auto m = make_mask(n, r, seed);
      o.expect(count_lines(m) == static_cast<std::size_t>(total), fmt("N=%d R=%g: %zu lines", n, r, count_lines(m)));
      o.expect(m.center_lines == static_cast<std::size_t>(centre), fmt("N=%d R=%g: centre %zu", n, r, m.center_lines));
      // an outer line may touch the block, so the run is at least the centre
      o.expect(centre_run(m) >= static_cast<std::size_t>(centre), fmt("N=%d R=%g: centre run broken", n, r));
    }
  }
  if (o.ok) o.detail = "368/4 -> 29 + 63 = 92, 320/8 -> 13 + 27 = 40";
  return o;
}

double rel_error(const ComplexImage& a, const ComplexImage& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += std::norm(a.data[i] - b.data[i]);
    den += std::norm(b.data[i]);
  }
  return std::sqrt(num / den);
}

Outcome mvue_roundtrip() {
  Outcome o;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    PhantomSpec spec;
    spec.ny = spec.nx = 64;
    spec.coil_count = 4;
    spec.ellipses = random_ellipses(1000 + seed, static_cast<int>(seed % 3));
    spec.seed = seed;
    const auto p = make_phantom(spec);
    const auto k = simulate_kspace(p.image, p.maps, 0.0, seed);
    const auto m = make_mask(64, 1.0, seed);
    worst = std::max(worst, rel_error(mvue(apply_mask(k, m), p.maps), p.image));
  }
  o.expect(worst < 1e-5, fmt("worst relative error %.3g", worst));
  if (o.ok) o.detail = fmt("worst relative error %.3g < 1e-5 over 50 phantoms", worst);
  return o;
}

Outcome heuristic_thresholds() {
  Outcome o;
  std::vector<VolumeMagnitudes> volumes;
  std::set<std::pair<std::string, std::size_t>> dark, flat;
  for (std::size_t v = 0; v < 10; ++v) {
    VolumeMagnitudes vol{"vol" + std::to_string(v), {}};
    for (std::size_t s = 0; s < 10; ++s) {
      PhantomSpec spec;
      spec.ny = spec.nx = 64;
      spec.coil_count = 1;
      spec.ellipses = random_ellipses(v * 100 + s, static_cast<int>(v % 2));
      MagnitudeImage m{magnitude(make_phantom(spec).image), Normalization::Raw};
      if (s == v % 5) {
        for (auto& p : m.pixels.data) p *= 0.05;
        dark.insert({vol.volume_id, s});
      } else if (s == 5 + (v + 2) % 5) {
        std::fill(m.pixels.data.begin(), m.pixels.data.end(), 0.3 + 0.05 * static_cast<double>(v % 4));
        flat.insert({vol.volume_id, s});
      }
      vol.slices.push_back(std::move(m));
    }
    volumes.push_back(std::move(vol));
  }
  const auto scores = score_slices(volumes);
  o.expect(scores.size() == 100, "expected 100 scored slices");
  for (const auto& s : scores) {
    const std::pair key{s.volume_id, s.slice_index};
    if (dark.count(key)) o.expect(s.energy_ratio < 0.11, "injected dark slice is not dark");
    if (flat.count(key)) o.expect(s.edge_density < 0.017, "injected flat slice has edges");
  }
  const auto kept = heuristic_select(scores, {0.11, 0.017});
  std::size_t removed_bad = dark.size() + flat.size(), false_removals = 0;
  std::set<std::pair<std::string, std::size_t>> kept_set;
  for (const auto& e : kept.entries) {
    kept_set.insert({e.volume_id, e.slice_index});
    if (dark.count({e.volume_id, e.slice_index}) || flat.count({e.volume_id, e.slice_index})) --removed_bad;
  }
  for (const auto& s : scores) {
    const std::pair key{s.volume_id, s.slice_index};
    if (!dark.count(key) && !flat.count(key) && !kept_set.count(key)) ++false_removals;
  }
  o.expect(dark.size() == 10 && flat.size() == 10, "corpus construction");
  o.expect(removed_bad == 20, fmt("%zu of 20 injected slices removed", removed_bad));
  o.expect(false_removals == 0, fmt("%zu structured slices removed", false_removals));
  o.expect(kept.entries.size() == 80, fmt("%zu kept", kept.entries.size()));
  if (o.ok) o.detail = "20 of 20 injected removed, 80 of 80 structured kept";
  return o;
}

EmbeddingSet random_set(std::mt19937_64& rng, std::size_t n, std::size_t d, std::size_t slices_per_volume = 4,
                        std::size_t patches_per_slice = 2) {
  std::normal_distribution<float> nd;
  EmbeddingSet s{"acc", d, std::vector<float>(n * d), {}};
  for (auto& v : s.matrix) v = nd(rng);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t slice = i / patches_per_slice;
    s.refs.push_back({"v" + std::to_string(slice / slices_per_volume), slice % slices_per_volume,
                      (i % patches_per_slice) / 2, (i % patches_per_slice) % 2});
  }
  return s;
}

std::vector<std::size_t> scan(const EmbeddingSet& pool, std::span<const float> q, std::size_t k) {
  double qn = 0.0;
  for (float v : q) qn += double(v) * v;
  std::vector<std::pair<double, std::size_t>> all;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    double dot = 0.0, rn = 0.0;
    for (std::size_t j = 0; j < pool.dim; ++j) rn += double(pool.row(i)[j]) * pool.row(i)[j];
    for (std::size_t j = 0; j < pool.dim; ++j) dot += (q[j] / std::sqrt(qn)) * (pool.row(i)[j] / std::sqrt(rn));
    all.push_back({dot, i});
  }
  std::sort(all.begin(), all.end(), [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    if (!(pool.refs[a.second] == pool.refs[b.second])) return pool.refs[a.second] < pool.refs[b.second];
    return a.second < b.second;
  });
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(all[i].second);
  return out;
}

Outcome knn_oracle() {
  Outcome o;
  std::mt19937_64 rng(20240);
  std::uniform_int_distribution<std::size_t> pick_n(20, 1000), pick_d(2, 64);
  std::size_t queries_checked = 0;
  for (int inst = 0; inst < 100; ++inst) {
    const std::size_t n = pick_n(rng), d = pick_d(rng);
    const auto pool = random_set(rng, n, d);
    const auto queries = random_set(rng, 10, d);
    const RetrievalIndex index(pool);
    for (std::size_t k : {1u, 5u, 20u}) {
      const auto batch = index.knn_batch(queries, k);
      for (std::size_t q = 0; q < queries.size(); ++q) {
        std::vector<std::size_t> got;
        for (const auto& nb : batch[q]) got.push_back(nb.row);
        o.expect(got == scan(pool, queries.row(q), k), fmt("instance %d k=%zu query %zu differs", inst, k, q));
        ++queries_checked;
      }
    }
  }
  if (o.ok) o.detail = fmt("%zu result lists identical in content and order", queries_checked);
  return o;
}

std::size_t distinct_slices(const EmbeddingSet& s) {
  std::set<std::pair<std::string, std::size_t>> out;
  for (const auto& r : s.refs) out.insert({r.volume_id, r.slice_index});
  return out.size();
}

Outcome retention_targeting() {
  Outcome o;
  std::size_t lo = 1000, hi = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    const auto pool = random_set(rng, 240, 16, 6, 2);
    o.expect(distinct_slices(pool) == 120, "pool construction");
    const auto val = random_set(rng, 10 + 5 * seed, 16);
    for (auto mode : {AlignmentMode::Plain, AlignmentMode::Weighted}) {
      const auto n = alignment_filter(pool, val, 1.0 / 3.0, mode).entries.size();
      lo = std::min(lo, n);
      hi = std::max(hi, n);
    }
  }
  o.expect(lo >= 39 && hi <= 41, fmt("120-slice pool selected %zu..%zu", lo, hi));

  // cluster A around +e0, cluster B around +e1; validation drawn from A
  double worst_a = 1.0, worst_b = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(100 + seed);
    std::normal_distribution<float> nd(0.0f, 0.2f);
    EmbeddingSet pool{"acc", 8, {}, {}}, val{"acc", 8, {}, {}};
    auto put = [&](EmbeddingSet& s, std::size_t centre, std::string vol, std::size_t slice, std::size_t patch) {
      for (std::size_t j = 0; j < 8; ++j) s.matrix.push_back((j == centre ? 1.0f : 0.0f) + nd(rng));
      s.refs.push_back({std::move(vol), slice, patch / 2, patch % 2});
    };
    const std::size_t a_vols = 4, b_vols = 8, per = 5;
    for (std::size_t v = 0; v < a_vols + b_vols; ++v)
      for (std::size_t sl = 0; sl < per; ++sl)
        for (std::size_t p = 0; p < 2; ++p) put(pool, v < a_vols ? 0 : 1, (v < a_vols ? "A" : "B") + std::to_string(v), sl, p);
    for (std::size_t q = 0; q < 30; ++q) put(val, 0, "val" + std::to_string(q / 5), q % 5, 0);
    const double a_total = a_vols * per, b_total = b_vols * per;
    const auto r = alignment_filter(pool, val, a_total / (a_total + b_total));
    double a = 0, b = 0;
    for (const auto& e : r.entries) (e.volume_id.front() == 'A' ? a : b) += 1;
    worst_a = std::min(worst_a, a / a_total);
    worst_b = std::max(worst_b, b / b_total);
  }
  o.expect(worst_a >= 0.95, fmt("cluster A kept %.3f", worst_a));
  o.expect(worst_b <= 0.05, fmt("cluster B kept %.3f", worst_b));
  if (o.ok) o.detail = fmt("120 -> %zu..%zu; clusters: A >= %.2f, B <= %.2f", lo, hi, worst_a, worst_b);
  return o;
}

void add_row(EmbeddingSet& s, std::size_t axis, double tilt, std::size_t tilt_axis, PatchRef ref) {
  std::vector<float> v(s.dim, 0.0f);
  v[axis] = 1.0f;
  v[tilt_axis] += static_cast<float>(tilt);
  s.matrix.insert(s.matrix.end(), v.begin(), v.end());
  s.refs.push_back(std::move(ref));
}

Outcome weighted_mode() {
  Outcome o;
  // s owns three patches near e0, t two near e1, u one between e1 and e2, w
  // one on e2. Three queries near e0, one on e1: at k = 3, s is hit 9 times,
  // t twice and u once, which is the first k reaching 3 of the 4 slices.
  EmbeddingSet pool{"acc", 4, {}, {}};
  add_row(pool, 0, 0.00, 3, {"s", 0, 0, 0});
  add_row(pool, 0, 0.05, 3, {"s", 0, 0, 1});
  add_row(pool, 0, 0.10, 3, {"s", 0, 1, 0});
  add_row(pool, 1, 0.00, 3, {"t", 0, 0, 0});
  add_row(pool, 1, 0.05, 3, {"t", 0, 0, 1});
  add_row(pool, 1, 0.90, 2, {"u", 0, 0, 0});
  add_row(pool, 2, 0.00, 3, {"w", 0, 0, 0});
  EmbeddingSet val{"acc", 4, {}, {}};
  add_row(val, 0, 0.01, 3, {"q", 0, 0, 0});
  add_row(val, 0, 0.02, 3, {"q", 1, 0, 0});
  add_row(val, 0, 0.03, 3, {"q", 2, 0, 0});
  add_row(val, 1, 0.00, 3, {"q", 3, 0, 0});
  const auto r = weighted_alignment_filter(pool, val, 0.75);
  std::map<std::string, double> w;
  for (const auto& e : r.entries) w[e.volume_id] = e.weight;
  o.expect(r.params["k"] == 3, "search stopped at k = " + r.params["k"].dump());
  o.expect(w.size() == 3, fmt("%zu slices selected", w.size()));
  o.expect(w["s"] == 3.0, fmt("s weight %.17g", w["s"]));
  o.expect(w["t"] == std::sqrt(2.0), fmt("t weight %.17g", w["t"]));
  o.expect(w["u"] == 1.0, fmt("u weight %.17g", w["u"]));
  if (o.ok) o.detail = "hits 9/2/1 -> weights 3, sqrt 2, 1 (exact)";
  return o;
}

Eigen::MatrixXd gaussian_rows(std::mt19937_64& rng, Eigen::Index n, Eigen::Index d) {
  std::normal_distribution<double> nd;
  Eigen::MatrixXd mix(d, d), x(n, d);
  for (auto& v : mix.reshaped()) v = nd(rng) / std::sqrt(static_cast<double>(d));
  for (auto& v : x.reshaped()) v = nd(rng);
  return x * mix;
}

Outcome fdd_properties() {
  Outcome o;
  std::mt19937_64 rng(77);
  std::normal_distribution<double> nd;
  double worst_id = 0, worst_tr = 0, worst_sym = 0, worst_rot = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const auto x = gaussian_rows(rng, 1000, 16);
    Eigen::MatrixXd y = gaussian_rows(rng, 800, 16).array() + 0.3;
    const auto fx = fit_gaussian(x), fy = fit_gaussian(y);
    worst_id = std::max(worst_id, std::abs(frechet_distance(fx, fx).value));

    Eigen::RowVectorXd c(16);
    for (auto& v : c) v = nd(rng);
    const double shifted = frechet_distance(fx, fit_gaussian(Eigen::MatrixXd(x.rowwise() + c))).value;
    worst_tr = std::max(worst_tr, std::abs(shifted - c.squaredNorm()) / c.squaredNorm());

    const double xy = frechet_distance(fx, fy).value, yx = frechet_distance(fy, fx).value;
    worst_sym = std::max(worst_sym, std::abs(xy - yx) / xy);

    Eigen::MatrixXd g(16, 16);
    for (auto& v : g.reshaped()) v = nd(rng);
    const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();
    const double rot = frechet_distance(fit_gaussian(Eigen::MatrixXd(x * q)), fit_gaussian(Eigen::MatrixXd(y * q))).value;
    worst_rot = std::max(worst_rot, std::abs(rot - xy) / xy);
  }
  Eigen::VectorXd m0(1), m1(1);
  m0 << 0;
  m1 << 1;
  const Eigen::MatrixXd one = Eigen::MatrixXd::Identity(1, 1);
  const double closed = frechet_distance({m0, one, 100}, {m1, one, 100}).value;
  o.expect(worst_id < 1e-8, fmt("identity %.3g", worst_id));
  o.expect(std::abs(closed - 1.0) < 1e-8, fmt("1-D closed form %.17g", closed));
  o.expect(worst_tr < 1e-6, fmt("translation rel %.3g", worst_tr));
  o.expect(worst_sym < 1e-6, fmt("symmetry rel %.3g", worst_sym));
  o.expect(worst_rot < 1e-6, fmt("rotation rel %.3g", worst_rot));
  if (o.ok)
    o.detail = fmt("identity %.1e, closed form %.1e, translation %.1e, symmetry %.1e, rotation %.1e", worst_id,
                   std::abs(closed - 1.0), worst_tr, worst_sym, worst_rot);
  return o;
}

Outcome eval_protocol() {
  Outcome o;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto image = [&](std::size_t n) {
    RealImage img(n, n);
    for (std::size_t y = 0; y < n; ++y)
      for (std::size_t x = 0; x < n; ++x) img(y, x) = 0.5 + 0.4 * std::sin(0.3 * x + 0.2 * y) + 0.1 * u(rng);
    return img;
  };
  BoolImage mask(64, 64, 0);
  for (std::size_t y = 0; y < 64; ++y)
    for (std::size_t x = 0; x < 64; ++x) mask(y, x) = (x - 32.0) * (x - 32.0) + (y - 32.0) * (y - 32.0) < 26.0 * 26.0;
  double worst = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    const auto ref = image(64), rec = image(64);
    const auto base = normalize_to_reference(rec, ref, mask).image;
    const double s0 = masked_ssim(base, ref, mask), p0 = masked_psnr(base, ref, mask);
    for (auto [a, b] : {std::pair{3.0, -1.0}, std::pair{0.01, 7.0}, std::pair{250.0, 0.0}}) {
      RealImage t = rec;
      for (auto& v : t.data) v = a * v + b;
      const auto n = normalize_to_reference(t, ref, mask).image;
      worst = std::max({worst, std::abs(masked_ssim(n, ref, mask) - s0), std::abs(masked_psnr(n, ref, mask) - p0)});
    }
  }
  o.expect(worst < 1e-9, fmt("affine change %.3g", worst));

  std::vector<MetricRow> rows{{"a", 0, "small", 0.0, 0.0, 0.0, false}};
  for (std::size_t i = 0; i < 99; ++i) rows.push_back({"b", i, "large", 1.0, 0.0, 0.0, false});
  const double grand = aggregate(rows).grand_mean.ssim;
  o.expect(grand == 0.5, fmt("two-group grand mean %.17g", grand));

  std::vector<KeyedValue> constant;
  for (std::size_t i = 0; i < 40; ++i) constant.push_back({"g" + std::to_string(i % 4), 0.0125});
  const auto c = bootstrap_ci(constant, 10000, 0.95, 1);
  o.expect(c.lo == 0.0125 && c.hi == 0.0125, fmt("constant CI [%.17g, %.17g]", c.lo, c.hi));

  std::vector<KeyedValue> noisy;
  std::normal_distribution<double> nd;
  for (std::size_t i = 0; i < 120; ++i) noisy.push_back({"g" + std::to_string(i % 3), nd(rng)});
  const auto a = bootstrap_ci(noisy, 10000, 0.95, 9), b = bootstrap_ci(noisy, 10000, 0.95, 9);
  o.expect(a.lo == b.lo && a.hi == b.hi, "10000-resample CI not reproducible for a fixed seed");
  const auto other = bootstrap_ci(noisy, 10000, 0.95, 10);
  o.expect(other.lo != a.lo || other.hi != a.hi, "seed has no effect on the CI");
  if (o.ok) o.detail = fmt("affine %.1e, grand mean 0.5, constant CI zero width, seeded CI reproducible", worst);
  return o;
}

std::string slurp(const fs::path& f) {
  std::ifstream in(f, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string without_durations(const std::string& jsonl) {
  std::istringstream in(jsonl);
  std::string line, out;
  while (std::getline(in, line)) {
    auto j = nlohmann::json::parse(line);
    j.erase("duration_s");
    out += j.dump() + '\n';
  }
  return out;
}

std::map<std::string, std::string> tree(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) {
      const std::string rel = fs::relative(e.path(), dir).generic_string();
      out[rel] = rel == "provenance.jsonl" ? without_durations(slurp(e.path())) : slurp(e.path());
    }
  return out;
}

Outcome end_to_end() {
  Outcome o;
  const fs::path root = fs::temp_directory_path() / ("kcurate_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  PhantomCorpusSpec pool;
  pool.count = 16;
  pool.families = 4;
  pool.size = 128;
  pool.slices = 6;
  pool.noise_sigma = 0.002;
  pool.seed = 31;
  pool.id_prefix = "pool";
  write_phantom_corpus(root / "pool", pool);
  PhantomCorpusSpec val = pool;
  val.count = 4;
  val.families = 1;
  val.seed = 32;
  val.id_prefix = "val";
  write_phantom_corpus(root / "val", val);

  RunConfig c;
  c.seed = 2024;
  c.pool = {root / "pool", root / "pool" / "sidecar.jsonl"};
  c.validation = {root / "val", root / "val" / "sidecar.jsonl"};
  const auto first = run_pipeline(c, root / "run");
  const auto before = tree(root / "run");
  fs::remove_all(root / "run");
  const auto second = run_pipeline(c, root / "run");
  const auto after = tree(root / "run");
  const auto problems = verify_provenance(root / "run");

  o.expect(first.pool_slices == 96, fmt("%zu pool slices", first.pool_slices));
  o.expect(second.aligned_slices == first.aligned_slices, "selection changed between runs");
  o.expect(problems.empty(), problems.empty() ? "" : "provenance: " + problems.front());
  std::size_t differing = 0;
  std::string first_diff;
  for (const auto& [name, bytes] : before) {
    const auto it = after.find(name);
    if (it == after.end() || it->second != bytes) {
      if (differing++ == 0) first_diff = name;
    }
  }
  o.expect(before.size() == after.size(), "file sets differ");
  o.expect(differing == 0, fmt("%zu files differ, first ", differing) + first_diff);
  if (o.ok)
    o.detail = fmt("20 volumes, %zu files identical; %zu -> %zu -> %zu slices, fdd %.4g -> %.4g", before.size(),
                   first.pool_slices, first.heuristic_kept, first.aligned_slices, first.fdd_unfiltered,
                   first.fdd_filtered);
  fs::remove_all(root);
  return o;
}

}  // namespace

int main() {
  criterion("mask-counts", 1, mask_counts);
  criterion("mvue-roundtrip", 10, mvue_roundtrip);
  criterion("heuristic-thresholds", 30, heuristic_thresholds);
  criterion("knn-oracle", 30, knn_oracle);
  criterion("retention-targeting", 30, retention_targeting);
  criterion("weighted-mode", 0, weighted_mode);
  criterion("fdd", 10, fdd_properties);
  criterion("eval-protocol", 60, eval_protocol);
  criterion("end-to-end", 300, end_to_end);
  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
