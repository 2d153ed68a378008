#include "kcurate/embedding.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "kcurate/jsonl.hpp"
#include "kcurate/parallel.hpp"

namespace kcurate {
namespace fs = std::filesystem;
using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "KEMB/patch I/O assumes a little-endian host");

std::vector<Patch> extract_patches(const MagnitudeImage& image, const std::string& volume_id, std::size_t slice_index) {
  const RealImage& src = image.pixels;
  const std::size_t ny = std::max(src.ny, kPatchSize), nx = std::max(src.nx, kPatchSize);
  const std::size_t oy = (ny - src.ny) / 2, ox = (nx - src.nx) / 2;
  auto at = [&](std::size_t r, std::size_t c) -> double {
    if (r < oy || c < ox || r - oy >= src.ny || c - ox >= src.nx) return 0.0;
    return src(r - oy, c - ox);
  };
  std::vector<Patch> out;
  for (std::size_t pr = 0; pr < ny / kPatchSize; ++pr)
    for (std::size_t pc = 0; pc < nx / kPatchSize; ++pc) {
      Patch p{{volume_id, slice_index, pr, pc}, RealImage(kPatchSize, kPatchSize)};
      for (std::size_t r = 0; r < kPatchSize; ++r)
        for (std::size_t c = 0; c < kPatchSize; ++c) p.tile(r, c) = at(pr * kPatchSize + r, pc * kPatchSize + c);
      out.push_back(std::move(p));
    }
  return out;
}

void EmbeddingSet::validate() const {
  require(matrix.size() == refs.size() * dim, ErrorCode::LengthError,
          "embedding matrix holds " + std::to_string(matrix.size()) + " values, expected " +
              std::to_string(refs.size()) + " x " + std::to_string(dim));
  for (float v : matrix) require(!std::isnan(v), ErrorCode::NonFinite, "embedding set contains NaN");
}

EmbeddingSet EmbeddingSet::subset(const std::vector<std::size_t>& rows) const {
  EmbeddingSet out{model_id, dim, {}, {}};
  out.matrix.reserve(rows.size() * dim);
  out.refs.reserve(rows.size());
  for (std::size_t i : rows) {
    auto r = row(i);
    out.matrix.insert(out.matrix.end(), r.begin(), r.end());
    out.refs.push_back(refs[i]);
  }
  return out;
}

double cosine(std::span<const float> a, std::span<const float> b) {
  require(a.size() == b.size(), ErrorCode::DimensionMismatch, "cosine of vectors with different lengths");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a[i], y = b[i];
    dot += x * y;
    na += x * x;
    nb += y * y;
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

namespace {

template <class T>
void put(std::string& buf, T v) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  buf.append(bytes, sizeof(T));
}

template <class T>
T get(const std::string& buf, std::size_t& pos, const fs::path& file) {
  if (pos + sizeof(T) > buf.size()) fail(ErrorCode::LengthError, file.string() + ": truncated header");
  T v;
  std::memcpy(&v, buf.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

std::string slurp(const fs::path& file) {
  if (!fs::exists(file)) fail(ErrorCode::MissingFile, file.string());
  std::ifstream in(file, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::IoError, "cannot read " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

json ref_json(const PatchRef& r) {
  return {{"volume_id", r.volume_id}, {"slice_index", r.slice_index}, {"patch_row", r.patch_row}, {"patch_col", r.patch_col}};
}

PatchRef ref_from_json(const json& j) {
  return {j.at("volume_id").get<std::string>(), j.at("slice_index").get<std::size_t>(),
          j.at("patch_row").get<std::size_t>(), j.at("patch_col").get<std::size_t>()};
}

}  // namespace

void write_embeddings(const fs::path& file, const EmbeddingSet& set) {
  set.validate();
  require(set.model_id.size() <= 0xffff, ErrorCode::InvalidArgument, "model id too long");
  std::string buf = "KEMB";
  put<std::uint32_t>(buf, 1);
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(set.size()));
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(set.dim));
  put<std::uint16_t>(buf, static_cast<std::uint16_t>(set.model_id.size()));
  buf += set.model_id;
  buf.append(reinterpret_cast<const char*>(set.matrix.data()), set.matrix.size() * sizeof(float));
  std::string refs;
  for (const auto& r : set.refs) refs += dump_line(ref_json(r)) + '\n';
  put<std::uint64_t>(buf, refs.size());
  buf += refs;

  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::IoError, "cannot write " + file.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

EmbeddingSet read_embeddings(const fs::path& file) {
  const std::string buf = slurp(file);
  if (buf.size() < 4 || buf.compare(0, 4, "KEMB") != 0) fail(ErrorCode::FormatError, file.string() + ": bad magic");
  std::size_t pos = 4;
  const auto version = get<std::uint32_t>(buf, pos, file);
  if (version != 1) fail(ErrorCode::FormatError, file.string() + ": unsupported version " + std::to_string(version));
  const auto n = get<std::uint32_t>(buf, pos, file);
  const auto d = get<std::uint32_t>(buf, pos, file);
  const auto id_len = get<std::uint16_t>(buf, pos, file);
  if (pos + id_len > buf.size()) fail(ErrorCode::LengthError, file.string() + ": truncated model id");
  EmbeddingSet set;
  set.model_id = buf.substr(pos, id_len);
  pos += id_len;
  set.dim = d;
  const std::size_t bytes = static_cast<std::size_t>(n) * d * sizeof(float);
  if (pos + bytes > buf.size()) fail(ErrorCode::LengthError, file.string() + ": truncated embedding matrix");
  set.matrix.resize(static_cast<std::size_t>(n) * d);
  std::memcpy(set.matrix.data(), buf.data() + pos, bytes);
  pos += bytes;
  const auto refs_len = get<std::uint64_t>(buf, pos, file);
  if (pos + refs_len != buf.size())
    fail(ErrorCode::LengthError, file.string() + ": refs block length " + std::to_string(refs_len) + " does not match file");
  std::istringstream refs(buf.substr(pos));
  std::string line;
  while (std::getline(refs, line)) {
    if (line.empty()) continue;
    auto j = json::parse(line, nullptr, false);
    if (j.is_discarded()) fail(ErrorCode::FormatError, file.string() + ": bad ref line");
    try {
      set.refs.push_back(ref_from_json(j));
    } catch (const json::exception& e) {
      fail(ErrorCode::FormatError, file.string() + ": " + e.what());
    }
  }
  if (set.refs.size() != n)
    fail(ErrorCode::LengthError, file.string() + ": " + std::to_string(set.refs.size()) + " refs for " + std::to_string(n) + " rows");
  set.validate();
  return set;
}

EmbeddingSet reject_empty(const EmbeddingSet& set, const EmbeddingSet& zero_embedding, double threshold) {
  if (set.model_id != zero_embedding.model_id)
    fail(ErrorCode::ModelMismatch, "embeddings from '" + set.model_id + "', zero embedding from '" + zero_embedding.model_id + "'");
  require(zero_embedding.size() == 1, ErrorCode::InvalidArgument, "zero embedding must hold exactly one row");
  require(zero_embedding.dim == set.dim, ErrorCode::DimensionMismatch, "zero embedding dimension differs");
  std::vector<std::size_t> keep;
  const auto zero = zero_embedding.row(0);
  for (std::size_t i = 0; i < set.size(); ++i)
    if (!(cosine(set.row(i), zero) > threshold)) keep.push_back(i);
  return set.subset(keep);
}

EmbeddingSet dedup_within_volume(const EmbeddingSet& set, double threshold) {
  std::map<std::string, std::vector<std::size_t>> by_volume;
  for (std::size_t i = 0; i < set.size(); ++i) by_volume[set.refs[i].volume_id].push_back(i);
  std::vector<std::vector<std::size_t>*> groups;
  for (auto& [id, rows] : by_volume) groups.push_back(&rows);

  std::vector<std::uint8_t> keep(set.size(), 0);
  parallel_for(static_cast<std::ptrdiff_t>(groups.size()), [&](std::ptrdiff_t g) {
    auto& rows = *groups[static_cast<std::size_t>(g)];
    std::stable_sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) { return set.refs[a] < set.refs[b]; });
    std::vector<std::size_t> kept;
    for (std::size_t i : rows) {
      const bool dup = std::any_of(kept.begin(), kept.end(), [&](std::size_t k) { return cosine(set.row(i), set.row(k)) > threshold; });
      if (!dup) {
        kept.push_back(i);
        keep[i] = 1;
      }
    }
  });
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < set.size(); ++i)
    if (keep[i]) rows.push_back(i);
  return set.subset(rows);
}

void write_patch_export(const fs::path& dir, const std::vector<Patch>& patches) {
  fs::create_directories(dir);
  std::ofstream tiles(dir / "patches.f32", std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(tiles), ErrorCode::IoError, "cannot write patch tiles in " + dir.string());
  std::vector<json> refs;
  std::vector<float> buf(kPatchSize * kPatchSize);
  for (const auto& p : patches) {
    require(p.tile.ny == kPatchSize && p.tile.nx == kPatchSize, ErrorCode::ShapeMismatch, "patch tile must be 128x128");
    std::transform(p.tile.data.begin(), p.tile.data.end(), buf.begin(), [](double v) { return static_cast<float>(v); });
    tiles.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
    refs.push_back(ref_json(p.ref));
  }
  write_jsonl(dir / "refs.jsonl", refs);
  std::ofstream meta(dir / "patches.json", std::ios::trunc);
  meta << json{{"count", patches.size()}, {"tile", kPatchSize}, {"dtype", "float32-le"}}.dump(2) << '\n';
}

std::vector<Patch> read_patch_export(const fs::path& dir) {
  const auto refs = read_jsonl(dir / "refs.jsonl");
  const std::string tiles = slurp(dir / "patches.f32");
  const std::size_t per = kPatchSize * kPatchSize;
  if (tiles.size() != refs.size() * per * sizeof(float))
    fail(ErrorCode::LengthError, dir.string() + ": tile bytes do not match ref count");
  std::vector<Patch> out;
  out.reserve(refs.size());
  std::vector<float> buf(per);
  for (std::size_t i = 0; i < refs.size(); ++i) {
    std::memcpy(buf.data(), tiles.data() + i * per * sizeof(float), per * sizeof(float));
    Patch p{ref_from_json(refs[i]), RealImage(kPatchSize, kPatchSize)};
    std::copy(buf.begin(), buf.end(), p.tile.data.begin());
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace kcurate
