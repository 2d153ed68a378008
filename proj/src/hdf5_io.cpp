#include "kcurate/hdf5_io.hpp"

#include <cstdio>
#include <hdf5.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <utility>

namespace kcurate::h5 {
namespace fs = std::filesystem;
namespace {

class Handle {
 public:
  Handle() = default;
  Handle(hid_t id, herr_t (*closer)(hid_t)) : id_(id), closer_(closer) {}
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  Handle(Handle&& o) noexcept : id_(std::exchange(o.id_, H5I_INVALID_HID)), closer_(o.closer_) {}
  Handle& operator=(Handle&& o) noexcept {
    reset();
    id_ = std::exchange(o.id_, H5I_INVALID_HID);
    closer_ = o.closer_;
    return *this;
  }
  ~Handle() { reset(); }

  hid_t get() const { return id_; }
  bool valid() const { return id_ >= 0; }

 private:
  void reset() {
    if (id_ >= 0 && closer_) closer_(id_);
    id_ = H5I_INVALID_HID;
  }
  hid_t id_ = H5I_INVALID_HID;
  herr_t (*closer_)(hid_t) = nullptr;
};

void quiet() {
  static const bool once = [] {
    H5Eset_auto2(H5E_DEFAULT, nullptr, nullptr);
    return true;
  }();
  (void)once;
}

Handle checked(hid_t id, herr_t (*closer)(hid_t), ErrorCode code, const std::string& what) {
  if (id < 0) fail(code, what);
  return Handle(id, closer);
}

void check(herr_t status, const std::string& what) {
  if (status < 0) fail(ErrorCode::IoError, what);
}

Handle open_file(const fs::path& path) {
  quiet();
  if (!fs::exists(path)) fail(ErrorCode::MissingFile, path.string());
  return checked(H5Fopen(path.c_str(), H5F_ACC_RDONLY, H5P_DEFAULT), H5Fclose, ErrorCode::FormatError,
                 "cannot open HDF5 container " + path.string());
}

Handle create_file(const fs::path& path) {
  quiet();
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  Handle fcpl = checked(H5Pcreate(H5P_FILE_CREATE), H5Pclose, ErrorCode::IoError, "fcpl");
  check(H5Pset_obj_track_times(fcpl.get(), 0), "fcpl track times");
  return checked(H5Fcreate(path.c_str(), H5F_ACC_TRUNC, fcpl.get(), H5P_DEFAULT), H5Fclose, ErrorCode::IoError,
                 "cannot create " + path.string());
}

Handle complex_type(const char* re = "r", const char* im = "i", hid_t member = H5T_IEEE_F32LE) {
  Handle t = checked(H5Tcreate(H5T_COMPOUND, 2 * sizeof(float)), H5Tclose, ErrorCode::IoError, "complex type");
  check(H5Tinsert(t.get(), re, 0, member), "complex type r");
  check(H5Tinsert(t.get(), im, sizeof(float), member), "complex type i");
  return t;
}

Handle simple_space(const std::vector<std::size_t>& shape) {
  std::vector<hsize_t> dims(shape.begin(), shape.end());
  return checked(H5Screate_simple(static_cast<int>(dims.size()), dims.data(), nullptr), H5Sclose,
                 ErrorCode::IoError, "dataspace");
}

Handle dataset_props() {
  Handle dcpl = checked(H5Pcreate(H5P_DATASET_CREATE), H5Pclose, ErrorCode::IoError, "dcpl");
  check(H5Pset_obj_track_times(dcpl.get(), 0), "dcpl track times");
  return dcpl;
}

void write_dataset(hid_t file, const char* name, hid_t file_type, hid_t mem_type,
                   const std::vector<std::size_t>& shape, const void* buf) {
  Handle space = simple_space(shape);
  Handle dcpl = dataset_props();
  Handle ds = checked(H5Dcreate2(file, name, file_type, space.get(), H5P_DEFAULT, dcpl.get(), H5P_DEFAULT),
                      H5Dclose, ErrorCode::IoError, std::string("create dataset ") + name);
  check(H5Dwrite(ds.get(), mem_type, H5S_ALL, H5S_ALL, H5P_DEFAULT, buf), std::string("write ") + name);
}

void write_string_attr(hid_t obj, const std::string& name, const std::string& value) {
  Handle type = checked(H5Tcopy(H5T_C_S1), H5Tclose, ErrorCode::IoError, "string type");
  check(H5Tset_size(type.get(), std::max<std::size_t>(value.size(), 1)), "string size");
  check(H5Tset_strpad(type.get(), H5T_STR_NULLPAD), "string pad");
  Handle space = checked(H5Screate(H5S_SCALAR), H5Sclose, ErrorCode::IoError, "scalar space");
  Handle attr = checked(H5Acreate2(obj, name.c_str(), type.get(), space.get(), H5P_DEFAULT, H5P_DEFAULT), H5Aclose,
                        ErrorCode::IoError, "attribute " + name);
  std::string padded = value.empty() ? std::string(1, '\0') : value;
  check(H5Awrite(attr.get(), type.get(), padded.data()), "write attribute " + name);
}

std::map<std::string, std::string> read_string_attrs(hid_t obj) {
  std::map<std::string, std::string> out;
#if H5_VERSION_GE(1, 12, 0)
  H5O_info2_t info;
  if (H5Oget_info3(obj, &info, H5O_INFO_NUM_ATTRS) < 0) return out;
#else
  H5O_info_t info;
  if (H5Oget_info2(obj, &info, H5O_INFO_NUM_ATTRS) < 0) return out;
#endif
  for (hsize_t i = 0; i < info.num_attrs; ++i) {
    Handle attr(H5Aopen_by_idx(obj, ".", H5_INDEX_NAME, H5_ITER_INC, i, H5P_DEFAULT, H5P_DEFAULT), H5Aclose);
    if (!attr.valid()) continue;
    Handle type(H5Aget_type(attr.get()), H5Tclose);
    if (H5Tget_class(type.get()) != H5T_STRING || H5Tis_variable_str(type.get()) > 0) continue;
    const std::size_t size = H5Tget_size(type.get());
    std::string value(size, '\0');
    if (H5Aread(attr.get(), type.get(), value.data()) < 0) continue;
    value.erase(std::find(value.begin(), value.end(), '\0'), value.end());
    ssize_t len = H5Aget_name(attr.get(), 0, nullptr);
    std::string name(static_cast<std::size_t>(len) + 1, '\0');
    H5Aget_name(attr.get(), name.size(), name.data());
    name.resize(static_cast<std::size_t>(len));
    out[name] = value;
  }
  return out;
}

std::vector<std::size_t> dataset_shape(hid_t ds) {
  Handle space = checked(H5Dget_space(ds), H5Sclose, ErrorCode::FormatError, "dataspace");
  const int rank = H5Sget_simple_extent_ndims(space.get());
  std::vector<hsize_t> dims(static_cast<std::size_t>(std::max(rank, 0)));
  H5Sget_simple_extent_dims(space.get(), dims.data(), nullptr);
  return {dims.begin(), dims.end()};
}

std::size_t product(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

Handle open_dataset(hid_t file, const char* name, const fs::path& path) {
  if (H5Lexists(file, name, H5P_DEFAULT) <= 0)
    fail(ErrorCode::MissingDataset, std::string("no dataset '") + name + "' in " + path.string());
  return checked(H5Dopen2(file, name, H5P_DEFAULT), H5Dclose, ErrorCode::MissingDataset,
                 std::string("cannot open '") + name + "' in " + path.string());
}

// Memory type for a stored complex compound, matched by the file's member names.
Handle complex_mem_type(hid_t ds, const fs::path& path) {
  Handle ftype = checked(H5Dget_type(ds), H5Tclose, ErrorCode::FormatError, "dataset type");
  if (H5Tget_class(ftype.get()) != H5T_COMPOUND || H5Tget_nmembers(ftype.get()) != 2)
    fail(ErrorCode::FormatError, "kspace in " + path.string() + " is not a complex compound");
  char* n0 = H5Tget_member_name(ftype.get(), 0);
  char* n1 = H5Tget_member_name(ftype.get(), 1);
  std::string re(n0), im(n1);
  H5free_memory(n0);
  H5free_memory(n1);
  return complex_type(re.c_str(), im.c_str(), H5T_NATIVE_FLOAT);
}

std::vector<cfloat> read_complex(hid_t file, const char* name, const fs::path& path, std::vector<std::size_t>& shape) {
  Handle ds = open_dataset(file, name, path);
  shape = dataset_shape(ds.get());
  Handle mem = complex_mem_type(ds.get(), path);
  std::vector<cfloat> data(product(shape));
  check(H5Dread(ds.get(), mem.get(), H5S_ALL, H5S_ALL, H5P_DEFAULT, data.data()),
        std::string("read ") + name + " from " + path.string());
  return data;
}

void write_complex(hid_t file, const char* name, const std::vector<std::size_t>& shape, const cfloat* data) {
  Handle ftype = complex_type();
  Handle mtype = complex_type("r", "i", H5T_NATIVE_FLOAT);
  write_dataset(file, name, ftype.get(), mtype.get(), shape, data);
}

void require_finite(const std::vector<cfloat>& data, const fs::path& path) {
  for (const auto& v : data)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      fail(ErrorCode::NonFinite, "non-finite k-space entries in " + path.string());
}

}  // namespace

RawKSpace read_kspace_raw(const fs::path& path) {
  Handle file = open_file(path);
  RawKSpace raw;
  raw.data = read_complex(file.get(), "kspace", path, raw.shape);
  raw.attributes = read_string_attrs(file.get());
  return raw;
}

void write_kspace_raw(const fs::path& path, const RawKSpace& raw) {
  require(raw.data.size() == product(raw.shape), ErrorCode::ShapeMismatch, "raw k-space length");
  Handle file = create_file(path);
  write_complex(file.get(), "kspace", raw.shape, raw.data.data());
  for (const auto& [k, v] : raw.attributes) write_string_attr(file.get(), k, v);
}

std::vector<std::size_t> kspace_shape(const fs::path& path) {
  Handle file = open_file(path);
  Handle ds = open_dataset(file.get(), "kspace", path);
  return dataset_shape(ds.get());
}

KSpaceVolume load_volume(const fs::path& path) {
  RawKSpace raw = read_kspace_raw(path);
  if (raw.shape.size() != 4)
    fail(ErrorCode::WrongRank, path.string() + ": kspace has rank " + std::to_string(raw.shape.size()) + ", want 4");
  require_finite(raw.data, path);
  KSpaceVolume vol;
  auto it = raw.attributes.find("volume_id");
  vol.volume_id = it != raw.attributes.end() ? it->second : path.stem().string();
  std::copy(raw.shape.begin(), raw.shape.end(), vol.dims.begin());
  vol.data = std::move(raw.data);
  vol.validate();
  return vol;
}

void save_volume(const fs::path& path, const KSpaceVolume& vol, const std::map<std::string, std::string>& attributes) {
  vol.validate();
  RawKSpace raw{{vol.dims.begin(), vol.dims.end()}, vol.data, attributes};
  raw.attributes["volume_id"] = vol.volume_id;
  write_kspace_raw(path, raw);
}

KSpace3D load_kspace_3d(const fs::path& path) {
  RawKSpace raw = read_kspace_raw(path);
  if (raw.shape.size() != 4)
    fail(ErrorCode::WrongRank,
         path.string() + ": 3-D kspace has rank " + std::to_string(raw.shape.size()) + ", want 4 [coil, kz, ky, kx]");
  require_finite(raw.data, path);
  KSpace3D vol;
  auto it = raw.attributes.find("volume_id");
  vol.volume_id = it != raw.attributes.end() ? it->second : path.stem().string();
  std::copy(raw.shape.begin(), raw.shape.end(), vol.dims.begin());
  vol.data = std::move(raw.data);
  return vol;
}

void save_kspace_3d(const fs::path& path, const KSpace3D& vol) {
  RawKSpace raw{{vol.dims.begin(), vol.dims.end()}, vol.data, {{"volume_id", vol.volume_id}}};
  write_kspace_raw(path, raw);
}

void save_recon(const fs::path& path, const ReconVolume& recon) {
  require(!recon.images.empty(), ErrorCode::EmptyInput, "reconstruction has no slices");
  const std::size_t ny = recon.images.front().ny, nx = recon.images.front().nx;
  std::vector<float> pairs;
  pairs.reserve(recon.images.size() * ny * nx * 2);
  for (const auto& img : recon.images) {
    require(img.ny == ny && img.nx == nx, ErrorCode::ShapeMismatch, "reconstruction slices differ in shape");
    for (const auto& v : img.data) {
      pairs.push_back(static_cast<float>(v.real()));
      pairs.push_back(static_cast<float>(v.imag()));
    }
  }
  Handle file = create_file(path);
  write_dataset(file.get(), "reconstruction", H5T_IEEE_F32LE, H5T_NATIVE_FLOAT, {recon.images.size(), ny, nx, 2},
                pairs.data());
  write_dataset(file.get(), "mask", H5T_STD_U8LE, H5T_NATIVE_UINT8, {recon.mask.size()}, recon.mask.data());
  if (!recon.maps.empty()) {
    require(recon.maps.size() == recon.images.size(), ErrorCode::ShapeMismatch, "one map set per slice");
    const std::size_t nc = recon.maps.front().coils();
    std::vector<cfloat> flat;
    flat.reserve(recon.maps.size() * nc * ny * nx);
    for (const auto& m : recon.maps) {
      require(m.coils() == nc && m.ny() == ny && m.nx() == nx, ErrorCode::ShapeMismatch, "map shape");
      for (const auto& v : m.maps.data)
        flat.emplace_back(static_cast<float>(v.real()), static_cast<float>(v.imag()));
    }
    write_complex(file.get(), "maps", {recon.maps.size(), nc, ny, nx}, flat.data());
  }
  write_string_attr(file.get(), "volume_id", recon.volume_id);
  write_string_attr(file.get(), "method", recon.method);
  char accel[64];
  std::snprintf(accel, sizeof accel, "%.17g", recon.acceleration);
  write_string_attr(file.get(), "acceleration", accel);
  write_string_attr(file.get(), "seed", std::to_string(recon.seed));
}

ReconVolume load_recon(const fs::path& path) {
  Handle file = open_file(path);
  ReconVolume out;
  {
    Handle ds = open_dataset(file.get(), "reconstruction", path);
    auto shape = dataset_shape(ds.get());
    if (shape.size() != 4 || shape[3] != 2)
      fail(ErrorCode::WrongRank, path.string() + ": reconstruction must be [slice, ny, nx, 2]");
    std::vector<float> pairs(product(shape));
    check(H5Dread(ds.get(), H5T_NATIVE_FLOAT, H5S_ALL, H5S_ALL, H5P_DEFAULT, pairs.data()), "read reconstruction");
    const std::size_t ny = shape[1], nx = shape[2];
    for (std::size_t s = 0; s < shape[0]; ++s) {
      ComplexImage img(ny, nx);
      const float* src = pairs.data() + s * ny * nx * 2;
      for (std::size_t p = 0; p < ny * nx; ++p) img.data[p] = cdouble(src[2 * p], src[2 * p + 1]);
      out.images.push_back(std::move(img));
    }
  }
  {
    Handle ds = open_dataset(file.get(), "mask", path);
    out.mask.resize(product(dataset_shape(ds.get())));
    check(H5Dread(ds.get(), H5T_NATIVE_UINT8, H5S_ALL, H5S_ALL, H5P_DEFAULT, out.mask.data()), "read mask");
  }
  if (H5Lexists(file.get(), "maps", H5P_DEFAULT) > 0) {
    std::vector<std::size_t> shape;
    auto flat = read_complex(file.get(), "maps", path, shape);
    if (shape.size() != 4) fail(ErrorCode::WrongRank, path.string() + ": maps must be [slice, coil, ny, nx]");
    const std::size_t per = shape[1] * shape[2] * shape[3];
    for (std::size_t s = 0; s < shape[0]; ++s) {
      SensitivityMaps m{CoilStack(shape[1], shape[2], shape[3])};
      for (std::size_t i = 0; i < per; ++i) m.maps.data[i] = cdouble(flat[s * per + i].real(), flat[s * per + i].imag());
      out.maps.push_back(std::move(m));
    }
  }
  auto attrs = read_string_attrs(file.get());
  out.volume_id = attrs.count("volume_id") ? attrs["volume_id"] : path.stem().string();
  out.method = attrs["method"];
  if (attrs.count("acceleration")) out.acceleration = std::stod(attrs["acceleration"]);
  if (attrs.count("seed")) out.seed = std::stoull(attrs["seed"]);
  return out;
}

}  // namespace kcurate::h5
