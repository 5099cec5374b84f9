#include "segkit/nifti.hpp"

#include <zlib.h>

#include <atomic>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <sstream>

#include "segkit/errors.hpp"

namespace segkit {

namespace {

// On-disk NIfTI-1 header. Every field offset is naturally aligned, so
// the struct is layout-exact without packing pragmas.
struct Nifti1Header {
  std::int32_t sizeof_hdr;
  char data_type[10];
  char db_name[18];
  std::int32_t extents;
  std::int16_t session_error;
  char regular;
  char dim_info;
  std::int16_t dim[8];
  float intent_p1, intent_p2, intent_p3;
  std::int16_t intent_code;
  std::int16_t datatype;
  std::int16_t bitpix;
  std::int16_t slice_start;
  float pixdim[8];
  float vox_offset;
  float scl_slope;
  float scl_inter;
  std::int16_t slice_end;
  char slice_code;
  char xyzt_units;
  float cal_max, cal_min;
  float slice_duration;
  float toffset;
  std::int32_t glmax, glmin;
  char descrip[80];
  char aux_file[24];
  std::int16_t qform_code, sform_code;
  float quatern_b, quatern_c, quatern_d;
  float qoffset_x, qoffset_y, qoffset_z;
  float srow_x[4], srow_y[4], srow_z[4];
  char intent_name[16];
  char magic[4];
};
static_assert(sizeof(Nifti1Header) == 348, "NIfTI-1 header must be exactly 348 bytes");

enum NiftiDatatype : std::int16_t {
  DT_UINT8 = 2,
  DT_INT16 = 4,
  DT_INT32 = 8,
  DT_FLOAT32 = 16,
  DT_FLOAT64 = 64,
  DT_INT8 = 256,
  DT_UINT16 = 512,
  DT_UINT32 = 768,
};

int datatype_bytes(std::int16_t dt) {
  switch (dt) {
    case DT_UINT8:
    case DT_INT8: return 1;
    case DT_INT16:
    case DT_UINT16: return 2;
    case DT_INT32:
    case DT_UINT32:
    case DT_FLOAT32: return 4;
    case DT_FLOAT64: return 8;
    default: return 0;
  }
}

double decode_value(const unsigned char* p, std::int16_t dt) {
  switch (dt) {
    case DT_UINT8: return *p;
    case DT_INT8: return static_cast<double>(*reinterpret_cast<const std::int8_t*>(p));
    case DT_INT16: {
      std::int16_t v;
      std::memcpy(&v, p, 2);
      return v;
    }
    case DT_UINT16: {
      std::uint16_t v;
      std::memcpy(&v, p, 2);
      return v;
    }
    case DT_INT32: {
      std::int32_t v;
      std::memcpy(&v, p, 4);
      return v;
    }
    case DT_UINT32: {
      std::uint32_t v;
      std::memcpy(&v, p, 4);
      return v;
    }
    case DT_FLOAT32: {
      float v;
      std::memcpy(&v, p, 4);
      return v;
    }
    case DT_FLOAT64: {
      double v;
      std::memcpy(&v, p, 8);
      return v;
    }
  }
  return 0.0;
}

// gzread handles both gzip and plain files, so one read path covers
// .nii and .nii.gz regardless of suffix.
struct GzReader {
  gzFile file = nullptr;
  std::string path;

  explicit GzReader(const std::string& p) : path(p) {
    if (!std::filesystem::exists(p)) throw Error::io(p + ": file not found");
    file = gzopen(p.c_str(), "rb");
    if (!file) throw Error::io(p + ": cannot open for reading");
  }
  ~GzReader() {
    if (file) gzclose(file);
  }
  GzReader(const GzReader&) = delete;
  GzReader& operator=(const GzReader&) = delete;

  void read_exact(void* dst, std::size_t bytes) {
    std::size_t done = 0;
    auto* out = static_cast<unsigned char*>(dst);
    while (done < bytes) {
      const unsigned chunk =
          static_cast<unsigned>(std::min<std::size_t>(bytes - done, 1u << 30));
      const int got = gzread(file, out + done, chunk);
      if (got <= 0) throw Error::format(path + ": truncated NIfTI payload");
      done += static_cast<std::size_t>(got);
    }
  }
  bool at_end() {
    unsigned char probe;
    return gzread(file, &probe, 1) <= 0;
  }
};

Affine affine_from_header(const Nifti1Header& h) {
  Affine a = identity_affine();
  if (h.sform_code > 0) {
    for (int j = 0; j < 4; ++j) {
      a[0][j] = h.srow_x[j];
      a[1][j] = h.srow_y[j];
      a[2][j] = h.srow_z[j];
    }
    return a;
  }
  if (h.qform_code > 0) {
    const double b = h.quatern_b, c = h.quatern_c, d = h.quatern_d;
    const double aa = std::sqrt(std::max(0.0, 1.0 - (b * b + c * c + d * d)));
    const double qfac = h.pixdim[0] < 0.0f ? -1.0 : 1.0;
    const double sx = h.pixdim[1], sy = h.pixdim[2], sz = h.pixdim[3];
    const double rot[3][3] = {
        {aa * aa + b * b - c * c - d * d, 2 * (b * c - aa * d), 2 * (b * d + aa * c)},
        {2 * (b * c + aa * d), aa * aa + c * c - b * b - d * d, 2 * (c * d - aa * b)},
        {2 * (b * d - aa * c), 2 * (c * d + aa * b), aa * aa + d * d - b * b - c * c}};
    for (int i = 0; i < 3; ++i) {
      a[i][0] = rot[i][0] * sx;
      a[i][1] = rot[i][1] * sy;
      a[i][2] = rot[i][2] * sz * qfac;
    }
    a[0][3] = h.qoffset_x;
    a[1][3] = h.qoffset_y;
    a[2][3] = h.qoffset_z;
    return a;
  }
  a[0][0] = h.pixdim[1];
  a[1][1] = h.pixdim[2];
  a[2][2] = h.pixdim[3];
  return a;
}

struct ParsedHeader {
  Nifti1Header raw;
  VolumeGeometry geometry;
  int channels = 1;
  double slope = 1.0;
  double inter = 0.0;
};

ParsedHeader parse_header(GzReader& in) {
  Nifti1Header h{};
  in.read_exact(&h, sizeof(h));
  if (h.sizeof_hdr != 348) {
    std::int32_t swapped = h.sizeof_hdr;
    auto* b = reinterpret_cast<unsigned char*>(&swapped);
    std::swap(b[0], b[3]);
    std::swap(b[1], b[2]);
    if (swapped == 348)
      throw Error::format(in.path + ": big-endian NIfTI is not supported (little-endian only)");
    throw Error::format(in.path + ": not a NIfTI-1 file (bad sizeof_hdr)");
  }
  if (std::memcmp(h.magic, "n+1", 4) != 0) {
    if (std::memcmp(h.magic, "ni1", 4) == 0)
      throw Error::format(in.path + ": two-file NIfTI (.hdr/.img) is not supported");
    throw Error::format(in.path + ": bad NIfTI magic");
  }
  if (h.dim[0] < 3 || h.dim[0] > 7)
    throw Error::format(in.path + ": expected a 3D or 4D volume, got dim[0]=" +
                        std::to_string(h.dim[0]));
  if (datatype_bytes(h.datatype) == 0)
    throw Error::format(in.path + ": unsupported NIfTI datatype code " +
                        std::to_string(h.datatype));

  ParsedHeader out;
  out.raw = h;
  for (int i = 0; i < 3; ++i) {
    out.geometry.dims[i] = h.dim[1 + i];
    out.geometry.spacing[i] = h.pixdim[1 + i];
  }
  for (int i = 3; i < h.dim[0]; ++i) {
    if (h.dim[1 + i] < 1)
      throw Error::format(in.path + ": non-positive extent in dim " + std::to_string(1 + i));
    out.channels *= h.dim[1 + i];
  }
  out.geometry.affine = affine_from_header(h);
  try {
    out.geometry.validate();
  } catch (const Error& e) {
    throw Error::format(in.path + ": " + e.what());
  }
  out.slope = (h.scl_slope == 0.0f) ? 1.0 : static_cast<double>(h.scl_slope);
  out.inter = (h.scl_slope == 0.0f) ? 0.0 : static_cast<double>(h.scl_inter);
  return out;
}

std::vector<double> read_payload(GzReader& in, const ParsedHeader& ph) {
  const std::int64_t values = ph.geometry.voxel_count() * ph.channels;
  const int vb = datatype_bytes(ph.raw.datatype);
  const std::int64_t offset = static_cast<std::int64_t>(ph.raw.vox_offset);
  if (offset < 348)
    throw Error::format(in.path + ": vox_offset " + std::to_string(offset) + " is below 348");
  std::vector<unsigned char> skip(static_cast<std::size_t>(offset) - sizeof(Nifti1Header));
  if (!skip.empty()) in.read_exact(skip.data(), skip.size());

  std::vector<unsigned char> bytes(static_cast<std::size_t>(values) * vb);
  in.read_exact(bytes.data(), bytes.size());

  std::vector<double> out(static_cast<std::size_t>(values));
  for (std::int64_t i = 0; i < values; ++i)
    out[static_cast<std::size_t>(i)] =
        decode_value(bytes.data() + static_cast<std::size_t>(i) * vb, ph.raw.datatype) * ph.slope +
        ph.inter;
  return out;
}

std::atomic<unsigned> g_tmp_counter{0};

std::filesystem::path temp_sibling(const std::string& path) {
  return std::filesystem::path(path + ".tmp" + std::to_string(g_tmp_counter++));
}

void write_file_atomic(const std::string& path, const Nifti1Header& header, const void* payload,
                       std::size_t payload_bytes) {
  const std::filesystem::path tmp = temp_sibling(path);
  const bool gz = path.size() > 3 && path.compare(path.size() - 3, 3, ".gz") == 0;
  const char extender[4] = {0, 0, 0, 0};
  try {
    if (gz) {
      gzFile f = gzopen(tmp.string().c_str(), "wb");
      if (!f) throw Error::io(path + ": cannot open for writing");
      bool ok = gzwrite(f, &header, sizeof(header)) == static_cast<int>(sizeof(header));
      ok = ok && gzwrite(f, extender, 4) == 4;
      std::size_t done = 0;
      const auto* bytes = static_cast<const unsigned char*>(payload);
      while (ok && done < payload_bytes) {
        const unsigned chunk =
            static_cast<unsigned>(std::min<std::size_t>(payload_bytes - done, 1u << 30));
        ok = gzwrite(f, bytes + done, chunk) == static_cast<int>(chunk);
        done += chunk;
      }
      const bool closed = gzclose(f) == Z_OK;
      if (!ok || !closed) throw Error::io(path + ": write failed");
    } else {
      std::FILE* f = std::fopen(tmp.string().c_str(), "wb");
      if (!f) throw Error::io(path + ": cannot open for writing");
      bool ok = std::fwrite(&header, 1, sizeof(header), f) == sizeof(header);
      ok = ok && std::fwrite(extender, 1, 4, f) == 4;
      ok = ok && std::fwrite(payload, 1, payload_bytes, f) == payload_bytes;
      if (std::fclose(f) != 0) ok = false;
      if (!ok) throw Error::io(path + ": write failed");
    }
    std::filesystem::rename(tmp, path);
  } catch (...) {
    std::error_code ec;
    std::filesystem::remove(tmp, ec);
    throw;
  }
}

Nifti1Header make_header(const VolumeGeometry& g, int channels, std::int16_t datatype) {
  Nifti1Header h{};
  h.sizeof_hdr = 348;
  h.regular = 'r';
  h.dim[0] = channels > 1 ? 4 : 3;
  h.dim[1] = static_cast<std::int16_t>(g.dims[0]);
  h.dim[2] = static_cast<std::int16_t>(g.dims[1]);
  h.dim[3] = static_cast<std::int16_t>(g.dims[2]);
  h.dim[4] = static_cast<std::int16_t>(channels > 1 ? channels : 1);
  for (int i = 5; i < 8; ++i) h.dim[i] = 1;
  h.datatype = datatype;
  h.bitpix = static_cast<std::int16_t>(datatype_bytes(datatype) * 8);
  h.pixdim[0] = 1.0f;
  for (int i = 0; i < 3; ++i) h.pixdim[1 + i] = static_cast<float>(g.spacing[i]);
  h.pixdim[4] = 1.0f;
  h.vox_offset = 352.0f;
  h.scl_slope = 1.0f;
  h.scl_inter = 0.0f;
  h.xyzt_units = 2;  // NIFTI_UNITS_MM
  std::snprintf(h.descrip, sizeof(h.descrip), "segkit");
  h.sform_code = 2;  // aligned anatomy
  h.qform_code = 0;
  for (int j = 0; j < 4; ++j) {
    h.srow_x[j] = static_cast<float>(g.affine[0][j]);
    h.srow_y[j] = static_cast<float>(g.affine[1][j]);
    h.srow_z[j] = static_cast<float>(g.affine[2][j]);
  }
  std::memcpy(h.magic, "n+1", 4);
  return h;
}

void check_dims_fit(const VolumeGeometry& g, const std::string& path) {
  for (int i = 0; i < 3; ++i)
    if (g.dims[i] > 32767)
      throw Error::config(path + ": dims exceed the NIfTI-1 int16 limit");
}

std::vector<float> gather_float_channels(const std::vector<const std::vector<float>*>& channels,
                                         std::int64_t nvox) {
  std::vector<float> payload;
  payload.reserve(static_cast<std::size_t>(nvox) * channels.size());
  for (const auto* c : channels) payload.insert(payload.end(), c->begin(), c->end());
  return payload;
}

ProbVolume assemble_prob(const VolumeGeometry& g, int channels, std::vector<double> values,
                         const std::string& context) {
  const std::int64_t nvox = g.voxel_count();
  double worst_excess = 0.0;
  auto clamped = [&](double v) {
    if (v < 0.0) {
      worst_excess = std::max(worst_excess, -v);
      return 0.0f;
    }
    if (v > 1.0) {
      worst_excess = std::max(worst_excess, v - 1.0);
      return 1.0f;
    }
    return static_cast<float>(v);
  };

  ProbVolume result;
  if (channels == 3) {
    RegionProbVolume out(g);
    for (int c = 0; c < 3; ++c)
      for (std::int64_t i = 0; i < nvox; ++i)
        out.channels[c][static_cast<std::size_t>(i)] =
            clamped(values[static_cast<std::size_t>(c * nvox + i)]);
    result = std::move(out);
  } else if (channels == 4) {
    LabelProbVolume out(g);
    for (int c = 0; c < 4; ++c)
      for (std::int64_t i = 0; i < nvox; ++i)
        out.channels[c][static_cast<std::size_t>(i)] =
            clamped(values[static_cast<std::size_t>(c * nvox + i)]);
    for (std::int64_t i = 0; i < nvox; ++i) {
      double sum = 0.0;
      for (int c = 0; c < 4; ++c) sum += values[static_cast<std::size_t>(c * nvox + i)];
      if (std::fabs(sum - 1.0) > 1e-4)
        throw Error::format(context + ": 4-channel volume is not a softmax (voxel " +
                            std::to_string(i) + " sums to " + std::to_string(sum) + ")");
    }
    result = std::move(out);
  } else {
    throw Error::format(context + ": expected 3 or 4 channels, got " + std::to_string(channels));
  }
  if (worst_excess > 1e-3)
    warn(context + ": probabilities exceeded [0,1] by " + std::to_string(worst_excess) +
         "; clamped");
  return result;
}

}  // namespace

NiftiHeaderSummary read_nifti_header(const std::string& path) {
  GzReader in(path);
  const ParsedHeader ph = parse_header(in);
  NiftiHeaderSummary s;
  s.datatype = ph.raw.datatype;
  s.dims = ph.geometry.dims;
  s.channels = ph.channels;
  s.spacing = ph.geometry.spacing;
  s.affine = ph.geometry.affine;
  s.scl_slope = ph.slope;
  s.scl_inter = ph.inter;
  return s;
}

LabelVolume read_label_volume(const std::string& path, const LabelSchema& schema) {
  GzReader in(path);
  const ParsedHeader ph = parse_header(in);
  if (ph.channels != 1)
    throw Error::format(path + ": label volume must be single-channel, got " +
                        std::to_string(ph.channels));
  if (ph.raw.scl_slope != 0.0f && (ph.raw.scl_slope != 1.0f || ph.raw.scl_inter != 0.0f))
    throw Error::format(path + ": label volume requires identity scaling (scl_slope=" +
                        std::to_string(ph.raw.scl_slope) + ", scl_inter=" +
                        std::to_string(ph.raw.scl_inter) + ")");
  const std::vector<double> values = read_payload(in, ph);

  LabelVolume out(ph.geometry);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = values[i];
    const double rounded = std::nearbyint(v);
    if (std::fabs(v - rounded) > 1e-6)
      throw Error::format(path + ": non-integer label value " + std::to_string(v) + " at voxel " +
                          std::to_string(i));
    const auto it = schema.mapping.find(static_cast<int>(rounded));
    if (it == schema.mapping.end())
      throw Error::schema(path + ": label code " + std::to_string(static_cast<int>(rounded)) +
                          " is outside the configured schema");
    out.voxels[i] = it->second;
  }
  return out;
}

ProbVolume read_prob_volume(const std::string& path) {
  GzReader in(path);
  const ParsedHeader ph = parse_header(in);
  std::vector<double> values = read_payload(in, ph);
  return assemble_prob(ph.geometry, ph.channels, std::move(values), path);
}

ProbVolume read_prob_volume(const std::vector<std::string>& channel_paths) {
  if (channel_paths.size() != 3 && channel_paths.size() != 4)
    throw Error::format("expected 3 or 4 channel files, got " +
                        std::to_string(channel_paths.size()));
  VolumeGeometry geom;
  std::vector<double> values;
  for (std::size_t c = 0; c < channel_paths.size(); ++c) {
    GzReader in(channel_paths[c]);
    const ParsedHeader ph = parse_header(in);
    if (ph.channels != 1)
      throw Error::format(channel_paths[c] + ": expected a single-channel file in channel list");
    if (c == 0) {
      geom = ph.geometry;
      values.reserve(static_cast<std::size_t>(geom.voxel_count()) * channel_paths.size());
    } else if (!same_grid(geom, ph.geometry)) {
      throw Error::geometry(channel_paths[c] + ": geometry mismatch across channel files");
    }
    const std::vector<double> channel = read_payload(in, ph);
    values.insert(values.end(), channel.begin(), channel.end());
  }
  return assemble_prob(geom, static_cast<int>(channel_paths.size()), std::move(values),
                       channel_paths.front());
}

void write_label_volume(const LabelVolume& volume, const std::string& path) {
  check_dims_fit(volume.geometry, path);
  const Nifti1Header h = make_header(volume.geometry, 1, DT_UINT8);
  write_file_atomic(path, h, volume.voxels.data(), volume.voxels.size());
}

void write_prob_volume(const RegionProbVolume& volume, const std::string& path) {
  check_dims_fit(volume.geometry, path);
  const Nifti1Header h = make_header(volume.geometry, 3, DT_FLOAT32);
  const auto payload = gather_float_channels(
      {&volume.channels[0], &volume.channels[1], &volume.channels[2]}, volume.geometry.voxel_count());
  write_file_atomic(path, h, payload.data(), payload.size() * sizeof(float));
}

void write_prob_volume(const LabelProbVolume& volume, const std::string& path) {
  check_dims_fit(volume.geometry, path);
  const Nifti1Header h = make_header(volume.geometry, 4, DT_FLOAT32);
  const auto payload = gather_float_channels(
      {&volume.channels[0], &volume.channels[1], &volume.channels[2], &volume.channels[3]},
      volume.geometry.voxel_count());
  write_file_atomic(path, h, payload.data(), payload.size() * sizeof(float));
}

}  // namespace segkit
