#include "gsfield/io/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace gsf {
namespace {

constexpr char kMagic[8] = {'G', 'S', 'F', 'M', 'A', 'P', '0', '1'};

void write_doubles(std::ostream& out, const double* v, size_t n) {
  out.write(reinterpret_cast<const char*>(v), static_cast<std::streamsize>(n * sizeof(double)));
}

void read_doubles(std::istream& in, double* v, size_t n) {
  in.read(reinterpret_cast<char*>(v), static_cast<std::streamsize>(n * sizeof(double)));
  if (!in) throw std::runtime_error("checkpoint truncated");
}

template <class T>
void write_pod(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("checkpoint truncated");
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint) {
  const size_t sh_bands = checkpoint.primitives.empty() ? 1 : checkpoint.primitives[0].sh.size();
  for (const GaussianPrimitive& p : checkpoint.primitives)
    if (p.sh.size() != sh_bands)
      throw std::invalid_argument("checkpoint primitives disagree on SH band count");

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  out.write(kMagic, sizeof(kMagic));
  const CameraIntrinsics& k = checkpoint.intrinsics;
  const double header[9] = {k.fx, k.fy, k.cx, k.cy, double(k.width), double(k.height),
                            k.depth_scale, k.near_plane, k.far_plane};
  write_doubles(out, header, 9);
  write_pod<uint32_t>(out, static_cast<uint32_t>(sh_bands));
  write_pod<uint64_t>(out, checkpoint.primitives.size());
  for (const GaussianPrimitive& p : checkpoint.primitives) {
    write_doubles(out, p.mean.data(), 3);
    write_doubles(out, p.log_scale.data(), 3);
    write_doubles(out, p.quat.data(), 4);
    write_pod<double>(out, p.opacity_logit);
    write_pod<double>(out, p.uncertainty);
    write_pod<uint8_t>(out, p.observed ? 1 : 0);
    for (const Vec3& band : p.sh) write_doubles(out, band.data(), 3);
  }
  if (!out) throw std::runtime_error("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[sizeof(kMagic)] = {};
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("not a map checkpoint (bad magic): " + path);

  Checkpoint ckpt;
  double header[9];
  read_doubles(in, header, 9);
  ckpt.intrinsics.fx = header[0];
  ckpt.intrinsics.fy = header[1];
  ckpt.intrinsics.cx = header[2];
  ckpt.intrinsics.cy = header[3];
  ckpt.intrinsics.width = static_cast<int>(header[4]);
  ckpt.intrinsics.height = static_cast<int>(header[5]);
  ckpt.intrinsics.depth_scale = header[6];
  ckpt.intrinsics.near_plane = header[7];
  ckpt.intrinsics.far_plane = header[8];

  const uint32_t sh_bands = read_pod<uint32_t>(in);
  const uint64_t count = read_pod<uint64_t>(in);
  if (sh_bands == 0 || sh_bands > 16) throw std::runtime_error("checkpoint has invalid SH band count");
  ckpt.primitives.resize(count);
  for (GaussianPrimitive& p : ckpt.primitives) {
    read_doubles(in, p.mean.data(), 3);
    read_doubles(in, p.log_scale.data(), 3);
    read_doubles(in, p.quat.data(), 4);
    p.opacity_logit = read_pod<double>(in);
    p.uncertainty = read_pod<double>(in);
    p.observed = read_pod<uint8_t>(in) != 0;
    p.sh.resize(sh_bands);
    for (Vec3& band : p.sh) read_doubles(in, band.data(), 3);
  }
  return ckpt;
}

}  // namespace gsf
