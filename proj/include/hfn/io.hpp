/// Binary containers for raw media and feature tensors.
///
/// Three tiny formats, all little-endian host layout:
///   .hfnf  "HFNFRAM1"  decoded frame stack, u8 pixels, T×H×W×3
///   .hfna  "HFNAUDI1"  mono waveform, f32 samples
///   .hfnt  "HFNTENS1"  named f64 tensors (feature cache entries)
#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "hfn/core.hpp"

namespace hfn {

struct FrameArray {
  int t = 0;
  int h = 0;
  int w = 0;
  std::vector<uint8_t> px;  // t*h*w*3

  bool empty() const { return t == 0; }
  size_t expected_size() const { return static_cast<size_t>(t) * h * w * 3; }
};

struct Waveform {
  int sr = 0;
  std::vector<float> samples;

  bool empty() const { return samples.empty(); }
  double seconds() const { return sr > 0 ? static_cast<double>(samples.size()) / sr : 0.0; }
};

namespace detail {

inline void write_bytes(std::ostream& os, const void* p, size_t n) {
  os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

inline void read_bytes(std::istream& is, void* p, size_t n, const std::string& what) {
  is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (!is) fail_io("truncated read while loading " + what);
}

template <typename T>
void write_pod(std::ostream& os, T v) {
  write_bytes(os, &v, sizeof(T));
}

template <typename T>
T read_pod(std::istream& is, const std::string& what) {
  T v{};
  read_bytes(is, &v, sizeof(T), what);
  return v;
}

inline void write_string(std::ostream& os, const std::string& s) {
  write_pod<uint32_t>(os, static_cast<uint32_t>(s.size()));
  write_bytes(os, s.data(), s.size());
}

inline std::string read_string(std::istream& is, const std::string& what) {
  uint32_t n = read_pod<uint32_t>(is, what);
  if (n > (1u << 24)) fail_io("corrupt string length in " + what);
  std::string s(n, '\0');
  if (n) read_bytes(is, s.data(), n, what);
  return s;
}

inline void expect_magic(std::istream& is, const char* magic, const std::string& path) {
  char buf[8];
  read_bytes(is, buf, 8, path);
  if (std::memcmp(buf, magic, 8) != 0) fail_io("bad magic in " + path + " (expected " + magic + ")");
}

}  // namespace detail

inline void save_frames(const std::string& path, const FrameArray& f) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail_io("cannot open for write: " + path);
  detail::write_bytes(os, "HFNFRAM1", 8);
  detail::write_pod<uint32_t>(os, static_cast<uint32_t>(f.t));
  detail::write_pod<uint32_t>(os, static_cast<uint32_t>(f.h));
  detail::write_pod<uint32_t>(os, static_cast<uint32_t>(f.w));
  detail::write_pod<uint32_t>(os, 3u);
  detail::write_bytes(os, f.px.data(), f.px.size());
}

inline FrameArray load_frames(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail_io("cannot open frame container: " + path);
  detail::expect_magic(is, "HFNFRAM1", path);
  FrameArray f;
  f.t = static_cast<int>(detail::read_pod<uint32_t>(is, path));
  f.h = static_cast<int>(detail::read_pod<uint32_t>(is, path));
  f.w = static_cast<int>(detail::read_pod<uint32_t>(is, path));
  uint32_t c = detail::read_pod<uint32_t>(is, path);
  if (c != 3) fail_io("frame container must have 3 channels: " + path);
  f.px.resize(f.expected_size());
  if (!f.px.empty()) detail::read_bytes(is, f.px.data(), f.px.size(), path);
  return f;
}

inline void save_waveform(const std::string& path, const Waveform& w) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail_io("cannot open for write: " + path);
  detail::write_bytes(os, "HFNAUDI1", 8);
  detail::write_pod<uint32_t>(os, static_cast<uint32_t>(w.sr));
  detail::write_pod<uint64_t>(os, static_cast<uint64_t>(w.samples.size()));
  detail::write_bytes(os, w.samples.data(), w.samples.size() * sizeof(float));
}

inline Waveform load_waveform(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail_io("cannot open audio container: " + path);
  detail::expect_magic(is, "HFNAUDI1", path);
  Waveform w;
  w.sr = static_cast<int>(detail::read_pod<uint32_t>(is, path));
  uint64_t n = detail::read_pod<uint64_t>(is, path);
  w.samples.resize(n);
  if (n) detail::read_bytes(is, w.samples.data(), n * sizeof(float), path);
  return w;
}

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

inline void save_tensors(const std::string& path, const std::vector<NamedTensor>& tensors) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail_io("cannot open for write: " + path);
  detail::write_bytes(os, "HFNTENS1", 8);
  detail::write_pod<uint32_t>(os, static_cast<uint32_t>(tensors.size()));
  for (const auto& nt : tensors) {
    detail::write_string(os, nt.name);
    detail::write_pod<uint32_t>(os, static_cast<uint32_t>(nt.tensor.shape.size()));
    for (int d : nt.tensor.shape) detail::write_pod<uint32_t>(os, static_cast<uint32_t>(d));
    detail::write_bytes(os, nt.tensor.data.data(), nt.tensor.data.size() * sizeof(double));
  }
}

inline std::vector<NamedTensor> load_tensors(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail_io("cannot open tensor container: " + path);
  detail::expect_magic(is, "HFNTENS1", path);
  uint32_t count = detail::read_pod<uint32_t>(is, path);
  std::vector<NamedTensor> out;
  out.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    NamedTensor nt;
    nt.name = detail::read_string(is, path);
    uint32_t rank = detail::read_pod<uint32_t>(is, path);
    std::vector<int> shape(rank);
    for (uint32_t r = 0; r < rank; ++r) shape[r] = static_cast<int>(detail::read_pod<uint32_t>(is, path));
    nt.tensor = Tensor(shape);
    if (!nt.tensor.data.empty())
      detail::read_bytes(is, nt.tensor.data.data(), nt.tensor.data.size() * sizeof(double), path);
    out.push_back(std::move(nt));
  }
  return out;
}

inline uint64_t hash_frames(const FrameArray& f) {
  uint64_t h = fnv1a64(&f.t, sizeof(f.t));
  h = fnv1a64(&f.h, sizeof(f.h), h);
  h = fnv1a64(&f.w, sizeof(f.w), h);
  if (!f.px.empty()) h = fnv1a64(f.px.data(), f.px.size(), h);
  return h;
}

inline uint64_t hash_waveform(const Waveform& w) {
  uint64_t h = fnv1a64(&w.sr, sizeof(w.sr));
  if (!w.samples.empty()) h = fnv1a64(w.samples.data(), w.samples.size() * sizeof(float), h);
  return h;
}

}  // namespace hfn
