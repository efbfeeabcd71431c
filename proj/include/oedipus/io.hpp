#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "encoding.hpp"
#include "types.hpp"

namespace oedipus {

// OEDM container: "OEDM", then little-endian uint32 N1, N2, T, n_coils,
// then float64 (re, im) pairs ordered [t][coil][voxel]. Images are stored
// with T = n_coils = 1.
struct OedmArray {
  std::array<Index, 2> dims{0, 0};
  Index T = 1;
  Index n_coils = 1;
  std::vector<CMat> maps; // T entries of n_coils x N
};

namespace detail {

inline void put_u32(std::ostream &out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char *>(b), 4);
}

inline std::uint32_t get_u32(std::istream &in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char *>(b), 4))
    throw IoError("truncated OEDM header");
  return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
         static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
}

inline void put_f64(std::ostream &out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i)
    b[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char *>(b), 8);
}

inline double get_f64(std::istream &in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char *>(b), 8))
    throw IoError("truncated OEDM payload");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i)
    bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

} // namespace detail

inline void write_oedm(const std::string &path, const OedmArray &a) {
  const Index N = a.dims[0] * a.dims[1];
  if (static_cast<Index>(a.maps.size()) != a.T)
    throw InvalidArgument("OEDM array has the wrong number of map sets");
  for (const auto &m : a.maps)
    if (m.rows() != a.n_coils || m.cols() != N)
      throw InvalidArgument("OEDM map set has the wrong shape");
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError("cannot write " + path);
  out.write("OEDM", 4);
  detail::put_u32(out, static_cast<std::uint32_t>(a.dims[0]));
  detail::put_u32(out, static_cast<std::uint32_t>(a.dims[1]));
  detail::put_u32(out, static_cast<std::uint32_t>(a.T));
  detail::put_u32(out, static_cast<std::uint32_t>(a.n_coils));
  for (const auto &m : a.maps)
    for (Index c = 0; c < a.n_coils; ++c)
      for (Index n = 0; n < N; ++n) {
        detail::put_f64(out, m(c, n).real());
        detail::put_f64(out, m(c, n).imag());
      }
  if (!out)
    throw IoError("write failed: " + path);
}

inline OedmArray read_oedm(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot read " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "OEDM", 4) != 0)
    throw IoError("not an OEDM file: " + path);
  OedmArray a;
  a.dims = {detail::get_u32(in), detail::get_u32(in)};
  a.T = detail::get_u32(in);
  a.n_coils = detail::get_u32(in);
  const Index N = a.dims[0] * a.dims[1];
  if (N <= 0 || a.T <= 0 || a.n_coils <= 0)
    throw IoError("OEDM header has zero dimensions: " + path);
  for (Index t = 0; t < a.T; ++t) {
    CMat m(a.n_coils, N);
    for (Index c = 0; c < a.n_coils; ++c)
      for (Index n = 0; n < N; ++n) {
        const double re = detail::get_f64(in);
        m(c, n) = Complex(re, detail::get_f64(in));
      }
    a.maps.push_back(std::move(m));
  }
  if (in.peek() != std::char_traits<char>::eof())
    throw IoError("trailing bytes in OEDM file: " + path);
  return a;
}

inline void write_oedm_image(const std::string &path, const CVec &image, std::array<Index, 2> dims) {
  OedmArray a;
  a.dims = dims;
  a.maps.push_back(image.transpose());
  write_oedm(path, a);
}

inline CVec read_oedm_image(const std::string &path) {
  const OedmArray a = read_oedm(path);
  if (a.T != 1 || a.n_coils != 1)
    throw IoError("OEDM file holds coil maps, not an image: " + path);
  return a.maps.front().row(0).transpose();
}

// 8-bit binary PGM. Values are scaled linearly so that `white` maps to 255
// (the maximum when white <= 0).
inline void write_pgm(const std::string &path, const RVec &values, std::array<Index, 2> dims, double white = 0.0) {
  if (values.size() != dims[0] * dims[1])
    throw InvalidArgument("PGM size mismatch");
  if (!(white > 0.0))
    white = values.size() > 0 ? values.maxCoeff() : 0.0;
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError("cannot write " + path);
  out << "P5\n" << dims[1] << ' ' << dims[0] << "\n255\n";
  std::vector<unsigned char> bytes(static_cast<std::size_t>(values.size()));
  for (Index i = 0; i < values.size(); ++i) {
    const double v = white > 0.0 ? values(i) / white : 0.0;
    bytes[static_cast<std::size_t>(i)] =
        static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
  }
  out.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out)
    throw IoError("write failed: " + path);
}

inline void write_magnitude_pgm(const std::string &path, const CVec &image, std::array<Index, 2> dims,
                                double white = 0.0) {
  write_pgm(path, image.cwiseAbs(), dims, white);
}

inline void write_text(const std::string &path, const std::string &content) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError("cannot write " + path);
  out << content;
  if (!out)
    throw IoError("write failed: " + path);
}

inline std::string read_text(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot read " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Shortest decimal that round-trips, so reports are stable across runs.
inline std::string format_double(double v) {
  if (std::isinf(v))
    return v > 0 ? "inf" : "-inf";
  if (std::isnan(v))
    return "nan";
  char buf[32];
  for (int prec = 6; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v)
      break;
  }
  return buf;
}

} // namespace oedipus
