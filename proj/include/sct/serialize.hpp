// Copyright (c) 2026 SCT contributors
// SPDX-License-Identifier: Apache-2.0
//
// Flat binary records for factor bundles and dense tensors. Layout is fixed:
//
//   spectral record ("SCTFAC01"):
//     magic[8] | m u64 | n u64 | k u64 | has_bias u8 |
//     u (m*k f64 row-major) | s (k f64) | v (n*k f64 row-major) |
//     bias (n f64, only when has_bias = 1)
//
//   dense record ("SCTDNS01"):
//     magic[8] | rows u64 | cols u64 | data (rows*cols f64 row-major)
//
// All integers and floats are little-endian; values are stored as f64 in
// both precision modes. Writers go through a temp file + rename so a killed
// process never leaves a partial record under the final name.

#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "sct/matrix.hpp"
#include "sct/spectral.hpp"

namespace sct {

inline constexpr char kFactorMagic[9] = "SCTFAC01";
inline constexpr char kDenseMagic[9] = "SCTDNS01";

namespace detail {

inline void write_u64(std::ostream& os, std::uint64_t v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(buf), 8);
}

inline std::uint64_t read_u64(std::istream& is, const std::string& what) {
  unsigned char buf[8];
  if (!is.read(reinterpret_cast<char*>(buf), 8))
    throw IoError("truncated record while reading " + what);
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | buf[i];
  return v;
}

inline void write_f64(std::ostream& os, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  write_u64(os, bits);
}

inline double read_f64(std::istream& is, const std::string& what) {
  const std::uint64_t bits = read_u64(is, what);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

template <typename T>
void write_values(std::ostream& os, const std::vector<T>& values) {
  for (T v : values) write_f64(os, static_cast<double>(v));
}

template <typename T>
void read_values(std::istream& is, std::vector<T>& values,
                 const std::string& what) {
  for (auto& v : values) v = static_cast<T>(read_f64(is, what));
}

inline void check_magic(std::istream& is, const char* magic,
                        const std::string& path) {
  char buf[8];
  if (!is.read(buf, 8) || std::memcmp(buf, magic, 8) != 0)
    throw IoError("bad magic in " + path + " (expected " + magic + ")");
}

}  // namespace detail

/// Replaces `path` atomically with the bytes produced by `writer`.
template <typename Writer>
void atomic_write(const std::filesystem::path& path, Writer&& writer) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + tmp.string() + " for writing");
    writer(os);
    os.flush();
    if (!os) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec)
    throw IoError("rename " + tmp.string() + " -> " + path.string() +
                  " failed: " + ec.message());
}

template <typename T>
void save_factors(const SpectralFactors<T>& f,
                  const std::filesystem::path& path) {
  f.validate();
  atomic_write(path, [&](std::ostream& os) {
    os.write(kFactorMagic, 8);
    detail::write_u64(os, static_cast<std::uint64_t>(f.m()));
    detail::write_u64(os, static_cast<std::uint64_t>(f.n()));
    detail::write_u64(os, static_cast<std::uint64_t>(f.k()));
    const unsigned char has_bias = f.bias ? 1 : 0;
    os.write(reinterpret_cast<const char*>(&has_bias), 1);
    detail::write_values(os, f.u.data);
    detail::write_values(os, f.s);
    detail::write_values(os, f.v.data);
    if (f.bias) detail::write_values(os, *f.bias);
  });
}

template <typename T>
SpectralFactors<T> load_factors(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  detail::check_magic(is, kFactorMagic, path.string());
  const auto m = static_cast<int>(detail::read_u64(is, "m"));
  const auto n = static_cast<int>(detail::read_u64(is, "n"));
  const auto k = static_cast<int>(detail::read_u64(is, "k"));
  char has_bias = 0;
  if (!is.read(&has_bias, 1)) throw IoError("truncated record: " + path.string());
  SpectralFactors<T> f{DenseMatrix<T>(m, k),
                       std::vector<T>(static_cast<std::size_t>(k)),
                       DenseMatrix<T>(n, k), std::nullopt};
  detail::read_values(is, f.u.data, "u");
  detail::read_values(is, f.s, "s");
  detail::read_values(is, f.v.data, "v");
  if (has_bias) {
    std::vector<T> bias(static_cast<std::size_t>(n));
    detail::read_values(is, bias, "bias");
    f.bias = std::move(bias);
  }
  f.validate();
  return f;
}

template <typename T>
void save_dense(const DenseMatrix<T>& mat, const std::filesystem::path& path) {
  atomic_write(path, [&](std::ostream& os) {
    os.write(kDenseMagic, 8);
    detail::write_u64(os, static_cast<std::uint64_t>(mat.rows));
    detail::write_u64(os, static_cast<std::uint64_t>(mat.cols));
    detail::write_values(os, mat.data);
  });
}

template <typename T>
DenseMatrix<T> load_dense(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  detail::check_magic(is, kDenseMagic, path.string());
  const auto rows = static_cast<int>(detail::read_u64(is, "rows"));
  const auto cols = static_cast<int>(detail::read_u64(is, "cols"));
  DenseMatrix<T> mat(rows, cols);
  detail::read_values(is, mat.data, "data");
  return mat;
}

}  // namespace sct
