// Copyright (c) 2026 SCT contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sct/errors.hpp"
#include "sct/threads.hpp"

namespace sct {

// Allocation accounting. Every DenseMatrix allocation (and the other large
// buffers in the library) reports its element count here, so tests can assert
// that no dense m*n weight-shaped buffer ever comes into existence.
namespace alloc {

inline std::atomic<std::uint64_t>& largest_block_ref() {
  static std::atomic<std::uint64_t> v{0};
  return v;
}

inline void note(std::uint64_t elems) {
  auto& peak = largest_block_ref();
  std::uint64_t cur = peak.load(std::memory_order_relaxed);
  while (elems > cur &&
         !peak.compare_exchange_weak(cur, elems, std::memory_order_relaxed)) {
  }
}

inline void reset() { largest_block_ref().store(0, std::memory_order_relaxed); }

/// Largest single buffer (in elements) allocated since the last reset().
inline std::uint64_t peak_block() {
  return largest_block_ref().load(std::memory_order_relaxed);
}

/// std::vector constructor wrapper that reports the allocation.
template <typename T>
std::vector<T> tracked_vector(std::size_t n, T fill = T(0)) {
  note(static_cast<std::uint64_t>(n));
  return std::vector<T>(n, fill);
}

}  // namespace alloc

/// Row-major dense real matrix. The only dense tensor role in the system:
/// activations, small test matrices, and the factor blocks themselves.
template <typename T>
struct DenseMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<T> data;

  DenseMatrix() = default;
  DenseMatrix(int r, int c) : rows(r), cols(c) {
    if (r < 0 || c < 0) throw ShapeError("DenseMatrix: negative dimension");
    alloc::note(static_cast<std::uint64_t>(r) * static_cast<std::uint64_t>(c));
    data.assign(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), T(0));
  }

  T& operator()(int i, int j) {
    return data[static_cast<std::size_t>(i) * cols + j];
  }
  const T& operator()(int i, int j) const {
    return data[static_cast<std::size_t>(i) * cols + j];
  }

  T* row_ptr(int i) { return data.data() + static_cast<std::size_t>(i) * cols; }
  const T* row_ptr(int i) const {
    return data.data() + static_cast<std::size_t>(i) * cols;
  }

  std::size_t size() const { return data.size(); }

  static DenseMatrix zeros(int r, int c) { return DenseMatrix(r, c); }

  /// r x c matrix holding the leading columns of the identity.
  static DenseMatrix identity(int r, int c) {
    DenseMatrix m(r, c);
    const int d = r < c ? r : c;
    for (int i = 0; i < d; ++i) m(i, i) = T(1);
    return m;
  }
};

template <typename T>
std::string shape_str(const DenseMatrix<T>& a) {
  return std::to_string(a.rows) + "x" + std::to_string(a.cols);
}

template <typename T>
double max_abs(const DenseMatrix<T>& a) {
  double m = 0.0;
  for (const T& x : a.data) m = std::max(m, std::abs(static_cast<double>(x)));
  return m;
}

template <typename T>
bool all_finite(const DenseMatrix<T>& a) {
  for (const T& x : a.data)
    if (!std::isfinite(static_cast<double>(x))) return false;
  return true;
}

template <typename T>
void ensure_finite(const DenseMatrix<T>& a, const std::string& what) {
  if (!all_finite(a))
    throw NumericError(what + ": non-finite value in " + shape_str(a) +
                       " matrix");
}

/// Standard product a*b. Output rows = a.rows, cols = b.cols.
template <typename T>
DenseMatrix<T> matmul(const DenseMatrix<T>& a, const DenseMatrix<T>& b) {
  if (a.cols != b.rows)
    throw ShapeError("matmul: inner dimensions differ, " + shape_str(a) +
                     " * " + shape_str(b));
  DenseMatrix<T> out(a.rows, b.cols);
  const std::int64_t work = 2LL * a.cols * b.cols;
  parallel_for_rows(a.rows, work, [&](int lo, int hi) {
    for (int i = lo; i < hi; ++i) {
      const T* arow = a.row_ptr(i);
      T* orow = out.row_ptr(i);
      for (int p = 0; p < a.cols; ++p) {
        const T aip = arow[p];
        if (aip == T(0)) continue;
        const T* brow = b.row_ptr(p);
        for (int j = 0; j < b.cols; ++j) orow[j] += aip * brow[j];
      }
    }
  });
  return out;
}

/// a * b^T for b stored row-major (rows of b are the columns of b^T).
template <typename T>
DenseMatrix<T> matmul_nt(const DenseMatrix<T>& a, const DenseMatrix<T>& b) {
  if (a.cols != b.cols)
    throw ShapeError("matmul_nt: inner dimensions differ, " + shape_str(a) +
                     " * " + shape_str(b) + "^T");
  DenseMatrix<T> out(a.rows, b.rows);
  const std::int64_t work = 2LL * a.cols * b.rows;
  parallel_for_rows(a.rows, work, [&](int lo, int hi) {
    for (int i = lo; i < hi; ++i) {
      const T* arow = a.row_ptr(i);
      T* orow = out.row_ptr(i);
      for (int j = 0; j < b.rows; ++j) {
        const T* brow = b.row_ptr(j);
        T acc = T(0);
        for (int p = 0; p < a.cols; ++p) acc += arow[p] * brow[p];
        orow[j] = acc;
      }
    }
  });
  return out;
}

/// a^T * b. Output is a.cols x b.cols.
template <typename T>
DenseMatrix<T> matmul_tn(const DenseMatrix<T>& a, const DenseMatrix<T>& b) {
  if (a.rows != b.rows)
    throw ShapeError("matmul_tn: inner dimensions differ, " + shape_str(a) +
                     "^T * " + shape_str(b));
  DenseMatrix<T> out(a.cols, b.cols);
  const std::int64_t work = 2LL * a.rows * b.cols;
  parallel_for_rows(a.cols, work, [&](int lo, int hi) {
    for (int i = lo; i < hi; ++i) {
      T* orow = out.row_ptr(i);
      for (int p = 0; p < a.rows; ++p) {
        const T api = a(p, i);
        if (api == T(0)) continue;
        const T* brow = b.row_ptr(p);
        for (int j = 0; j < b.cols; ++j) orow[j] += api * brow[j];
      }
    }
  });
  return out;
}

template <typename T>
DenseMatrix<T> transpose(const DenseMatrix<T>& a) {
  DenseMatrix<T> out(a.cols, a.rows);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < a.cols; ++j) out(j, i) = a(i, j);
  return out;
}

/// max |(m^T m - I)_ij|, accumulated in double regardless of T.
template <typename T>
double ortho_error(const DenseMatrix<T>& m) {
  double err = 0.0;
  for (int i = 0; i < m.cols; ++i) {
    for (int j = i; j < m.cols; ++j) {
      double acc = 0.0;
      for (int r = 0; r < m.rows; ++r)
        acc += static_cast<double>(m(r, i)) * static_cast<double>(m(r, j));
      const double target = (i == j) ? 1.0 : 0.0;
      err = std::max(err, std::abs(acc - target));
    }
  }
  return err;
}

}  // namespace sct
