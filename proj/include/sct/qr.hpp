// Copyright (c) 2026 SCT contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "sct/matrix.hpp"
#include "sct/rng.hpp"

namespace sct {

/// Thin QR factorization. q has orthonormal columns, r is upper triangular
/// with nonnegative diagonal.
template <typename T>
struct QrResult {
  DenseMatrix<T> q;  // m x k
  DenseMatrix<T> r;  // k x k
};

namespace detail {

// sign with sign(0) := +1.
inline double sign_pos(double x) { return x < 0.0 ? -1.0 : 1.0; }

}  // namespace detail

/// Thin Householder QR of an m x k matrix, m >= k. The sign convention
/// (diag(r) >= 0) is absorbed into q's columns here, so a Stiefel retraction
/// reduces to taking q. Throws DegenerateColumnError when a pivot column is
/// numerically zero (|r_jj| < 1e-300).
template <typename T>
QrResult<T> qr_thin(const DenseMatrix<T>& a) {
  const int m = a.rows;
  const int k = a.cols;
  if (m < k)
    throw ShapeError("qr_thin: need rows >= cols, got " + shape_str(a));
  if (k == 0) throw ShapeError("qr_thin: empty matrix");
  ensure_finite(a, "qr_thin input");

  DenseMatrix<T> r = a;                       // reduced in place to R
  DenseMatrix<T> vs(m, k);                    // Householder vectors, column j below row j
  std::vector<double> betas(static_cast<std::size_t>(k), 0.0);

  for (int j = 0; j < k; ++j) {
    // norm of the trailing part of column j, accumulated in double
    double norm2 = 0.0;
    for (int i = j; i < m; ++i) {
      const double x = static_cast<double>(r(i, j));
      norm2 += x * x;
    }
    const double norm = std::sqrt(norm2);
    if (norm < 1e-300)
      throw DegenerateColumnError(
          "qr_thin: column " + std::to_string(j) + " is numerically zero",
          j);

    const double x0 = static_cast<double>(r(j, j));
    const double alpha = -detail::sign_pos(x0) * norm;
    // v = x - alpha*e1; |v0| = |x0| + norm > 0, no cancellation
    double vnorm2 = 0.0;
    {
      const double v0 = x0 - alpha;
      vs(j, j) = static_cast<T>(v0);
      vnorm2 += v0 * v0;
      for (int i = j + 1; i < m; ++i) {
        const double vi = static_cast<double>(r(i, j));
        vs(i, j) = static_cast<T>(vi);
        vnorm2 += vi * vi;
      }
    }
    const double beta = 2.0 / vnorm2;
    betas[static_cast<std::size_t>(j)] = beta;

    r(j, j) = static_cast<T>(alpha);
    for (int i = j + 1; i < m; ++i) r(i, j) = T(0);

    // apply H = I - beta*v*v^T to the remaining columns
    for (int c = j + 1; c < k; ++c) {
      double w = 0.0;
      for (int i = j; i < m; ++i)
        w += static_cast<double>(vs(i, j)) * static_cast<double>(r(i, c));
      w *= beta;
      for (int i = j; i < m; ++i)
        r(i, c) = static_cast<T>(static_cast<double>(r(i, c)) -
                                 w * static_cast<double>(vs(i, j)));
    }
  }

  // q = H_0 * H_1 * ... * H_{k-1} * [I_k; 0], reflectors applied in reverse
  DenseMatrix<T> q = DenseMatrix<T>::identity(m, k);
  for (int j = k - 1; j >= 0; --j) {
    const double beta = betas[static_cast<std::size_t>(j)];
    for (int c = 0; c < k; ++c) {
      double w = 0.0;
      for (int i = j; i < m; ++i)
        w += static_cast<double>(vs(i, j)) * static_cast<double>(q(i, c));
      w *= beta;
      for (int i = j; i < m; ++i)
        q(i, c) = static_cast<T>(static_cast<double>(q(i, c)) -
                                 w * static_cast<double>(vs(i, j)));
    }
  }

  // absorb diagonal signs into q so diag(r) >= 0 (sign(0) counts as +)
  DenseMatrix<T> r_thin(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = i; j < k; ++j) r_thin(i, j) = r(i, j);
  for (int j = 0; j < k; ++j) {
    if (static_cast<double>(r_thin(j, j)) < 0.0) {
      for (int c = j; c < k; ++c) r_thin(j, c) = -r_thin(j, c);
      for (int i = 0; i < m; ++i) q(i, j) = -q(i, j);
    }
  }
  return QrResult<T>{std::move(q), std::move(r_thin)};
}

/// Orthonormal columns of the QR factorization of a seeded Gaussian m x k
/// matrix. Deterministic for a fixed seed.
template <typename T>
DenseMatrix<T> random_orthonormal(int m, int k, std::uint64_t seed) {
  if (m < k || k < 1)
    throw ShapeError("random_orthonormal: need m >= k >= 1, got m=" +
                     std::to_string(m) + " k=" + std::to_string(k));
  Rng rng(seed);
  DenseMatrix<T> g(m, k);
  for (auto& x : g.data) x = static_cast<T>(rng.gauss());
  return qr_thin(g).q;
}

}  // namespace sct
