// Copyright (c) 2026 SCT contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "sct/matrix.hpp"

namespace sct {

/// Full thin SVD a = u * diag(sigma) * v^T with r = min(rows, cols) columns.
/// sigma is sorted descending and nonnegative.
template <typename T>
struct SvdResult {
  DenseMatrix<T> u;       // m x r
  std::vector<T> sigma;   // r, descending
  DenseMatrix<T> v;       // n x r
};

namespace detail {

// One-sided Jacobi on the columns of w (m x n, m >= n). Rotations are
// accumulated into v (n x n, starts as identity). A column pair counts as
// orthogonal when |dot| <= 1e-14 * ||p|| * ||q||.
template <typename T>
void jacobi_sweeps(DenseMatrix<T>& w, DenseMatrix<T>& v, int max_sweeps) {
  const int m = w.rows;
  const int n = w.cols;
  constexpr double kOrthTol = 1e-14;

  double worst = 0.0;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool rotated = false;
    worst = 0.0;
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        double app = 0.0, aqq = 0.0, apq = 0.0;
        for (int i = 0; i < m; ++i) {
          const double wp = static_cast<double>(w(i, p));
          const double wq = static_cast<double>(w(i, q));
          app += wp * wp;
          aqq += wq * wq;
          apq += wp * wq;
        }
        const double scale = std::sqrt(app) * std::sqrt(aqq);
        if (scale <= 0.0) continue;  // a zero column is orthogonal to anything
        const double cosine = std::abs(apq) / scale;
        worst = std::max(worst, cosine);
        if (cosine <= kOrthTol) continue;

        // Jacobi rotation zeroing the (p, q) Gram entry
        const double zeta = (aqq - app) / (2.0 * apq);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double cs = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = cs * t;
        for (int i = 0; i < m; ++i) {
          const double wp = static_cast<double>(w(i, p));
          const double wq = static_cast<double>(w(i, q));
          w(i, p) = static_cast<T>(cs * wp - sn * wq);
          w(i, q) = static_cast<T>(sn * wp + cs * wq);
        }
        for (int i = 0; i < n; ++i) {
          const double vp = static_cast<double>(v(i, p));
          const double vq = static_cast<double>(v(i, q));
          v(i, p) = static_cast<T>(cs * vp - sn * vq);
          v(i, q) = static_cast<T>(sn * vp + cs * vq);
        }
        rotated = true;
      }
    }
    if (!rotated) return;
  }
  throw ConvergenceError(
      "svd: one-sided Jacobi did not converge in " +
          std::to_string(max_sweeps) + " sweeps, residual cosine " +
          std::to_string(worst),
      worst);
}

// Replace zero-norm columns of u with unit vectors orthogonal to all others.
template <typename T>
void complete_column(DenseMatrix<T>& u, int col) {
  const int m = u.rows;
  for (int cand = 0; cand < m; ++cand) {
    std::vector<double> e(static_cast<std::size_t>(m), 0.0);
    e[static_cast<std::size_t>(cand)] = 1.0;
    for (int pass = 0; pass < 2; ++pass) {
      for (int j = 0; j < u.cols; ++j) {
        if (j == col) continue;
        double dot = 0.0;
        for (int i = 0; i < m; ++i)
          dot += e[static_cast<std::size_t>(i)] * static_cast<double>(u(i, j));
        for (int i = 0; i < m; ++i)
          e[static_cast<std::size_t>(i)] -= dot * static_cast<double>(u(i, j));
      }
    }
    double norm2 = 0.0;
    for (double x : e) norm2 += x * x;
    if (norm2 > 0.25) {
      const double inv = 1.0 / std::sqrt(norm2);
      for (int i = 0; i < m; ++i)
        u(i, col) = static_cast<T>(e[static_cast<std::size_t>(i)] * inv);
      return;
    }
  }
  throw NumericError("svd: failed to complete an orthonormal basis");
}

template <typename T>
SvdResult<T> svd_tall(const DenseMatrix<T>& a, int max_sweeps) {
  const int m = a.rows;
  const int n = a.cols;
  DenseMatrix<T> w = a;
  DenseMatrix<T> v = DenseMatrix<T>::identity(n, n);
  jacobi_sweeps(w, v, max_sweeps);

  std::vector<double> norms(static_cast<std::size_t>(n), 0.0);
  for (int j = 0; j < n; ++j) {
    double acc = 0.0;
    for (int i = 0; i < m; ++i) {
      const double x = static_cast<double>(w(i, j));
      acc += x * x;
    }
    norms[static_cast<std::size_t>(j)] = std::sqrt(acc);
  }

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int i, int j) {
    return norms[static_cast<std::size_t>(i)] > norms[static_cast<std::size_t>(j)];
  });

  SvdResult<T> out{DenseMatrix<T>(m, n), std::vector<T>(static_cast<std::size_t>(n)),
                   DenseMatrix<T>(n, n)};
  for (int jj = 0; jj < n; ++jj) {
    const int src = order[static_cast<std::size_t>(jj)];
    const double sigma = norms[static_cast<std::size_t>(src)];
    out.sigma[static_cast<std::size_t>(jj)] = static_cast<T>(sigma);
    for (int i = 0; i < n; ++i) out.v(i, jj) = v(i, src);
    if (sigma > 0.0) {
      const double inv = 1.0 / sigma;
      for (int i = 0; i < m; ++i)
        out.u(i, jj) = static_cast<T>(static_cast<double>(w(i, src)) * inv);
    }
  }
  for (int jj = 0; jj < n; ++jj)
    if (static_cast<double>(out.sigma[static_cast<std::size_t>(jj)]) <= 0.0)
      complete_column(out.u, jj);
  return out;
}

}  // namespace detail

/// Full thin SVD via one-sided Jacobi, 60-sweep budget. Truncation is the
/// caller's job. Throws ConvergenceError (with the residual cosine) if the
/// sweep budget runs out.
template <typename T>
SvdResult<T> svd_truncated(const DenseMatrix<T>& a, int max_sweeps = 60) {
  if (a.rows < 1 || a.cols < 1)
    throw ShapeError("svd: empty matrix " + shape_str(a));
  ensure_finite(a, "svd input");
  if (a.rows >= a.cols) return detail::svd_tall(a, max_sweeps);
  // wide case: factor the transpose and swap the roles of u and v
  SvdResult<T> t = detail::svd_tall(transpose(a), max_sweeps);
  return SvdResult<T>{std::move(t.v), std::move(t.sigma), std::move(t.u)};
}

}  // namespace sct
