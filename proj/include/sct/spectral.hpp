// Copyright (c) 2026 SCT contributors
// SPDX-License-Identifier: Apache-2.0
//
// SpectralLinear parameterization: a weight matrix lives permanently as
// truncated SVD factors u * diag(s) * v^T. Forward and backward act on the
// factors; the dense matrix is only ever materialized by to_dense, which is
// a guarded test/debug path.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sct/matrix.hpp"
#include "sct/qr.hpp"
#include "sct/rng.hpp"
#include "sct/svd.hpp"

namespace sct {

/// Factor bundle for one layer: u (m x k), s (k), v (n x k), optional bias
/// (n). s is unconstrained in sign during training; a sign flip of s_j is
/// equivalent to flipping column j of u or v.
template <typename T>
struct SpectralFactors {
  DenseMatrix<T> u;
  std::vector<T> s;
  DenseMatrix<T> v;
  std::optional<std::vector<T>> bias;

  int m() const { return u.rows; }
  int n() const { return v.rows; }
  int k() const { return static_cast<int>(s.size()); }

  /// k(m+n+1), plus n when a bias is attached.
  std::int64_t param_count() const {
    const std::int64_t kk = k();
    std::int64_t count = kk * (static_cast<std::int64_t>(m()) + n() + 1);
    if (bias) count += n();
    return count;
  }

  void validate() const {
    const int kk = k();
    if (u.cols != kk || v.cols != kk)
      throw ShapeError("SpectralFactors: u " + shape_str(u) + ", v " +
                       shape_str(v) + " inconsistent with k=" +
                       std::to_string(kk));
    if (kk < 1 || kk > std::min(m(), n()))
      throw RankError("SpectralFactors: rank " + std::to_string(kk) +
                      " outside [1, min(" + std::to_string(m()) + ", " +
                      std::to_string(n()) + ")]");
    if (bias && static_cast<int>(bias->size()) != n())
      throw ShapeError("SpectralFactors: bias length " +
                       std::to_string(bias->size()) + " != n=" +
                       std::to_string(n()));
  }
};

/// Gradients mirroring SpectralFactors, plus the input gradient. No m x n
/// buffer is ever allocated on the backward path.
template <typename T>
struct SpectralGrads {
  DenseMatrix<T> du;                       // m x k
  std::vector<T> ds;                       // k
  DenseMatrix<T> dv;                       // n x k
  std::optional<std::vector<T>> dbias;     // n
  DenseMatrix<T> dx;                       // b x m
};

/// Activations saved by the forward pass: the input and h = x * u.
template <typename T>
struct ForwardCache {
  DenseMatrix<T> x;  // b x m
  DenseMatrix<T> h;  // b x k
};

/// Rank selection for from_dense: either a fixed k or the minimal k whose
/// leading singular values retain an energy fraction tau.
struct RankPolicy {
  enum class Kind { fixed, energy };
  Kind kind = Kind::fixed;
  int k = 1;
  double tau = 0.95;

  static RankPolicy fixed_rank(int k) { return RankPolicy{Kind::fixed, k, 0.0}; }
  static RankPolicy energy(double tau) { return RankPolicy{Kind::energy, 0, tau}; }
};

/// y = ((x * u) . s) * v^T (+ bias). Three small products; nothing of size
/// m x n is formed.
template <typename T>
std::pair<DenseMatrix<T>, ForwardCache<T>> spectral_forward(
    const SpectralFactors<T>& f, const DenseMatrix<T>& x) {
  if (x.cols != f.m())
    throw ShapeError("spectral_forward: input " + shape_str(x) +
                     " does not match m=" + std::to_string(f.m()));
  DenseMatrix<T> h = matmul(x, f.u);  // b x k
  DenseMatrix<T> hs = h;
  for (int i = 0; i < hs.rows; ++i) {
    T* row = hs.row_ptr(i);
    for (int j = 0; j < hs.cols; ++j) row[j] *= f.s[static_cast<std::size_t>(j)];
  }
  DenseMatrix<T> y = matmul_nt(hs, f.v);  // b x n
  if (f.bias) {
    const auto& bias = *f.bias;
    for (int i = 0; i < y.rows; ++i) {
      T* row = y.row_ptr(i);
      for (int j = 0; j < y.cols; ++j) row[j] += bias[static_cast<std::size_t>(j)];
    }
  }
  return {std::move(y), ForwardCache<T>{x, std::move(h)}};
}

/// Exact reverse-mode derivatives of the factored forward. With
/// gv = gy * v:  du = x^T (gv . s), ds = colsum(h . gv), dv = gy^T (h . s),
/// dx = (gv . s) u^T, dbias = colsum(gy).
template <typename T>
SpectralGrads<T> spectral_backward(const SpectralFactors<T>& f,
                                   const ForwardCache<T>& cache,
                                   const DenseMatrix<T>& gy) {
  const int b = cache.x.rows;
  if (gy.rows != b || gy.cols != f.n())
    throw ShapeError("spectral_backward: gy " + shape_str(gy) +
                     " does not match b=" + std::to_string(b) +
                     ", n=" + std::to_string(f.n()));
  if (cache.h.rows != b || cache.h.cols != f.k())
    throw ShapeError("spectral_backward: cache h " + shape_str(cache.h) +
                     " does not match forward");
  ensure_finite(gy, "spectral_backward gy");

  DenseMatrix<T> gv = matmul(gy, f.v);  // b x k

  DenseMatrix<T> gvs = gv;  // gv . s
  DenseMatrix<T> hgv = gv;  // h . gv
  DenseMatrix<T> hs = cache.h;  // h . s
  for (int i = 0; i < b; ++i) {
    T* gvs_row = gvs.row_ptr(i);
    T* hgv_row = hgv.row_ptr(i);
    T* hs_row = hs.row_ptr(i);
    const T* h_row = cache.h.row_ptr(i);
    for (int j = 0; j < f.k(); ++j) {
      const T sj = f.s[static_cast<std::size_t>(j)];
      gvs_row[j] *= sj;
      hgv_row[j] *= h_row[j];
      hs_row[j] *= sj;
    }
  }

  SpectralGrads<T> g{matmul_tn(cache.x, gvs),
                     std::vector<T>(static_cast<std::size_t>(f.k()), T(0)),
                     matmul_tn(gy, hs),
                     std::nullopt,
                     matmul_nt(gvs, f.u)};
  for (int i = 0; i < b; ++i) {
    const T* row = hgv.row_ptr(i);
    for (int j = 0; j < f.k(); ++j) g.ds[static_cast<std::size_t>(j)] += row[j];
  }
  if (f.bias) {
    std::vector<T> dbias(static_cast<std::size_t>(f.n()), T(0));
    for (int i = 0; i < b; ++i) {
      const T* row = gy.row_ptr(i);
      for (int j = 0; j < f.n(); ++j) dbias[static_cast<std::size_t>(j)] += row[j];
    }
    g.dbias = std::move(dbias);
  }
  return g;
}

/// Minimal k whose cumulative squared singular values reach fraction tau of
/// the total, clamped to >= 1. A zero spectrum yields k = 1.
template <typename T>
int energy_rank(const std::vector<T>& sigma, double tau) {
  if (tau <= 0.0 || tau > 1.0)
    throw RankError("energy_rank: tau must be in (0, 1], got " +
                    std::to_string(tau));
  double total = 0.0;
  for (T s : sigma) total += static_cast<double>(s) * static_cast<double>(s);
  if (total <= 0.0) return 1;
  double cum = 0.0;
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    cum += static_cast<double>(sigma[i]) * static_cast<double>(sigma[i]);
    if (cum >= tau * total) return static_cast<int>(i) + 1;
  }
  return static_cast<int>(sigma.size());
}

/// Truncated-SVD conversion of a dense matrix into spectral form.
template <typename T>
SpectralFactors<T> from_dense(const DenseMatrix<T>& w, const RankPolicy& policy) {
  ensure_finite(w, "from_dense input");
  const int rmax = std::min(w.rows, w.cols);
  SvdResult<T> svd = svd_truncated(w);

  int k = 0;
  if (policy.kind == RankPolicy::Kind::fixed) {
    k = policy.k;
    if (k < 1 || k > rmax)
      throw RankError("from_dense: rank " + std::to_string(k) +
                      " outside [1, " + std::to_string(rmax) + "] for " +
                      shape_str(w));
  } else {
    k = energy_rank(svd.sigma, policy.tau);
  }

  SpectralFactors<T> f{DenseMatrix<T>(w.rows, k),
                       std::vector<T>(static_cast<std::size_t>(k)),
                       DenseMatrix<T>(w.cols, k), std::nullopt};
  for (int j = 0; j < k; ++j) {
    f.s[static_cast<std::size_t>(j)] = svd.sigma[static_cast<std::size_t>(j)];
    for (int i = 0; i < w.rows; ++i) f.u(i, j) = svd.u(i, j);
    for (int i = 0; i < w.cols; ++i) f.v(i, j) = svd.v(i, j);
  }
  return f;
}

inline constexpr std::int64_t kToDenseGuardElems = std::int64_t(1) << 24;

/// Materializes u * diag(s) * v^T. Test/debug only; refuses matrices above
/// the element guard so production paths cannot densify by accident.
template <typename T>
DenseMatrix<T> to_dense(const SpectralFactors<T>& f,
                        std::int64_t guard_elems = kToDenseGuardElems) {
  const std::int64_t elems =
      static_cast<std::int64_t>(f.m()) * static_cast<std::int64_t>(f.n());
  if (elems > guard_elems)
    throw GuardError("to_dense: " + std::to_string(f.m()) + "x" +
                     std::to_string(f.n()) + " = " + std::to_string(elems) +
                     " elements exceeds the materialization guard of " +
                     std::to_string(guard_elems));
  DenseMatrix<T> us = f.u;
  for (int i = 0; i < us.rows; ++i)
    for (int j = 0; j < us.cols; ++j) us(i, j) *= f.s[static_cast<std::size_t>(j)];
  return matmul_nt(us, f.v);
}

/// Scratch initialization: orthonormal u, v and a flat spectrum scaled so
/// the expected Frobenius energy matches a dense init with per-entry std
/// target_std (sum s_i^2 = target_std^2 * m * n).
template <typename T>
SpectralFactors<T> init_scratch(int m, int n, int k, double target_std,
                                std::uint64_t seed) {
  if (k < 1 || k > std::min(m, n))
    throw RankError("init_scratch: rank " + std::to_string(k) +
                    " outside [1, min(" + std::to_string(m) + ", " +
                    std::to_string(n) + ")]");
  SpectralFactors<T> f{
      random_orthonormal<T>(m, k, derive_seed(seed, 1)),
      std::vector<T>(static_cast<std::size_t>(k)),
      random_orthonormal<T>(n, k, derive_seed(seed, 2)), std::nullopt};
  const double sval =
      target_std * std::sqrt(static_cast<double>(m) * static_cast<double>(n) /
                             static_cast<double>(k));
  for (auto& s : f.s) s = static_cast<T>(sval);
  return f;
}

}  // namespace sct
