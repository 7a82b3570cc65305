// Copyright (c) 2026 SCT contributors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cmath>

#include "sct/matrix.hpp"
#include "sct/retraction.hpp"
#include "sct/rng.hpp"
#include "sct/spectral.hpp"

using sct::DenseMatrix;
using sct::Rng;

namespace {

DenseMatrix<double> random_matrix(int r, int c, std::uint64_t seed,
                                  double scale = 1.0) {
  Rng rng(seed);
  DenseMatrix<double> m(r, c);
  for (auto& x : m.data) x = rng.gauss() * scale;
  return m;
}

double max_abs_diff(const DenseMatrix<double>& a, const DenseMatrix<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i)
    d = std::max(d, std::abs(a.data[i] - b.data[i]));
  return d;
}

double median_retract_seconds(int m, int k, int reps) {
  auto mat = random_matrix(m, k, 99);
  std::vector<double> times;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    auto q = sct::retract_qr(mat);
    const auto t1 = std::chrono::steady_clock::now();
    times.push_back(std::chrono::duration<double>(t1 - t0).count());
    mat(0, 0) += 1e-12 * q(0, 0);  // keep the call live
  }
  std::sort(times.begin(), times.end());
  return times[times.size() / 2];
}

}  // namespace

TEST_CASE("retraction fixes manifold points") {
  auto u = sct::random_orthonormal<double>(32, 6, 1);
  auto out = sct::retract_qr(u);
  CHECK(max_abs_diff(out, u) < 1e-12);
}

TEST_CASE("column scaling is absorbed into r") {
  auto u = sct::random_orthonormal<double>(24, 5, 2);
  auto scaled = u;
  for (int i = 0; i < scaled.rows; ++i) scaled(i, 2) *= 1.5;
  auto out = sct::retract_qr(scaled);
  CHECK(max_abs_diff(out, u) < 1e-12);
}

TEST_CASE("perturbed orthonormal matrix retracts nearby") {
  auto u = sct::random_orthonormal<double>(64, 8, 3);
  Rng rng(4);
  auto perturbed = u;
  for (std::size_t i = 0; i < perturbed.data.size(); ++i)
    perturbed.data[i] += 0.01 * (2.0 * rng.uniform() - 1.0);
  auto out = sct::retract_qr(perturbed);
  CHECK(sct::ortho_error(out) < 1e-12);
  double fro = 0.0;
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    const double d = out.data[i] - u.data[i];
    fro += d * d;
  }
  CHECK(std::sqrt(fro) < 0.2);
}

TEST_CASE("retraction is idempotent") {
  auto a = random_matrix(40, 7, 5);
  auto once = sct::retract_qr(a);
  auto twice = sct::retract_qr(once);
  CHECK(max_abs_diff(twice, once) < 1e-13);
}

TEST_CASE("retraction preserves the column space") {
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    auto a = random_matrix(30, 6, seed);
    auto q = sct::retract_qr(a);
    auto proj = sct::matmul(q, sct::matmul_tn(q, a));
    CHECK(max_abs_diff(proj, a) < 1e-9 * sct::max_abs(a));
  }
}

TEST_CASE("retract_layer retracts u and v and leaves s alone") {
  auto f = sct::init_scratch<double>(20, 15, 4, 0.1, 6);
  f.s = {5.0, -2.0, 0.5, -0.25};
  // simulate a gradient step of size 1e-3
  auto gu = random_matrix(20, 4, 7);
  auto gv = random_matrix(15, 4, 8);
  for (std::size_t i = 0; i < f.u.data.size(); ++i) f.u.data[i] += 1e-3 * gu.data[i];
  for (std::size_t i = 0; i < f.v.data.size(); ++i) f.v.data[i] += 1e-3 * gv.data[i];
  const auto s_before = f.s;
  auto report = sct::retract_layer(f, "mlp.gate", 42);
  CHECK(report.layer_id == "mlp.gate");
  CHECK(report.timestamp_step == 42);
  CHECK(report.err_u < 1e-12);
  CHECK(report.err_v < 1e-12);
  CHECK(f.s == s_before);
  CHECK(sct::ortho_error(f.u) < 1e-12);
  CHECK(sct::ortho_error(f.v) < 1e-12);
}

TEST_CASE("retract_layer on already-orthonormal factors is a no-op") {
  auto f = sct::init_scratch<double>(16, 12, 3, 0.1, 9);
  const auto u_before = f.u.data;
  const auto v_before = f.v.data;
  auto report = sct::retract_layer(f, "id", 0);
  CHECK(report.err_u < 1e-12);
  CHECK(report.err_v < 1e-12);
  double du = 0.0, dv = 0.0;
  for (std::size_t i = 0; i < u_before.size(); ++i)
    du = std::max(du, std::abs(u_before[i] - f.u.data[i]));
  for (std::size_t i = 0; i < v_before.size(); ++i)
    dv = std::max(dv, std::abs(v_before[i] - f.v.data[i]));
  CHECK(du < 1e-12);
  CHECK(dv < 1e-12);
}

TEST_CASE("retract_layer attaches the layer id to degenerate errors") {
  auto f = sct::init_scratch<double>(10, 8, 3, 0.1, 10);
  for (int i = 0; i < f.u.rows; ++i) f.u(i, 1) = 0.0;
  try {
    sct::retract_layer(f, "block3.up", 7);
    FAIL("expected DegenerateColumnError");
  } catch (const sct::DegenerateColumnError& e) {
    CHECK(std::string(e.what()).find("block3.up") != std::string::npos);
    CHECK(e.column() == 1);
  }
}

TEST_CASE("float retraction meets the 32-bit orthogonality bar") {
  auto g = random_matrix(128, 16, 20);
  DenseMatrix<float> gf(128, 16);
  for (std::size_t i = 0; i < g.data.size(); ++i)
    gf.data[i] = static_cast<float>(g.data[i]);
  auto out = sct::retract_qr(gf);
  CHECK(sct::ortho_error(out) < 2e-6);
}

TEST_CASE("retraction cost grows with k") {
  // median over repeated runs; adjacent ranks differ by ~4x in flops
  const int m = 2048;
  const int reps = 15;
  double prev = 0.0;
  for (int k : {8, 16, 32, 64}) {
    const double t = median_retract_seconds(m, k, reps);
    INFO("k=", k, " median=", t, "s prev=", prev, "s");
    CHECK(t >= prev);
    prev = t;
  }
}
