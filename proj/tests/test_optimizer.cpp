// Copyright (c) 2026 SCT contributors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "sct/optimizer.hpp"
#include "sct/rng.hpp"

using sct::AdamState;
using sct::AdamW;
using sct::OptimConfig;
using sct::ParamClass;
using sct::ParamView;

namespace {

struct ScalarParam {
  std::vector<double> value{0.0};
  std::vector<double> grad{0.0};
  AdamState<double> state{{0.0}, {0.0}, 0};
};

ParamView<double> view_of(const std::string& name, ParamClass cls,
                          std::vector<double>& value,
                          std::vector<double>& grad) {
  return ParamView<double>{name, cls, std::span<double>(value),
                           std::span<double>(grad)};
}

}  // namespace

TEST_CASE("zero gradient from a fresh state leaves the parameter unchanged") {
  OptimConfig cfg;
  cfg.lr = 1e-2;
  cfg.weight_decay = 0.0;
  ScalarParam p;
  p.value[0] = 1.25;
  for (int i = 0; i < 50; ++i)
    sct::adamw_step<double>(std::span<double>(p.value),
                            std::span<const double>(p.grad), p.state, cfg,
                            ParamClass::dense_vector);
  CHECK(p.value[0] == 1.25);
  CHECK(p.state.m1[0] == 0.0);
  CHECK(p.state.m2[0] == 0.0);
  CHECK(p.state.step_count == 50);
}

TEST_CASE("moments decay toward zero once gradients stop") {
  OptimConfig cfg;
  cfg.lr = 1e-3;
  cfg.weight_decay = 0.0;
  ScalarParam p;
  p.grad[0] = 1.0;
  sct::adamw_step<double>(std::span<double>(p.value),
                          std::span<const double>(p.grad), p.state, cfg,
                          ParamClass::dense_vector);
  const double m1_after_one = std::abs(p.state.m1[0]);
  p.grad[0] = 0.0;
  for (int i = 0; i < 40; ++i)
    sct::adamw_step<double>(std::span<double>(p.value),
                            std::span<const double>(p.grad), p.state, cfg,
                            ParamClass::dense_vector);
  CHECK(std::abs(p.state.m1[0]) ==
        doctest::Approx(m1_after_one * std::pow(0.9, 40)).epsilon(1e-9));
  CHECK(p.state.m2[0] < 1e-3);
}

TEST_CASE("first step from zero state has the closed form -lr*g/(|g|+eps)") {
  for (double g : {0.35, -2.0, 1e-3}) {
    OptimConfig cfg;
    cfg.lr = 1e-3;
    cfg.weight_decay = 0.0;
    ScalarParam p;
    p.grad[0] = g;
    sct::adamw_step<double>(std::span<double>(p.value),
                            std::span<const double>(p.grad), p.state, cfg,
                            ParamClass::dense_vector);
    const double expected = -cfg.lr * g / (std::abs(g) + cfg.eps);
    CHECK(p.value[0] == doctest::Approx(expected).epsilon(1e-12));
    CHECK(p.value[0] * g < 0.0);  // moves against the gradient
  }
}

TEST_CASE("identical state and gradients give identical trajectories") {
  OptimConfig cfg;
  cfg.lr = 3e-3;
  ScalarParam a, b;
  sct::Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    const double g = rng.gauss();
    a.grad[0] = g;
    b.grad[0] = g;
    sct::adamw_step<double>(std::span<double>(a.value),
                            std::span<const double>(a.grad), a.state, cfg,
                            ParamClass::dense_matrix);
    sct::adamw_step<double>(std::span<double>(b.value),
                            std::span<const double>(b.grad), b.state, cfg,
                            ParamClass::dense_matrix);
    CHECK(a.value[0] == b.value[0]);
  }
}

TEST_CASE("update opposes the gradient for 100 random scalar cases") {
  sct::Rng rng(11);
  for (int i = 0; i < 100; ++i) {
    OptimConfig cfg;
    cfg.lr = 1e-3;
    cfg.weight_decay = 0.0;
    ScalarParam p;
    p.value[0] = rng.gauss();
    double g = 0.0;
    while (g == 0.0) g = rng.gauss();
    p.grad[0] = g;
    const double before = p.value[0];
    sct::adamw_step<double>(std::span<double>(p.value),
                            std::span<const double>(p.grad), p.state, cfg,
                            ParamClass::dense_vector);
    CHECK((p.value[0] - before) * g < 0.0);
  }
}

TEST_CASE("weight decay is decoupled and respects the class set") {
  OptimConfig cfg;
  cfg.lr = 1e-2;
  cfg.weight_decay = 0.1;
  ScalarParam decayed, plain;
  decayed.value[0] = plain.value[0] = 2.0;
  // zero gradient isolates the decay term
  sct::adamw_step<double>(std::span<double>(decayed.value),
                          std::span<const double>(decayed.grad), decayed.state,
                          cfg, ParamClass::dense_matrix);
  sct::adamw_step<double>(std::span<double>(plain.value),
                          std::span<const double>(plain.grad), plain.state,
                          cfg, ParamClass::dense_vector);
  CHECK(decayed.value[0] == doctest::Approx(2.0 - cfg.lr * cfg.weight_decay * 2.0));
  CHECK(plain.value[0] == doctest::Approx(2.0));
}

TEST_CASE("decay set never contains the orthonormal factors") {
  OptimConfig cfg;
  CHECK(cfg.decay_applies_to.count(ParamClass::spectral_u) == 0);
  CHECK(cfg.decay_applies_to.count(ParamClass::spectral_v) == 0);
  cfg.decay_applies_to.insert(ParamClass::spectral_u);
  CHECK_THROWS_AS(cfg.validate(), sct::ConfigError);
}

TEST_CASE("non-finite gradient names the parameter") {
  OptimConfig cfg;
  ScalarParam p;
  p.grad[0] = std::numeric_limits<double>::infinity();
  try {
    sct::adamw_step<double>(std::span<double>(p.value),
                            std::span<const double>(p.grad), p.state, cfg,
                            ParamClass::dense_matrix, "layer0.attn.q");
    FAIL("expected NumericError");
  } catch (const sct::NumericError& e) {
    CHECK(std::string(e.what()).find("layer0.attn.q") != std::string::npos);
  }
}

TEST_CASE("invalid hyperparameters are rejected") {
  OptimConfig cfg;
  cfg.lr = 0.0;
  CHECK_THROWS_AS(cfg.validate(), sct::ConfigError);
  cfg.lr = 1e-3;
  cfg.beta2 = 1.0;
  CHECK_THROWS_AS(cfg.validate(), sct::ConfigError);
  cfg.beta2 = 0.999;
  cfg.eps = 0.0;
  CHECK_THROWS_AS(cfg.validate(), sct::ConfigError);
}

TEST_CASE("partition groups by class with per-group learning rates") {
  std::vector<double> u(12), gu(12), s(3), gs(3), v(8), gv(8), w(20), gw(20),
      gains(5), ggains(5);
  std::vector<ParamView<double>> params{
      view_of("l0.u", ParamClass::spectral_u, u, gu),
      view_of("l0.s", ParamClass::spectral_s, s, gs),
      view_of("l0.v", ParamClass::spectral_v, v, gv),
      view_of("emb", ParamClass::dense_matrix, w, gw),
      view_of("norm", ParamClass::dense_vector, gains, ggains),
  };
  OptimConfig base;
  auto groups = sct::partition_params(params, base);
  CHECK(groups.count(groups.spectral_factors) == 20);
  CHECK(groups.count(groups.spectral_s) == 3);
  CHECK(groups.count(groups.dense) == 25);
  CHECK(groups.count(groups.spectral_factors) + groups.count(groups.spectral_s) +
            groups.count(groups.dense) ==
        48);
  CHECK(groups.cfg_spectral_factors.lr == doctest::Approx(5e-4));
  CHECK(groups.cfg_spectral_s.lr == doctest::Approx(5e-4));
  CHECK(groups.cfg_dense.lr == doctest::Approx(2e-5));

  sct::GroupLrs lrs;
  lrs.spectral = 1e-3;
  lrs.spectral_s = 2e-3;
  lrs.dense = 1e-4;
  auto custom = sct::partition_params(params, base, lrs);
  CHECK(custom.cfg_spectral_s.lr == doctest::Approx(2e-3));
}

TEST_CASE("optimizer state is exactly two copies of the parameters") {
  std::vector<double> u(12), gu(12), s(3), gs(3), w(20), gw(20);
  std::vector<ParamView<double>> params{
      view_of("u", ParamClass::spectral_u, u, gu),
      view_of("s", ParamClass::spectral_s, s, gs),
      view_of("w", ParamClass::dense_matrix, w, gw),
  };
  AdamW<double> opt(params, OptimConfig{});
  CHECK(opt.state_bytes() == 2 * static_cast<std::int64_t>(35 * sizeof(double)));
  CHECK(opt.slot_count() == 3);
}

TEST_CASE("adamw moves spectral and dense groups at their own rates") {
  std::vector<double> s{1.0}, gs{1.0}, w{1.0}, gw{1.0};
  std::vector<ParamView<double>> params{
      view_of("s", ParamClass::spectral_s, s, gs),
      view_of("w", ParamClass::dense_vector, w, gw),
  };
  OptimConfig base;
  base.weight_decay = 0.0;
  sct::GroupLrs lrs;
  lrs.spectral = 1e-2;
  lrs.dense = 1e-4;
  AdamW<double> opt(params, base, lrs);
  opt.step();
  CHECK(1.0 - s[0] == doctest::Approx(1e-2).epsilon(1e-6));
  CHECK(1.0 - w[0] == doctest::Approx(1e-4).epsilon(1e-6));
}
