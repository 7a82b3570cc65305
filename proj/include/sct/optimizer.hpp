// Copyright (c) 2026 SCT contributors
// SPDX-License-Identifier: Apache-2.0
//
// AdamW over heterogeneous parameter sets: spectral factors (u, v), spectral
// spectra (s), and dense parameters. Decoupled weight decay; decay never
// touches u or v, whose columns live on the Stiefel manifold.

#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "sct/errors.hpp"
#include "sct/matrix.hpp"

namespace sct {

enum class ParamClass {
  spectral_u,
  spectral_v,
  spectral_s,
  dense_matrix,
  dense_vector,
};

inline const char* param_class_name(ParamClass c) {
  switch (c) {
    case ParamClass::spectral_u: return "spectral_u";
    case ParamClass::spectral_v: return "spectral_v";
    case ParamClass::spectral_s: return "spectral_s";
    case ParamClass::dense_matrix: return "dense_matrix";
    case ParamClass::dense_vector: return "dense_vector";
  }
  return "?";
}

enum class ParamGroupId { spectral_factors, spectral_s, dense };

inline ParamGroupId group_of(ParamClass c) {
  switch (c) {
    case ParamClass::spectral_u:
    case ParamClass::spectral_v:
      return ParamGroupId::spectral_factors;
    case ParamClass::spectral_s:
      return ParamGroupId::spectral_s;
    case ParamClass::dense_matrix:
    case ParamClass::dense_vector:
      return ParamGroupId::dense;
  }
  throw ConfigError("unclassified parameter class");
}

/// Named view over one trainable tensor and its gradient buffer.
template <typename T>
struct ParamView {
  std::string name;
  ParamClass cls = ParamClass::dense_matrix;
  std::span<T> value;
  std::span<T> grad;
};

/// First/second moment buffers for one parameter.
template <typename T>
struct AdamState {
  std::vector<T> m1;
  std::vector<T> m2;
  std::int64_t step_count = 0;
};

struct OptimConfig {
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
  std::set<ParamClass> decay_applies_to{ParamClass::spectral_s,
                                        ParamClass::dense_matrix};

  void validate() const {
    if (!(lr > 0.0)) throw ConfigError("OptimConfig: lr must be > 0");
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
      throw ConfigError("OptimConfig: betas must be in [0, 1)");
    if (!(eps > 0.0)) throw ConfigError("OptimConfig: eps must be > 0");
    if (weight_decay < 0.0) throw ConfigError("OptimConfig: negative weight decay");
    // decay on the orthonormal factors would be undone by retraction while
    // distorting the update direction
    if (decay_applies_to.count(ParamClass::spectral_u) ||
        decay_applies_to.count(ParamClass::spectral_v))
      throw ConfigError("OptimConfig: weight decay must not apply to u or v");
  }
};

/// One decoupled-weight-decay Adam step on a flat parameter. Moments are
/// bias-corrected; decay applies only when cls is in cfg.decay_applies_to.
template <typename T>
void adamw_step(std::span<T> param, std::span<const T> grad,
                AdamState<T>& state, const OptimConfig& cfg, ParamClass cls,
                const std::string& name = "") {
  if (param.size() != grad.size() || state.m1.size() != param.size() ||
      state.m2.size() != param.size())
    throw ShapeError("adamw_step: size mismatch for parameter " + name);
  for (const T& g : grad)
    if (!std::isfinite(static_cast<double>(g)))
      throw NumericError("adamw_step: non-finite gradient in parameter " +
                         (name.empty() ? std::string("<unnamed>") : name));

  state.step_count += 1;
  const double b1 = cfg.beta1;
  const double b2 = cfg.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step_count));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step_count));
  const bool decay = cfg.decay_applies_to.count(cls) > 0;

  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = static_cast<double>(grad[i]);
    const double m1 = b1 * static_cast<double>(state.m1[i]) + (1.0 - b1) * g;
    const double m2 = b2 * static_cast<double>(state.m2[i]) + (1.0 - b2) * g * g;
    state.m1[i] = static_cast<T>(m1);
    state.m2[i] = static_cast<T>(m2);
    const double mhat1 = m1 / bc1;
    const double mhat2 = m2 / bc2;
    double update = mhat1 / (std::sqrt(mhat2) + cfg.eps);
    if (decay) update += cfg.weight_decay * static_cast<double>(param[i]);
    param[i] = static_cast<T>(static_cast<double>(param[i]) - cfg.lr * update);
  }
}

/// Per-group learning rates; spectral_s < 0 means "same as spectral".
struct GroupLrs {
  double spectral = 5e-4;
  double spectral_s = -1.0;
  double dense = 2e-5;
};

template <typename T>
struct ParamGroups {
  std::vector<ParamView<T>> spectral_factors;
  std::vector<ParamView<T>> spectral_s;
  std::vector<ParamView<T>> dense;
  OptimConfig cfg_spectral_factors;
  OptimConfig cfg_spectral_s;
  OptimConfig cfg_dense;

  std::int64_t count(const std::vector<ParamView<T>>& g) const {
    std::int64_t total = 0;
    for (const auto& p : g) total += static_cast<std::int64_t>(p.value.size());
    return total;
  }
};

/// Splits a parameter list into {spectral_factors, spectral_s, dense} with
/// per-group learning rates. Every trainable parameter lands in exactly one
/// group.
template <typename T>
ParamGroups<T> partition_params(const std::vector<ParamView<T>>& params,
                                const OptimConfig& base, GroupLrs lrs = {}) {
  ParamGroups<T> groups;
  groups.cfg_spectral_factors = base;
  groups.cfg_spectral_factors.lr = lrs.spectral;
  groups.cfg_spectral_s = base;
  groups.cfg_spectral_s.lr = lrs.spectral_s < 0.0 ? lrs.spectral : lrs.spectral_s;
  groups.cfg_dense = base;
  groups.cfg_dense.lr = lrs.dense;
  groups.cfg_spectral_factors.validate();
  groups.cfg_spectral_s.validate();
  groups.cfg_dense.validate();

  for (const auto& p : params) {
    switch (group_of(p.cls)) {
      case ParamGroupId::spectral_factors:
        groups.spectral_factors.push_back(p);
        break;
      case ParamGroupId::spectral_s:
        groups.spectral_s.push_back(p);
        break;
      case ParamGroupId::dense:
        groups.dense.push_back(p);
        break;
    }
  }
  return groups;
}

/// Owns the Adam moments for every parameter and applies per-group AdamW.
template <typename T>
class AdamW {
 public:
  AdamW() = default;

  AdamW(const std::vector<ParamView<T>>& params, const OptimConfig& base,
        GroupLrs lrs = {}) {
    ParamGroups<T> groups = partition_params(params, base, lrs);
    add_group(groups.spectral_factors, groups.cfg_spectral_factors);
    add_group(groups.spectral_s, groups.cfg_spectral_s);
    add_group(groups.dense, groups.cfg_dense);
  }

  void step() {
    for (auto& slot : slots_)
      adamw_step<T>(slot.view.value, std::span<const T>(slot.view.grad),
                    slot.state, slot.cfg, slot.view.cls, slot.view.name);
  }

  /// Moment-buffer footprint: exactly two extra copies of every parameter.
  std::int64_t state_bytes() const {
    std::int64_t bytes = 0;
    for (const auto& slot : slots_)
      bytes += static_cast<std::int64_t>(slot.state.m1.size() +
                                         slot.state.m2.size()) *
               static_cast<std::int64_t>(sizeof(T));
    return bytes;
  }

  std::size_t slot_count() const { return slots_.size(); }

 private:
  struct Slot {
    ParamView<T> view;
    AdamState<T> state;
    OptimConfig cfg;
  };

  void add_group(const std::vector<ParamView<T>>& group, const OptimConfig& cfg) {
    for (const auto& p : group) {
      Slot slot{p, AdamState<T>{}, cfg};
      slot.state.m1 = alloc::tracked_vector<T>(p.value.size());
      slot.state.m2 = alloc::tracked_vector<T>(p.value.size());
      slots_.push_back(std::move(slot));
    }
  }

  std::vector<Slot> slots_;
};

}  // namespace sct
