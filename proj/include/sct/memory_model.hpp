// Copyright (c) 2026 SCT contributors
// SPDX-License-Identifier: Apache-2.0
//
// Analytic accounting of training-state memory: weights + gradients + two
// Adam moments, i.e. four copies of every trainable number. Dense matrices
// cost 4*m*n*elem_size bytes; spectral ones 4*k(m+n+1)*elem_size. MB and GB
// are decimal (1e6 / 1e9 bytes).

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sct/config.hpp"

namespace sct {

struct LayerFootprint {
  std::string name;
  int m = 0;
  int n = 0;
  int k = 0;  // 0 means the matrix stays dense
  std::int64_t bytes_dense = 0;
  std::int64_t bytes_sct = 0;
  double compression = 1.0;  // bytes_dense / bytes_sct
};

struct MemoryReport {
  std::vector<LayerFootprint> rows;   // one per weight matrix
  std::int64_t total_dense_bytes = 0; // sum over rows, everything dense
  std::int64_t total_sct_bytes = 0;   // sum over rows, per-row assignment
  std::int64_t dense_param_count = 0; // sum of m*n over rows
  std::int64_t spectral_param_count = 0;  // spectral rows only, k(m+n+1)
  std::int64_t aux_param_count = 0;   // embeddings, norms, head: dense always
  std::int64_t trainable_param_count = 0;  // model as configured, incl. aux
  int elem_size = 4;
  int copies = 4;

  /// Training-state bytes of the model as configured (spectral rows compact,
  /// dense rows dense, aux dense).
  std::int64_t state_bytes_as_configured() const;
};

/// Four-copies footprint of one m x n matrix trained at rank k.
LayerFootprint layer_footprint(int m, int n, int k, int elem_size = 4,
                               int copies = 4);

/// Dense-equivalent footprint of the same matrix (helper for dense rows).
LayerFootprint dense_footprint(const std::string& name, int m, int n,
                               int elem_size = 4, int copies = 4);

/// Per-matrix footprints for every layer of the architecture. `rank`
/// overrides the config's per-class ranks for all spectral-assigned classes;
/// pass 0 to use the config values.
MemoryReport architecture_report(const ModelConfig& cfg, int rank,
                                 int elem_size = 4);

/// Trainable parameter count of the model exactly as built: embeddings +
/// head (unless tied) + norms + attention + MLP per layer.
std::int64_t trainable_param_count(const ModelConfig& cfg);

struct SweepRow {
  int rank = 0;
  std::int64_t params = 0;        // trainable params at this rank
  double mlp_compression = 1.0;   // dense MLP bytes / spectral MLP bytes
  std::int64_t est_state_bytes = 0;
};

/// One row per rank: parameter count, MLP compression, estimated
/// training-state bytes.
std::vector<SweepRow> sweep_table(const ModelConfig& cfg,
                                  const std::vector<int>& ranks,
                                  int elem_size = 4);

/// CSV with the fixed header layer,m,n,k,bytes_dense,bytes_sct,compression.
std::string report_to_csv(const MemoryReport& report);
void write_report_csv(const MemoryReport& report,
                      const std::filesystem::path& path);
std::string report_to_json(const MemoryReport& report);
void write_report_json(const MemoryReport& report,
                       const std::filesystem::path& path);

/// Table-style stdout summary: one line per distinct matrix shape.
std::string report_summary(const MemoryReport& report);

}  // namespace sct
