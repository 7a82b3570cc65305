// Copyright (c) 2026 SCT contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sct/errors.hpp"
#include "sct/optimizer.hpp"

namespace sct {

enum class AttentionMode { additive, causal_softmax };
enum class LayerParamMode { spectral, dense };
enum class Precision { fp32, fp64 };

/// Architecture description. Per-class rank policy: mlp_rank applies when
/// mlp_mode is spectral, attn_rank when attention_param_mode is spectral.
struct ModelConfig {
  int n_layers = 2;
  int d_model = 64;
  int d_ffn = 128;
  int vocab = 256;
  int seq_len = 64;
  LayerParamMode mlp_mode = LayerParamMode::spectral;
  int mlp_rank = 8;
  LayerParamMode attention_param_mode = LayerParamMode::dense;
  int attn_rank = 0;
  AttentionMode attention_mode = AttentionMode::additive;
  bool tie_embeddings = false;
  double init_std = 0.02;
  std::uint64_t seed = 1234;

  void validate() const;
};

struct DataConfig {
  enum class Kind { copy_task, text };
  Kind kind = Kind::copy_task;
  std::string path;  // text corpus, byte-level
};

/// Learning rates and AdamW hyperparameters for the three parameter groups.
struct OptimGroupsConfig {
  GroupLrs lrs;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
  bool decay_spectral_s = true;
  bool decay_dense_matrices = true;
  bool decay_dense_vectors = false;

  OptimConfig base() const {
    OptimConfig cfg;
    cfg.beta1 = beta1;
    cfg.beta2 = beta2;
    cfg.eps = eps;
    cfg.weight_decay = weight_decay;
    cfg.decay_applies_to.clear();
    if (decay_spectral_s) cfg.decay_applies_to.insert(ParamClass::spectral_s);
    if (decay_dense_matrices)
      cfg.decay_applies_to.insert(ParamClass::dense_matrix);
    if (decay_dense_vectors)
      cfg.decay_applies_to.insert(ParamClass::dense_vector);
    return cfg;
  }
};

struct RunConfig {
  ModelConfig model;
  OptimGroupsConfig optim;
  std::int64_t steps = 100;
  int batch_size = 4;
  std::uint64_t seed = 1;
  Precision precision = Precision::fp32;
  DataConfig data;
  std::string metrics_path;
  std::string checkpoint_dir;
  // wall-clock phase timings in the metrics file; turn off for byte-identical
  // reruns
  bool record_timings = true;

  void validate() const;
};

struct MemoryPlanConfig {
  int rank = 32;
  int elem_size = 4;
  std::string format = "csv";  // csv | json
  std::string report_path;
};

struct SweepConfig {
  std::vector<int> ranks;
  std::string output_dir;
};

/// One parsed config file. `train`, `sweep`, and `memory_plan` sections are
/// optional; commands that need a missing section fail with ConfigError.
struct CliConfig {
  ModelConfig model;
  OptimGroupsConfig optim;
  std::optional<RunConfig> train;
  std::optional<SweepConfig> sweep;
  std::optional<MemoryPlanConfig> memory_plan;
  std::filesystem::path base_dir;  // directory of the config file
};

/// Parses a JSON config file. Unknown keys anywhere in the tree are
/// rejected; relative paths are resolved against the config file location.
CliConfig load_config_file(const std::filesystem::path& path);

/// Same, from an in-memory JSON document (base_dir supplied by the caller).
CliConfig parse_config(const std::string& text,
                       const std::filesystem::path& base_dir);

}  // namespace sct
