// Copyright (c) 2026 SCT contributors
// SPDX-License-Identifier: Apache-2.0

#include "sct/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace sct {

using nlohmann::json;

void ModelConfig::validate() const {
  if (n_layers < 1 || d_model < 1 || d_ffn < 1 || vocab < 1 || seq_len < 1)
    throw ConfigError("model: all counts must be >= 1");
  if (mlp_mode == LayerParamMode::spectral) {
    if (mlp_rank < 1 || mlp_rank > std::min(d_model, d_ffn))
      throw RankError("model: mlp_rank " + std::to_string(mlp_rank) +
                      " outside [1, min(d_model, d_ffn) = " +
                      std::to_string(std::min(d_model, d_ffn)) + "]");
  }
  if (attention_param_mode == LayerParamMode::spectral) {
    if (attn_rank < 1 || attn_rank > d_model)
      throw RankError("model: attn_rank " + std::to_string(attn_rank) +
                      " outside [1, d_model = " + std::to_string(d_model) + "]");
  }
  if (!(init_std > 0.0)) throw ConfigError("model: init_std must be > 0");
}

void RunConfig::validate() const {
  model.validate();
  if (steps < 1) throw ConfigError("train: steps must be >= 1");
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (data.kind == DataConfig::Kind::text && data.path.empty())
    throw ConfigError("train: text data source requires a path");
}

namespace {

void check_keys(const json& obj, const std::set<std::string>& allowed,
                const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key))
      throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read_field(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

LayerParamMode parse_param_mode(const std::string& s, const std::string& where) {
  if (s == "spectral") return LayerParamMode::spectral;
  if (s == "dense") return LayerParamMode::dense;
  throw ConfigError(where + ": expected 'spectral' or 'dense', got '" + s + "'");
}

AttentionMode parse_attention_mode(const std::string& s, const std::string& where) {
  if (s == "additive") return AttentionMode::additive;
  if (s == "causal_softmax") return AttentionMode::causal_softmax;
  throw ConfigError(where + ": expected 'additive' or 'causal_softmax', got '" +
                    s + "'");
}

Precision parse_precision(const std::string& s, const std::string& where) {
  if (s == "fp32") return Precision::fp32;
  if (s == "fp64") return Precision::fp64;
  throw ConfigError(where + ": expected 'fp32' or 'fp64', got '" + s + "'");
}

std::string resolve_path(const std::string& p,
                         const std::filesystem::path& base_dir) {
  if (p.empty()) return p;
  std::filesystem::path fp(p);
  if (fp.is_absolute()) return fp.lexically_normal().string();
  return (base_dir / fp).lexically_normal().string();
}

ModelConfig parse_model(const json& j) {
  check_keys(j,
             {"n_layers", "d_model", "d_ffn", "vocab", "seq_len", "mlp_mode",
              "mlp_rank", "attention_param_mode", "attn_rank", "attention_mode",
              "tie_embeddings", "init_std", "seed"},
             "model");
  ModelConfig cfg;
  read_field(j, "n_layers", cfg.n_layers, "model");
  read_field(j, "d_model", cfg.d_model, "model");
  read_field(j, "d_ffn", cfg.d_ffn, "model");
  read_field(j, "vocab", cfg.vocab, "model");
  read_field(j, "seq_len", cfg.seq_len, "model");
  read_field(j, "mlp_rank", cfg.mlp_rank, "model");
  read_field(j, "attn_rank", cfg.attn_rank, "model");
  read_field(j, "tie_embeddings", cfg.tie_embeddings, "model");
  read_field(j, "init_std", cfg.init_std, "model");
  read_field(j, "seed", cfg.seed, "model");
  if (j.contains("mlp_mode"))
    cfg.mlp_mode = parse_param_mode(j.at("mlp_mode").get<std::string>(),
                                    "model.mlp_mode");
  if (j.contains("attention_param_mode"))
    cfg.attention_param_mode = parse_param_mode(
        j.at("attention_param_mode").get<std::string>(),
        "model.attention_param_mode");
  if (j.contains("attention_mode"))
    cfg.attention_mode = parse_attention_mode(
        j.at("attention_mode").get<std::string>(), "model.attention_mode");
  return cfg;
}

OptimGroupsConfig parse_optim(const json& j) {
  check_keys(j,
             {"lr_spectral", "lr_spectral_s", "lr_dense", "beta1", "beta2",
              "eps", "weight_decay", "decay_spectral_s", "decay_dense_matrices",
              "decay_dense_vectors"},
             "optim");
  OptimGroupsConfig cfg;
  read_field(j, "lr_spectral", cfg.lrs.spectral, "optim");
  read_field(j, "lr_spectral_s", cfg.lrs.spectral_s, "optim");
  read_field(j, "lr_dense", cfg.lrs.dense, "optim");
  read_field(j, "beta1", cfg.beta1, "optim");
  read_field(j, "beta2", cfg.beta2, "optim");
  read_field(j, "eps", cfg.eps, "optim");
  read_field(j, "weight_decay", cfg.weight_decay, "optim");
  read_field(j, "decay_spectral_s", cfg.decay_spectral_s, "optim");
  read_field(j, "decay_dense_matrices", cfg.decay_dense_matrices, "optim");
  read_field(j, "decay_dense_vectors", cfg.decay_dense_vectors, "optim");
  return cfg;
}

DataConfig parse_data(const json& j, const std::filesystem::path& base_dir) {
  check_keys(j, {"kind", "path"}, "train.data");
  DataConfig cfg;
  if (j.contains("kind")) {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "copy_task") {
      cfg.kind = DataConfig::Kind::copy_task;
    } else if (kind == "text") {
      cfg.kind = DataConfig::Kind::text;
    } else {
      throw ConfigError("train.data.kind: expected 'copy_task' or 'text', got '" +
                        kind + "'");
    }
  }
  std::string path;
  read_field(j, "path", path, "train.data");
  cfg.path = resolve_path(path, base_dir);
  return cfg;
}

RunConfig parse_train(const json& j, const ModelConfig& model,
                      const OptimGroupsConfig& optim,
                      const std::filesystem::path& base_dir) {
  check_keys(j,
             {"steps", "batch_size", "seed", "precision", "data",
              "metrics_path", "checkpoint_dir", "record_timings"},
             "train");
  RunConfig cfg;
  cfg.model = model;
  cfg.optim = optim;
  read_field(j, "steps", cfg.steps, "train");
  read_field(j, "batch_size", cfg.batch_size, "train");
  read_field(j, "seed", cfg.seed, "train");
  read_field(j, "record_timings", cfg.record_timings, "train");
  if (j.contains("precision"))
    cfg.precision = parse_precision(j.at("precision").get<std::string>(),
                                    "train.precision");
  if (j.contains("data")) cfg.data = parse_data(j.at("data"), base_dir);
  std::string metrics, ckpt;
  read_field(j, "metrics_path", metrics, "train");
  read_field(j, "checkpoint_dir", ckpt, "train");
  cfg.metrics_path = resolve_path(metrics, base_dir);
  cfg.checkpoint_dir = resolve_path(ckpt, base_dir);
  return cfg;
}

SweepConfig parse_sweep(const json& j, const std::filesystem::path& base_dir) {
  check_keys(j, {"ranks", "output_dir"}, "sweep");
  SweepConfig cfg;
  read_field(j, "ranks", cfg.ranks, "sweep");
  std::string dir;
  read_field(j, "output_dir", dir, "sweep");
  cfg.output_dir = resolve_path(dir, base_dir);
  return cfg;
}

MemoryPlanConfig parse_memory_plan(const json& j,
                                   const std::filesystem::path& base_dir) {
  check_keys(j, {"rank", "elem_size", "format", "report_path"}, "memory_plan");
  MemoryPlanConfig cfg;
  read_field(j, "rank", cfg.rank, "memory_plan");
  read_field(j, "elem_size", cfg.elem_size, "memory_plan");
  read_field(j, "format", cfg.format, "memory_plan");
  if (cfg.format != "csv" && cfg.format != "json")
    throw ConfigError("memory_plan.format: expected 'csv' or 'json', got '" +
                      cfg.format + "'");
  std::string path;
  read_field(j, "report_path", path, "memory_plan");
  cfg.report_path = resolve_path(path, base_dir);
  return cfg;
}

}  // namespace

CliConfig parse_config(const std::string& text,
                       const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  check_keys(j, {"model", "optim", "train", "sweep", "memory_plan"}, "config");
  if (!j.contains("model")) throw ConfigError("config: missing 'model' section");

  CliConfig cfg;
  cfg.base_dir = base_dir;
  cfg.model = parse_model(j.at("model"));
  cfg.model.validate();
  if (j.contains("optim")) cfg.optim = parse_optim(j.at("optim"));
  if (j.contains("train"))
    cfg.train = parse_train(j.at("train"), cfg.model, cfg.optim, base_dir);
  if (j.contains("sweep")) cfg.sweep = parse_sweep(j.at("sweep"), base_dir);
  if (j.contains("memory_plan"))
    cfg.memory_plan = parse_memory_plan(j.at("memory_plan"), base_dir);
  if (cfg.train) cfg.train->validate();
  return cfg;
}

CliConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

}  // namespace sct
