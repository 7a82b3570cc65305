// Copyright (c) 2026 SCT contributors
// SPDX-License-Identifier: Apache-2.0

#include "sct/memory_model.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>

#include <json.hpp>

#include "sct/serialize.hpp"

namespace sct {

namespace {

std::int64_t spectral_count(int m, int n, int k) {
  return static_cast<std::int64_t>(k) *
         (static_cast<std::int64_t>(m) + static_cast<std::int64_t>(n) + 1);
}

std::string mb_str(std::int64_t bytes) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.1f", static_cast<double>(bytes) / 1e6);
  return buf;
}

}  // namespace

std::int64_t MemoryReport::state_bytes_as_configured() const {
  std::int64_t bytes = total_sct_bytes;
  bytes += aux_param_count * elem_size * copies;
  return bytes;
}

LayerFootprint layer_footprint(int m, int n, int k, int elem_size, int copies) {
  if (m < 1 || n < 1 || k < 1)
    throw RankError("layer_footprint: counts must be >= 1");
  if (k > std::min(m, n))
    throw RankError("layer_footprint: rank " + std::to_string(k) +
                    " exceeds min(" + std::to_string(m) + ", " +
                    std::to_string(n) + ")");
  LayerFootprint fp;
  fp.m = m;
  fp.n = n;
  fp.k = k;
  fp.bytes_dense = static_cast<std::int64_t>(copies) * m * n * elem_size;
  fp.bytes_sct = static_cast<std::int64_t>(copies) * spectral_count(m, n, k) *
                 elem_size;
  fp.compression = static_cast<double>(fp.bytes_dense) /
                   static_cast<double>(fp.bytes_sct);
  return fp;
}

LayerFootprint dense_footprint(const std::string& name, int m, int n,
                               int elem_size, int copies) {
  LayerFootprint fp;
  fp.name = name;
  fp.m = m;
  fp.n = n;
  fp.k = 0;
  fp.bytes_dense = static_cast<std::int64_t>(copies) * m * n * elem_size;
  fp.bytes_sct = fp.bytes_dense;
  fp.compression = 1.0;
  return fp;
}

MemoryReport architecture_report(const ModelConfig& cfg, int rank,
                                 int elem_size) {
  MemoryReport report;
  report.elem_size = elem_size;

  const int d = cfg.d_model;
  const int ffn = cfg.d_ffn;
  const bool mlp_spectral = cfg.mlp_mode == LayerParamMode::spectral;
  const bool attn_spectral = cfg.attention_param_mode == LayerParamMode::spectral;
  const int mlp_rank = rank > 0 ? rank : cfg.mlp_rank;
  const int attn_rank = rank > 0 ? rank : cfg.attn_rank;

  auto add_row = [&](const std::string& name, int m, int n, bool spectral,
                     int k) {
    LayerFootprint fp;
    if (spectral) {
      fp = layer_footprint(m, n, k, elem_size, report.copies);
      fp.name = name;
      report.spectral_param_count += spectral_count(m, n, k);
    } else {
      fp = dense_footprint(name, m, n, elem_size, report.copies);
    }
    report.dense_param_count += static_cast<std::int64_t>(m) * n;
    report.total_dense_bytes += fp.bytes_dense;
    report.total_sct_bytes += fp.bytes_sct;
    report.rows.push_back(std::move(fp));
  };

  for (int layer = 0; layer < cfg.n_layers; ++layer) {
    const std::string prefix = "layer" + std::to_string(layer);
    for (const char* proj : {"q", "k", "v", "o"})
      add_row(prefix + ".attn." + proj, d, d, attn_spectral, attn_rank);
    add_row(prefix + ".mlp.gate", d, ffn, mlp_spectral, mlp_rank);
    add_row(prefix + ".mlp.up", d, ffn, mlp_spectral, mlp_rank);
    add_row(prefix + ".mlp.down", ffn, d, mlp_spectral, mlp_rank);
  }

  // embeddings, norms, and the head stay dense in every configuration
  report.aux_param_count =
      static_cast<std::int64_t>(cfg.vocab) * d +
      (cfg.tie_embeddings ? 0 : static_cast<std::int64_t>(d) * cfg.vocab) +
      static_cast<std::int64_t>(cfg.n_layers) * 2 * d + d;

  std::int64_t configured = report.aux_param_count;
  for (const auto& row : report.rows)
    configured += row.k > 0 ? spectral_count(row.m, row.n, row.k)
                            : static_cast<std::int64_t>(row.m) * row.n;
  report.trainable_param_count = configured;
  return report;
}

std::int64_t trainable_param_count(const ModelConfig& cfg) {
  return architecture_report(cfg, 0, 4).trainable_param_count;
}

std::vector<SweepRow> sweep_table(const ModelConfig& cfg,
                                  const std::vector<int>& ranks,
                                  int elem_size) {
  std::vector<SweepRow> rows;
  for (int rank : ranks) {
    ModelConfig at_rank = cfg;
    if (at_rank.mlp_mode == LayerParamMode::spectral) at_rank.mlp_rank = rank;
    if (at_rank.attention_param_mode == LayerParamMode::spectral)
      at_rank.attn_rank = rank;
    at_rank.validate();
    MemoryReport report = architecture_report(at_rank, 0, elem_size);

    SweepRow row;
    row.rank = rank;
    row.params = report.trainable_param_count;
    std::int64_t mlp_dense = 0, mlp_sct = 0;
    for (const auto& fp : report.rows) {
      if (fp.name.find(".mlp.") == std::string::npos) continue;
      mlp_dense += fp.bytes_dense;
      mlp_sct += fp.bytes_sct;
    }
    row.mlp_compression = mlp_sct > 0
                              ? static_cast<double>(mlp_dense) /
                                    static_cast<double>(mlp_sct)
                              : 1.0;
    row.est_state_bytes = report.state_bytes_as_configured();
    rows.push_back(row);
  }
  return rows;
}

std::string report_to_csv(const MemoryReport& report) {
  std::ostringstream os;
  os << "layer,m,n,k,bytes_dense,bytes_sct,compression\n";
  char buf[64];
  for (const auto& row : report.rows) {
    std::snprintf(buf, sizeof(buf), "%.17g", row.compression);
    os << row.name << ',' << row.m << ',' << row.n << ',' << row.k << ','
       << row.bytes_dense << ',' << row.bytes_sct << ',' << buf << '\n';
  }
  return os.str();
}

void write_report_csv(const MemoryReport& report,
                      const std::filesystem::path& path) {
  atomic_write(path, [&](std::ostream& os) { os << report_to_csv(report); });
}

std::string report_to_json(const MemoryReport& report) {
  nlohmann::json j;
  j["elem_size"] = report.elem_size;
  j["copies"] = report.copies;
  j["total_dense_bytes"] = report.total_dense_bytes;
  j["total_sct_bytes"] = report.total_sct_bytes;
  j["dense_param_count"] = report.dense_param_count;
  j["spectral_param_count"] = report.spectral_param_count;
  j["aux_param_count"] = report.aux_param_count;
  j["trainable_param_count"] = report.trainable_param_count;
  j["rows"] = nlohmann::json::array();
  for (const auto& row : report.rows) {
    j["rows"].push_back({{"layer", row.name},
                         {"m", row.m},
                         {"n", row.n},
                         {"k", row.k},
                         {"bytes_dense", row.bytes_dense},
                         {"bytes_sct", row.bytes_sct},
                         {"compression", row.compression}});
  }
  return j.dump(2) + "\n";
}

void write_report_json(const MemoryReport& report,
                       const std::filesystem::path& path) {
  atomic_write(path, [&](std::ostream& os) { os << report_to_json(report); });
}

std::string report_summary(const MemoryReport& report) {
  // aggregate identical shapes so the summary reads like a table row per
  // matrix class
  struct Agg {
    int count = 0;
    LayerFootprint fp;
  };
  std::map<std::string, Agg> classes;
  std::vector<std::string> order;
  for (const auto& row : report.rows) {
    std::string shape = std::to_string(row.m) + "x" + std::to_string(row.n) +
                        (row.k > 0 ? "@k=" + std::to_string(row.k) : "@dense");
    auto [it, inserted] = classes.try_emplace(shape);
    if (inserted) order.push_back(shape);
    it->second.count += 1;
    it->second.fp = row;
  }

  std::ostringstream os;
  char buf[160];
  os << "per-layer training memory (weights + grads + Adam moments), "
     << report.copies << " copies, elem " << report.elem_size << " B\n";
  for (const auto& shape : order) {
    const Agg& agg = classes.at(shape);
    const LayerFootprint& fp = agg.fp;
    if (fp.k > 0) {
      std::snprintf(buf, sizeof(buf),
                    "  %dx%d  dense %s MB  sct %s MB  %.0fx  (x%d)\n", fp.m,
                    fp.n, mb_str(fp.bytes_dense).c_str(),
                    mb_str(fp.bytes_sct).c_str(), fp.compression, agg.count);
    } else {
      std::snprintf(buf, sizeof(buf), "  %dx%d  dense %s MB  (x%d, not spectral)\n",
                    fp.m, fp.n, mb_str(fp.bytes_dense).c_str(), agg.count);
    }
    os << buf;
  }
  std::snprintf(buf, sizeof(buf),
                "totals: dense %.1f GB, as configured %.1f GB\n",
                static_cast<double>(report.total_dense_bytes) / 1e9,
                static_cast<double>(report.state_bytes_as_configured()) / 1e9);
  os << buf;
  std::snprintf(buf, sizeof(buf),
                "params: dense-equivalent %lld, spectral %lld, aux dense %lld\n",
                static_cast<long long>(report.dense_param_count),
                static_cast<long long>(report.spectral_param_count),
                static_cast<long long>(report.aux_param_count));
  os << buf;
  return os.str();
}

}  // namespace sct
