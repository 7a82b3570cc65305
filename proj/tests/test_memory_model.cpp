// Copyright (c) 2026 SCT contributors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include <json.hpp>

#include "sct/memory_model.hpp"

using sct::LayerParamMode;
using sct::MemoryReport;
using sct::ModelConfig;

namespace {

struct GoldenRow {
  int m, n;
  double dense_mb, sct_mb;
  int compression;
};

// Published per-MLP-layer training memory at rank 32, FP32, four copies.
const GoldenRow kGoldenRows[] = {
    {576, 1536, 14.2, 1.1, 13},     {1024, 4096, 67.1, 2.6, 26},
    {2048, 8192, 268.4, 5.2, 51},   {4096, 11008, 721.4, 7.7, 93},
    {4096, 17408, 1141.0, 11.0, 104}, {8192, 28672, 3758.1, 18.9, 199},
};

ModelConfig llama70b_shapes() {
  ModelConfig cfg;
  cfg.n_layers = 80;
  cfg.d_model = 8192;
  cfg.d_ffn = 28672;
  cfg.vocab = 1;
  cfg.seq_len = 1;
  cfg.mlp_mode = LayerParamMode::spectral;
  cfg.mlp_rank = 32;
  cfg.attention_param_mode = LayerParamMode::spectral;
  cfg.attn_rank = 32;
  return cfg;
}

}  // namespace

TEST_CASE("golden per-layer rows at rank 32") {
  for (const auto& row : kGoldenRows) {
    auto fp = sct::layer_footprint(row.m, row.n, 32, 4, 4);
    CHECK(std::abs(static_cast<double>(fp.bytes_dense) / 1e6 - row.dense_mb) <
          0.1);
    CHECK(std::abs(static_cast<double>(fp.bytes_sct) / 1e6 - row.sct_mb) < 0.1);
    CHECK(std::abs(fp.compression - row.compression) <= 1.0);
  }
}

TEST_CASE("degenerate 1x1 layer is an honest expansion") {
  auto fp = sct::layer_footprint(1, 1, 1, 4, 4);
  CHECK(fp.compression == doctest::Approx(1.0 / 3.0));
  CHECK(fp.bytes_sct == 3 * fp.bytes_dense);
}

TEST_CASE("footprint rejects rank above min(m, n)") {
  CHECK_THROWS_AS(sct::layer_footprint(8, 4, 5, 4, 4), sct::RankError);
  CHECK_THROWS_AS(sct::layer_footprint(0, 4, 1, 4, 4), sct::RankError);
}

TEST_CASE("70B plan: dense params, dense memory, spectral params") {
  auto report = sct::architecture_report(llama70b_shapes(), 32);
  const double dense_params = static_cast<double>(report.dense_param_count);
  CHECK(std::abs(dense_params - 77.8e9) < 0.01 * 77.8e9);
  const double dense_gb = static_cast<double>(report.total_dense_bytes) / 1e9;
  CHECK(std::abs(dense_gb - 1245.0) < 0.01 * 1245.0);
  const double spectral = static_cast<double>(report.spectral_param_count);
  CHECK(std::abs(spectral - 4.52e8) < 0.01 * 4.52e8);
  CHECK(report.rows.size() == 80 * 7);
}

TEST_CASE("zero spectral layers collapse sct totals onto dense totals") {
  ModelConfig cfg;
  cfg.n_layers = 3;
  cfg.d_model = 32;
  cfg.d_ffn = 64;
  cfg.mlp_mode = LayerParamMode::dense;
  cfg.attention_param_mode = LayerParamMode::dense;
  auto report = sct::architecture_report(cfg, 0);
  CHECK(report.total_sct_bytes == report.total_dense_bytes);
  CHECK(report.spectral_param_count == 0);
}

TEST_CASE("sweep rows: 51x for the 2048x8192 family at k=32") {
  ModelConfig cfg;
  cfg.n_layers = 4;
  cfg.d_model = 2048;
  cfg.d_ffn = 8192;
  cfg.vocab = 1;
  cfg.seq_len = 1;
  cfg.mlp_mode = LayerParamMode::spectral;
  cfg.mlp_rank = 32;
  cfg.attention_param_mode = LayerParamMode::dense;
  auto rows = sct::sweep_table(cfg, {32});
  REQUIRE(rows.size() == 1);
  CHECK(std::abs(rows[0].mlp_compression - 51.0) <= 1.0);
}

TEST_CASE("full-rank compression is reported below one, not clamped") {
  auto fp = sct::layer_footprint(64, 64, 64, 4, 4);
  CHECK(fp.compression < 1.0);
  CHECK(fp.compression ==
        doctest::Approx(64.0 * 64.0 / (64.0 * (64 + 64 + 1))));
}

TEST_CASE("sweep params are strictly increasing in rank") {
  ModelConfig cfg;
  cfg.n_layers = 2;
  cfg.d_model = 64;
  cfg.d_ffn = 128;
  cfg.vocab = 256;
  cfg.mlp_mode = LayerParamMode::spectral;
  cfg.mlp_rank = 8;
  auto rows = sct::sweep_table(cfg, {4, 8, 16, 32});
  REQUIRE(rows.size() == 4);
  for (std::size_t i = 1; i < rows.size(); ++i)
    CHECK(rows[i].params > rows[i - 1].params);
}

TEST_CASE("compression ratios are invariant to elem_size") {
  auto fp32 = sct::layer_footprint(1024, 4096, 32, 4, 4);
  auto fp64 = sct::layer_footprint(1024, 4096, 32, 8, 4);
  CHECK(fp32.compression == doctest::Approx(fp64.compression));
  CHECK(fp64.bytes_dense == 2 * fp32.bytes_dense);
}

TEST_CASE("csv and json report the same rows and totals") {
  ModelConfig cfg;
  cfg.n_layers = 2;
  cfg.d_model = 48;
  cfg.d_ffn = 96;
  cfg.mlp_mode = LayerParamMode::spectral;
  cfg.mlp_rank = 8;
  auto report = sct::architecture_report(cfg, 8);

  const std::string csv = sct::report_to_csv(report);
  std::istringstream is(csv);
  std::string header;
  std::getline(is, header);
  CHECK(header == "layer,m,n,k,bytes_dense,bytes_sct,compression");
  std::int64_t csv_dense = 0, csv_sct = 0;
  std::string line;
  int csv_rows = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    ++csv_rows;
    std::istringstream row(line);
    std::string field;
    for (int f = 0; f < 5; ++f) std::getline(row, field, ',');
    csv_dense += std::stoll(field);
    std::getline(row, field, ',');
    csv_sct += std::stoll(field);
  }
  CHECK(csv_rows == static_cast<int>(report.rows.size()));
  CHECK(csv_dense == report.total_dense_bytes);
  CHECK(csv_sct == report.total_sct_bytes);

  auto j = nlohmann::json::parse(sct::report_to_json(report));
  CHECK(j.at("total_dense_bytes").get<std::int64_t>() == csv_dense);
  CHECK(j.at("total_sct_bytes").get<std::int64_t>() == csv_sct);
  CHECK(j.at("rows").size() == report.rows.size());
}

TEST_CASE("summary prints the table-style llama row") {
  auto report = sct::architecture_report(llama70b_shapes(), 32);
  const std::string summary = sct::report_summary(report);
  CHECK(summary.find("8192x28672") != std::string::npos);
  CHECK(summary.find("3758.1") != std::string::npos);
  CHECK(summary.find("18.9") != std::string::npos);
  CHECK(summary.find("199x") != std::string::npos);
}
