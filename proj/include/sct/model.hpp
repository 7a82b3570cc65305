// Copyright (c) 2026 SCT contributors
// SPDX-License-Identifier: Apache-2.0
//
// Desk-scale transformer assembled from spectral and dense layers:
// RMS pre-norms, configurable attention (additive or single-head causal
// softmax), SwiGLU MLP, byte-level embeddings, cross-entropy loss. Forward
// and backward are written out by hand; gradients flow through the spectral
// factors via spectral_backward, so no m x n MLP weight or gradient buffer
// exists in a spectral model.

#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sct/config.hpp"
#include "sct/matrix.hpp"
#include "sct/optimizer.hpp"
#include "sct/retraction.hpp"
#include "sct/rng.hpp"
#include "sct/spectral.hpp"

namespace sct {

/// Token grid plus next-token-shifted targets.
struct Batch {
  int b = 0;
  int seq = 0;
  std::vector<int> tokens;   // b * seq
  std::vector<int> targets;  // b * seq

  int token(int row, int t) const {
    return tokens[static_cast<std::size_t>(row) * seq + t];
  }
  int target(int row, int t) const {
    return targets[static_cast<std::size_t>(row) * seq + t];
  }

  void validate(int vocab) const {
    if (b < 1 || seq < 1 ||
        tokens.size() != static_cast<std::size_t>(b) * seq ||
        targets.size() != tokens.size())
      throw ShapeError("Batch: inconsistent shape");
    for (int id : tokens)
      if (id < 0 || id >= vocab)
        throw ShapeError("Batch: token id " + std::to_string(id) +
                         " outside vocab " + std::to_string(vocab));
    for (int id : targets)
      if (id < 0 || id >= vocab)
        throw ShapeError("Batch: target id " + std::to_string(id) +
                         " outside vocab " + std::to_string(vocab));
  }
};

namespace detail {

template <typename T>
void add_inplace(DenseMatrix<T>& a, const DenseMatrix<T>& b) {
  for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] += b.data[i];
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace detail

/// Bias-free linear map d_in -> d_out, backed either by a dense matrix or by
/// spectral factors. forward caches what backward needs; backward accumulates
/// parameter gradients and returns the input gradient.
template <typename T>
class LinearLayer {
 public:
  LinearLayer() = default;

  static LinearLayer make_dense(std::string name, int d_in, int d_out,
                                double init_std, std::uint64_t seed) {
    LinearLayer l;
    l.name_ = std::move(name);
    l.spectral_ = false;
    l.w_ = DenseMatrix<T>(d_in, d_out);
    Rng rng(seed);
    for (auto& x : l.w_.data) x = static_cast<T>(rng.gauss() * init_std);
    l.gw_ = DenseMatrix<T>(d_in, d_out);
    return l;
  }

  static LinearLayer make_spectral(std::string name, int d_in, int d_out,
                                   int rank, double init_std,
                                   std::uint64_t seed) {
    LinearLayer l;
    l.name_ = std::move(name);
    l.spectral_ = true;
    l.f_ = init_scratch<T>(d_in, d_out, rank, init_std, seed);
    l.gu_ = DenseMatrix<T>(d_in, rank);
    l.gs_.assign(static_cast<std::size_t>(rank), T(0));
    l.gv_ = DenseMatrix<T>(d_out, rank);
    return l;
  }

  DenseMatrix<T> forward(const DenseMatrix<T>& x) {
    if (spectral_) {
      auto [y, cache] = spectral_forward(f_, x);
      cache_ = std::move(cache);
      return std::move(y);
    }
    x_cache_ = x;
    return matmul(x, w_);
  }

  DenseMatrix<T> backward(const DenseMatrix<T>& gy) {
    if (spectral_) {
      SpectralGrads<T> g = spectral_backward(f_, cache_, gy);
      detail::add_inplace(gu_, g.du);
      detail::add_inplace(gv_, g.dv);
      for (std::size_t i = 0; i < gs_.size(); ++i) gs_[i] += g.ds[i];
      return std::move(g.dx);
    }
    detail::add_inplace(gw_, matmul_tn(x_cache_, gy));
    return matmul_nt(gy, w_);
  }

  void zero_grads() {
    if (spectral_) {
      std::fill(gu_.data.begin(), gu_.data.end(), T(0));
      std::fill(gv_.data.begin(), gv_.data.end(), T(0));
      std::fill(gs_.begin(), gs_.end(), T(0));
    } else {
      std::fill(gw_.data.begin(), gw_.data.end(), T(0));
    }
  }

  void collect_params(std::vector<ParamView<T>>& out) {
    if (spectral_) {
      out.push_back({name_ + ".u", ParamClass::spectral_u,
                     std::span<T>(f_.u.data), std::span<T>(gu_.data)});
      out.push_back({name_ + ".s", ParamClass::spectral_s, std::span<T>(f_.s),
                     std::span<T>(gs_)});
      out.push_back({name_ + ".v", ParamClass::spectral_v,
                     std::span<T>(f_.v.data), std::span<T>(gv_.data)});
    } else {
      out.push_back({name_, ParamClass::dense_matrix, std::span<T>(w_.data),
                     std::span<T>(gw_.data)});
    }
  }

  std::int64_t param_count() const {
    return spectral_ ? f_.param_count()
                     : static_cast<std::int64_t>(w_.rows) * w_.cols;
  }

  bool is_spectral() const { return spectral_; }
  const std::string& name() const { return name_; }
  SpectralFactors<T>& factors() { return f_; }
  const SpectralFactors<T>& factors() const { return f_; }
  DenseMatrix<T>& dense_weight() { return w_; }

 private:
  std::string name_;
  bool spectral_ = false;

  SpectralFactors<T> f_;
  DenseMatrix<T> gu_, gv_;
  std::vector<T> gs_;
  ForwardCache<T> cache_;

  DenseMatrix<T> w_, gw_;
  DenseMatrix<T> x_cache_;
};

/// RMS pre-norm with a learned gain, eps 1e-6.
template <typename T>
class RmsNorm {
 public:
  RmsNorm() = default;
  RmsNorm(std::string name, int dim) : name_(std::move(name)) {
    gain_ = DenseMatrix<T>(1, dim);
    for (auto& g : gain_.data) g = T(1);
    ggain_ = DenseMatrix<T>(1, dim);
  }

  DenseMatrix<T> forward(const DenseMatrix<T>& x) {
    const int d = x.cols;
    x_cache_ = x;
    inv_rms_.assign(static_cast<std::size_t>(x.rows), 0.0);
    DenseMatrix<T> y(x.rows, d);
    for (int i = 0; i < x.rows; ++i) {
      const T* row = x.row_ptr(i);
      double ms = 0.0;
      for (int j = 0; j < d; ++j)
        ms += static_cast<double>(row[j]) * static_cast<double>(row[j]);
      const double r = 1.0 / std::sqrt(ms / d + 1e-6);
      inv_rms_[static_cast<std::size_t>(i)] = r;
      T* yrow = y.row_ptr(i);
      for (int j = 0; j < d; ++j)
        yrow[j] = static_cast<T>(static_cast<double>(row[j]) * r *
                                 static_cast<double>(gain_.data[static_cast<std::size_t>(j)]));
    }
    return y;
  }

  DenseMatrix<T> backward(const DenseMatrix<T>& gy) {
    const int d = x_cache_.cols;
    DenseMatrix<T> dx(x_cache_.rows, d);
    for (int i = 0; i < x_cache_.rows; ++i) {
      const T* xrow = x_cache_.row_ptr(i);
      const T* grow = gy.row_ptr(i);
      T* drow = dx.row_ptr(i);
      const double r = inv_rms_[static_cast<std::size_t>(i)];
      double inner = 0.0;  // sum_j gy_j * gain_j * x_j
      for (int j = 0; j < d; ++j) {
        const double gg = static_cast<double>(grow[j]) *
                          static_cast<double>(gain_.data[static_cast<std::size_t>(j)]);
        inner += gg * static_cast<double>(xrow[j]);
        ggain_.data[static_cast<std::size_t>(j)] += static_cast<T>(
            static_cast<double>(grow[j]) * static_cast<double>(xrow[j]) * r);
      }
      const double scale = r * r * r * inner / d;
      for (int j = 0; j < d; ++j) {
        const double gg = static_cast<double>(grow[j]) *
                          static_cast<double>(gain_.data[static_cast<std::size_t>(j)]);
        drow[j] = static_cast<T>(gg * r - static_cast<double>(xrow[j]) * scale);
      }
    }
    return dx;
  }

  void zero_grads() { std::fill(ggain_.data.begin(), ggain_.data.end(), T(0)); }

  void collect_params(std::vector<ParamView<T>>& out) {
    out.push_back({name_, ParamClass::dense_vector, std::span<T>(gain_.data),
                   std::span<T>(ggain_.data)});
  }

  const std::string& name() const { return name_; }
  DenseMatrix<T>& gain() { return gain_; }

 private:
  std::string name_;
  DenseMatrix<T> gain_, ggain_;
  DenseMatrix<T> x_cache_;
  std::vector<double> inv_rms_;
};

/// Position-wise additive attention: y = o(q(x) + k(x) + v(x)). Keeps all
/// four projections live in forward and backward without softmax or masking.
template <typename T>
DenseMatrix<T> additive_attention(const DenseMatrix<T>& x, LinearLayer<T>& q,
                                  LinearLayer<T>& k, LinearLayer<T>& v,
                                  LinearLayer<T>& o) {
  DenseMatrix<T> sum = q.forward(x);
  detail::add_inplace(sum, k.forward(x));
  detail::add_inplace(sum, v.forward(x));
  return o.forward(sum);
}

/// One pre-norm transformer block.
template <typename T>
class Block {
 public:
  Block() = default;

  Block(const ModelConfig& cfg, int index, std::uint64_t& seed_counter)
      : attention_mode_(cfg.attention_mode), seq_(cfg.seq_len) {
    const std::string prefix = "layer" + std::to_string(index);
    const int d = cfg.d_model;
    norm1_ = RmsNorm<T>(prefix + ".norm1", d);
    norm2_ = RmsNorm<T>(prefix + ".norm2", d);
    auto make_linear = [&](const std::string& name, int d_in, int d_out,
                           LayerParamMode mode, int rank) {
      const std::uint64_t seed = derive_seed(cfg.seed, seed_counter++);
      return mode == LayerParamMode::spectral
                 ? LinearLayer<T>::make_spectral(name, d_in, d_out, rank,
                                                 cfg.init_std, seed)
                 : LinearLayer<T>::make_dense(name, d_in, d_out, cfg.init_std,
                                              seed);
    };
    q_ = make_linear(prefix + ".attn.q", d, d, cfg.attention_param_mode, cfg.attn_rank);
    k_ = make_linear(prefix + ".attn.k", d, d, cfg.attention_param_mode, cfg.attn_rank);
    v_ = make_linear(prefix + ".attn.v", d, d, cfg.attention_param_mode, cfg.attn_rank);
    o_ = make_linear(prefix + ".attn.o", d, d, cfg.attention_param_mode, cfg.attn_rank);
    gate_ = make_linear(prefix + ".mlp.gate", d, cfg.d_ffn, cfg.mlp_mode, cfg.mlp_rank);
    up_ = make_linear(prefix + ".mlp.up", d, cfg.d_ffn, cfg.mlp_mode, cfg.mlp_rank);
    down_ = make_linear(prefix + ".mlp.down", cfg.d_ffn, d, cfg.mlp_mode, cfg.mlp_rank);
  }

  DenseMatrix<T> forward(const DenseMatrix<T>& x_in) {
    DenseMatrix<T> n1 = norm1_.forward(x_in);
    DenseMatrix<T> attn_out = attention_mode_ == AttentionMode::additive
                                  ? additive_attention(n1, q_, k_, v_, o_)
                                  : causal_attention(n1);
    DenseMatrix<T> x_mid = x_in;
    detail::add_inplace(x_mid, attn_out);

    DenseMatrix<T> n2 = norm2_.forward(x_mid);
    g_cache_ = gate_.forward(n2);
    u_cache_ = up_.forward(n2);
    DenseMatrix<T> act(g_cache_.rows, g_cache_.cols);
    for (std::size_t i = 0; i < act.data.size(); ++i) {
      const double z = static_cast<double>(g_cache_.data[i]);
      act.data[i] = static_cast<T>(z * detail::sigmoid(z) *
                                   static_cast<double>(u_cache_.data[i]));
    }
    DenseMatrix<T> x_out = std::move(x_mid);
    detail::add_inplace(x_out, down_.forward(act));
    return x_out;
  }

  DenseMatrix<T> backward(const DenseMatrix<T>& d_out) {
    // MLP branch
    DenseMatrix<T> dact = down_.backward(d_out);
    DenseMatrix<T> dg(dact.rows, dact.cols);
    DenseMatrix<T> du(dact.rows, dact.cols);
    for (std::size_t i = 0; i < dact.data.size(); ++i) {
      const double z = static_cast<double>(g_cache_.data[i]);
      const double sig = detail::sigmoid(z);
      const double silu = z * sig;
      const double dsilu = sig * (1.0 + z * (1.0 - sig));
      const double da = static_cast<double>(dact.data[i]);
      dg.data[i] = static_cast<T>(da * static_cast<double>(u_cache_.data[i]) * dsilu);
      du.data[i] = static_cast<T>(da * silu);
    }
    DenseMatrix<T> dn2 = gate_.backward(dg);
    detail::add_inplace(dn2, up_.backward(du));
    DenseMatrix<T> dx_mid = norm2_.backward(dn2);
    detail::add_inplace(dx_mid, d_out);

    // attention branch
    DenseMatrix<T> dn1(dx_mid.rows, dx_mid.cols);
    if (attention_mode_ == AttentionMode::additive) {
      DenseMatrix<T> dsum = o_.backward(dx_mid);
      dn1 = q_.backward(dsum);
      detail::add_inplace(dn1, k_.backward(dsum));
      detail::add_inplace(dn1, v_.backward(dsum));
    } else {
      dn1 = causal_attention_backward(dx_mid);
    }
    DenseMatrix<T> dx_in = norm1_.backward(dn1);
    detail::add_inplace(dx_in, dx_mid);
    return dx_in;
  }

  void zero_grads() {
    norm1_.zero_grads();
    norm2_.zero_grads();
    for (LinearLayer<T>* l : linears()) l->zero_grads();
  }

  void collect_params(std::vector<ParamView<T>>& out) {
    norm1_.collect_params(out);
    q_.collect_params(out);
    k_.collect_params(out);
    v_.collect_params(out);
    o_.collect_params(out);
    norm2_.collect_params(out);
    gate_.collect_params(out);
    up_.collect_params(out);
    down_.collect_params(out);
  }

  std::vector<LinearLayer<T>*> linears() {
    return {&q_, &k_, &v_, &o_, &gate_, &up_, &down_};
  }

  RmsNorm<T>& norm1() { return norm1_; }
  RmsNorm<T>& norm2() { return norm2_; }
  LinearLayer<T>& q() { return q_; }
  LinearLayer<T>& k() { return k_; }
  LinearLayer<T>& v() { return v_; }
  LinearLayer<T>& o() { return o_; }
  LinearLayer<T>& gate() { return gate_; }
  LinearLayer<T>& up() { return up_; }
  LinearLayer<T>& down() { return down_; }

 private:
  // Single-head causal softmax attention over per-sequence blocks of rows.
  DenseMatrix<T> causal_attention(const DenseMatrix<T>& n1) {
    const int d = n1.cols;
    const int b = n1.rows / seq_;
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
    qx_ = q_.forward(n1);
    kx_ = k_.forward(n1);
    vx_ = v_.forward(n1);
    probs_.assign(static_cast<std::size_t>(b), DenseMatrix<T>());
    DenseMatrix<T> ctx(n1.rows, d);
    for (int bi = 0; bi < b; ++bi) {
      DenseMatrix<T>& p = probs_[static_cast<std::size_t>(bi)];
      p = DenseMatrix<T>(seq_, seq_);
      const int base = bi * seq_;
      for (int t = 0; t < seq_; ++t) {
        double maxs = -1e300;
        std::vector<double> scores(static_cast<std::size_t>(t + 1));
        for (int j = 0; j <= t; ++j) {
          double acc = 0.0;
          const T* qrow = qx_.row_ptr(base + t);
          const T* krow = kx_.row_ptr(base + j);
          for (int c = 0; c < d; ++c)
            acc += static_cast<double>(qrow[c]) * static_cast<double>(krow[c]);
          scores[static_cast<std::size_t>(j)] = acc * inv_sqrt_d;
          maxs = std::max(maxs, scores[static_cast<std::size_t>(j)]);
        }
        double denom = 0.0;
        for (int j = 0; j <= t; ++j)
          denom += std::exp(scores[static_cast<std::size_t>(j)] - maxs);
        for (int j = 0; j <= t; ++j)
          p(t, j) = static_cast<T>(std::exp(scores[static_cast<std::size_t>(j)] - maxs) / denom);
        T* crow = ctx.row_ptr(base + t);
        for (int j = 0; j <= t; ++j) {
          const double pj = static_cast<double>(p(t, j));
          const T* vrow = vx_.row_ptr(base + j);
          for (int c = 0; c < d; ++c)
            crow[c] += static_cast<T>(pj * static_cast<double>(vrow[c]));
        }
      }
    }
    return o_.forward(ctx);
  }

  DenseMatrix<T> causal_attention_backward(const DenseMatrix<T>& d_attn_out) {
    const int d = qx_.cols;
    const int b = qx_.rows / seq_;
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
    DenseMatrix<T> dctx = o_.backward(d_attn_out);
    DenseMatrix<T> dqx(qx_.rows, d), dkx(qx_.rows, d), dvx(qx_.rows, d);
    for (int bi = 0; bi < b; ++bi) {
      const DenseMatrix<T>& p = probs_[static_cast<std::size_t>(bi)];
      const int base = bi * seq_;
      for (int t = 0; t < seq_; ++t) {
        const T* dcrow = dctx.row_ptr(base + t);
        // dP and the softmax Jacobian, restricted to the causal prefix
        std::vector<double> dp(static_cast<std::size_t>(t + 1), 0.0);
        double dot = 0.0;
        for (int j = 0; j <= t; ++j) {
          double acc = 0.0;
          const T* vrow = vx_.row_ptr(base + j);
          for (int c = 0; c < d; ++c)
            acc += static_cast<double>(dcrow[c]) * static_cast<double>(vrow[c]);
          dp[static_cast<std::size_t>(j)] = acc;
          dot += acc * static_cast<double>(p(t, j));
          // dvx_j += p_tj * dctx_t
          T* dvrow = dvx.row_ptr(base + j);
          const double ptj = static_cast<double>(p(t, j));
          for (int c = 0; c < d; ++c)
            dvrow[c] += static_cast<T>(ptj * static_cast<double>(dcrow[c]));
        }
        for (int j = 0; j <= t; ++j) {
          const double ds = static_cast<double>(p(t, j)) *
                            (dp[static_cast<std::size_t>(j)] - dot) * inv_sqrt_d;
          T* dqrow = dqx.row_ptr(base + t);
          T* dkrow = dkx.row_ptr(base + j);
          const T* qrow = qx_.row_ptr(base + t);
          const T* krow = kx_.row_ptr(base + j);
          for (int c = 0; c < d; ++c) {
            dqrow[c] += static_cast<T>(ds * static_cast<double>(krow[c]));
            dkrow[c] += static_cast<T>(ds * static_cast<double>(qrow[c]));
          }
        }
      }
    }
    DenseMatrix<T> dn1 = q_.backward(dqx);
    detail::add_inplace(dn1, k_.backward(dkx));
    detail::add_inplace(dn1, v_.backward(dvx));
    return dn1;
  }

  AttentionMode attention_mode_ = AttentionMode::additive;
  int seq_ = 0;

  RmsNorm<T> norm1_, norm2_;
  LinearLayer<T> q_, k_, v_, o_, gate_, up_, down_;

  // forward caches
  DenseMatrix<T> g_cache_, u_cache_;          // gate/up outputs
  DenseMatrix<T> qx_, kx_, vx_;               // causal mode
  std::vector<DenseMatrix<T>> probs_;         // causal mode, per sequence
};

template <typename T>
class Model {
 public:
  explicit Model(const ModelConfig& cfg) : cfg_(cfg) {
    cfg.validate();
    std::uint64_t seed_counter = 0;
    embedding_ = DenseMatrix<T>(cfg.vocab, cfg.d_model);
    {
      Rng rng(derive_seed(cfg.seed, seed_counter++));
      for (auto& x : embedding_.data) x = static_cast<T>(rng.gauss() * cfg.init_std);
    }
    gembedding_ = DenseMatrix<T>(cfg.vocab, cfg.d_model);
    blocks_.reserve(static_cast<std::size_t>(cfg.n_layers));
    for (int i = 0; i < cfg.n_layers; ++i)
      blocks_.emplace_back(cfg, i, seed_counter);
    final_norm_ = RmsNorm<T>("final_norm", cfg.d_model);
    if (!cfg.tie_embeddings)
      head_ = LinearLayer<T>::make_dense("head", cfg.d_model, cfg.vocab,
                                         cfg.init_std,
                                         derive_seed(cfg.seed, seed_counter++));
  }

  /// Mean token-level cross entropy over all positions. Caches activations
  /// and logits for backward.
  double forward(const Batch& batch) {
    batch.validate(cfg_.vocab);
    if (batch.seq != cfg_.seq_len)
      throw ShapeError("Model: batch seq " + std::to_string(batch.seq) +
                       " != configured seq_len " + std::to_string(cfg_.seq_len));
    batch_ = batch;
    const int n_rows = batch.b * batch.seq;

    DenseMatrix<T> x(n_rows, cfg_.d_model);
    for (int r = 0; r < n_rows; ++r) {
      const int id = batch.tokens[static_cast<std::size_t>(r)];
      const T* src = embedding_.row_ptr(id);
      T* dst = x.row_ptr(r);
      for (int c = 0; c < cfg_.d_model; ++c) dst[c] = src[c];
    }

    activation_norms_.clear();
    activation_norms_.push_back(max_abs(x));
    for (auto& block : blocks_) {
      x = block.forward(x);
      activation_norms_.push_back(max_abs(x));
    }
    nf_ = final_norm_.forward(x);
    logits_ = cfg_.tie_embeddings ? matmul_nt(nf_, embedding_)
                                  : head_.forward(nf_);

    // row-stable softmax and mean NLL
    probs_ = DenseMatrix<T>(n_rows, cfg_.vocab);
    double loss = 0.0;
    for (int r = 0; r < n_rows; ++r) {
      const T* zrow = logits_.row_ptr(r);
      double zmax = -1e300;
      for (int c = 0; c < cfg_.vocab; ++c)
        zmax = std::max(zmax, static_cast<double>(zrow[c]));
      double denom = 0.0;
      for (int c = 0; c < cfg_.vocab; ++c)
        denom += std::exp(static_cast<double>(zrow[c]) - zmax);
      T* prow = probs_.row_ptr(r);
      for (int c = 0; c < cfg_.vocab; ++c)
        prow[c] = static_cast<T>(std::exp(static_cast<double>(zrow[c]) - zmax) / denom);
      const int target = batch.targets[static_cast<std::size_t>(r)];
      loss -= static_cast<double>(zrow[target]) - zmax - std::log(denom);
    }
    loss_ = loss / n_rows;
    if (!std::isfinite(loss_))
      throw NumericError("forward_loss: non-finite loss; " +
                         activation_report());
    return loss_;
  }

  /// Accumulates parameter gradients from the cached forward pass.
  void backward() {
    const int n_rows = batch_.b * batch_.seq;
    if (n_rows == 0) throw NumericError("backward: no cached forward pass");

    DenseMatrix<T> dlogits = probs_;
    const T inv_n = static_cast<T>(1.0 / n_rows);
    for (int r = 0; r < n_rows; ++r) {
      T* row = dlogits.row_ptr(r);
      row[batch_.targets[static_cast<std::size_t>(r)]] -= T(1);
      for (int c = 0; c < cfg_.vocab; ++c) row[c] *= inv_n;
    }

    DenseMatrix<T> dnf(n_rows, cfg_.d_model);
    if (cfg_.tie_embeddings) {
      dnf = matmul(dlogits, embedding_);
      detail::add_inplace(gembedding_, matmul_tn(dlogits, nf_));
    } else {
      dnf = head_.backward(dlogits);
    }
    DenseMatrix<T> dx = final_norm_.backward(dnf);
    for (auto it = blocks_.rbegin(); it != blocks_.rend(); ++it)
      dx = it->backward(dx);

    for (int r = 0; r < n_rows; ++r) {
      const int id = batch_.tokens[static_cast<std::size_t>(r)];
      T* dst = gembedding_.row_ptr(id);
      const T* src = dx.row_ptr(r);
      for (int c = 0; c < cfg_.d_model; ++c) dst[c] += src[c];
    }
  }

  void zero_grads() {
    std::fill(gembedding_.data.begin(), gembedding_.data.end(), T(0));
    for (auto& block : blocks_) block.zero_grads();
    final_norm_.zero_grads();
    if (!cfg_.tie_embeddings) head_.zero_grads();
  }

  std::vector<ParamView<T>> parameters() {
    std::vector<ParamView<T>> out;
    out.push_back({"embedding", ParamClass::dense_matrix,
                   std::span<T>(embedding_.data), std::span<T>(gembedding_.data)});
    for (auto& block : blocks_) block.collect_params(out);
    final_norm_.collect_params(out);
    if (!cfg_.tie_embeddings) head_.collect_params(out);
    return out;
  }

  /// Spectral layers in retraction order.
  std::vector<LinearLayer<T>*> spectral_layers() {
    std::vector<LinearLayer<T>*> out;
    for (auto& block : blocks_)
      for (LinearLayer<T>* l : block.linears())
        if (l->is_spectral()) out.push_back(l);
    return out;
  }

  std::int64_t parameter_count() {
    std::int64_t total = 0;
    for (const auto& p : parameters())
      total += static_cast<std::int64_t>(p.value.size());
    return total;
  }

  const DenseMatrix<T>& logits() const { return logits_; }
  double loss() const { return loss_; }
  const ModelConfig& config() const { return cfg_; }
  std::vector<Block<T>>& blocks() { return blocks_; }
  DenseMatrix<T>& embedding() { return embedding_; }
  RmsNorm<T>& final_norm() { return final_norm_; }
  LinearLayer<T>& head() { return head_; }

  std::string activation_report() const {
    std::string out = "activation max-abs by layer:";
    for (std::size_t i = 0; i < activation_norms_.size(); ++i)
      out += " [" + std::to_string(i) + "] " + std::to_string(activation_norms_[i]);
    return out;
  }

 private:
  ModelConfig cfg_;
  DenseMatrix<T> embedding_, gembedding_;
  std::vector<Block<T>> blocks_;
  RmsNorm<T> final_norm_;
  LinearLayer<T> head_;

  Batch batch_;
  DenseMatrix<T> nf_, logits_, probs_;
  std::vector<double> activation_norms_;
  double loss_ = 0.0;
};

/// Loss plus logits view, per the training-step contract.
template <typename T>
std::pair<double, const DenseMatrix<T>*> forward_loss(Model<T>& model,
                                                      const Batch& batch) {
  const double loss = model.forward(batch);
  return {loss, &model.logits()};
}

}  // namespace sct
