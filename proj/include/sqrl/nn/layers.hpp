#pragma once

#include "sqrl/nn/core.hpp"

namespace sqrl::nn {

// y = x W^T + b over flattened rows. Caches nothing; callers keep x around
// for the backward pass.
template <typename T>
struct Linear {
  Param<T> weight;  // [out, in]
  Param<T> bias;    // [out], optional
  int in = 0, out = 0;
  bool has_bias = true;

  void setup(const std::string& name, int in_dim, int out_dim, bool with_bias = true) {
    in = in_dim;
    out = out_dim;
    has_bias = with_bias;
    weight.setup(name + ".weight", {out_dim, in_dim}, /*decay=*/true);
    if (with_bias) bias.setup(name + ".bias", {out_dim}, /*decay=*/false);
  }
  void init(Rng& rng, double stddev) {
    weight.init_normal(rng, stddev);
    if (has_bias) bias.fill(T(0));
  }
  void collect(ParamList<T>& list) {
    list.push_back(&weight);
    if (has_bias) list.push_back(&bias);
  }

  void forward(const AlignedVec<T>& x, AlignedVec<T>& y, Eigen::Index rows) const {
    y.resize(static_cast<size_t>(rows) * out);
    auto xm = as_mat(x, rows, in);
    auto wm = as_mat(weight.w, out, in);
    auto ym = as_mat(y, rows, out);
    ym.noalias() = xm * wm.transpose();
    if (has_bias) {
      auto bm = CMatMap<T>(bias.w.data(), 1, out);
      ym.rowwise() += bm.row(0);
    }
  }

  // Accumulates parameter grads; writes dx when requested.
  void backward(const AlignedVec<T>& x, const AlignedVec<T>& dy, AlignedVec<T>* dx,
                Eigen::Index rows) {
    auto xm = as_mat(x, rows, in);
    auto dym = as_mat(dy, rows, out);
    auto gw = as_mat(weight.g, out, in);
    gw.noalias() += dym.transpose() * xm;
    if (has_bias) {
      auto gb = MatMap<T>(bias.g.data(), 1, out);
      gb.row(0) += dym.colwise().sum();
    }
    if (dx) {
      dx->resize(static_cast<size_t>(rows) * in);
      auto dxm = as_mat(*dx, rows, in);
      auto wm = as_mat(weight.w, out, in);
      dxm.noalias() = dym * wm;
    }
  }
};

template <typename T>
struct LayerNorm {
  Param<T> gain;  // [d]
  Param<T> bias;  // [d]
  int dim = 0;
  AlignedVec<T> mean_, rstd_;  // per row, cached by forward

  void setup(const std::string& name, int d) {
    dim = d;
    gain.setup(name + ".gain", {d}, false);
    bias.setup(name + ".bias", {d}, false);
  }
  void init() {
    gain.fill(T(1));
    bias.fill(T(0));
  }
  void collect(ParamList<T>& list) {
    list.push_back(&gain);
    list.push_back(&bias);
  }

  void forward(const AlignedVec<T>& x, AlignedVec<T>& y, Eigen::Index rows) {
    y.resize(x.size());
    mean_.resize(static_cast<size_t>(rows));
    rstd_.resize(static_cast<size_t>(rows));
    const T eps = T(1e-5);
    for (Eigen::Index r = 0; r < rows; ++r) {
      const T* xr = x.data() + r * dim;
      T* yr = y.data() + r * dim;
      T m = T(0);
      for (int i = 0; i < dim; ++i) m += xr[i];
      m /= T(dim);
      T var = T(0);
      for (int i = 0; i < dim; ++i) var += (xr[i] - m) * (xr[i] - m);
      var /= T(dim);
      const T rstd = T(1) / std::sqrt(var + eps);
      mean_[static_cast<size_t>(r)] = m;
      rstd_[static_cast<size_t>(r)] = rstd;
      for (int i = 0; i < dim; ++i)
        yr[i] = (xr[i] - m) * rstd * gain.w[static_cast<size_t>(i)] + bias.w[static_cast<size_t>(i)];
    }
  }

  void backward(const AlignedVec<T>& x, const AlignedVec<T>& dy, AlignedVec<T>& dx,
                Eigen::Index rows) {
    dx.resize(x.size());
    for (Eigen::Index r = 0; r < rows; ++r) {
      const T* xr = x.data() + r * dim;
      const T* dyr = dy.data() + r * dim;
      T* dxr = dx.data() + r * dim;
      const T m = mean_[static_cast<size_t>(r)];
      const T rstd = rstd_[static_cast<size_t>(r)];
      T sum_dxhat = T(0), sum_dxhat_xhat = T(0);
      for (int i = 0; i < dim; ++i) {
        const T xhat = (xr[i] - m) * rstd;
        const T dxhat = dyr[i] * gain.w[static_cast<size_t>(i)];
        gain.g[static_cast<size_t>(i)] += dyr[i] * xhat;
        bias.g[static_cast<size_t>(i)] += dyr[i];
        sum_dxhat += dxhat;
        sum_dxhat_xhat += dxhat * xhat;
      }
      const T inv_d = T(1) / T(dim);
      for (int i = 0; i < dim; ++i) {
        const T xhat = (xr[i] - m) * rstd;
        const T dxhat = dyr[i] * gain.w[static_cast<size_t>(i)];
        dxr[i] = rstd * (dxhat - inv_d * sum_dxhat - xhat * inv_d * sum_dxhat_xhat);
      }
    }
  }
};

template <typename T>
struct Embedding {
  Param<T> table;  // [rows, d]
  int rows = 0, dim = 0;

  void setup(const std::string& name, int n_rows, int d) {
    rows = n_rows;
    dim = d;
    table.setup(name, {n_rows, d}, false);
  }
  void collect(ParamList<T>& list) { list.push_back(&table); }

  void forward(const std::vector<int>& ids, AlignedVec<T>& y) const {
    y.resize(ids.size() * static_cast<size_t>(dim));
    for (size_t i = 0; i < ids.size(); ++i) {
      const int id = ids[i];
      if (id < 0 || id >= rows) throw NumericError("embedding id out of range: " + std::to_string(id));
      std::copy_n(table.w.data() + static_cast<size_t>(id) * dim, dim, y.data() + i * static_cast<size_t>(dim));
    }
  }
  void backward(const std::vector<int>& ids, const AlignedVec<T>& dy) {
    for (size_t i = 0; i < ids.size(); ++i) {
      T* grow = table.g.data() + static_cast<size_t>(ids[i]) * dim;
      const T* dyr = dy.data() + i * static_cast<size_t>(dim);
      for (int j = 0; j < dim; ++j) grow[j] += dyr[j];
    }
  }
};

// Inverted dropout; the mask comes from the training RNG in a fixed order so
// runs are reproducible. Inactive (p == 0 or no rng) it is the identity.
template <typename T>
struct Dropout {
  double p = 0.0;
  std::vector<uint8_t> mask_;

  void forward(AlignedVec<T>& x, Rng* rng) {
    if (p <= 0.0 || rng == nullptr) {
      mask_.clear();
      return;
    }
    mask_.resize(x.size());
    const T scale = T(1.0 / (1.0 - p));
    for (size_t i = 0; i < x.size(); ++i) {
      const bool keep = rng->next_double() >= p;
      mask_[i] = keep;
      x[i] = keep ? x[i] * scale : T(0);
    }
  }
  void backward(AlignedVec<T>& dx) const {
    if (mask_.empty()) return;
    const T scale = T(1.0 / (1.0 - p));
    for (size_t i = 0; i < dx.size(); ++i) dx[i] = mask_[i] ? dx[i] * scale : T(0);
  }
};

// Multi-head scaled dot-product attention with a causal mask. The softmax
// probabilities are cached pre-dropout; the dropped copy feeds the context
// matmul.
template <typename T>
struct CausalSelfAttention {
  Linear<T> qkv;   // d -> 3d
  Linear<T> proj;  // d -> d
  Dropout<T> attn_drop;
  int d_model = 0, n_heads = 0, head_dim = 0;

  AlignedVec<T> qkv_, probs_, probs_dropped_, att_ctx_;

  void setup(const std::string& name, int d, int heads, double dropout) {
    d_model = d;
    n_heads = heads;
    head_dim = d / heads;
    qkv.setup(name + ".qkv", d, 3 * d);
    proj.setup(name + ".proj", d, d);
    attn_drop.p = dropout;
  }
  void init(Rng& rng, double stddev) {
    qkv.init(rng, stddev);
    proj.init(rng, stddev);
  }
  void collect(ParamList<T>& list) {
    qkv.collect(list);
    proj.collect(list);
  }

  // x: [B*S, d] viewed as B sequences of length S.
  void forward(const AlignedVec<T>& x, AlignedVec<T>& y, int B, int S, Rng* rng) {
    const size_t bs = static_cast<size_t>(B) * S;
    qkv.forward(x, qkv_, static_cast<Eigen::Index>(bs));
    probs_.assign(static_cast<size_t>(B) * n_heads * S * S, T(0));
    att_ctx_.assign(bs * static_cast<size_t>(d_model), T(0));
    const T scale = T(1) / std::sqrt(T(head_dim));

    for (int b = 0; b < B; ++b) {
      for (int h = 0; h < n_heads; ++h) {
        T* att = probs_.data() + (static_cast<size_t>(b) * n_heads + h) * static_cast<size_t>(S) * S;
        for (int tq = 0; tq < S; ++tq) {
          const T* q = qkv_.data() + (static_cast<size_t>(b) * S + tq) * 3 * d_model + h * head_dim;
          T maxv = std::numeric_limits<T>::lowest();
          for (int tk = 0; tk <= tq; ++tk) {
            const T* k = qkv_.data() + (static_cast<size_t>(b) * S + tk) * 3 * d_model + d_model + h * head_dim;
            T dot = T(0);
            for (int i = 0; i < head_dim; ++i) dot += q[i] * k[i];
            dot *= scale;
            att[tq * S + tk] = dot;
            if (dot > maxv) maxv = dot;
          }
          T denom = T(0);
          for (int tk = 0; tk <= tq; ++tk) {
            T e = std::exp(att[tq * S + tk] - maxv);
            att[tq * S + tk] = e;
            denom += e;
          }
          const T inv = T(1) / denom;
          for (int tk = 0; tk <= tq; ++tk) att[tq * S + tk] *= inv;
        }
      }
    }
    const bool drop_active = attn_drop.p > 0.0 && rng != nullptr;
    if (drop_active) {
      probs_dropped_ = probs_;
      attn_drop.forward(probs_dropped_, rng);
    } else {
      attn_drop.mask_.clear();
      probs_dropped_.clear();
    }
    const AlignedVec<T>& P = drop_active ? probs_dropped_ : probs_;
    for (int b = 0; b < B; ++b) {
      for (int h = 0; h < n_heads; ++h) {
        const T* att = P.data() + (static_cast<size_t>(b) * n_heads + h) * static_cast<size_t>(S) * S;
        for (int tq = 0; tq < S; ++tq) {
          T* ctx = att_ctx_.data() + (static_cast<size_t>(b) * S + tq) * d_model + h * head_dim;
          for (int tk = 0; tk <= tq; ++tk) {
            const T a = att[tq * S + tk];
            if (a == T(0)) continue;
            const T* v = qkv_.data() + (static_cast<size_t>(b) * S + tk) * 3 * d_model + 2 * d_model + h * head_dim;
            for (int i = 0; i < head_dim; ++i) ctx[i] += a * v[i];
          }
        }
      }
    }
    proj.forward(att_ctx_, y, static_cast<Eigen::Index>(bs));
  }

  void backward(const AlignedVec<T>& x, const AlignedVec<T>& dy, AlignedVec<T>& dx, int B, int S) {
    const size_t bs = static_cast<size_t>(B) * S;
    AlignedVec<T> dctx;
    proj.backward(att_ctx_, dy, &dctx, static_cast<Eigen::Index>(bs));

    const bool drop_active = !attn_drop.mask_.empty();
    const AlignedVec<T>& P = drop_active ? probs_dropped_ : probs_;
    AlignedVec<T> datt(probs_.size(), T(0));
    AlignedVec<T> dqkv(bs * 3 * static_cast<size_t>(d_model), T(0));
    const T scale = T(1) / std::sqrt(T(head_dim));

    // d(P_drop * V): dP_drop and dV.
    for (int b = 0; b < B; ++b) {
      for (int h = 0; h < n_heads; ++h) {
        const size_t base = (static_cast<size_t>(b) * n_heads + h) * static_cast<size_t>(S) * S;
        for (int tq = 0; tq < S; ++tq) {
          const T* dctx_r = dctx.data() + (static_cast<size_t>(b) * S + tq) * d_model + h * head_dim;
          for (int tk = 0; tk <= tq; ++tk) {
            const T* v = qkv_.data() + (static_cast<size_t>(b) * S + tk) * 3 * d_model + 2 * d_model + h * head_dim;
            T* dv = dqkv.data() + (static_cast<size_t>(b) * S + tk) * 3 * d_model + 2 * d_model + h * head_dim;
            const T a = P[base + static_cast<size_t>(tq) * S + tk];
            T acc = T(0);
            for (int i = 0; i < head_dim; ++i) {
              acc += dctx_r[i] * v[i];
              if (a != T(0)) dv[i] += a * dctx_r[i];
            }
            datt[base + static_cast<size_t>(tq) * S + tk] = acc;
          }
        }
      }
    }
    attn_drop.backward(datt);
    // Softmax backward against the pre-dropout probabilities.
    for (int b = 0; b < B; ++b) {
      for (int h = 0; h < n_heads; ++h) {
        const size_t base = (static_cast<size_t>(b) * n_heads + h) * static_cast<size_t>(S) * S;
        for (int tq = 0; tq < S; ++tq) {
          T dot = T(0);
          for (int tk = 0; tk <= tq; ++tk) {
            const size_t i = base + static_cast<size_t>(tq) * S + tk;
            dot += datt[i] * probs_[i];
          }
          for (int tk = 0; tk <= tq; ++tk) {
            const size_t i = base + static_cast<size_t>(tq) * S + tk;
            datt[i] = probs_[i] * (datt[i] - dot);
          }
        }
      }
    }
    // d(Q K^T * scale)
    for (int b = 0; b < B; ++b) {
      for (int h = 0; h < n_heads; ++h) {
        const size_t base = (static_cast<size_t>(b) * n_heads + h) * static_cast<size_t>(S) * S;
        for (int tq = 0; tq < S; ++tq) {
          const T* q = qkv_.data() + (static_cast<size_t>(b) * S + tq) * 3 * d_model + h * head_dim;
          T* dq = dqkv.data() + (static_cast<size_t>(b) * S + tq) * 3 * d_model + h * head_dim;
          for (int tk = 0; tk <= tq; ++tk) {
            const T g = datt[base + static_cast<size_t>(tq) * S + tk] * scale;
            if (g == T(0)) continue;
            const T* k = qkv_.data() + (static_cast<size_t>(b) * S + tk) * 3 * d_model + d_model + h * head_dim;
            T* dk = dqkv.data() + (static_cast<size_t>(b) * S + tk) * 3 * d_model + d_model + h * head_dim;
            for (int i = 0; i < head_dim; ++i) {
              dq[i] += g * k[i];
              dk[i] += g * q[i];
            }
          }
        }
      }
    }
    qkv.backward(x, dqkv, &dx, static_cast<Eigen::Index>(bs));
  }
};

// Two-layer feed-forward with GELU.
template <typename T>
struct Mlp {
  Linear<T> fc1, fc2;
  AlignedVec<T> pre_, act_;

  void setup(const std::string& name, int d, int hidden) {
    fc1.setup(name + ".fc1", d, hidden);
    fc2.setup(name + ".fc2", hidden, d);
  }
  void init(Rng& rng, double stddev) {
    fc1.init(rng, stddev);
    fc2.init(rng, stddev);
  }
  void collect(ParamList<T>& list) {
    fc1.collect(list);
    fc2.collect(list);
  }

  void forward(const AlignedVec<T>& x, AlignedVec<T>& y, Eigen::Index rows) {
    fc1.forward(x, pre_, rows);
    act_.resize(pre_.size());
    for (size_t i = 0; i < pre_.size(); ++i) act_[i] = gelu(pre_[i]);
    fc2.forward(act_, y, rows);
  }
  void backward(const AlignedVec<T>& x, const AlignedVec<T>& dy, AlignedVec<T>& dx,
                Eigen::Index rows) {
    AlignedVec<T> dact;
    fc2.backward(act_, dy, &dact, rows);
    for (size_t i = 0; i < dact.size(); ++i) dact[i] *= gelu_grad(pre_[i]);
    fc1.backward(x, dact, &dx, rows);
  }
};

}  // namespace sqrl::nn
