#pragma once

#include "sqrl/nn/layers.hpp"

namespace sqrl::nn {

// Input-dependent state-space recurrence. Per step t and inner channel c:
//   delta = softplus(delta_proj(v_t))            (> 0 always)
//   abar  = exp(delta * A)                        A diagonal, negative
//   h_t   = abar (.) h_{t-1} + delta * B(v_t) * v_t[c]
//   y_t   = C(v_t) . h_t + D * v_t
// A is stored as a magnitude and materialized as -max(|a|, 1e-8), which keeps
// it strictly negative through training while the diagonal init -(n+1) stays
// bit-exact.
template <typename T>
struct SelectiveSsm {
  Param<T> a_mag;        // [d_inner, N]
  Linear<T> delta_proj;  // d_inner -> d_inner, with bias
  Linear<T> b_proj;      // d_inner -> N, no bias
  Linear<T> c_proj;      // d_inner -> N, no bias
  Param<T> d_skip;       // [d_inner]
  int d_inner = 0, n_state = 0;

  AlignedVec<T> delta_raw_, delta_, bv_, cv_, h_;

  static constexpr T kMagFloor = T(1e-8);

  void setup(const std::string& name, int di, int n) {
    d_inner = di;
    n_state = n;
    a_mag.setup(name + ".a_mag", {di, n}, false);
    delta_proj.setup(name + ".delta_proj", di, di, /*with_bias=*/true);
    b_proj.setup(name + ".b_proj", di, n, /*with_bias=*/false);
    c_proj.setup(name + ".c_proj", di, n, /*with_bias=*/false);
    d_skip.setup(name + ".d_skip", {di}, false);
  }
  void init(Rng& rng, double stddev) {
    // HiPPO diagonal: A_n = -(n+1) for every channel, exactly.
    for (int c = 0; c < d_inner; ++c)
      for (int n = 0; n < n_state; ++n) a_mag.w[static_cast<size_t>(c) * n_state + n] = T(n + 1);
    delta_proj.init(rng, stddev);
    b_proj.init(rng, stddev);
    c_proj.init(rng, stddev);
    d_skip.init_normal(rng, stddev);
  }
  void collect(ParamList<T>& list) {
    list.push_back(&a_mag);
    delta_proj.collect(list);
    b_proj.collect(list);
    c_proj.collect(list);
    list.push_back(&d_skip);
  }

  T a_value(int c, int n) const {
    const T m = std::abs(a_mag.w[static_cast<size_t>(c) * n_state + n]);
    return -std::max(m, kMagFloor);
  }

  // v: [B*S, d_inner]; y: same shape.
  void forward(const AlignedVec<T>& v, AlignedVec<T>& y, int B, int S) {
    const size_t bs = static_cast<size_t>(B) * S;
    delta_proj.forward(v, delta_raw_, static_cast<Eigen::Index>(bs));
    b_proj.forward(v, bv_, static_cast<Eigen::Index>(bs));
    c_proj.forward(v, cv_, static_cast<Eigen::Index>(bs));
    delta_.resize(bs * static_cast<size_t>(d_inner));
    for (size_t i = 0; i < delta_.size(); ++i) delta_[i] = softplus(delta_raw_[i]);

    y.assign(bs * static_cast<size_t>(d_inner), T(0));
    h_.assign(bs * static_cast<size_t>(d_inner) * n_state, T(0));
    for (int b = 0; b < B; ++b) {
      for (int t = 0; t < S; ++t) {
        const size_t bt = static_cast<size_t>(b) * S + t;
        const T* vt = v.data() + bt * d_inner;
        const T* dt = delta_.data() + bt * d_inner;
        const T* bvec = bv_.data() + bt * n_state;
        const T* cvec = cv_.data() + bt * n_state;
        const T* h_prev = t > 0 ? h_.data() + (bt - 1) * d_inner * n_state : nullptr;
        T* ht = h_.data() + bt * d_inner * n_state;
        T* yt = y.data() + bt * d_inner;
        for (int c = 0; c < d_inner; ++c) {
          const T delta = dt[c];
          const T vc = vt[c];
          T acc = T(0);
          for (int n = 0; n < n_state; ++n) {
            const T abar = std::exp(delta * a_value(c, n));
            const T prev = h_prev ? h_prev[static_cast<size_t>(c) * n_state + n] : T(0);
            const T h = abar * prev + delta * bvec[n] * vc;
            ht[static_cast<size_t>(c) * n_state + n] = h;
            acc += cvec[n] * h;
          }
          const T out = acc + d_skip.w[static_cast<size_t>(c)] * vc;
          if (!std::isfinite(out))
            throw NumericError("ssm scan produced a non-finite value at step " + std::to_string(t));
          yt[c] = out;
        }
      }
    }
  }

  void backward(const AlignedVec<T>& v, const AlignedVec<T>& dy, AlignedVec<T>& dv, int B, int S) {
    const size_t bs = static_cast<size_t>(B) * S;
    AlignedVec<T> ddelta(bs * static_cast<size_t>(d_inner), T(0));
    AlignedVec<T> dbv(bs * static_cast<size_t>(n_state), T(0));
    AlignedVec<T> dcv(bs * static_cast<size_t>(n_state), T(0));
    AlignedVec<T> dv_local(bs * static_cast<size_t>(d_inner), T(0));
    AlignedVec<T> dh(static_cast<size_t>(d_inner) * n_state);

    for (int b = 0; b < B; ++b) {
      std::fill(dh.begin(), dh.end(), T(0));
      for (int t = S - 1; t >= 0; --t) {
        const size_t bt = static_cast<size_t>(b) * S + t;
        const T* vt = v.data() + bt * d_inner;
        const T* dt = delta_.data() + bt * d_inner;
        const T* bvec = bv_.data() + bt * n_state;
        const T* cvec = cv_.data() + bt * n_state;
        const T* ht = h_.data() + bt * d_inner * n_state;
        const T* h_prev = t > 0 ? h_.data() + (bt - 1) * d_inner * n_state : nullptr;
        const T* dyt = dy.data() + bt * d_inner;
        T* ddelta_t = ddelta.data() + bt * d_inner;
        T* dbv_t = dbv.data() + bt * n_state;
        T* dcv_t = dcv.data() + bt * n_state;
        T* dv_t = dv_local.data() + bt * d_inner;

        for (int c = 0; c < d_inner; ++c) {
          const T g = dyt[c];
          const T vc = vt[c];
          const T delta = dt[c];
          // y_t = C . h_t + D v_t
          dv_t[c] += g * d_skip.w[static_cast<size_t>(c)];
          d_skip.g[static_cast<size_t>(c)] += g * vc;
          T ddelta_c = T(0);
          T dvc_from_b = T(0);
          for (int n = 0; n < n_state; ++n) {
            const size_t cn = static_cast<size_t>(c) * n_state + n;
            const T h = ht[cn];
            dcv_t[n] += g * h;
            // incoming gradient on h_t: from y_t and from h_{t+1} (carried in dh)
            const T dht = g * cvec[n] + dh[cn];
            const T a = a_value(c, n);
            const T abar = std::exp(delta * a);
            const T prev = h_prev ? h_prev[cn] : T(0);
            // h_t = abar*prev + delta*B_n*v_c
            ddelta_c += dht * (prev * abar * a + bvec[n] * vc);
            const T da = dht * prev * abar * delta;
            // A = -max(|m|, floor): dA/dm = -sign(m) where |m| > floor
            const T m = a_mag.w[cn];
            if (std::abs(m) > kMagFloor) a_mag.g[cn] += da * (m >= T(0) ? T(-1) : T(1));
            dbv_t[n] += dht * delta * vc;
            dvc_from_b += dht * delta * bvec[n];
            // carry to t-1
            dh[cn] = dht * abar;
          }
          ddelta_t[c] += ddelta_c;
          dv_t[c] += dvc_from_b;
        }
      }
    }
    // softplus backward, then the three projections.
    for (size_t i = 0; i < ddelta.size(); ++i) ddelta[i] *= sigmoid(delta_raw_[i]);
    AlignedVec<T> tmp;
    delta_proj.backward(v, ddelta, &tmp, static_cast<Eigen::Index>(bs));
    for (size_t i = 0; i < dv_local.size(); ++i) dv_local[i] += tmp[i];
    b_proj.backward(v, dbv, &tmp, static_cast<Eigen::Index>(bs));
    for (size_t i = 0; i < dv_local.size(); ++i) dv_local[i] += tmp[i];
    c_proj.backward(v, dcv, &tmp, static_cast<Eigen::Index>(bs));
    for (size_t i = 0; i < dv_local.size(); ++i) dv_local[i] += tmp[i];
    dv = std::move(dv_local);
  }
};

// Gated Mamba block: pre-norm, joint expansion into (x, z), causal depthwise
// conv + SiLU + selective scan on the x branch, SiLU on the z branch,
// elementwise gate, contraction, dropout, residual.
template <typename T>
struct MambaBlock {
  LayerNorm<T> norm;
  Linear<T> in_proj;   // d -> 2*d_inner
  Param<T> conv_w;     // [d_inner, kernel]
  Param<T> conv_b;     // [d_inner]
  SelectiveSsm<T> ssm;
  Linear<T> out_proj;  // d_inner -> d
  Dropout<T> resid_drop;
  int d_model = 0, d_inner = 0, kernel = 0;

  AlignedVec<T> normed_, xz_, conv_pre_, v_, scan_, gated_, proj_out_;

  void setup(const std::string& name, int d, int di, int k, int n_state, double dropout) {
    d_model = d;
    d_inner = di;
    kernel = k;
    norm.setup(name + ".norm", d);
    in_proj.setup(name + ".in_proj", d, 2 * di);
    conv_w.setup(name + ".conv.weight", {di, k}, /*decay=*/true);
    conv_b.setup(name + ".conv.bias", {di}, false);
    ssm.setup(name + ".ssm", di, n_state);
    out_proj.setup(name + ".out_proj", di, d);
    resid_drop.p = dropout;
  }
  void init(Rng& rng, double stddev) {
    norm.init();
    in_proj.init(rng, stddev);
    conv_w.init_normal(rng, stddev);
    conv_b.fill(T(0));
    ssm.init(rng, stddev);
    out_proj.init(rng, stddev);
  }
  void collect(ParamList<T>& list) {
    norm.collect(list);
    in_proj.collect(list);
    list.push_back(&conv_w);
    list.push_back(&conv_b);
    ssm.collect(list);
    out_proj.collect(list);
  }

  void forward(const AlignedVec<T>& x, AlignedVec<T>& y, int B, int S, Rng* rng) {
    const size_t bs = static_cast<size_t>(B) * S;
    norm.forward(x, normed_, static_cast<Eigen::Index>(bs));
    in_proj.forward(normed_, xz_, static_cast<Eigen::Index>(bs));

    // Causal depthwise conv over time on the first half of xz_.
    conv_pre_.assign(bs * static_cast<size_t>(d_inner), T(0));
    for (int b = 0; b < B; ++b) {
      for (int t = 0; t < S; ++t) {
        T* u = conv_pre_.data() + (static_cast<size_t>(b) * S + t) * d_inner;
        for (int j = 0; j < kernel; ++j) {
          const int ts = t - (kernel - 1) + j;
          if (ts < 0) continue;
          const T* xin = xz_.data() + (static_cast<size_t>(b) * S + ts) * 2 * d_inner;
          for (int c = 0; c < d_inner; ++c) u[c] += conv_w.w[static_cast<size_t>(c) * kernel + j] * xin[c];
        }
        for (int c = 0; c < d_inner; ++c) u[c] += conv_b.w[static_cast<size_t>(c)];
      }
    }
    v_.resize(conv_pre_.size());
    for (size_t i = 0; i < v_.size(); ++i) v_[i] = silu(conv_pre_[i]);

    ssm.forward(v_, scan_, B, S);

    gated_.resize(bs * static_cast<size_t>(d_inner));
    for (size_t r = 0; r < bs; ++r) {
      const T* z = xz_.data() + r * 2 * d_inner + d_inner;
      const T* s = scan_.data() + r * static_cast<size_t>(d_inner);
      T* g = gated_.data() + r * static_cast<size_t>(d_inner);
      for (int c = 0; c < d_inner; ++c) g[c] = s[c] * silu(z[c]);
    }
    out_proj.forward(gated_, proj_out_, static_cast<Eigen::Index>(bs));
    resid_drop.forward(proj_out_, rng);
    y.resize(x.size());
    for (size_t i = 0; i < y.size(); ++i) y[i] = x[i] + proj_out_[i];
  }

  void backward(const AlignedVec<T>& x, const AlignedVec<T>& dy, AlignedVec<T>& dx, int B, int S) {
    const size_t bs = static_cast<size_t>(B) * S;
    AlignedVec<T> dproj = dy;
    resid_drop.backward(dproj);
    AlignedVec<T> dgated;
    out_proj.backward(gated_, dproj, &dgated, static_cast<Eigen::Index>(bs));

    AlignedVec<T> dscan(bs * static_cast<size_t>(d_inner));
    AlignedVec<T> dxz(bs * static_cast<size_t>(2 * d_inner), T(0));
    for (size_t r = 0; r < bs; ++r) {
      const T* z = xz_.data() + r * 2 * d_inner + d_inner;
      const T* s = scan_.data() + r * static_cast<size_t>(d_inner);
      const T* dg = dgated.data() + r * static_cast<size_t>(d_inner);
      T* ds = dscan.data() + r * static_cast<size_t>(d_inner);
      T* dz = dxz.data() + r * 2 * d_inner + d_inner;
      for (int c = 0; c < d_inner; ++c) {
        ds[c] = dg[c] * silu(z[c]);
        dz[c] = dg[c] * s[c] * silu_grad(z[c]);
      }
    }

    AlignedVec<T> dv;
    ssm.backward(v_, dscan, dv, B, S);
    for (size_t i = 0; i < dv.size(); ++i) dv[i] *= silu_grad(conv_pre_[i]);

    // Depthwise conv backward.
    for (int b = 0; b < B; ++b) {
      for (int t = 0; t < S; ++t) {
        const T* du = dv.data() + (static_cast<size_t>(b) * S + t) * d_inner;
        for (int j = 0; j < kernel; ++j) {
          const int ts = t - (kernel - 1) + j;
          if (ts < 0) continue;
          const T* xin = xz_.data() + (static_cast<size_t>(b) * S + ts) * 2 * d_inner;
          T* dxin = dxz.data() + (static_cast<size_t>(b) * S + ts) * 2 * d_inner;
          for (int c = 0; c < d_inner; ++c) {
            conv_w.g[static_cast<size_t>(c) * kernel + j] += du[c] * xin[c];
            dxin[c] += du[c] * conv_w.w[static_cast<size_t>(c) * kernel + j];
          }
        }
        for (int c = 0; c < d_inner; ++c) conv_b.g[static_cast<size_t>(c)] += du[c];
      }
    }

    AlignedVec<T> dnormed;
    in_proj.backward(normed_, dxz, &dnormed, static_cast<Eigen::Index>(bs));
    AlignedVec<T> dx_pre;
    norm.backward(x, dnormed, dx_pre, static_cast<Eigen::Index>(bs));
    dx.resize(x.size());
    for (size_t i = 0; i < dx.size(); ++i) dx[i] = dy[i] + dx_pre[i];
  }
};

}  // namespace sqrl::nn
