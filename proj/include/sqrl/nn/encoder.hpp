#pragma once

#include "sqrl/nn/layers.hpp"
#include "sqrl/trajectory.hpp"

namespace sqrl::nn {

// 2-D convolution on channel-last activations via im2col + GEMM, processed
// in frame chunks to bound the scratch size.
template <typename T>
struct Conv2d {
  Param<T> weight;  // stored [c_out, k*k*c_in], gather order (ky, kx, c_in)
  Param<T> bias;    // [c_out]
  int c_in = 0, c_out = 0, k = 0, stride = 0;
  int h_in = 0, w_in = 0, h_out = 0, w_out = 0;

  static constexpr int kChunk = 16;

  void setup(const std::string& name, int in_ch, int out_ch, int kernel, int s, int h, int w) {
    c_in = in_ch;
    c_out = out_ch;
    k = kernel;
    stride = s;
    h_in = h;
    w_in = w;
    h_out = (h - kernel) / s + 1;
    w_out = (w - kernel) / s + 1;
    weight.setup(name + ".weight", {out_ch, in_ch, kernel, kernel}, /*decay=*/true);
    bias.setup(name + ".bias", {out_ch}, false);
  }
  void init(Rng& rng, double stddev) {
    weight.init_normal(rng, stddev);
    bias.fill(T(0));
  }
  void collect(ParamList<T>& list) {
    list.push_back(&weight);
    list.push_back(&bias);
  }

  size_t in_size() const { return static_cast<size_t>(h_in) * w_in * c_in; }
  size_t out_size() const { return static_cast<size_t>(h_out) * w_out * c_out; }
  int positions() const { return h_out * w_out; }
  int patch() const { return k * k * c_in; }

  void im2col(const T* frame, T* col) const {
    for (int oy = 0; oy < h_out; ++oy) {
      for (int ox = 0; ox < w_out; ++ox) {
        T* dst = col + (static_cast<size_t>(oy) * w_out + ox) * patch();
        for (int ky = 0; ky < k; ++ky) {
          const T* src = frame + ((static_cast<size_t>(oy * stride + ky) * w_in) + ox * stride) * c_in;
          std::copy_n(src, static_cast<size_t>(k) * c_in, dst + static_cast<size_t>(ky) * k * c_in);
        }
      }
    }
  }

  void col2im_add(const T* col, T* frame) const {
    for (int oy = 0; oy < h_out; ++oy) {
      for (int ox = 0; ox < w_out; ++ox) {
        const T* src = col + (static_cast<size_t>(oy) * w_out + ox) * patch();
        for (int ky = 0; ky < k; ++ky) {
          T* dst = frame + ((static_cast<size_t>(oy * stride + ky) * w_in) + ox * stride) * c_in;
          const T* s = src + static_cast<size_t>(ky) * k * c_in;
          for (int i = 0; i < k * c_in; ++i) dst[i] += s[i];
        }
      }
    }
  }

  void forward(const AlignedVec<T>& x, AlignedVec<T>& y, int n_frames) const {
    y.resize(static_cast<size_t>(n_frames) * out_size());
    AlignedVec<T> col(static_cast<size_t>(kChunk) * positions() * patch());
    auto wm = as_mat(weight.w, c_out, patch());
    for (int f0 = 0; f0 < n_frames; f0 += kChunk) {
      const int nf = std::min(kChunk, n_frames - f0);
      for (int f = 0; f < nf; ++f)
        im2col(x.data() + static_cast<size_t>(f0 + f) * in_size(), col.data() + static_cast<size_t>(f) * positions() * patch());
      MatMap<T> colm(col.data(), static_cast<Eigen::Index>(nf) * positions(), patch());
      MatMap<T> ym(y.data() + static_cast<size_t>(f0) * out_size(), static_cast<Eigen::Index>(nf) * positions(), c_out);
      ym.noalias() = colm * wm.transpose();
      auto bm = CMatMap<T>(bias.w.data(), 1, c_out);
      ym.rowwise() += bm.row(0);
    }
  }

  // dx may be null for the first layer.
  void backward(const AlignedVec<T>& x, const AlignedVec<T>& dy, AlignedVec<T>* dx, int n_frames) {
    if (dx) dx->assign(static_cast<size_t>(n_frames) * in_size(), T(0));
    AlignedVec<T> col(static_cast<size_t>(kChunk) * positions() * patch());
    AlignedVec<T> dcol(col.size());
    auto wm = as_mat(weight.w, c_out, patch());
    auto gw = as_mat(weight.g, c_out, patch());
    auto gb = MatMap<T>(bias.g.data(), 1, c_out);
    for (int f0 = 0; f0 < n_frames; f0 += kChunk) {
      const int nf = std::min(kChunk, n_frames - f0);
      for (int f = 0; f < nf; ++f)
        im2col(x.data() + static_cast<size_t>(f0 + f) * in_size(), col.data() + static_cast<size_t>(f) * positions() * patch());
      CMatMap<T> colm(col.data(), static_cast<Eigen::Index>(nf) * positions(), patch());
      CMatMap<T> dym(dy.data() + static_cast<size_t>(f0) * out_size(), static_cast<Eigen::Index>(nf) * positions(), c_out);
      gw.noalias() += dym.transpose() * colm;
      gb.row(0) += dym.colwise().sum();
      if (dx) {
        MatMap<T> dcolm(dcol.data(), static_cast<Eigen::Index>(nf) * positions(), patch());
        dcolm.noalias() = dym * wm;
        for (int f = 0; f < nf; ++f)
          col2im_add(dcol.data() + static_cast<size_t>(f) * positions() * patch(),
                     dx->data() + static_cast<size_t>(f0 + f) * in_size());
      }
    }
  }
};

// Frame-stack encoder: normalize to [0,1], three GELU convolutions
// (8x8/4 -> 32, 4x4/2 -> 64, 3x3/1 -> 64), then a linear map to d_model.
// GELU keeps the whole encoder smooth, which the finite-difference gradient
// oracle depends on.
template <typename T>
struct StateEncoder {
  Conv2d<T> conv1, conv2, conv3;
  Linear<T> proj;
  int d_model = 0;

  AlignedVec<T> x0_, p1_, a1_, p2_, a2_, p3_, a3_;  // pre/post activations, channel-last

  void setup(int d) {
    d_model = d;
    conv1.setup("encoder.conv1", kFrameStack, 32, 8, 4, kFrameH, kFrameW);
    conv2.setup("encoder.conv2", 32, 64, 4, 2, conv1.h_out, conv1.w_out);
    conv3.setup("encoder.conv3", 64, 64, 3, 1, conv2.h_out, conv2.w_out);
    proj.setup("encoder.proj", conv3.h_out * conv3.w_out * 64, d);
  }
  // Fan-in (He) scaling for the pixel stack. A flat small-stddev init leaves
  // the encoded state orders of magnitude weaker than the other token
  // embeddings and the visual mapping trains far too slowly to be usable.
  void init(Rng& rng, double /*stddev*/) {
    conv1.init(rng, std::sqrt(2.0 / (conv1.patch())));
    conv2.init(rng, std::sqrt(2.0 / (conv2.patch())));
    conv3.init(rng, std::sqrt(2.0 / (conv3.patch())));
    proj.init(rng, std::sqrt(2.0 / proj.in));
  }
  void collect(ParamList<T>& list) {
    conv1.collect(list);
    conv2.collect(list);
    conv3.collect(list);
    proj.collect(list);
  }

  // frames: n * (4*84*84) u8, planar per stack slot; output [n, d_model].
  void forward(const uint8_t* frames, size_t n, AlignedVec<T>& out) {
    x0_.resize(n * conv1.in_size());
    const T inv255 = T(1) / T(255);
    for (size_t f = 0; f < n; ++f) {
      const uint8_t* src = frames + f * kFrameStack * kFramePixels;
      T* dst = x0_.data() + f * conv1.in_size();
      for (int p = 0; p < kFramePixels; ++p)
        for (int c = 0; c < kFrameStack; ++c)
          dst[static_cast<size_t>(p) * kFrameStack + c] = T(src[c * kFramePixels + p]) * inv255;
    }
    conv1.forward(x0_, p1_, static_cast<int>(n));
    a1_.resize(p1_.size());
    for (size_t i = 0; i < p1_.size(); ++i) a1_[i] = gelu(p1_[i]);
    conv2.forward(a1_, p2_, static_cast<int>(n));
    a2_.resize(p2_.size());
    for (size_t i = 0; i < p2_.size(); ++i) a2_[i] = gelu(p2_[i]);
    conv3.forward(a2_, p3_, static_cast<int>(n));
    a3_.resize(p3_.size());
    for (size_t i = 0; i < p3_.size(); ++i) a3_[i] = gelu(p3_[i]);
    proj.forward(a3_, out, static_cast<Eigen::Index>(n));
  }

  // Parameter gradients only; pixels are inputs.
  void backward(const AlignedVec<T>& dout, size_t n) {
    AlignedVec<T> d3;
    proj.backward(a3_, dout, &d3, static_cast<Eigen::Index>(n));
    for (size_t i = 0; i < d3.size(); ++i) d3[i] *= gelu_grad(p3_[i]);
    AlignedVec<T> d2;
    conv3.backward(a2_, d3, &d2, static_cast<int>(n));
    for (size_t i = 0; i < d2.size(); ++i) d2[i] *= gelu_grad(p2_[i]);
    AlignedVec<T> d1;
    conv2.backward(a1_, d2, &d1, static_cast<int>(n));
    for (size_t i = 0; i < d1.size(); ++i) d1[i] *= gelu_grad(p1_[i]);
    conv1.backward(x0_, d1, nullptr, static_cast<int>(n));
  }
};

}  // namespace sqrl::nn
