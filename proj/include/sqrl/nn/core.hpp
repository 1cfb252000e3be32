#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "sqrl/common.hpp"
#include "sqrl/rng.hpp"

namespace sqrl::nn {

// All numeric buffers share one 64-byte alignment class. Eigen picks
// vectorized code paths from runtime pointer alignment, so mixed alignments
// would make repeated runs differ in the last ulp; fixing the alignment makes
// training bit-reproducible within a process as well as across processes.
template <typename T, size_t Align = 64>
struct AlignedAllocator {
  using value_type = T;
  AlignedAllocator() = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U, Align>&) {}
  T* allocate(size_t n) {
    return static_cast<T*>(::operator new(n * sizeof(T), std::align_val_t(Align)));
  }
  void deallocate(T* p, size_t n) noexcept {
    ::operator delete(p, n * sizeof(T), std::align_val_t(Align));
  }
  template <class U>
  struct rebind {
    using other = AlignedAllocator<U, Align>;
  };
  friend bool operator==(const AlignedAllocator&, const AlignedAllocator&) { return true; }
  friend bool operator!=(const AlignedAllocator&, const AlignedAllocator&) { return false; }
};

template <typename T>
using AlignedVec = std::vector<T, AlignedAllocator<T>>;

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<Mat<T>>;
template <typename T>
using CMatMap = Eigen::Map<const Mat<T>>;

template <typename T>
MatMap<T> as_mat(AlignedVec<T>& v, Eigen::Index rows, Eigen::Index cols) {
  return MatMap<T>(v.data(), rows, cols);
}
template <typename T>
CMatMap<T> as_mat(const AlignedVec<T>& v, Eigen::Index rows, Eigen::Index cols) {
  return CMatMap<T>(v.data(), rows, cols);
}

// One named parameter tensor with its gradient buffer.
template <typename T>
struct Param {
  std::string name;
  std::vector<int> shape;
  bool decay = false;  // AdamW weight decay applies (weights yes; biases, norms, embeddings no)
  AlignedVec<T> w;
  AlignedVec<T> g;

  size_t size() const { return w.size(); }

  void setup(std::string n, std::vector<int> s, bool wd) {
    name = std::move(n);
    shape = std::move(s);
    decay = wd;
    size_t total = 1;
    for (int d : shape) total *= static_cast<size_t>(d);
    w.assign(total, T(0));
    g.assign(total, T(0));
  }

  void init_normal(Rng& rng, double stddev) {
    for (auto& x : w) x = static_cast<T>(rng.next_normal() * stddev);
  }
  void fill(T v) {
    for (auto& x : w) x = v;
  }
  void zero_grad() { std::fill(g.begin(), g.end(), T(0)); }
};

template <typename T>
using ParamList = std::vector<Param<T>*>;

template <typename T>
size_t total_parameters(const ParamList<T>& params) {
  size_t n = 0;
  for (const auto* p : params) n += p->size();
  return n;
}

// Activations.
template <typename T>
inline T gelu(T x) {
  return T(0.5) * x * (T(1) + std::erf(x * T(M_SQRT1_2)));
}
template <typename T>
inline T gelu_grad(T x) {
  const T cdf = T(0.5) * (T(1) + std::erf(x * T(M_SQRT1_2)));
  const T pdf = std::exp(T(-0.5) * x * x) * T(0.3989422804014326779);
  return cdf + x * pdf;
}

template <typename T>
inline T sigmoid(T x) {
  return T(1) / (T(1) + std::exp(-x));
}
template <typename T>
inline T silu(T x) {
  return x * sigmoid(x);
}
template <typename T>
inline T silu_grad(T x) {
  const T s = sigmoid(x);
  return s * (T(1) + x * (T(1) - s));
}

template <typename T>
inline T softplus(T x) {
  // log1p(exp(x)) with the large-x branch kept exact.
  return x > T(20) ? x : std::log1p(std::exp(x));
}

template <typename T>
inline T relu(T x) {
  return x > T(0) ? x : T(0);
}

}  // namespace sqrl::nn
