#pragma once

#include "sqrl/batch.hpp"
#include "sqrl/nn/model.hpp"

namespace sqrl::nn {

// Decoupled weight decay; decay applies only to params flagged for it
// (weights of linear/conv layers, not biases, norms or embedding tables).
template <typename T>
class AdamW {
 public:
  explicit AdamW(const ParamList<T>& params) {
    m_.resize(params.size());
    v_.resize(params.size());
    for (size_t i = 0; i < params.size(); ++i) {
      m_[i].assign(params[i]->size(), T(0));
      v_[i].assign(params[i]->size(), T(0));
    }
  }

  void step(ParamList<T>& params, double lr, const TrainConfig& tc) {
    ++t_;
    const double bc1 = 1.0 - std::pow(tc.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(tc.beta2, static_cast<double>(t_));
    const T b1 = T(tc.beta1), b2 = T(tc.beta2);
    const T eps = T(1e-8);
    for (size_t i = 0; i < params.size(); ++i) {
      Param<T>& p = *params[i];
      const T wd = p.decay ? T(lr * tc.weight_decay) : T(0);
      for (size_t j = 0; j < p.size(); ++j) {
        const T g = p.g[j];
        m_[i][j] = b1 * m_[i][j] + (T(1) - b1) * g;
        v_[i][j] = b2 * v_[i][j] + (T(1) - b2) * g * g;
        const T mhat = m_[i][j] / T(bc1);
        const T vhat = v_[i][j] / T(bc2);
        p.w[j] -= T(lr) * mhat / (std::sqrt(vhat) + eps) + wd * p.w[j];
      }
    }
  }

 private:
  std::vector<std::vector<T>> m_, v_;
  int64_t t_ = 0;
};

// Scales gradients so the global L2 norm is at most `clip`; returns the
// pre-clip norm.
template <typename T>
double clip_grad_norm(ParamList<T>& params, double clip) {
  double sq = 0.0;
  for (auto* p : params)
    for (T g : p->g) sq += static_cast<double>(g) * static_cast<double>(g);
  const double norm = std::sqrt(sq);
  if (norm > clip && norm > 0.0) {
    const T scale = T(clip / norm);
    for (auto* p : params)
      for (T& g : p->g) g *= scale;
  }
  return norm;
}

// Linear warmup over tokens, then cosine decay to 10% of the peak rate.
inline double lr_at(uint64_t tokens, uint64_t warmup_tokens, uint64_t final_tokens, double peak_lr) {
  if (warmup_tokens > 0 && tokens < warmup_tokens)
    return peak_lr * static_cast<double>(tokens) / static_cast<double>(warmup_tokens);
  if (final_tokens <= warmup_tokens) return peak_lr * 0.1;
  const double progress = static_cast<double>(tokens - warmup_tokens) /
                          static_cast<double>(final_tokens - warmup_tokens);
  const double mult = 0.5 * (1.0 + std::cos(M_PI * std::min(progress, 1.0)));
  return peak_lr * std::max(0.1, mult);
}

struct TrainLogRow {
  int epoch = 0;
  int step = 0;
  double loss = 0.0;
  double lr = 0.0;
};

// Offline training over epoch streams of K-windows. Deterministic given the
// seed: batch order, dropout masks and updates all derive from it.
template <typename T>
std::vector<TrainLogRow> train_model(SequenceModel<T>& model, const TrainConfig& tc,
                                     const TrajectoryDataset& ds) {
  tc.validate();
  if (ds.episodes.empty()) throw DataError("training on an empty dataset");
  const int K = model.config().context;
  const uint64_t final_tokens =
      static_cast<uint64_t>(tc.max_epochs) * epoch_token_count(ds, K);

  AdamW<T> opt(model.params());
  std::vector<TrainLogRow> log;
  uint64_t tokens = 0;
  for (int epoch = 0; epoch < tc.max_epochs; ++epoch) {
    BatchStream stream(ds, K, tc.batch_size, Rng::derive(tc.seed, static_cast<uint64_t>(epoch)).next_u64());
    Rng dropout_rng = Rng::derive(tc.seed ^ 0xd509087a11ull, static_cast<uint64_t>(epoch));
    int step = 0;
    while (auto batch = stream.next()) {
      model.zero_grad();
      const T loss = training_step_loss(model, *batch, &dropout_rng, /*do_backward=*/true);
      if (!std::isfinite(static_cast<double>(loss)))
        throw NumericError("training diverged (non-finite loss) at epoch " + std::to_string(epoch) +
                           " step " + std::to_string(step));
      clip_grad_norm(model.params(), tc.grad_clip);
      tokens += static_cast<uint64_t>(batch->real_positions());
      const double lr = lr_at(tokens, tc.warmup_tokens, final_tokens, tc.lr);
      opt.step(model.params(), lr, tc);
      log.push_back({epoch, step, static_cast<double>(loss), lr});
      ++step;
    }
  }
  return log;
}

// Fraction of unmasked positions where the argmax prediction matches the
// target, measured over one deterministic pass of the dataset.
template <typename T>
double next_action_accuracy(SequenceModel<T>& model, const TrajectoryDataset& ds, int batch_size) {
  BatchStream stream(ds, model.config().context, batch_size, /*seed=*/0);
  const int M = model.config().action_space_size;
  size_t correct = 0, total = 0;
  while (auto batch = stream.next()) {
    const auto& logits = model.forward(*batch, nullptr);
    const size_t bk = static_cast<size_t>(batch->batch) * batch->context;
    for (size_t i = 0; i < bk; ++i) {
      if (batch->pad_mask[i]) continue;
      const T* row = logits.data() + i * static_cast<size_t>(M);
      int best = 0;
      for (int j = 1; j < M; ++j)
        if (row[j] > row[best]) best = j;
      correct += (best == batch->targets[i]);
      ++total;
    }
  }
  return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
}

}  // namespace sqrl::nn
