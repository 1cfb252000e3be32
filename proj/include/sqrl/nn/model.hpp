#pragma once

#include "sqrl/batch.hpp"
#include "sqrl/nn/config.hpp"
#include "sqrl/nn/encoder.hpp"
#include "sqrl/nn/mamba.hpp"

namespace sqrl::nn {

// Lays out (rtg, state, action) triplets as 3K tokens per sequence, adding
// the step's timestep embedding (when present) to all three tokens.
// Position 3k+1 always holds the state token of step k.
template <typename T>
void interleave_tokens(const AlignedVec<T>& rtg_emb, const AlignedVec<T>& state_emb,
                       const AlignedVec<T>& act_emb, const AlignedVec<T>* time_emb, int B, int K,
                       int d, AlignedVec<T>& tokens) {
  const int S = 3 * K;
  tokens.assign(static_cast<size_t>(B) * S * d, T(0));
  for (int b = 0; b < B; ++b) {
    for (int k = 0; k < K; ++k) {
      const size_t i = static_cast<size_t>(b) * K + k;
      const T* te = time_emb ? time_emb->data() + i * d : nullptr;
      T* rtg_tok = tokens.data() + (static_cast<size_t>(b) * S + 3 * k + 0) * d;
      T* state_tok = tokens.data() + (static_cast<size_t>(b) * S + 3 * k + 1) * d;
      T* act_tok = tokens.data() + (static_cast<size_t>(b) * S + 3 * k + 2) * d;
      const T* re = rtg_emb.data() + i * d;
      const T* se = state_emb.data() + i * d;
      const T* ae = act_emb.data() + i * d;
      for (int j = 0; j < d; ++j) {
        const T t_add = te ? te[j] : T(0);
        rtg_tok[j] = re[j] + t_add;
        state_tok[j] = se[j] + t_add;
        act_tok[j] = ae[j] + t_add;
      }
    }
  }
}

// Pre-norm transformer block: attention and GELU feed-forward with residuals.
template <typename T>
struct DtBlock {
  LayerNorm<T> ln1, ln2;
  CausalSelfAttention<T> attn;
  Mlp<T> mlp;
  Dropout<T> drop1, drop2;

  AlignedVec<T> normed1_, attn_out_, x_mid_, normed2_, mlp_out_;

  void setup(const std::string& name, int d, int heads, double dropout) {
    ln1.setup(name + ".ln1", d);
    ln2.setup(name + ".ln2", d);
    attn.setup(name + ".attn", d, heads, dropout);
    mlp.setup(name + ".mlp", d, 4 * d);
    drop1.p = dropout;
    drop2.p = dropout;
  }
  void init(Rng& rng, double stddev) {
    ln1.init();
    ln2.init();
    attn.init(rng, stddev);
    mlp.init(rng, stddev);
  }
  void collect(ParamList<T>& list) {
    ln1.collect(list);
    attn.collect(list);
    ln2.collect(list);
    mlp.collect(list);
  }

  void forward(const AlignedVec<T>& x, AlignedVec<T>& y, int B, int S, Rng* rng) {
    const Eigen::Index bs = static_cast<Eigen::Index>(B) * S;
    ln1.forward(x, normed1_, bs);
    attn.forward(normed1_, attn_out_, B, S, rng);
    drop1.forward(attn_out_, rng);
    x_mid_.resize(x.size());
    for (size_t i = 0; i < x.size(); ++i) x_mid_[i] = x[i] + attn_out_[i];
    ln2.forward(x_mid_, normed2_, bs);
    mlp.forward(normed2_, mlp_out_, bs);
    drop2.forward(mlp_out_, rng);
    y.resize(x.size());
    for (size_t i = 0; i < x.size(); ++i) y[i] = x_mid_[i] + mlp_out_[i];
  }

  void backward(const AlignedVec<T>& x, const AlignedVec<T>& dy, AlignedVec<T>& dx, int B, int S) {
    const Eigen::Index bs = static_cast<Eigen::Index>(B) * S;
    AlignedVec<T> dmlp = dy;
    drop2.backward(dmlp);
    AlignedVec<T> dnormed2;
    mlp.backward(normed2_, dmlp, dnormed2, bs);
    AlignedVec<T> dxmid;
    ln2.backward(x_mid_, dnormed2, dxmid, bs);
    for (size_t i = 0; i < dxmid.size(); ++i) dxmid[i] += dy[i];

    AlignedVec<T> dattn = dxmid;
    drop1.backward(dattn);
    AlignedVec<T> dnormed1;
    attn.backward(normed1_, dattn, dnormed1, B, S);
    ln1.backward(x, dnormed1, dx, bs);
    for (size_t i = 0; i < dx.size(); ++i) dx[i] += dxmid[i];
  }
};

// Return-conditioned sequence model over (rtg, state, action) token triplets.
// Action logits are read at the state-token positions.
template <typename T>
class SequenceModel {
 public:
  explicit SequenceModel(const ModelConfig& config) : config_(config) {
    config_.validate();
    encoder_.setup(config_.d_model);
    rtg_embed_.setup("rtg_embed", 1, config_.d_model);
    action_embed_.setup("action_embed", config_.action_space_size, config_.d_model);
    timestep_embed_.setup("timestep_embed", config_.max_timestep + 1, config_.d_model);
    emb_drop_.p = config_.dropout;
    if (config_.arch == Arch::kDecisionTransformer) {
      dt_blocks_.resize(static_cast<size_t>(config_.n_layers));
      for (int l = 0; l < config_.n_layers; ++l)
        dt_blocks_[static_cast<size_t>(l)].setup("block" + std::to_string(l), config_.d_model,
                                                 config_.n_heads, config_.dropout);
    } else {
      mamba_blocks_.resize(static_cast<size_t>(config_.n_layers));
      for (int l = 0; l < config_.n_layers; ++l)
        mamba_blocks_[static_cast<size_t>(l)].setup("block" + std::to_string(l), config_.d_model,
                                                    config_.d_inner(), config_.conv_kernel,
                                                    config_.ssm_state_dim, config_.dropout);
    }
    final_norm_.setup("final_norm", config_.d_model);
    head_.setup("head", config_.d_model, config_.action_space_size);

    encoder_.collect(params_);
    rtg_embed_.collect(params_);
    action_embed_.collect(params_);
    if (config_.timestep_embedding) timestep_embed_.collect(params_);
    for (auto& b : dt_blocks_) b.collect(params_);
    for (auto& b : mamba_blocks_) b.collect(params_);
    final_norm_.collect(params_);
    head_.collect(params_);
  }

  void init(uint64_t seed) {
    Rng rng(seed);
    const double stddev = 0.02;
    encoder_.init(rng, stddev);
    rtg_embed_.init(rng, stddev);
    action_embed_.table.init_normal(rng, stddev);
    if (config_.timestep_embedding) timestep_embed_.table.init_normal(rng, stddev);
    for (auto& b : dt_blocks_) b.init(rng, stddev);
    for (auto& b : mamba_blocks_) b.init(rng, stddev);
    final_norm_.init();
    head_.init(rng, stddev);
  }

  const ModelConfig& config() const { return config_; }
  ParamList<T>& params() { return params_; }
  const ParamList<T>& params() const { return params_; }
  void zero_grad() {
    for (auto* p : params_) p->zero_grad();
  }

  // logits: [B*K, M], read from the state-token positions.
  const AlignedVec<T>& forward(const SequenceBatch& batch, Rng* dropout_rng = nullptr) {
    const int B = batch.batch;
    const int K = batch.context;
    if (K != config_.context)
      throw ConfigError("batch context " + std::to_string(K) + " != model context " +
                        std::to_string(config_.context));
    const int S = 3 * K;
    const size_t bk = static_cast<size_t>(B) * K;
    const int d = config_.d_model;

    encoder_.forward(batch.states.data(), bk, state_emb_);

    rtg_in_.resize(bk);
    for (size_t i = 0; i < bk; ++i) rtg_in_[i] = static_cast<T>(batch.rtg[i]);
    rtg_embed_.forward(rtg_in_, rtg_emb_, static_cast<Eigen::Index>(bk));

    last_actions_ = batch.actions;
    action_embed_.forward(last_actions_, act_emb_);

    if (config_.timestep_embedding) {
      time_ids_.resize(bk);
      for (size_t i = 0; i < bk; ++i)
        time_ids_[i] = std::min(batch.timesteps[i], config_.max_timestep);
      timestep_embed_.forward(time_ids_, time_emb_);
    }

    interleave_tokens(rtg_emb_, state_emb_, act_emb_,
                      config_.timestep_embedding ? &time_emb_ : nullptr, B, K, d, tokens_);
    emb_drop_.forward(tokens_, dropout_rng);

    block_in_.resize(static_cast<size_t>(config_.n_layers));
    for (int l = 0; l < config_.n_layers; ++l) {
      block_in_[static_cast<size_t>(l)] = (l == 0) ? tokens_ : block_out_;
      if (config_.arch == Arch::kDecisionTransformer)
        dt_blocks_[static_cast<size_t>(l)].forward(block_in_[static_cast<size_t>(l)], block_out_, B, S,
                                                   dropout_rng);
      else
        mamba_blocks_[static_cast<size_t>(l)].forward(block_in_[static_cast<size_t>(l)], block_out_, B,
                                                      S, dropout_rng);
    }
    final_in_ = block_out_;
    final_norm_.forward(final_in_, final_out_, static_cast<Eigen::Index>(static_cast<size_t>(B) * S));

    // Gather state-token rows and apply the action head.
    head_in_.resize(bk * static_cast<size_t>(d));
    for (int b = 0; b < B; ++b)
      for (int k = 0; k < K; ++k)
        std::copy_n(final_out_.data() + (static_cast<size_t>(b) * S + 3 * k + 1) * d, d,
                    head_in_.data() + (static_cast<size_t>(b) * K + k) * d);
    head_.forward(head_in_, logits_, static_cast<Eigen::Index>(bk));
    last_B_ = B;
    last_K_ = K;
    return logits_;
  }

  // dlogits: [B*K, M]. Accumulates parameter gradients.
  void backward(const AlignedVec<T>& dlogits) {
    const int B = last_B_, K = last_K_, S = 3 * K, d = config_.d_model;
    const size_t bk = static_cast<size_t>(B) * K;

    AlignedVec<T> dhead_in;
    head_.backward(head_in_, dlogits, &dhead_in, static_cast<Eigen::Index>(bk));

    AlignedVec<T> dfinal_out(static_cast<size_t>(B) * S * d, T(0));
    for (int b = 0; b < B; ++b)
      for (int k = 0; k < K; ++k)
        std::copy_n(dhead_in.data() + (static_cast<size_t>(b) * K + k) * d, d,
                    dfinal_out.data() + (static_cast<size_t>(b) * S + 3 * k + 1) * d);

    AlignedVec<T> dstack;
    final_norm_.backward(final_in_, dfinal_out, dstack, static_cast<Eigen::Index>(static_cast<size_t>(B) * S));

    AlignedVec<T> dx;
    for (int l = config_.n_layers - 1; l >= 0; --l) {
      if (config_.arch == Arch::kDecisionTransformer)
        dt_blocks_[static_cast<size_t>(l)].backward(block_in_[static_cast<size_t>(l)], dstack, dx, B, S);
      else
        mamba_blocks_[static_cast<size_t>(l)].backward(block_in_[static_cast<size_t>(l)], dstack, dx, B, S);
      std::swap(dstack, dx);
    }
    emb_drop_.backward(dstack);

    // De-interleave.
    AlignedVec<T> drtg_emb(bk * static_cast<size_t>(d));
    AlignedVec<T> dstate_emb(bk * static_cast<size_t>(d));
    AlignedVec<T> dact_emb(bk * static_cast<size_t>(d));
    AlignedVec<T> dtime_emb(config_.timestep_embedding ? bk * static_cast<size_t>(d) : 0);
    for (int b = 0; b < B; ++b) {
      for (int k = 0; k < K; ++k) {
        const size_t i = static_cast<size_t>(b) * K + k;
        const T* dr = dstack.data() + (static_cast<size_t>(b) * S + 3 * k + 0) * d;
        const T* ds = dstack.data() + (static_cast<size_t>(b) * S + 3 * k + 1) * d;
        const T* da = dstack.data() + (static_cast<size_t>(b) * S + 3 * k + 2) * d;
        for (int j = 0; j < d; ++j) {
          drtg_emb[i * d + j] = dr[j];
          dstate_emb[i * d + j] = ds[j];
          dact_emb[i * d + j] = da[j];
          if (config_.timestep_embedding) dtime_emb[i * d + j] = dr[j] + ds[j] + da[j];
        }
      }
    }
    if (config_.timestep_embedding) timestep_embed_.backward(time_ids_, dtime_emb);
    action_embed_.backward(last_actions_, dact_emb);
    rtg_embed_.backward(rtg_in_, drtg_emb, nullptr, static_cast<Eigen::Index>(bk));
    encoder_.backward(dstate_emb, bk);
  }

  // Cross-entropy over unmasked positions; fills dlogits for backward.
  static T loss_and_grad(const AlignedVec<T>& logits, const std::vector<int>& targets,
                         const std::vector<uint8_t>& pad_mask, int M, AlignedVec<T>* dlogits) {
    const size_t n = targets.size();
    size_t n_real = 0;
    for (size_t i = 0; i < n; ++i) n_real += (pad_mask[i] == 0);
    if (n_real == 0) throw NumericError("loss over a fully padded batch");
    if (dlogits) dlogits->assign(logits.size(), T(0));
    T total = T(0);
    const T inv = T(1) / T(n_real);
    for (size_t i = 0; i < n; ++i) {
      if (pad_mask[i]) continue;
      const T* row = logits.data() + i * static_cast<size_t>(M);
      const int target = targets[i];
      if (target < 0 || target >= M) throw NumericError("target out of range");
      T maxv = row[0];
      for (int j = 1; j < M; ++j) maxv = std::max(maxv, row[j]);
      T denom = T(0);
      for (int j = 0; j < M; ++j) denom += std::exp(row[j] - maxv);
      const T logz = std::log(denom) + maxv;
      total += logz - row[target];
      if (dlogits) {
        T* drow = dlogits->data() + i * static_cast<size_t>(M);
        for (int j = 0; j < M; ++j) drow[j] = std::exp(row[j] - logz) * inv;
        drow[target] -= inv;
      }
    }
    return total * inv;
  }

 private:
  ModelConfig config_;
  StateEncoder<T> encoder_;
  Linear<T> rtg_embed_;
  Embedding<T> action_embed_;
  Embedding<T> timestep_embed_;
  Dropout<T> emb_drop_;
  std::vector<DtBlock<T>> dt_blocks_;
  std::vector<MambaBlock<T>> mamba_blocks_;
  LayerNorm<T> final_norm_;
  Linear<T> head_;
  ParamList<T> params_;

  // forward caches
  AlignedVec<T> state_emb_, rtg_in_, rtg_emb_, act_emb_, time_emb_, tokens_;
  std::vector<int> time_ids_, last_actions_;
  std::vector<AlignedVec<T>> block_in_;
  AlignedVec<T> block_out_, final_in_, final_out_, head_in_, logits_;
  int last_B_ = 0, last_K_ = 0;
};

// Convenience wrapper used everywhere: forward + loss + backward.
template <typename T>
T training_step_loss(SequenceModel<T>& model, const SequenceBatch& batch, Rng* dropout_rng,
                     bool do_backward) {
  const auto& logits = model.forward(batch, dropout_rng);
  AlignedVec<T> dlogits;
  const T loss = SequenceModel<T>::loss_and_grad(logits, batch.targets, batch.pad_mask,
                                                 model.config().action_space_size,
                                                 do_backward ? &dlogits : nullptr);
  if (do_backward) model.backward(dlogits);
  return loss;
}

// Copies parameter values between scalar types (identical registration
// order); used by the f64 finite-difference oracle.
template <typename U, typename T>
void copy_parameters(const SequenceModel<T>& src, SequenceModel<U>& dst) {
  const auto& a = src.params();
  auto& b = dst.params();
  if (a.size() != b.size()) throw NumericError("parameter list mismatch in copy");
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i]->size() != b[i]->size()) throw NumericError("parameter shape mismatch in copy");
    for (size_t j = 0; j < a[i]->w.size(); ++j) b[i]->w[j] = static_cast<U>(a[i]->w[j]);
  }
}

}  // namespace sqrl::nn
