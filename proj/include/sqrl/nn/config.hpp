#pragma once

#include <cstdint>
#include <string>

#include "sqrl/common.hpp"

namespace sqrl {

enum class Arch { kDecisionTransformer, kDecisionMamba };

inline std::string arch_name(Arch a) { return a == Arch::kDecisionTransformer ? "dt" : "dm"; }
inline Arch arch_from_name(const std::string& s) {
  if (s == "dt") return Arch::kDecisionTransformer;
  if (s == "dm") return Arch::kDecisionMamba;
  throw ConfigError("unknown arch '" + s + "' (expected dt or dm)");
}

struct ModelConfig {
  Arch arch = Arch::kDecisionTransformer;
  int n_layers = 6;
  int d_model = 128;
  int context = 30;  // K triplets; the token sequence is 3K long
  int n_heads = 8;   // attention only
  int ssm_state_dim = 16;  // N, mamba only
  int conv_kernel = 4;     // mamba depthwise conv
  int expand_factor = 2;   // mamba inner width multiplier
  double dropout = 0.1;
  int action_space_size = 6;  // M
  int max_timestep = 4096;    // timestep embedding table size
  bool timestep_embedding = true;

  int d_inner() const { return expand_factor * d_model; }
  void validate() const {
    if (n_layers < 1 || d_model < 1 || context < 1 || action_space_size < 2)
      throw ConfigError("model dims must be positive (and M >= 2)");
    if (arch == Arch::kDecisionTransformer && d_model % n_heads != 0)
      throw ConfigError("d_model must be divisible by n_heads");
    if (arch == Arch::kDecisionMamba && (ssm_state_dim < 1 || conv_kernel < 1 || expand_factor < 1))
      throw ConfigError("mamba dims must be positive");
    if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must be in [0,1)");
    if (max_timestep < 1) throw ConfigError("max_timestep must be >= 1");
  }
};

struct TrainConfig {
  double lr = 6e-4;
  double beta1 = 0.9;
  double beta2 = 0.95;
  double weight_decay = 0.1;
  double grad_clip = 1.0;
  uint64_t warmup_tokens = 10240;
  int max_epochs = 5;
  int batch_size = 256;
  uint64_t seed = 123;

  void validate() const {
    if (lr <= 0 || beta1 <= 0 || beta2 <= 0 || beta1 >= 1 || beta2 >= 1)
      throw ConfigError("bad optimizer constants");
    if (weight_decay < 0 || grad_clip <= 0) throw ConfigError("bad regularization constants");
    if (max_epochs < 1 || batch_size < 1) throw ConfigError("bad training schedule");
  }
};

}  // namespace sqrl
