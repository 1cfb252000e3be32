#include <doctest.h>

#include <filesystem>

#include "sqrl/nn/checkpoint.hpp"
#include "sqrl/nn/gradcheck.hpp"
#include "sqrl/nn/train.hpp"
#include "sqrl/report.hpp"
#include "sqrl/rollout.hpp"

using namespace sqrl;
using namespace sqrl::nn;

namespace {

ModelConfig tiny_config(Arch arch, int context = 4, int actions = 6) {
  ModelConfig c;
  c.arch = arch;
  c.n_layers = 2;
  c.d_model = 32;
  c.context = context;
  c.n_heads = 4;
  c.ssm_state_dim = 16;
  c.action_space_size = actions;
  c.max_timestep = 64;
  c.dropout = 0.0;
  return c;
}

SequenceBatch random_batch(const ModelConfig& cfg, int B, uint64_t seed) {
  Rng rng(seed);
  SequenceBatch b;
  b.batch = B;
  b.context = cfg.context;
  const size_t bk = static_cast<size_t>(B) * cfg.context;
  b.rtg.resize(bk);
  b.states.resize(bk * kFrameStack * kFramePixels);
  b.actions.resize(bk);
  b.timesteps.resize(bk);
  b.targets.resize(bk);
  b.pad_mask.assign(bk, 0);
  for (auto& px : b.states) px = static_cast<uint8_t>(rng.next_below(256));
  for (size_t i = 0; i < bk; ++i) {
    b.rtg[i] = rng.next_double() * 5.0;
    b.actions[i] = static_cast<int>(rng.next_below(static_cast<uint64_t>(cfg.action_space_size)));
    b.targets[i] = static_cast<int>(rng.next_below(static_cast<uint64_t>(cfg.action_space_size)));
    b.timesteps[i] = static_cast<int>(i % static_cast<size_t>(cfg.context));
  }
  return b;
}

}  // namespace

TEST_CASE("init: HiPPO diagonal is exactly -(n+1) and init is seed-deterministic") {
  ModelConfig cfg = tiny_config(Arch::kDecisionMamba);
  cfg.ssm_state_dim = 4;
  SequenceModel<float> model(cfg);
  model.init(123);
  const Param<float>* a_mag = nullptr;
  for (const auto* p : model.params())
    if (p->name == "block0.ssm.a_mag") a_mag = p;
  REQUIRE(a_mag != nullptr);
  for (int c = 0; c < cfg.d_inner(); ++c)
    for (int n = 0; n < 4; ++n)
      CHECK(-std::max(std::abs(a_mag->w[static_cast<size_t>(c) * 4 + n]), 1e-8f) == float(-(n + 1)));

  SequenceModel<float> again(cfg);
  again.init(123);
  for (size_t i = 0; i < model.params().size(); ++i)
    CHECK(model.params()[i]->w == again.params()[i]->w);

  SequenceModel<float> other(cfg);
  other.init(124);
  bool any_diff = false;
  for (size_t i = 0; i < model.params().size() && !any_diff; ++i)
    any_diff = model.params()[i]->w != other.params()[i]->w;
  CHECK(any_diff);
}

TEST_CASE("init: DT parameter count matches the closed-form shape arithmetic") {
  ModelConfig cfg;
  cfg.arch = Arch::kDecisionTransformer;
  cfg.n_layers = 6;
  cfg.d_model = 128;
  cfg.context = 30;
  cfg.n_heads = 8;
  cfg.action_space_size = 18;
  cfg.max_timestep = 4096;
  SequenceModel<float> model(cfg);

  const long d = 128, M = 18, T_max = 4097;
  long expected = 0;
  expected += 32L * (4 * 8 * 8) + 32;   // conv1
  expected += 64L * (32 * 4 * 4) + 64;  // conv2
  expected += 64L * (64 * 3 * 3) + 64;  // conv3
  expected += d * (7L * 7 * 64) + d;    // encoder projection
  expected += d * 1 + d;                // rtg embedding
  expected += M * d;                    // action table
  expected += T_max * d;                // timestep table
  const long per_block = (2 * d) +              // ln1
                         (3 * d) * d + 3 * d +  // qkv
                         d * d + d +            // attn out proj
                         (2 * d) +              // ln2
                         (4 * d) * d + 4 * d +  // fc1
                         d * (4 * d) + d;       // fc2
  expected += 6 * per_block;
  expected += 2 * d;      // final norm
  expected += M * d + M;  // head
  CHECK(total_parameters(model.params()) == static_cast<size_t>(expected));
}

TEST_CASE("encode_states contract: shape and weight sharing across the batch") {
  ModelConfig cfg = tiny_config(Arch::kDecisionTransformer, 2);
  StateEncoder<float> enc;
  enc.setup(cfg.d_model);
  Rng rng(5);
  enc.init(rng, 0.02);
  std::vector<uint8_t> frames(3 * kFrameStack * kFramePixels, 0);
  nn::AlignedVec<float> out;
  enc.forward(frames.data(), 3, out);
  REQUIRE(out.size() == size_t(3) * cfg.d_model);
  for (int j = 0; j < cfg.d_model; ++j) {
    CHECK(out[static_cast<size_t>(j)] == out[static_cast<size_t>(cfg.d_model + j)]);
    CHECK(out[static_cast<size_t>(j)] == out[static_cast<size_t>(2 * cfg.d_model + j)]);
  }
}

TEST_CASE("interleave layout: ordering, state slots, timestep additivity") {
  const int B = 1, K = 2, d = 3;
  nn::AlignedVec<double> rtg = {1, 1, 1, 10, 10, 10};
  nn::AlignedVec<double> state = {2, 2, 2, 20, 20, 20};
  nn::AlignedVec<double> act = {3, 3, 3, 30, 30, 30};
  nn::AlignedVec<double> time = {0.5, 0.5, 0.5, 0.25, 0.25, 0.25};
  nn::AlignedVec<double> tokens;
  interleave_tokens(rtg, state, act, &time, B, K, d, tokens);
  REQUIRE(tokens.size() == size_t(B) * 3 * K * d);
  CHECK(tokens[0] == 1.5);
  CHECK(tokens[3] == 2.5);
  CHECK(tokens[6] == 3.5);
  CHECK(tokens[(3 * 1 + 1) * d] == 20.25);

  nn::AlignedVec<double> zero(rtg.size(), 0.0);
  interleave_tokens(zero, zero, zero, &time, B, K, d, tokens);
  for (int k = 0; k < K; ++k)
    for (int p = 0; p < 3; ++p)
      for (int j = 0; j < d; ++j)
        CHECK(tokens[static_cast<size_t>((3 * k + p) * d + j)] ==
              time[static_cast<size_t>(k * d + j)]);
}

TEST_CASE("attention: single token reduces to the value path") {
  const int d = 8, heads = 2;
  CausalSelfAttention<double> attn;
  attn.setup("a", d, heads, 0.0);
  Rng rng(9);
  attn.init(rng, 0.1);
  nn::AlignedVec<double> x(d);
  for (auto& v : x) v = rng.next_double() - 0.5;
  nn::AlignedVec<double> y;
  attn.forward(x, y, 1, 1, nullptr);
  std::vector<double> qkv(3 * d, 0.0);
  for (int o = 0; o < 3 * d; ++o) {
    double acc = attn.qkv.bias.w[static_cast<size_t>(o)];
    for (int i = 0; i < d; ++i)
      acc += attn.qkv.weight.w[static_cast<size_t>(o) * d + i] * x[static_cast<size_t>(i)];
    qkv[static_cast<size_t>(o)] = acc;
  }
  for (int o = 0; o < d; ++o) {
    double expect = attn.proj.bias.w[static_cast<size_t>(o)];
    for (int i = 0; i < d; ++i)
      expect += attn.proj.weight.w[static_cast<size_t>(o) * d + i] * qkv[static_cast<size_t>(2 * d + i)];
    CHECK(y[static_cast<size_t>(o)] == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("attention: identical tokens give position-independent output") {
  const int d = 8, S = 5;
  CausalSelfAttention<double> attn;
  attn.setup("a", d, 2, 0.0);
  Rng rng(11);
  attn.init(rng, 0.1);
  nn::AlignedVec<double> x(static_cast<size_t>(S) * d);
  for (int t = 0; t < S; ++t)
    for (int j = 0; j < d; ++j) x[static_cast<size_t>(t) * d + j] = 0.1 * j - 0.3;
  nn::AlignedVec<double> y;
  attn.forward(x, y, 1, S, nullptr);
  for (int t = 1; t < S; ++t)
    for (int j = 0; j < d; ++j)
      CHECK(y[static_cast<size_t>(t) * d + j] == doctest::Approx(y[static_cast<size_t>(j)]).epsilon(1e-10));
}

TEST_CASE("ssm scan: zeros in, zeros out; single step matches the closed form") {
  const int di = 6, N = 3;
  SelectiveSsm<double> ssm;
  ssm.setup("s", di, N);
  Rng rng(13);
  ssm.init(rng, 0.05);

  nn::AlignedVec<double> zeros(di, 0.0), y;
  ssm.forward(zeros, y, 1, 1);
  for (double v : y) CHECK(v == doctest::Approx(0.0));

  nn::AlignedVec<double> v(di);
  for (auto& x : v) x = rng.next_double() - 0.5;
  ssm.forward(v, y, 1, 1);
  for (int c = 0; c < di; ++c) {
    double delta_raw = ssm.delta_proj.bias.w[static_cast<size_t>(c)];
    for (int j = 0; j < di; ++j)
      delta_raw += ssm.delta_proj.weight.w[static_cast<size_t>(c) * di + j] * v[static_cast<size_t>(j)];
    const double delta = std::log1p(std::exp(delta_raw));
    double acc = 0.0;
    for (int n = 0; n < N; ++n) {
      double bn = 0.0, cn = 0.0;
      for (int j = 0; j < di; ++j) {
        bn += ssm.b_proj.weight.w[static_cast<size_t>(n) * di + j] * v[static_cast<size_t>(j)];
        cn += ssm.c_proj.weight.w[static_cast<size_t>(n) * di + j] * v[static_cast<size_t>(j)];
      }
      acc += cn * (delta * bn * v[static_cast<size_t>(c)]);
    }
    acc += ssm.d_skip.w[static_cast<size_t>(c)] * v[static_cast<size_t>(c)];
    CHECK(y[static_cast<size_t>(c)] == doctest::Approx(acc).epsilon(1e-12));
  }
}

TEST_CASE("ssm scan equals an independently unrolled LTV recurrence") {
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const int di = 4 + static_cast<int>(rng.next_below(5));
    const int N = 2 + static_cast<int>(rng.next_below(4));
    const int T = 1 + static_cast<int>(rng.next_below(32));
    SelectiveSsm<double> ssm;
    ssm.setup("s", di, N);
    Rng init_rng(100 + static_cast<uint64_t>(trial));
    ssm.init(init_rng, 0.2);
    for (auto& m : ssm.a_mag.w) m += init_rng.next_double();

    nn::AlignedVec<double> v(static_cast<size_t>(T) * di), y;
    for (auto& x : v) x = init_rng.next_double() * 2 - 1;
    ssm.forward(v, y, 1, T);

    std::vector<double> h(static_cast<size_t>(di) * N, 0.0);
    double max_err = 0.0;
    for (int t = 0; t < T; ++t) {
      const double* vt = v.data() + static_cast<size_t>(t) * di;
      std::vector<double> Bv(static_cast<size_t>(N), 0.0), Cv(static_cast<size_t>(N), 0.0);
      for (int n = 0; n < N; ++n)
        for (int j = 0; j < di; ++j) {
          Bv[static_cast<size_t>(n)] += ssm.b_proj.weight.w[static_cast<size_t>(n) * di + j] * vt[j];
          Cv[static_cast<size_t>(n)] += ssm.c_proj.weight.w[static_cast<size_t>(n) * di + j] * vt[j];
        }
      for (int c = 0; c < di; ++c) {
        double draw = ssm.delta_proj.bias.w[static_cast<size_t>(c)];
        for (int j = 0; j < di; ++j)
          draw += ssm.delta_proj.weight.w[static_cast<size_t>(c) * di + j] * vt[j];
        const double delta = std::log1p(std::exp(draw));
        CHECK(delta > 0.0);
        double acc = 0.0;
        for (int n = 0; n < N; ++n) {
          const double a = -std::max(std::abs(ssm.a_mag.w[static_cast<size_t>(c) * N + n]), 1e-8);
          const double abar = std::exp(delta * a);
          CHECK(std::abs(abar) < 1.0);
          double& hc = h[static_cast<size_t>(c) * N + n];
          hc = abar * hc + delta * Bv[static_cast<size_t>(n)] * vt[c];
          acc += Cv[static_cast<size_t>(n)] * hc;
        }
        acc += ssm.d_skip.w[static_cast<size_t>(c)] * vt[c];
        max_err = std::max(max_err, std::abs(acc - y[static_cast<size_t>(t) * di + c]));
      }
    }
    CHECK(max_err <= 1e-5);
  }
}

TEST_CASE("blocks: zero-initialized output projections pass the residual through") {
  const int d = 16, B = 2, S = 6;
  Rng rng(19);
  nn::AlignedVec<double> x(static_cast<size_t>(B) * S * d);
  for (auto& v : x) v = rng.next_double() - 0.5;

  DtBlock<double> dt;
  dt.setup("b", d, 4, 0.0);
  dt.init(rng, 0.05);
  dt.attn.proj.weight.fill(0.0);
  dt.attn.proj.bias.fill(0.0);
  dt.mlp.fc2.weight.fill(0.0);
  dt.mlp.fc2.bias.fill(0.0);
  nn::AlignedVec<double> y;
  dt.forward(x, y, B, S, nullptr);
  for (size_t i = 0; i < x.size(); ++i) CHECK(y[i] == doctest::Approx(x[i]));

  MambaBlock<double> mb;
  mb.setup("m", d, 2 * d, 4, 4, 0.0);
  mb.init(rng, 0.05);
  mb.out_proj.weight.fill(0.0);
  mb.out_proj.bias.fill(0.0);
  mb.forward(x, y, B, S, nullptr);
  for (size_t i = 0; i < x.size(); ++i) CHECK(y[i] == doctest::Approx(x[i]));
}

TEST_CASE("forward: shapes, batch-row permutation equivariance, finite logits") {
  for (Arch arch : {Arch::kDecisionTransformer, Arch::kDecisionMamba}) {
    ModelConfig cfg = tiny_config(arch, 3);
    cfg.n_layers = 1;
    SequenceModel<float> model(cfg);
    model.init(7);
    SequenceBatch b = random_batch(cfg, 3, 21);
    const auto logits = model.forward(b, nullptr);
    REQUIRE(logits.size() == size_t(3) * cfg.context * cfg.action_space_size);
    for (float v : logits) CHECK(std::isfinite(v));

    SequenceBatch swapped = b;
    auto swap_rows = [&](auto& vec, size_t stride) {
      for (size_t j = 0; j < stride; ++j) std::swap(vec[j], vec[2 * stride + j]);
    };
    swap_rows(swapped.rtg, static_cast<size_t>(cfg.context));
    swap_rows(swapped.actions, static_cast<size_t>(cfg.context));
    swap_rows(swapped.targets, static_cast<size_t>(cfg.context));
    swap_rows(swapped.timesteps, static_cast<size_t>(cfg.context));
    swap_rows(swapped.pad_mask, static_cast<size_t>(cfg.context));
    swap_rows(swapped.states, static_cast<size_t>(cfg.context) * kFrameStack * kFramePixels);
    const auto logits1 = nn::AlignedVec<float>(logits);
    const auto& logits2 = model.forward(swapped, nullptr);
    const size_t row = static_cast<size_t>(cfg.context) * cfg.action_space_size;
    // Rows are mathematically independent; a row's absolute position can
    // still select a different GEMM micro-kernel, so compare to float noise.
    for (size_t j = 0; j < row; ++j) {
      CHECK(std::abs(logits2[j] - logits1[2 * row + j]) <= 1e-5f);
      CHECK(std::abs(logits2[2 * row + j] - logits1[j]) <= 1e-5f);
    }
  }
}

TEST_CASE("loss: uniform, one-hot limit, and brute-force agreement") {
  const int M = 4;
  nn::AlignedVec<float> logits(static_cast<size_t>(2) * M, 0.0f);
  std::vector<int> targets = {1, 3};
  std::vector<uint8_t> mask = {0, 0};
  float l = SequenceModel<float>::loss_and_grad(logits, targets, mask, M, nullptr);
  CHECK(l == doctest::Approx(std::log(4.0)).epsilon(1e-6));

  nn::AlignedVec<float> hot(static_cast<size_t>(1) * M, 0.0f);
  hot[2] = 50.0f;
  std::vector<int> t2 = {2};
  std::vector<uint8_t> m2 = {0};
  CHECK(SequenceModel<float>::loss_and_grad(hot, t2, m2, M, nullptr) ==
        doctest::Approx(0.0).epsilon(1e-6));

  Rng rng(23);
  nn::AlignedVec<float> rl(static_cast<size_t>(3) * M);
  for (auto& v : rl) v = static_cast<float>(rng.next_double() * 4 - 2);
  std::vector<int> rt = {0, 2, 1};
  std::vector<uint8_t> rm = {0, 1, 0};
  float loss = SequenceModel<float>::loss_and_grad(rl, rt, rm, M, nullptr);
  double expect = 0.0;
  for (size_t i : {size_t{0}, size_t{2}}) {
    double denom = 0.0;
    for (int j = 0; j < M; ++j) denom += std::exp(static_cast<double>(rl[i * M + static_cast<size_t>(j)]));
    expect += -std::log(std::exp(static_cast<double>(rl[i * M + static_cast<size_t>(rt[i])])) / denom);
  }
  CHECK(loss == doctest::Approx(expect / 2.0).epsilon(1e-5));

  std::vector<uint8_t> all_masked = {1, 1, 1};
  CHECK_THROWS_AS(SequenceModel<float>::loss_and_grad(rl, rt, all_masked, M, nullptr), NumericError);
}

TEST_CASE("causality: future perturbations leave earlier logits unchanged") {
  for (Arch arch : {Arch::kDecisionTransformer, Arch::kDecisionMamba}) {
    ModelConfig cfg = tiny_config(arch, 4);
    cfg.n_layers = 1;
    SequenceModel<float> model(cfg);
    model.init(31);
    SequenceBatch b = random_batch(cfg, 1, 41);
    nn::AlignedVec<float> base = model.forward(b, nullptr);
    Rng rng(43);
    for (int trial = 0; trial < 10; ++trial) {
      const int t = 1 + static_cast<int>(rng.next_below(static_cast<uint64_t>(cfg.context - 1)));
      SequenceBatch mod = b;
      mod.rtg[static_cast<size_t>(t)] += 3.5;
      mod.actions[static_cast<size_t>(t)] =
          (mod.actions[static_cast<size_t>(t)] + 1) % cfg.action_space_size;
      for (size_t i = 0; i < static_cast<size_t>(kFrameStack) * kFramePixels; ++i)
        mod.states[mod.state_offset(0, t) + i] ^= 0xa5;
      const auto& out = model.forward(mod, nullptr);
      for (int kk = 0; kk < t; ++kk)
        for (int j = 0; j < cfg.action_space_size; ++j) {
          const size_t idx = static_cast<size_t>(kk) * cfg.action_space_size + j;
          CHECK(std::abs(out[idx] - base[idx]) <= 1e-6f);
        }
    }
  }
}

TEST_CASE("gradient check: small DT and DM in both precisions") {
  for (Arch arch : {Arch::kDecisionTransformer, Arch::kDecisionMamba}) {
    ModelConfig cfg = tiny_config(arch, 2, 4);
    cfg.n_layers = 1;
    cfg.d_model = 16;
    cfg.n_heads = 2;
    cfg.ssm_state_dim = 4;
    auto r32 = gradient_check<float>(cfg, 51);
    INFO("f32 worst: ", r32.worst_param);
    CHECK(r32.max_rel_err < 1e-3);
    auto r64 = gradient_check<double>(cfg, 52);
    INFO("f64 worst: ", r64.worst_param);
    CHECK(r64.max_rel_err < 1e-6);
  }
}

TEST_CASE("training: lr schedule shape and bitwise determinism") {
  CHECK(lr_at(0, 1000, 10000, 6e-4) == doctest::Approx(0.0));
  CHECK(lr_at(500, 1000, 10000, 6e-4) == doctest::Approx(3e-4));
  CHECK(lr_at(1000, 1000, 10000, 6e-4) == doctest::Approx(6e-4));
  CHECK(lr_at(10000, 1000, 10000, 6e-4) == doctest::Approx(6e-5));
  CHECK(lr_at(999999, 1000, 10000, 6e-4) == doctest::Approx(6e-5));

  GameSpec spec;
  spec.name = "t";
  spec.action_space_size = 4;
  spec.grid_w = spec.grid_h = 8;
  spec.texture_level = 0.0;
  spec.reward_sparsity = 2;
  spec.max_episode_len = 10;
  spec.seed = 3;
  auto ds = generate_dataset(spec, DataPolicy::kScriptedExpert, 0.2, 8, 5);

  ModelConfig cfg = tiny_config(Arch::kDecisionTransformer, 3, 4);
  cfg.n_layers = 1;
  cfg.d_model = 16;
  cfg.n_heads = 2;
  cfg.dropout = 0.1;
  TrainConfig tc;
  tc.max_epochs = 2;
  tc.batch_size = 16;
  tc.warmup_tokens = 64;
  tc.seed = 77;

  SequenceModel<float> m1(cfg), m2(cfg);
  m1.init(9);
  m2.init(9);
  auto log1 = train_model(m1, tc, ds);
  auto log2 = train_model(m2, tc, ds);
  REQUIRE(log1.size() == log2.size());
  for (size_t i = 0; i < log1.size(); ++i) {
    CHECK(log1[i].loss == log2[i].loss);
    CHECK(log1[i].lr == log2[i].lr);
  }
  for (size_t i = 0; i < m1.params().size(); ++i) CHECK(m1.params()[i]->w == m2.params()[i]->w);
}

TEST_CASE("training aborts with a located error when the loss diverges") {
  GameSpec spec;
  spec.name = "d";
  spec.action_space_size = 4;
  spec.grid_w = spec.grid_h = 8;
  spec.reward_sparsity = 2;
  spec.max_episode_len = 10;
  spec.seed = 3;
  auto ds = generate_dataset(spec, DataPolicy::kScriptedExpert, 0.2, 6, 5);
  ModelConfig cfg = tiny_config(Arch::kDecisionTransformer, 3, 4);
  cfg.n_layers = 1;
  cfg.d_model = 16;
  cfg.n_heads = 2;
  TrainConfig tc;
  tc.lr = 1e9;  // force overflow within the first epoch
  tc.max_epochs = 2;
  tc.batch_size = 8;
  tc.warmup_tokens = 1;
  tc.seed = 4;
  SequenceModel<float> model(cfg);
  model.init(4);
  CHECK_THROWS_AS(train_model(model, tc, ds), NumericError);
}

TEST_CASE("checkpoint: save/load round-trip is exact and re-save is byte-identical") {
  ModelConfig cfg = tiny_config(Arch::kDecisionMamba, 2, 4);
  cfg.n_layers = 1;
  cfg.d_model = 16;
  cfg.ssm_state_dim = 4;
  SequenceModel<float> model(cfg);
  model.init(61);
  CheckpointMeta meta;
  meta.game = "t";
  meta.max_return = 3.5;
  meta.train_seed = 61;
  meta.config_hash = "0123456789abcdef";

  const auto dir = std::filesystem::temp_directory_path() / "sqrl_ckpt_test";
  std::filesystem::create_directories(dir);
  const std::string p1 = (dir / "a.ckpt").string(), p2 = (dir / "b.ckpt").string();
  save_checkpoint(model, meta, p1);
  auto loaded = load_checkpoint(p1);
  CHECK(loaded.meta.game == "t");
  CHECK(loaded.meta.max_return == 3.5);
  CHECK(loaded.config.arch == Arch::kDecisionMamba);
  for (size_t i = 0; i < model.params().size(); ++i)
    CHECK(loaded.model->params()[i]->w == model.params()[i]->w);

  save_checkpoint(*loaded.model, loaded.meta, p2);
  CHECK(read_text(p1) == read_text(p2));
}

TEST_CASE("rollout: determinism with argmax, single-step budget, mismatch error") {
  GameSpec spec;
  spec.name = "r";
  spec.action_space_size = 6;
  spec.grid_w = spec.grid_h = 8;
  spec.texture_level = 0.0;
  spec.reward_sparsity = 1;
  spec.max_episode_len = 12;
  spec.seed = 11;

  ModelConfig cfg = tiny_config(Arch::kDecisionTransformer, 3, 6);
  cfg.n_layers = 1;
  cfg.d_model = 16;
  cfg.n_heads = 2;
  SequenceModel<float> model(cfg);
  model.init(71);

  SynthEnv env(spec);
  const double r1 = rollout_episode(model, env, nullptr, 5.0, true, 1.0, 30, 99);
  const double r2 = rollout_episode(model, env, nullptr, 5.0, true, 1.0, 30, 99);
  CHECK(r1 == r2);

  const double one = rollout_episode(model, env, nullptr, 5.0, true, 1.0, 1, 99);
  CHECK((one == 0.0 || one == 1.0));

  ModelConfig wrong = cfg;
  wrong.action_space_size = 4;
  SequenceModel<float> mismatched(wrong);
  mismatched.init(1);
  CHECK_THROWS_AS(rollout_episode(mismatched, env, nullptr, 5.0, true, 1.0, 5, 1), DataError);
}
