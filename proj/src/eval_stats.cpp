#include "sqrl/eval_stats.hpp"

#include <algorithm>
#include <cmath>

namespace sqrl {

double normalized_score(double raw, const NormalizationBaseline& baseline) {
  const double span = baseline.human_score - baseline.random_score;
  if (span == 0.0) throw NumericError("normalization baseline has human == random for " + baseline.game);
  return 100.0 * (raw - baseline.random_score) / span;
}

double expected_return(double max_return) { return 5.0 * max_return; }

namespace {

double median_sorted(const std::vector<double>& s, size_t lo, size_t hi) {  // [lo, hi)
  const size_t n = hi - lo;
  const size_t mid = lo + n / 2;
  return (n % 2 == 1) ? s[mid] : 0.5 * (s[mid - 1] + s[mid]);
}

struct Quartiles {
  double median, q1, q3;
};

Quartiles quartiles(std::vector<double> s) {
  std::sort(s.begin(), s.end());
  const size_t n = s.size();
  Quartiles q{};
  q.median = median_sorted(s, 0, n);
  const size_t half = n / 2;
  q.q1 = median_sorted(s, 0, half);
  q.q3 = median_sorted(s, n % 2 == 1 ? half + 1 : half, n);
  return q;
}

}  // namespace

OutlierResult remove_outliers(const std::vector<double>& scores) {
  if (scores.empty()) throw DataError("remove_outliers on empty scores");
  std::vector<double> vals = scores;
  std::vector<size_t> idx(scores.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  OutlierResult res;
  while (vals.size() > 3) {
    Quartiles q = quartiles(vals);
    const double iqr = q.q3 - q.q1;
    const double lo = q.median - 1.5 * iqr;
    const double hi = q.median + 1.5 * iqr;
    size_t worst = 0;
    double worst_gap = -1.0;
    for (size_t i = 0; i < vals.size(); ++i) {
      double gap = std::abs(vals[i] - q.median);
      if (gap > worst_gap) {  // strict: ties keep the lower index
        worst_gap = gap;
        worst = i;
      }
    }
    if (vals[worst] >= lo && vals[worst] <= hi) break;
    res.removed_indices.push_back(idx[worst]);
    vals.erase(vals.begin() + static_cast<long>(worst));
    idx.erase(idx.begin() + static_cast<long>(worst));
  }
  std::sort(res.removed_indices.begin(), res.removed_indices.end());
  res.filtered = std::move(vals);
  return res;
}

ScoreSummary summarize(const std::vector<double>& xs) {
  ScoreSummary s;
  if (xs.empty()) return s;
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(xs.size());
  if (xs.size() < 2) return s;
  double ss = 0.0;
  for (double x : xs) ss += (x - s.mean) * (x - s.mean);
  s.stddev = std::sqrt(ss / static_cast<double>(xs.size()));
  return s;
}

double mean_policy_return(const GameSpec& spec, DataPolicy policy, double epsilon, int episodes,
                          uint64_t seed) {
  if (policy == DataPolicy::kRandom) epsilon = 1.0;
  SynthEnv env(spec);
  double total = 0.0;
  for (int i = 0; i < episodes; ++i) {
    Rng policy_rng = Rng::derive(seed ^ 0x51ed270b7a03c2d9ull, static_cast<uint64_t>(i));
    env.reset(Rng::derive(seed, static_cast<uint64_t>(i)).next_u64());
    bool done = false;
    while (!done) {
      int action;
      if (policy_rng.next_double() < epsilon)
        action = static_cast<int>(policy_rng.next_below(static_cast<uint64_t>(spec.action_space_size)));
      else
        action = env.expert_action();
      auto res = env.step(action);
      total += res.reward;
      done = res.done;
    }
  }
  return total / static_cast<double>(episodes);
}

NormalizationBaseline synth_baseline(const GameSpec& spec, int episodes, uint64_t seed) {
  NormalizationBaseline b;
  b.game = spec.name;
  b.random_score = mean_policy_return(spec, DataPolicy::kRandom, 1.0, episodes, seed);
  b.human_score = mean_policy_return(spec, DataPolicy::kScriptedExpert, 0.0, episodes, seed + 1);
  if (b.human_score == b.random_score) {
    // Degenerate game where random play matches the expert; keep the
    // normalization well-defined.
    b.human_score += 1e-9;
  }
  return b;
}

}  // namespace sqrl
