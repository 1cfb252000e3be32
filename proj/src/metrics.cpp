#include "sqrl/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "sqrl/dataset_io.hpp"
#include "sqrl/rng.hpp"

namespace sqrl {

const std::vector<std::string>& GameMetrics::feature_names() {
  static const std::vector<std::string> names = {"num_actions",   "avg_traj_len",
                                                 "avg_steps_first_reward", "image_entropy",
                                                 "compression_ratio",      "feature_count"};
  return names;
}

std::vector<double> GameMetrics::feature_values() const {
  return {static_cast<double>(num_actions), avg_traj_len, avg_steps_first_reward,
          image_entropy, compression_ratio, feature_count};
}

double image_entropy(const uint8_t* pixels, size_t n) {
  if (n == 0) throw DataError("image_entropy on empty frame");
  size_t hist[256] = {0};
  for (size_t i = 0; i < n; ++i) ++hist[pixels[i]];
  double h = 0.0;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (size_t b = 0; b < 256; ++b) {
    if (hist[b] == 0) continue;
    double p = static_cast<double>(hist[b]) * inv_n;
    h -= p * std::log2(p);
  }
  return h;
}

double compression_ratio(const uint8_t* pixels, size_t n) {
  if (n == 0) throw DataError("compression_ratio on empty frame");
  auto comp = zlib_compress(pixels, n, 6);
  return static_cast<double>(n) / static_cast<double>(comp.size());
}

namespace {

using Image = std::vector<double>;  // h*w row-major

Image gaussian_blur(const Image& src, int h, int w, double sigma) {
  int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> kernel(static_cast<size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    double v = std::exp(-0.5 * (i * i) / (sigma * sigma));
    kernel[static_cast<size_t>(i + radius)] = v;
    sum += v;
  }
  for (auto& kv : kernel) kv /= sum;

  auto clampi = [](int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); };
  Image tmp(src.size()), out(src.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i)
        acc += kernel[static_cast<size_t>(i + radius)] * src[static_cast<size_t>(y * w + clampi(x + i, 0, w - 1))];
      tmp[static_cast<size_t>(y * w + x)] = acc;
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i)
        acc += kernel[static_cast<size_t>(i + radius)] * tmp[static_cast<size_t>(clampi(y + i, 0, h - 1) * w + x)];
      out[static_cast<size_t>(y * w + x)] = acc;
    }
  }
  return out;
}

Image downsample2(const Image& src, int h, int w, int& oh, int& ow) {
  oh = (h + 1) / 2;
  ow = (w + 1) / 2;
  Image out(static_cast<size_t>(oh) * ow);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x)
      out[static_cast<size_t>(y * ow + x)] = src[static_cast<size_t>((2 * y) * w + 2 * x)];
  return out;
}

// Bilinear 2x upsample; the doubled base image lets the pyramid catch blobs
// whose characteristic scale sits below sigma0 on the original grid.
Image upsample2(const Image& src, int h, int w, int& oh, int& ow) {
  oh = 2 * h;
  ow = 2 * w;
  Image out(static_cast<size_t>(oh) * ow);
  auto at = [&](int y, int x) {
    y = std::min(y, h - 1);
    x = std::min(x, w - 1);
    return src[static_cast<size_t>(y) * w + x];
  };
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      const int sy = y / 2, sx = x / 2;
      double v;
      if (y % 2 == 0 && x % 2 == 0)
        v = at(sy, sx);
      else if (y % 2 == 0)
        v = 0.5 * (at(sy, sx) + at(sy, sx + 1));
      else if (x % 2 == 0)
        v = 0.5 * (at(sy, sx) + at(sy + 1, sx));
      else
        v = 0.25 * (at(sy, sx) + at(sy, sx + 1) + at(sy + 1, sx) + at(sy + 1, sx + 1));
      out[static_cast<size_t>(y) * ow + x] = v;
    }
  }
  return out;
}

bool is_extremum(const std::vector<Image>& dog, int level, int w, int idx) {
  const double v = dog[static_cast<size_t>(level)][static_cast<size_t>(idx)];
  const int offs[8] = {-w - 1, -w, -w + 1, -1, 1, w - 1, w, w + 1};
  bool is_max = true, is_min = true;
  for (int dl = -1; dl <= 1 && (is_max || is_min); ++dl) {
    const auto& layer = dog[static_cast<size_t>(level + dl)];
    if (dl != 0) {
      double c = layer[static_cast<size_t>(idx)];
      if (v <= c) is_max = false;
      if (v >= c) is_min = false;
    }
    for (int o : offs) {
      double c = layer[static_cast<size_t>(idx + o)];
      if (v <= c) is_max = false;
      if (v >= c) is_min = false;
    }
  }
  return is_max || is_min;
}

bool passes_edge_test(const Image& d, int w, int idx, double edge_ratio) {
  double dxx = d[static_cast<size_t>(idx + 1)] + d[static_cast<size_t>(idx - 1)] - 2.0 * d[static_cast<size_t>(idx)];
  double dyy = d[static_cast<size_t>(idx + w)] + d[static_cast<size_t>(idx - w)] - 2.0 * d[static_cast<size_t>(idx)];
  double dxy = (d[static_cast<size_t>(idx + w + 1)] - d[static_cast<size_t>(idx + w - 1)] -
                d[static_cast<size_t>(idx - w + 1)] + d[static_cast<size_t>(idx - w - 1)]) * 0.25;
  double tr = dxx + dyy;
  double det = dxx * dyy - dxy * dxy;
  if (det <= 0.0) return false;  // saddle: curvatures of opposite sign
  double r = edge_ratio;
  return tr * tr * r < (r + 1.0) * (r + 1.0) * det;
}

}  // namespace

int feature_count(const uint8_t* pixels, int h, int w, const DogParams& params) {
  if (h <= 0 || w <= 0) throw DataError("feature_count on empty frame");
  const double k = std::pow(2.0, 1.0 / params.scales_per_octave);
  const int gaussians_per_octave = params.scales_per_octave + 3;  // s+2 DoG layers, s scanned

  Image input(static_cast<size_t>(h) * w);
  for (size_t i = 0; i < input.size(); ++i) input[i] = pixels[i] / 255.0;
  // The pyramid starts from a doubled image (assumed capture blur 0.5 becomes
  // 1.0) so the first scanned scale can respond to small structures.
  int oh = 0, ow = 0;
  Image base = upsample2(input, h, w, oh, ow);
  const double base_sigma = 1.0;

  int count = 0;
  for (int octave = 0; octave < params.octaves; ++octave) {
    if (oh < 8 || ow < 8) break;
    std::vector<Image> gauss(static_cast<size_t>(gaussians_per_octave));
    std::vector<double> sigmas(static_cast<size_t>(gaussians_per_octave));
    for (int i = 0; i < gaussians_per_octave; ++i) sigmas[static_cast<size_t>(i)] = params.sigma0 * std::pow(k, i);
    if (octave == 0 && params.sigma0 > base_sigma) {
      const double inc = std::sqrt(params.sigma0 * params.sigma0 - base_sigma * base_sigma);
      gauss[0] = gaussian_blur(base, oh, ow, inc);
    } else if (octave == 0) {
      gauss[0] = base;
    } else {
      gauss[0] = std::move(base);
    }
    for (int i = 1; i < gaussians_per_octave; ++i) {
      double inc = std::sqrt(sigmas[static_cast<size_t>(i)] * sigmas[static_cast<size_t>(i)] -
                             sigmas[static_cast<size_t>(i - 1)] * sigmas[static_cast<size_t>(i - 1)]);
      gauss[static_cast<size_t>(i)] = gaussian_blur(gauss[static_cast<size_t>(i - 1)], oh, ow, inc);
    }
    const size_t npix = static_cast<size_t>(oh) * ow;
    std::vector<Image> dog(static_cast<size_t>(gaussians_per_octave - 1));
    for (int i = 0; i + 1 < gaussians_per_octave; ++i) {
      dog[static_cast<size_t>(i)].resize(npix);
      for (size_t p = 0; p < npix; ++p)
        dog[static_cast<size_t>(i)][p] = gauss[static_cast<size_t>(i + 1)][p] - gauss[static_cast<size_t>(i)][p];
    }
    for (int level = 1; level <= params.scales_per_octave; ++level) {
      const auto& d = dog[static_cast<size_t>(level)];
      for (int y = 1; y + 1 < oh; ++y) {
        for (int x = 1; x + 1 < ow; ++x) {
          int idx = y * ow + x;
          if (std::abs(d[static_cast<size_t>(idx)]) <= params.contrast_threshold) continue;
          if (!is_extremum(dog, level, ow, idx)) continue;
          if (!passes_edge_test(d, ow, idx, params.edge_ratio)) continue;
          ++count;
        }
      }
    }
    // Next octave starts from the gaussian with twice the base blur.
    int nh = 0, nw = 0;
    base = downsample2(gauss[static_cast<size_t>(params.scales_per_octave)], oh, ow, nh, nw);
    oh = nh;
    ow = nw;
  }
  return count;
}

GameMetrics aggregate_metrics(const TrajectoryDataset& ds, size_t n_frames, uint64_t seed) {
  if (ds.episodes.empty()) throw DataError("aggregate_metrics on empty dataset");
  const size_t total = ds.total_transitions();
  const size_t take = std::min(n_frames, total);

  Rng rng(seed);
  std::vector<size_t> picks = rng.sample_without_replacement(total, take);
  std::sort(picks.begin(), picks.end());

  // Flattened frame index -> (episode, step).
  std::vector<size_t> episode_starts(ds.episodes.size());
  size_t acc = 0;
  for (size_t i = 0; i < ds.episodes.size(); ++i) {
    episode_starts[i] = acc;
    acc += ds.episodes[i].length();
  }

  double entropy_sum = 0.0, ratio_sum = 0.0, feat_sum = 0.0;
  size_t ep = 0;
  for (size_t flat : picks) {
    while (ep + 1 < ds.episodes.size() && episode_starts[ep + 1] <= flat) ++ep;
    const Frame& f = ds.episodes[ep].frames[flat - episode_starts[ep]];
    entropy_sum += image_entropy(f);
    ratio_sum += compression_ratio(f);
    feat_sum += static_cast<double>(feature_count(f));
  }

  DatasetStats st = dataset_statistics(ds);
  GameMetrics m;
  m.game = ds.game_name;
  m.num_actions = st.num_actions;
  m.avg_traj_len = st.avg_traj_len;
  m.avg_steps_first_reward = st.avg_steps_first_reward;
  const double dn = static_cast<double>(take);
  m.image_entropy = entropy_sum / dn;
  m.compression_ratio = ratio_sum / dn;
  m.feature_count = feat_sum / dn;
  return m;
}

}  // namespace sqrl
