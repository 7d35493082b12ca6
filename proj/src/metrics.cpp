#include "aquagan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "aquagan/errors.hpp"

namespace aquagan {

namespace {

void require_same_size(const ImageF& x, const ImageF& y, const char* what) {
  if (x.height() != y.height() || x.width() != y.width()) {
    throw DimensionError(std::string(what) + ": image sizes differ (" + std::to_string(x.height()) +
                         "x" + std::to_string(x.width()) + " vs " + std::to_string(y.height()) +
                         "x" + std::to_string(y.width()) + ")");
  }
}

// Single channel on the 255 scale, row-major.
std::vector<double> channel_255(const ImageF& img, int c) {
  std::vector<double> out(static_cast<std::size_t>(img.height()) * img.width());
  auto v = img.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 255.0 * static_cast<double>(v[i * 3 + c]);
  return out;
}

std::vector<double> gaussian_taps(int window, double sigma) {
  std::vector<double> g(window);
  const double mid = (window - 1) / 2.0;
  double sum = 0.0;
  for (int i = 0; i < window; ++i) {
    g[i] = std::exp(-(i - mid) * (i - mid) / (2.0 * sigma * sigma));
    sum += g[i];
  }
  for (double& v : g) v /= sum;
  return g;
}

// Separable 'valid' filtering: output is (h-k+1) x (w-k+1).
std::vector<double> filter_valid(const std::vector<double>& src, int h, int w,
                                 const std::vector<double>& taps) {
  const int k = static_cast<int>(taps.size());
  const int ow = w - k + 1;
  const int oh = h - k + 1;
  std::vector<double> tmp(static_cast<std::size_t>(h) * ow);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int t = 0; t < k; ++t) acc += taps[t] * src[static_cast<std::size_t>(y) * w + x + t];
      tmp[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int t = 0; t < k; ++t) acc += taps[t] * tmp[static_cast<std::size_t>(y + t) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  return out;
}

void require_uiqm_size(const ImageF& img) {
  if (img.height() < kUiqmMinSide || img.width() < kUiqmMinSide) {
    throw DimensionError("uiqm: image must be at least 16x16, got " + std::to_string(img.height()) +
                         "x" + std::to_string(img.width()));
  }
}

// Mean of the sorted values after dropping ceil(aL*K) from the low end and
// floor(aR*K) from the high end.
double trimmed_mean(std::vector<double> values, double alpha_left, double alpha_right) {
  std::sort(values.begin(), values.end());
  const auto k = static_cast<double>(values.size());
  const auto lo = static_cast<std::size_t>(std::ceil(alpha_left * k));
  const auto hi = static_cast<std::size_t>(std::floor(alpha_right * k));
  if (lo + hi >= values.size()) throw DimensionError("uiqm: trim fractions leave no samples");
  double acc = 0.0;
  for (std::size_t i = lo; i < values.size() - hi; ++i) acc += values[i];
  return acc / static_cast<double>(values.size() - lo - hi);
}

double spread_about(const std::vector<double>& values, double mu) {
  double acc = 0.0;
  for (double v : values) acc += (v - mu) * (v - mu);
  return acc / static_cast<double>(values.size());
}

// Sobel gradient magnitude with edge-replicating borders, rescaled so the
// maximum is 255 (all zeros stays all zeros).
std::vector<double> sobel_magnitude(const std::vector<double>& plane, int h, int w) {
  auto at = [&](int y, int x) {
    y = std::clamp(y, 0, h - 1);
    x = std::clamp(x, 0, w - 1);
    return plane[static_cast<std::size_t>(y) * w + x];
  };
  std::vector<double> mag(plane.size());
  double peak = 0.0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double gy = (at(y + 1, x - 1) + 2.0 * at(y + 1, x) + at(y + 1, x + 1)) -
                        (at(y - 1, x - 1) + 2.0 * at(y - 1, x) + at(y - 1, x + 1));
      const double gx = (at(y - 1, x + 1) + 2.0 * at(y, x + 1) + at(y + 1, x + 1)) -
                        (at(y - 1, x - 1) + 2.0 * at(y, x - 1) + at(y + 1, x - 1));
      const double m = std::hypot(gx, gy);
      mag[static_cast<std::size_t>(y) * w + x] = m;
      peak = std::max(peak, m);
    }
  if (peak > 0.0)
    for (double& m : mag) m *= 255.0 / peak;
  return mag;
}

// Block EME: 2/(k1 k2) * sum log(max/min); blocks with a zero extreme add 0.
double block_eme(const std::vector<double>& plane, int h, int w, int block) {
  const int k1 = w / block;
  const int k2 = h / block;
  double acc = 0.0;
  for (int by = 0; by < k2; ++by)
    for (int bx = 0; bx < k1; ++bx) {
      double lo = std::numeric_limits<double>::infinity();
      double hi = -std::numeric_limits<double>::infinity();
      for (int y = by * block; y < (by + 1) * block; ++y)
        for (int x = bx * block; x < (bx + 1) * block; ++x) {
          const double v = plane[static_cast<std::size_t>(y) * w + x];
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
      if (lo > 0.0 && hi > 0.0) acc += std::log(hi / lo);
    }
  return 2.0 / (static_cast<double>(k1) * k2) * acc;
}

}  // namespace

double mse_255(const ImageF& x, const ImageF& y) {
  require_same_size(x, y, "mse");
  auto a = x.values();
  auto b = y.values();
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = 255.0 * (static_cast<double>(a[i]) - static_cast<double>(b[i]));
    acc += d * d;
  }
  return acc / static_cast<double>(a.size());
}

double psnr(const ImageF& x, const ImageF& y) {
  const double mse = mse_255(x, y);
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

double ssim(const ImageF& x, const ImageF& y, const SsimConfig& config) {
  require_same_size(x, y, "ssim");
  const int h = x.height();
  const int w = x.width();
  if (h < config.window || w < config.window) {
    throw DimensionError("ssim: image " + std::to_string(h) + "x" + std::to_string(w) +
                         " is smaller than the " + std::to_string(config.window) + "x" +
                         std::to_string(config.window) + " window");
  }
  const auto taps = gaussian_taps(config.window, config.sigma);
  const double c1 = config.c1();
  const double c2 = config.c2();
  double total = 0.0;
  for (int c = 0; c < 3; ++c) {
    const auto a = channel_255(x, c);
    const auto b = channel_255(y, c);
    std::vector<double> aa(a.size()), bb(a.size()), ab(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      aa[i] = a[i] * a[i];
      bb[i] = b[i] * b[i];
      ab[i] = a[i] * b[i];
    }
    const auto mu_a = filter_valid(a, h, w, taps);
    const auto mu_b = filter_valid(b, h, w, taps);
    const auto e_aa = filter_valid(aa, h, w, taps);
    const auto e_bb = filter_valid(bb, h, w, taps);
    const auto e_ab = filter_valid(ab, h, w, taps);
    double acc = 0.0;
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
      const double ma = mu_a[i];
      const double mb = mu_b[i];
      const double va = e_aa[i] - ma * ma;
      const double vb = e_bb[i] - mb * mb;
      const double cov = e_ab[i] - ma * mb;
      acc += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    total += acc / static_cast<double>(mu_a.size());
  }
  return total / 3.0;
}

double uicm(const ImageF& img, const UiqmConfig& config) {
  require_uiqm_size(img);
  const auto r = channel_255(img, 0);
  const auto g = channel_255(img, 1);
  const auto b = channel_255(img, 2);
  std::vector<double> rg(r.size()), yb(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    rg[i] = r[i] - g[i];
    yb[i] = (r[i] + g[i]) / 2.0 - b[i];
  }
  const double mu_rg = trimmed_mean(rg, config.alpha_left, config.alpha_right);
  const double mu_yb = trimmed_mean(yb, config.alpha_left, config.alpha_right);
  const double var_rg = spread_about(rg, mu_rg);
  const double var_yb = spread_about(yb, mu_yb);
  return config.uicm_mean_weight * std::sqrt(mu_rg * mu_rg + mu_yb * mu_yb) +
         config.uicm_spread_weight * std::sqrt(var_rg + var_yb);
}

double uism(const ImageF& img, const UiqmConfig& config) {
  require_uiqm_size(img);
  const int h = img.height();
  const int w = img.width();
  const double lambdas[3] = {config.lambda_r, config.lambda_g, config.lambda_b};
  double total = 0.0;
  for (int c = 0; c < 3; ++c) {
    const auto plane = channel_255(img, c);
    auto edges = sobel_magnitude(plane, h, w);
    for (std::size_t i = 0; i < edges.size(); ++i) edges[i] *= plane[i];
    total += lambdas[c] * block_eme(edges, h, w, config.block);
  }
  return total;
}

double uiconm(const ImageF& img, const UiqmConfig& config) {
  require_uiqm_size(img);
  const int h = img.height();
  const int w = img.width();
  const int k1 = w / config.block;
  const int k2 = h / config.block;
  double acc = 0.0;
  for (int by = 0; by < k2; ++by)
    for (int bx = 0; bx < k1; ++bx) {
      double lo = std::numeric_limits<double>::infinity();
      double hi = -std::numeric_limits<double>::infinity();
      for (int y = by * config.block; y < (by + 1) * config.block; ++y)
        for (int x = bx * config.block; x < (bx + 1) * config.block; ++x)
          for (int c = 0; c < 3; ++c) {
            const double v = 255.0 * static_cast<double>(img.at(y, x, c));
            lo = std::min(lo, v);
            hi = std::max(hi, v);
          }
      const double top = hi - lo;
      const double bot = hi + lo;
      if (top > 0.0 && bot > 0.0) {
        const double ratio = top / bot;
        acc += ratio * std::log(ratio);
      }
    }
  return -acc / (static_cast<double>(k1) * k2);
}

UiqmComponents uiqm_components(const ImageF& img, const UiqmConfig& config) {
  UiqmComponents out;
  out.uicm = uicm(img, config);
  out.uism = uism(img, config);
  out.uiconm = uiconm(img, config);
  out.uiqm = config.c_uicm * out.uicm + config.c_uism * out.uism + config.c_uiconm * out.uiconm;
  return out;
}

double uiqm(const ImageF& img, const UiqmConfig& config) { return uiqm_components(img, config).uiqm; }

ConfusionMetrics confusion_metrics(const ConfusionCounts& c) {
  if (c.tp < 0 || c.fp < 0 || c.tn < 0 || c.fn < 0) {
    throw Error("confusion counts must be non-negative");
  }
  auto ratio = [](std::int64_t num, std::int64_t den) -> std::optional<double> {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
  };
  ConfusionMetrics m;
  m.precision = ratio(c.tp, c.tp + c.fp);
  m.recall = ratio(c.tp, c.tp + c.fn);
  m.specificity = ratio(c.tn, c.tn + c.fp);
  m.accuracy = ratio(c.tp + c.tn, c.total());
  m.negative_predictive_value = ratio(c.tn, c.tn + c.fn);
  return m;
}

ConfusionCounts tally(std::span<const LabeledPrediction> predictions) {
  ConfusionCounts c;
  for (const auto& p : predictions) {
    if (p.truth_good) {
      (p.predicted_good ? c.tp : c.fn)++;
    } else {
      (p.predicted_good ? c.fp : c.tn)++;
    }
  }
  return c;
}

}  // namespace aquagan
