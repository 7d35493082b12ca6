#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>

#include "aquagan/image.hpp"

// Evaluation measures. Image metrics work on the 255 scale internally so the
// published constants apply unchanged.
namespace aquagan {

// 10 log10(255^2 / MSE) with one MSE pooled over all pixels and channels.
// Identical images give +infinity.
double psnr(const ImageF& x, const ImageF& y);
double mse_255(const ImageF& x, const ImageF& y);

inline bool is_infinite_psnr(double db) { return db == std::numeric_limits<double>::infinity(); }

struct SsimConfig {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 255.0;

  double c1() const { return (k1 * dynamic_range) * (k1 * dynamic_range); }
  double c2() const { return (k2 * dynamic_range) * (k2 * dynamic_range); }
};

// Mean of the local SSIM map over all fully-contained Gaussian windows,
// computed per channel and averaged over channels.
double ssim(const ImageF& x, const ImageF& y, const SsimConfig& config = {});

// Constants of the underwater image quality measure, following Panetta et al.
struct UiqmConfig {
  double c_uicm = 0.0282;
  double c_uism = 0.2953;
  double c_uiconm = 3.5753;
  // Asymmetric alpha-trimmed statistics for UICM.
  double alpha_left = 0.1;
  double alpha_right = 0.1;
  double uicm_mean_weight = -0.0268;
  double uicm_spread_weight = 0.1586;
  // Per-channel weights of the Sobel EME in UISM.
  double lambda_r = 0.299;
  double lambda_g = 0.587;
  double lambda_b = 0.114;
  int block = 8;
};

inline constexpr int kUiqmMinSide = 16;

struct UiqmComponents {
  double uicm = 0.0;
  double uism = 0.0;
  double uiconm = 0.0;
  double uiqm = 0.0;
};

UiqmComponents uiqm_components(const ImageF& img, const UiqmConfig& config = {});
double uiqm(const ImageF& img, const UiqmConfig& config = {});
double uicm(const ImageF& img, const UiqmConfig& config = {});
double uism(const ImageF& img, const UiqmConfig& config = {});
double uiconm(const ImageF& img, const UiqmConfig& config = {});

// Positive class = good quality.
struct ConfusionCounts {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t tn = 0;
  std::int64_t fn = 0;

  std::int64_t total() const { return tp + fp + tn + fn; }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

// std::nullopt marks an undefined ratio (zero denominator).
struct ConfusionMetrics {
  std::optional<double> precision;    // TP / (TP + FP)
  std::optional<double> recall;       // TP / (TP + FN)
  std::optional<double> specificity;  // TN / (TN + FP)
  std::optional<double> accuracy;     // (TP + TN) / total
  // Precision of the bad-quality class, TN / (TN + FN).
  std::optional<double> negative_predictive_value;
};

ConfusionMetrics confusion_metrics(const ConfusionCounts& c);

struct LabeledPrediction {
  bool truth_good = false;
  bool predicted_good = false;
};

ConfusionCounts tally(std::span<const LabeledPrediction> predictions);

}  // namespace aquagan
