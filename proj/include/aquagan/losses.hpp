#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aquagan/tensor.hpp"

// Training objectives. Every loss is a mean over all of its terms and returns
// the gradient with respect to its first (generated) argument.
namespace aquagan {

template <typename T>
struct LossValue {
  double value = 0.0;
  BasicTensor<T> grad;
};

template <typename T>
LossValue<T> l1_loss(const BasicTensor<T>& a, const BasicTensor<T>& b);

template <typename T>
LossValue<T> l2_loss(const BasicTensor<T>& a, const BasicTensor<T>& b);

inline constexpr double kCosineClamp = 1e-7;
inline constexpr double kMinPixelNorm = 1e-6;

// Mean per-pixel angle (radians) between RGB vectors. The cosine is clamped
// to [-1+1e-7, 1-1e-7]; pixels where either norm is below 1e-6 contribute 0.
// The value is symmetric in its arguments, the gradient is taken for `a`.
template <typename T>
LossValue<T> angular_loss(const BasicTensor<T>& a, const BasicTensor<T>& b);

// Gradient-difference loss with alpha = 1:
//   mean_h | |dY_h| - |dG_h| |  +  mean_v | |dY_v| - |dG_v| |
// over forward differences; a direction with no neighbour pairs contributes 0.
template <typename T>
LossValue<T> gdl_loss(const BasicTensor<T>& generated, const BasicTensor<T>& target);

inline constexpr double kScoreClamp = 1e-7;

struct ScoreLoss {
  double value = 0.0;
  std::vector<double> grad;
};

// Generator side: mean of -log(1 - s); 0 is the "good quality" label.
ScoreLoss adversarial_generator_loss(std::span<const double> scores);

struct DiscriminatorLoss {
  double value = 0.0;
  std::vector<double> grad_real;
  std::vector<double> grad_fake;
};

// BCE(real -> 0) + BCE(fake -> 1), each averaged over its batch.
DiscriminatorLoss adversarial_discriminator_loss(std::span<const double> real_scores,
                                                 std::span<const double> fake_scores);

enum class VariantTag { kAdv, kL1, kL2, kL2A, kL2AG, kL2AGR };

inline constexpr VariantTag kAllVariants[] = {VariantTag::kAdv, VariantTag::kL1,
                                              VariantTag::kL2,  VariantTag::kL2A,
                                              VariantTag::kL2AG, VariantTag::kL2AGR};

std::string to_string(VariantTag tag);
// Case-insensitive: "l2agr" and "L2AGR" both parse.
VariantTag variant_from_string(const std::string& s);

inline constexpr double kLambdaAngular = 0.8;
inline constexpr double kLambdaGdl = 0.4;

// An absent lambda means the term is not part of the objective.
struct LossWeights {
  double w_gan = 1.0;
  double w_sim = 1.0;
  std::optional<double> lambda_ang;
  std::optional<double> lambda_gdl;

  void validate() const;
  friend bool operator==(const LossWeights&, const LossWeights&) = default;
};

enum class SimilarityKind { kL1, kL2 };

struct LossVariant {
  VariantTag tag = VariantTag::kL2;
  SimilarityKind similarity = SimilarityKind::kL2;
  // ADV compares the output with its own input instead of a reference.
  bool self_similarity = false;
  bool requires_pairs = true;
  bool trains_discriminator = false;
  LossWeights weights;
};

LossVariant loss_variant(VariantTag tag);

struct LossTerm {
  double raw = 0.0;
  double weight = 1.0;
  double weighted() const { return raw * weight; }
};

struct LossBreakdown {
  std::optional<LossTerm> gan;
  std::optional<LossTerm> sim;
  std::optional<LossTerm> ang;
  std::optional<LossTerm> gdl;

  // Sum of weighted terms.
  double sum() const;
};

template <typename T>
struct CompositeLoss {
  double total = 0.0;
  LossBreakdown terms;
  BasicTensor<T> grad_generated;
  std::vector<double> grad_scores;
};

// `scores` are the discriminator outputs for `generated`. `target` may be
// null only for variants that do not require pairs.
template <typename T>
CompositeLoss<T> composite_loss(const LossVariant& variant, const BasicTensor<T>& input,
                                const BasicTensor<T>* target, const BasicTensor<T>& generated,
                                std::span<const double> scores);

}  // namespace aquagan
