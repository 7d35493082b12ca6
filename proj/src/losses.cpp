#include "aquagan/losses.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace aquagan {

namespace {

template <typename T>
double sign_of(T v) {
  return v > T(0) ? 1.0 : (v < T(0) ? -1.0 : 0.0);
}

void require_nonempty(std::span<const double> s, const char* what) {
  if (s.empty()) throw DimensionError(std::string(what) + ": empty score batch");
}

double clamp_score(double s) { return std::clamp(s, kScoreClamp, 1.0 - kScoreClamp); }

bool inside_clamp(double s) { return s > kScoreClamp && s < 1.0 - kScoreClamp; }

}  // namespace

template <typename T>
LossValue<T> l1_loss(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_same_shape(a, b, "l1_loss");
  if (a.empty()) throw DimensionError("l1_loss: empty tensors");
  const double n = static_cast<double>(a.numel());
  LossValue<T> out{0.0, BasicTensor<T>(a.shape())};
  double acc = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    acc += std::abs(d);
    out.grad[i] = static_cast<T>(sign_of(d) / n);
  }
  out.value = acc / n;
  return out;
}

template <typename T>
LossValue<T> l2_loss(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_same_shape(a, b, "l2_loss");
  if (a.empty()) throw DimensionError("l2_loss: empty tensors");
  const double n = static_cast<double>(a.numel());
  LossValue<T> out{0.0, BasicTensor<T>(a.shape())};
  double acc = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    acc += d * d;
    out.grad[i] = static_cast<T>(2.0 * d / n);
  }
  out.value = acc / n;
  return out;
}

template <typename T>
LossValue<T> angular_loss(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_same_shape(a, b, "angular_loss");
  const Shape& s = a.shape();
  if (s.c != 3) throw DimensionError("angular_loss: expected 3 channels, got " + to_string(s));
  if (a.empty()) throw DimensionError("angular_loss: empty tensors");
  const std::size_t plane = s.plane();
  const double pixels = static_cast<double>(s.n) * static_cast<double>(plane);
  LossValue<T> out{0.0, BasicTensor<T>(s)};
  double acc = 0.0;
  for (int n = 0; n < s.n; ++n) {
    const T* pa = a.sample(n);
    const T* pb = b.sample(n);
    T* pg = out.grad.sample(n);
    for (std::size_t p = 0; p < plane; ++p) {
      double va[3], vb[3];
      double dot = 0.0, na2 = 0.0, nb2 = 0.0;
      for (int c = 0; c < 3; ++c) {
        va[c] = pa[c * plane + p];
        vb[c] = pb[c * plane + p];
        dot += va[c] * vb[c];
        na2 += va[c] * va[c];
        nb2 += vb[c] * vb[c];
      }
      const double na = std::sqrt(na2);
      const double nb = std::sqrt(nb2);
      if (na < kMinPixelNorm || nb < kMinPixelNorm) continue;
      const double cosine = dot / (na * nb);
      const double clamped = std::clamp(cosine, -1.0 + kCosineClamp, 1.0 - kCosineClamp);
      acc += std::acos(clamped);
      if (clamped != cosine) continue;
      const double dtheta = -1.0 / std::sqrt(1.0 - cosine * cosine) / pixels;
      for (int c = 0; c < 3; ++c) {
        const double dcos = vb[c] / (na * nb) - cosine * va[c] / na2;
        pg[c * plane + p] = static_cast<T>(dtheta * dcos);
      }
    }
  }
  out.value = acc / pixels;
  return out;
}

template <typename T>
LossValue<T> gdl_loss(const BasicTensor<T>& generated, const BasicTensor<T>& target) {
  require_same_shape(generated, target, "gdl_loss");
  const Shape& s = generated.shape();
  if (generated.empty()) throw DimensionError("gdl_loss: empty tensors");
  if (s.h < 2 && s.w < 2) {
    throw DimensionError("gdl_loss: degenerate 1x1 spatial size has no neighbour pairs");
  }
  const double count_h = static_cast<double>(s.n) * s.c * s.h * (s.w - 1);
  const double count_v = static_cast<double>(s.n) * s.c * (s.h - 1) * s.w;
  LossValue<T> out{0.0, BasicTensor<T>(s)};
  double sum_h = 0.0;
  double sum_v = 0.0;
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const std::size_t base = (static_cast<std::size_t>(n) * s.c + c) * s.plane();
      const T* g = generated.data() + base;
      const T* y = target.data() + base;
      T* gg = out.grad.data() + base;
      for (int i = 0; i < s.h; ++i) {
        for (int j = 0; j < s.w; ++j) {
          const std::size_t at = static_cast<std::size_t>(i) * s.w + j;
          if (j + 1 < s.w) {
            const double dg = static_cast<double>(g[at + 1]) - g[at];
            const double dy = static_cast<double>(y[at + 1]) - y[at];
            const double u = std::abs(dy) - std::abs(dg);
            sum_h += std::abs(u);
            // d|u|/d(dg) = -sign(u) * sign(dg)
            const double d = -sign_of(u) * sign_of(dg) / count_h;
            gg[at + 1] += static_cast<T>(d);
            gg[at] -= static_cast<T>(d);
          }
          if (i + 1 < s.h) {
            const std::size_t below = at + s.w;
            const double dg = static_cast<double>(g[below]) - g[at];
            const double dy = static_cast<double>(y[below]) - y[at];
            const double u = std::abs(dy) - std::abs(dg);
            sum_v += std::abs(u);
            const double d = -sign_of(u) * sign_of(dg) / count_v;
            gg[below] += static_cast<T>(d);
            gg[at] -= static_cast<T>(d);
          }
        }
      }
    }
  }
  out.value = (count_h > 0 ? sum_h / count_h : 0.0) + (count_v > 0 ? sum_v / count_v : 0.0);
  return out;
}

ScoreLoss adversarial_generator_loss(std::span<const double> scores) {
  require_nonempty(scores, "adversarial_generator_loss");
  const double n = static_cast<double>(scores.size());
  ScoreLoss out{0.0, std::vector<double>(scores.size(), 0.0)};
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double s = clamp_score(scores[i]);
    out.value -= std::log(1.0 - s);
    if (inside_clamp(scores[i])) out.grad[i] = 1.0 / (1.0 - s) / n;
  }
  out.value /= n;
  return out;
}

DiscriminatorLoss adversarial_discriminator_loss(std::span<const double> real_scores,
                                                 std::span<const double> fake_scores) {
  require_nonempty(real_scores, "adversarial_discriminator_loss (real)");
  require_nonempty(fake_scores, "adversarial_discriminator_loss (fake)");
  DiscriminatorLoss out;
  out.grad_real.assign(real_scores.size(), 0.0);
  out.grad_fake.assign(fake_scores.size(), 0.0);
  const double nr = static_cast<double>(real_scores.size());
  const double nf = static_cast<double>(fake_scores.size());
  double real = 0.0;
  for (std::size_t i = 0; i < real_scores.size(); ++i) {
    const double s = clamp_score(real_scores[i]);
    real -= std::log(1.0 - s);
    if (inside_clamp(real_scores[i])) out.grad_real[i] = 1.0 / (1.0 - s) / nr;
  }
  double fake = 0.0;
  for (std::size_t i = 0; i < fake_scores.size(); ++i) {
    const double s = clamp_score(fake_scores[i]);
    fake -= std::log(s);
    if (inside_clamp(fake_scores[i])) out.grad_fake[i] = -1.0 / s / nf;
  }
  out.value = real / nr + fake / nf;
  return out;
}

std::string to_string(VariantTag tag) {
  switch (tag) {
    case VariantTag::kAdv:
      return "ADV";
    case VariantTag::kL1:
      return "L1";
    case VariantTag::kL2:
      return "L2";
    case VariantTag::kL2A:
      return "L2A";
    case VariantTag::kL2AG:
      return "L2AG";
    case VariantTag::kL2AGR:
      return "L2AGR";
  }
  return "?";
}

VariantTag variant_from_string(const std::string& s) {
  std::string up = s;
  std::transform(up.begin(), up.end(), up.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  for (VariantTag t : kAllVariants)
    if (to_string(t) == up) return t;
  throw Error("unknown loss variant '" + s + "' (expected adv, l1, l2, l2a, l2ag or l2agr)");
}

void LossWeights::validate() const {
  auto bad = [](double v) { return !(v >= 0.0) || !std::isfinite(v); };
  if (bad(w_gan) || bad(w_sim) || (lambda_ang && bad(*lambda_ang)) ||
      (lambda_gdl && bad(*lambda_gdl))) {
    throw Error("loss weights must be finite and non-negative");
  }
}

LossVariant loss_variant(VariantTag tag) {
  LossVariant v;
  v.tag = tag;
  switch (tag) {
    case VariantTag::kAdv:
      v.similarity = SimilarityKind::kL1;
      v.self_similarity = true;
      v.requires_pairs = false;
      break;
    case VariantTag::kL1:
      v.similarity = SimilarityKind::kL1;
      break;
    case VariantTag::kL2:
      break;
    case VariantTag::kL2A:
      v.weights.lambda_ang = kLambdaAngular;
      break;
    case VariantTag::kL2AG:
      v.weights.lambda_ang = kLambdaAngular;
      v.weights.lambda_gdl = kLambdaGdl;
      break;
    case VariantTag::kL2AGR:
      v.weights.lambda_ang = kLambdaAngular;
      v.weights.lambda_gdl = kLambdaGdl;
      v.trains_discriminator = true;
      break;
  }
  return v;
}

double LossBreakdown::sum() const {
  double total = 0.0;
  for (const auto* t : {&gan, &sim, &ang, &gdl})
    if (*t) total += (*t)->weighted();
  return total;
}

template <typename T>
CompositeLoss<T> composite_loss(const LossVariant& variant, const BasicTensor<T>& input,
                                const BasicTensor<T>* target, const BasicTensor<T>& generated,
                                std::span<const double> scores) {
  variant.weights.validate();
  const BasicTensor<T>* reference = nullptr;
  if (variant.self_similarity) {
    reference = &input;
  } else {
    if (!target) {
      throw DataError("variant " + to_string(variant.tag) + " requires a paired target image");
    }
    reference = target;
  }
  if (scores.size() != static_cast<std::size_t>(generated.shape().n)) {
    throw DimensionError("composite_loss: one discriminator score per generated image expected");
  }

  CompositeLoss<T> out;
  out.grad_generated = BasicTensor<T>(generated.shape());
  const LossWeights& w = variant.weights;
  auto accumulate = [&](const LossValue<T>& lv, double weight) {
    for (std::size_t i = 0; i < lv.grad.numel(); ++i) {
      out.grad_generated[i] += static_cast<T>(weight * lv.grad[i]);
    }
  };

  const ScoreLoss adv = adversarial_generator_loss(scores);
  out.terms.gan = LossTerm{adv.value, w.w_gan};
  out.grad_scores = adv.grad;
  for (double& g : out.grad_scores) g *= w.w_gan;

  const LossValue<T> sim = variant.similarity == SimilarityKind::kL1
                               ? l1_loss(generated, *reference)
                               : l2_loss(generated, *reference);
  out.terms.sim = LossTerm{sim.value, w.w_sim};
  accumulate(sim, w.w_sim);

  if (w.lambda_ang) {
    const LossValue<T> ang = angular_loss(generated, *reference);
    out.terms.ang = LossTerm{ang.value, *w.lambda_ang};
    accumulate(ang, *w.lambda_ang);
  }
  if (w.lambda_gdl) {
    const LossValue<T> gdl = gdl_loss(generated, *reference);
    out.terms.gdl = LossTerm{gdl.value, *w.lambda_gdl};
    accumulate(gdl, *w.lambda_gdl);
  }
  out.total = out.terms.sum();
  return out;
}

#define AQUAGAN_INSTANTIATE_LOSSES(T)                                                         \
  template LossValue<T> l1_loss(const BasicTensor<T>&, const BasicTensor<T>&);                \
  template LossValue<T> l2_loss(const BasicTensor<T>&, const BasicTensor<T>&);                \
  template LossValue<T> angular_loss(const BasicTensor<T>&, const BasicTensor<T>&);           \
  template LossValue<T> gdl_loss(const BasicTensor<T>&, const BasicTensor<T>&);               \
  template CompositeLoss<T> composite_loss(const LossVariant&, const BasicTensor<T>&,         \
                                           const BasicTensor<T>*, const BasicTensor<T>&,      \
                                           std::span<const double>);

AQUAGAN_INSTANTIATE_LOSSES(float)
AQUAGAN_INSTANTIATE_LOSSES(double)

#undef AQUAGAN_INSTANTIATE_LOSSES

}  // namespace aquagan
