#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "aquagan/nn_ops.hpp"
#include "aquagan/params.hpp"
#include "aquagan/tensor.hpp"

namespace aquagan {

// U-Net style generator. Five stride-2 encoder stages (conv 4x4 -> BN ->
// LeakyReLU), five up-sampling decoder stages (transposed conv 4x4 -> ReLU ->
// conv 3x3 -> BN -> ReLU) with encoder features concatenated after d1..d4,
// and a final 3x3 projection to RGB followed by a sigmoid.
struct GeneratorSpec {
  int input_size = 256;
  std::vector<int> encoder_channels{32, 64, 128, 256, 256};
  float leaky_slope = 0.2f;

  int stages() const { return static_cast<int>(encoder_channels.size()); }
  // Spatial dims must be divisible by this.
  int divisor() const { return 1 << stages(); }
  // Output channels of d1..d(stages): mirror of the encoder ladder.
  std::vector<int> decoder_channels() const;
  void validate() const;

  friend bool operator==(const GeneratorSpec&, const GeneratorSpec&) = default;
};

// Activation shapes recorded by an inference pass.
struct GeneratorTrace {
  std::vector<Shape> encoder;
  Shape bottleneck;
  std::vector<Shape> decoder;
};

namespace detail {
struct UnitCache;
}

struct NetCache {
  NetCache();
  ~NetCache();
  NetCache(NetCache&&) noexcept;
  NetCache& operator=(NetCache&&) noexcept;

  bool train = false;
  Shape input_shape;
  std::vector<detail::UnitCache> units;
  Tensor pooled;      // classifier only
  Tensor output;      // generator image or classifier scores
};

class Generator {
 public:
  explicit Generator(GeneratorSpec spec);

  const GeneratorSpec& spec() const { return spec_; }

  // Kaiming-uniform conv weights, zero biases, BN scale 1 / shift 0.
  ParamSet init_params(std::uint64_t seed) const;

  // Inference mode (running statistics). Thread-safe for shared params.
  Tensor forward(const ParamSet& params, const Tensor& x, GeneratorTrace* trace = nullptr) const;

  // Training mode: batch statistics, running statistics updated in params.
  Tensor forward_train(ParamSet& params, const Tensor& x, NetCache& cache) const;

  // Accumulates into grads; grad_input may be null.
  void backward(const ParamSet& params, const NetCache& cache, const Tensor& grad_out,
                ParamSet& grads, Tensor* grad_input = nullptr) const;

 private:
  Tensor run(const ParamSet& params, ParamSet* stats, bool train, const Tensor& x,
             NetCache* cache, GeneratorTrace* trace) const;
  void check_input(const Tensor& x) const;

  GeneratorSpec spec_;
};

enum class BackboneId { kReferenceSmallCnn, kInceptionV3Adapted };

std::string to_string(BackboneId id);
BackboneId backbone_from_string(const std::string& s);

// Quality classifier / discriminator: backbone -> global average pooling ->
// one sigmoid unit. Score 0 means good quality, 1 bad.
struct ClassifierSpec {
  BackboneId backbone = BackboneId::kReferenceSmallCnn;
  int input_size = 256;
  // Reference backbone: one conv 3x3 stride-2 -> BN -> LeakyReLU block per entry.
  std::vector<int> channels{16, 32, 64, 128};
  float leaky_slope = 0.2f;

  void validate() const;

  friend bool operator==(const ClassifierSpec&, const ClassifierSpec&) = default;
};

inline constexpr double kQualityThreshold = 0.5;

inline bool is_good_quality(double score) { return score < kQualityThreshold; }

class Classifier {
 public:
  // Throws for backbones that are not built into this library.
  explicit Classifier(ClassifierSpec spec);

  const ClassifierSpec& spec() const { return spec_; }

  ParamSet init_params(std::uint64_t seed) const;

  // Scores in (0,1), shape N x 1 x 1 x 1. With a cache, backward can run
  // through the frozen network (inference statistics).
  Tensor forward(const ParamSet& params, const Tensor& x, NetCache* cache = nullptr) const;
  Tensor forward_train(ParamSet& params, const Tensor& x, NetCache& cache) const;

  // Pre-sigmoid logits from the last forward pass recorded in cache.
  const Tensor& logits(const NetCache& cache) const;

  // Gradient with respect to the scores.
  void backward(const ParamSet& params, const NetCache& cache, const Tensor& grad_scores,
                ParamSet* grads, Tensor* grad_input) const;
  // Gradient with respect to the logits (numerically stable BCE training).
  void backward_logits(const ParamSet& params, const NetCache& cache, const Tensor& grad_logits,
                       ParamSet* grads, Tensor* grad_input) const;

 private:
  Tensor run(const ParamSet& params, ParamSet* stats, bool train, const Tensor& x,
             NetCache* cache) const;

  ClassifierSpec spec_;
};

}  // namespace aquagan
