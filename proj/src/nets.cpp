#include "aquagan/nets.hpp"

#include <cmath>

#include "aquagan/rng.hpp"

namespace aquagan {

namespace detail {

enum class Act { kNone, kRelu, kLeaky, kSigmoid };

struct Unit {
  std::string name;
  ops::ConvGeometry geom;
  bool transposed = false;
  bool bias = false;
  bool bn = false;
  Act act = Act::kNone;
  int in_channels = 0;
  int out_channels = 0;
};

struct UnitCache {
  Tensor input;
  ops::BatchNormCache<float> bn;
  Tensor output;
};

namespace {

constexpr ops::ConvGeometry kDown{4, 2, 1};
constexpr ops::ConvGeometry kUp{4, 2, 1};
constexpr ops::ConvGeometry kRefine{3, 1, 1};

void add_unit_params(const Unit& u, ParamSet& p) {
  const Shape w = u.transposed ? Shape{u.in_channels, u.out_channels, u.geom.kernel, u.geom.kernel}
                               : Shape{u.out_channels, u.in_channels, u.geom.kernel, u.geom.kernel};
  p.add(u.name + ".weight", w);
  if (u.bias) p.add(u.name + ".bias", {1, u.out_channels, 1, 1});
  if (u.bn) {
    p.add(u.name + ".bn.gamma", {1, u.out_channels, 1, 1}).fill(1.0f);
    p.add(u.name + ".bn.beta", {1, u.out_channels, 1, 1});
    p.add(u.name + ".bn.running_mean", {1, u.out_channels, 1, 1}, false);
    p.add(u.name + ".bn.running_var", {1, u.out_channels, 1, 1}, false).fill(1.0f);
  }
}

void init_unit_weights(const Unit& u, ParamSet& p, std::uint64_t seed) {
  Tensor& w = p.at(u.name + ".weight");
  const int k2 = u.geom.kernel * u.geom.kernel;
  // A stride-s transposed conv touches k*k/(s*s) taps per output pixel.
  const double fan_in = u.transposed
                            ? static_cast<double>(u.in_channels) * k2 / (u.geom.stride * u.geom.stride)
                            : static_cast<double>(u.in_channels) * k2;
  const double bound = std::sqrt(6.0 / fan_in);
  Rng rng(derive_seed(seed, stable_hash(u.name), 0));
  for (float& v : w.values()) v = static_cast<float>((2.0 * uniform01(rng) - 1.0) * bound);
}

Tensor unit_forward(const Unit& u, const ParamSet& p, ParamSet* stats, bool train, float slope,
                    const Tensor& x, UnitCache* cache) {
  if (x.shape().c != u.in_channels) {
    throw DimensionError(u.name + ": expected " + std::to_string(u.in_channels) +
                         " input channels, got " + to_string(x.shape()));
  }
  const Tensor& w = p.at(u.name + ".weight");
  const Tensor* b = u.bias ? &p.at(u.name + ".bias") : nullptr;
  Tensor h = u.transposed ? ops::conv_transpose2d(x, w, b, u.geom) : ops::conv2d(x, w, b, u.geom);
  if (u.bn) {
    const Tensor& gamma = p.at(u.name + ".bn.gamma");
    const Tensor& beta = p.at(u.name + ".bn.beta");
    if (train) {
      ops::BatchNormCache<float> local;
      auto& bc = cache ? cache->bn : local;
      Tensor* rm = stats ? &stats->at(u.name + ".bn.running_mean") : nullptr;
      Tensor* rv = stats ? &stats->at(u.name + ".bn.running_var") : nullptr;
      h = ops::batch_norm_train(h, gamma, beta, rm, rv, bc);
    } else {
      h = ops::batch_norm_eval(h, gamma, beta, p.at(u.name + ".bn.running_mean"),
                               p.at(u.name + ".bn.running_var"), cache ? &cache->bn : nullptr);
    }
  }
  switch (u.act) {
    case Act::kNone:
      break;
    case Act::kRelu:
      h = ops::leaky_relu(h, 0.0f);
      break;
    case Act::kLeaky:
      h = ops::leaky_relu(h, slope);
      break;
    case Act::kSigmoid:
      h = ops::sigmoid(h);
      break;
  }
  if (cache) {
    cache->input = x;
    cache->output = h;
  }
  return h;
}

Tensor unit_backward(const Unit& u, const ParamSet& p, bool train, float slope,
                     const UnitCache& cache, const Tensor& grad_out, ParamSet* grads,
                     bool need_input_grad) {
  Tensor g;
  switch (u.act) {
    case Act::kNone:
      g = grad_out;
      break;
    case Act::kRelu:
      g = ops::leaky_relu_backward(cache.output, grad_out, 0.0f);
      break;
    case Act::kLeaky:
      g = ops::leaky_relu_backward(cache.output, grad_out, slope);
      break;
    case Act::kSigmoid:
      g = ops::sigmoid_backward(cache.output, grad_out);
      break;
  }
  if (u.bn) {
    const Tensor& gamma = p.at(u.name + ".bn.gamma");
    Tensor* gg = grads ? &grads->at(u.name + ".bn.gamma") : nullptr;
    Tensor* gb = grads ? &grads->at(u.name + ".bn.beta") : nullptr;
    Tensor gx;
    if (train) {
      ops::batch_norm_train_backward(gamma, cache.bn, g, gx, gg, gb);
    } else {
      ops::batch_norm_eval_backward(gamma, cache.bn, g, gx, gg, gb);
    }
    g = std::move(gx);
  }
  const Tensor& w = p.at(u.name + ".weight");
  Tensor scratch_w;
  Tensor* gw;
  if (grads) {
    gw = &grads->at(u.name + ".weight");
  } else {
    scratch_w = Tensor(w.shape());
    gw = &scratch_w;
  }
  Tensor* gbias = (grads && u.bias) ? &grads->at(u.name + ".bias") : nullptr;
  Tensor gx;
  if (u.transposed) {
    ops::conv_transpose2d_backward(cache.input, w, g, u.geom, need_input_grad ? &gx : nullptr, *gw,
                                   gbias);
  } else {
    ops::conv2d_backward(cache.input, w, g, u.geom, need_input_grad ? &gx : nullptr, *gw, gbias);
  }
  return gx;
}

std::vector<Unit> generator_units(const GeneratorSpec& spec) {
  std::vector<Unit> units;
  const auto& enc = spec.encoder_channels;
  const auto dec = spec.decoder_channels();
  const int stages = spec.stages();
  int in = 3;
  for (int i = 0; i < stages; ++i) {
    units.push_back({"e" + std::to_string(i + 1), kDown, false, false, true, Act::kLeaky, in, enc[i]});
    in = enc[i];
  }
  for (int k = 1; k <= stages; ++k) {
    const std::string name = "d" + std::to_string(k);
    const int out = dec[k - 1];
    units.push_back({name + ".up", kUp, true, true, false, Act::kRelu, in, out});
    units.push_back({name + ".refine", kRefine, false, false, true, Act::kRelu, out, out});
    in = out;
    if (k <= stages - 1) in += enc[stages - 1 - k];
  }
  units.push_back({"d" + std::to_string(stages + 1), kRefine, false, true, false, Act::kSigmoid, in, 3});
  return units;
}

std::vector<Unit> classifier_units(const ClassifierSpec& spec) {
  std::vector<Unit> units;
  int in = 3;
  for (std::size_t i = 0; i < spec.channels.size(); ++i) {
    units.push_back({"block" + std::to_string(i + 1), {3, 2, 1}, false, false, true, Act::kLeaky, in,
                     spec.channels[i]});
    in = spec.channels[i];
  }
  units.push_back({"head", {1, 1, 0}, false, true, false, Act::kNone, in, 1});
  return units;
}

}  // namespace
}  // namespace detail

using detail::Unit;
using detail::UnitCache;

NetCache::NetCache() = default;
NetCache::~NetCache() = default;
NetCache::NetCache(NetCache&&) noexcept = default;
NetCache& NetCache::operator=(NetCache&&) noexcept = default;

std::vector<int> GeneratorSpec::decoder_channels() const {
  std::vector<int> out;
  const int s = stages();
  for (int k = 1; k <= s; ++k) out.push_back(encoder_channels[k <= s - 1 ? s - 1 - k : 0]);
  return out;
}

void GeneratorSpec::validate() const {
  if (encoder_channels.size() < 2) throw Error("generator needs at least two encoder stages");
  for (int c : encoder_channels)
    if (c < 1) throw Error("generator channel counts must be positive");
  if (input_size < divisor() || input_size % divisor() != 0) {
    throw DimensionError("generator input size " + std::to_string(input_size) +
                         " is not a positive multiple of " + std::to_string(divisor()));
  }
  if (!(leaky_slope >= 0.0f)) throw Error("leaky slope must be non-negative");
}

Generator::Generator(GeneratorSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

ParamSet Generator::init_params(std::uint64_t seed) const {
  ParamSet p;
  const auto units = detail::generator_units(spec_);
  for (const auto& u : units) detail::add_unit_params(u, p);
  for (const auto& u : units) detail::init_unit_weights(u, p, seed);
  return p;
}

void Generator::check_input(const Tensor& x) const {
  const Shape& s = x.shape();
  if (s.c != 3) throw DimensionError("generator expects RGB input, got " + to_string(s));
  if (s.h % spec_.divisor() != 0 || s.w % spec_.divisor() != 0 || s.h == 0 || s.w == 0) {
    throw DimensionError("generator input " + std::to_string(s.h) + "x" + std::to_string(s.w) +
                         " is not divisible by " + std::to_string(spec_.divisor()));
  }
}

Tensor Generator::run(const ParamSet& params, ParamSet* stats, bool train, const Tensor& x,
                      NetCache* cache, GeneratorTrace* trace) const {
  check_input(x);
  const auto units = detail::generator_units(spec_);
  const int stages = spec_.stages();
  if (cache) {
    cache->train = train;
    cache->input_shape = x.shape();
    cache->units.assign(units.size(), UnitCache{});
  }
  auto uc = [&](std::size_t i) { return cache ? &cache->units[i] : nullptr; };
  const float slope = spec_.leaky_slope;

  std::vector<Tensor> enc(stages);
  Tensor h = x;
  std::size_t idx = 0;
  for (int i = 0; i < stages; ++i, ++idx) {
    h = detail::unit_forward(units[idx], params, stats, train, slope, h, uc(idx));
    enc[i] = h;
    if (trace) trace->encoder.push_back(h.shape());
  }
  if (trace) trace->bottleneck = h.shape();
  for (int k = 1; k <= stages; ++k) {
    h = detail::unit_forward(units[idx], params, stats, train, slope, h, uc(idx));
    ++idx;
    h = detail::unit_forward(units[idx], params, stats, train, slope, h, uc(idx));
    ++idx;
    if (trace) trace->decoder.push_back(h.shape());
    if (k <= stages - 1) h = ops::concat_channels(h, enc[stages - 1 - k]);
  }
  h = detail::unit_forward(units[idx], params, stats, train, slope, h, uc(idx));
  if (trace) trace->decoder.push_back(h.shape());
  return h;
}

Tensor Generator::forward(const ParamSet& params, const Tensor& x, GeneratorTrace* trace) const {
  return run(params, nullptr, false, x, nullptr, trace);
}

Tensor Generator::forward_train(ParamSet& params, const Tensor& x, NetCache& cache) const {
  return run(params, &params, true, x, &cache, nullptr);
}

void Generator::backward(const ParamSet& params, const NetCache& cache, const Tensor& grad_out,
                         ParamSet& grads, Tensor* grad_input) const {
  const auto units = detail::generator_units(spec_);
  const int stages = spec_.stages();
  const float slope = spec_.leaky_slope;
  if (cache.units.size() != units.size()) throw Error("generator cache does not match network");

  std::vector<Tensor> skip_grad(stages);
  std::size_t idx = units.size() - 1;
  Tensor g = detail::unit_backward(units[idx], params, cache.train, slope, cache.units[idx],
                                   grad_out, &grads, true);
  for (int k = stages; k >= 1; --k) {
    if (k <= stages - 1) {
      const int own = units[idx - 1].out_channels;
      Tensor gh;
      ops::split_channels(g, own, gh, skip_grad[stages - 1 - k]);
      g = std::move(gh);
    }
    --idx;
    g = detail::unit_backward(units[idx], params, cache.train, slope, cache.units[idx], g, &grads, true);
    --idx;
    g = detail::unit_backward(units[idx], params, cache.train, slope, cache.units[idx], g, &grads, true);
  }
  for (int i = stages - 1; i >= 0; --i) {
    if (!skip_grad[i].empty()) ops::add_inplace(g, skip_grad[i]);
    --idx;
    const bool need = i > 0 || grad_input != nullptr;
    g = detail::unit_backward(units[idx], params, cache.train, slope, cache.units[idx], g, &grads, need);
  }
  if (grad_input) *grad_input = std::move(g);
}

std::string to_string(BackboneId id) {
  switch (id) {
    case BackboneId::kReferenceSmallCnn:
      return "reference-small-cnn";
    case BackboneId::kInceptionV3Adapted:
      return "inception-v3-adapted";
  }
  return "unknown";
}

BackboneId backbone_from_string(const std::string& s) {
  if (s == "reference-small-cnn") return BackboneId::kReferenceSmallCnn;
  if (s == "inception-v3-adapted") return BackboneId::kInceptionV3Adapted;
  throw Error("unknown classifier backbone '" + s + "'");
}

void ClassifierSpec::validate() const {
  if (channels.empty()) throw Error("classifier needs at least one block");
  for (int c : channels)
    if (c < 1) throw Error("classifier channel counts must be positive");
  if (input_size < 2) throw DimensionError("classifier input size must be at least 2");
}

Classifier::Classifier(ClassifierSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  if (spec_.backbone != BackboneId::kReferenceSmallCnn) {
    throw Error("classifier backbone '" + to_string(spec_.backbone) +
                "' is not built into this library; use reference-small-cnn");
  }
}

ParamSet Classifier::init_params(std::uint64_t seed) const {
  ParamSet p;
  const auto units = detail::classifier_units(spec_);
  for (const auto& u : units) detail::add_unit_params(u, p);
  for (const auto& u : units) detail::init_unit_weights(u, p, seed);
  return p;
}

Tensor Classifier::run(const ParamSet& params, ParamSet* stats, bool train, const Tensor& x,
                       NetCache* cache) const {
  const Shape& s = x.shape();
  if (s.c != 3 || s.h != spec_.input_size || s.w != spec_.input_size) {
    throw DimensionError("classifier expects N x 3 x " + std::to_string(spec_.input_size) + " x " +
                         std::to_string(spec_.input_size) + ", got " + to_string(s));
  }
  const auto units = detail::classifier_units(spec_);
  if (cache) {
    cache->train = train;
    cache->input_shape = s;
    cache->units.assign(units.size(), UnitCache{});
  }
  auto uc = [&](std::size_t i) { return cache ? &cache->units[i] : nullptr; };
  Tensor h = x;
  const std::size_t blocks = units.size() - 1;
  for (std::size_t i = 0; i < blocks; ++i) {
    h = detail::unit_forward(units[i], params, stats, train, spec_.leaky_slope, h, uc(i));
  }
  Tensor pooled = ops::global_avg_pool(h);
  Tensor logits =
      detail::unit_forward(units[blocks], params, stats, train, spec_.leaky_slope, pooled, uc(blocks));
  Tensor scores = ops::sigmoid(logits);
  if (cache) {
    cache->pooled = std::move(pooled);
    cache->output = scores;
  }
  return scores;
}

Tensor Classifier::forward(const ParamSet& params, const Tensor& x, NetCache* cache) const {
  return run(params, nullptr, false, x, cache);
}

Tensor Classifier::forward_train(ParamSet& params, const Tensor& x, NetCache& cache) const {
  return run(params, &params, true, x, &cache);
}

const Tensor& Classifier::logits(const NetCache& cache) const { return cache.units.back().output; }

void Classifier::backward(const ParamSet& params, const NetCache& cache, const Tensor& grad_scores,
                          ParamSet* grads, Tensor* grad_input) const {
  backward_logits(params, cache, ops::sigmoid_backward(cache.output, grad_scores), grads, grad_input);
}

void Classifier::backward_logits(const ParamSet& params, const NetCache& cache,
                                 const Tensor& grad_logits, ParamSet* grads,
                                 Tensor* grad_input) const {
  const auto units = detail::classifier_units(spec_);
  if (cache.units.size() != units.size()) throw Error("classifier cache does not match network");
  const std::size_t blocks = units.size() - 1;
  const float slope = spec_.leaky_slope;
  Tensor g = detail::unit_backward(units[blocks], params, cache.train, slope, cache.units[blocks],
                                   grad_logits, grads, true);
  g = ops::global_avg_pool_backward(cache.units[blocks - 1].output.shape(), g);
  for (std::size_t i = blocks; i-- > 0;) {
    const bool need = i > 0 || grad_input != nullptr;
    g = detail::unit_backward(units[i], params, cache.train, slope, cache.units[i], g, grads, need);
    if (!need) break;
  }
  if (grad_input) *grad_input = std::move(g);
}

}  // namespace aquagan
