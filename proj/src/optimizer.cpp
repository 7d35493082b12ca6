#include "aquagan/optimizer.hpp"

#include <cmath>

#include "aquagan/errors.hpp"

namespace aquagan {

Adam::Adam(const ParamSet& params, AdamConfig config) : config_(config) {
  if (!(config.lr > 0.0)) throw Error("learning rate must be positive");
  for (const auto& e : params.entries()) {
    m_.emplace_back(e.trainable ? e.value.numel() : 0, 0.0);
    v_.emplace_back(e.trainable ? e.value.numel() : 0, 0.0);
  }
}

void Adam::step(ParamSet& params, const ParamSet& grads) {
  auto entries = params.entries();
  if (entries.size() != m_.size()) throw Error("optimizer state does not match parameter set");
  ++t_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < entries.size(); ++k) {
    auto& e = entries[k];
    if (!e.trainable) continue;
    const Tensor& g = grads.at(e.name);
    require_same_shape(e.value, g, "adam step");
    auto& m = m_[k];
    auto& v = v_[k];
    float* w = e.value.data();
    const float* gd = g.data();
    for (std::size_t i = 0; i < m.size(); ++i) {
      const double gi = gd[i];
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * gi;
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * gi * gi;
      const double mh = m[i] / bc1;
      const double vh = v[i] / bc2;
      w[i] = static_cast<float>(w[i] - config_.lr * mh / (std::sqrt(vh) + config_.eps));
    }
  }
}

}  // namespace aquagan
