#pragma once

#include <cstdint>

#include "aquagan/params.hpp"

namespace aquagan {

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction. Moments are kept in double; only trainable
// entries are updated.
class Adam {
 public:
  Adam(const ParamSet& params, AdamConfig config = {});

  void step(ParamSet& params, const ParamSet& grads);

  const AdamConfig& config() const { return config_; }
  std::uint64_t steps() const { return t_; }

 private:
  AdamConfig config_;
  std::uint64_t t_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

}  // namespace aquagan
