#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mlnc/autodiff.hpp"

namespace mlnc {

struct AdamOptions {
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adam with bias correction. Moments are bound to parameters by position, so
// every step must receive the same parameter list.
class Adam {
 public:
  explicit Adam(AdamOptions options = {}) : options_(options) {}

  // Throws std::logic_error if any parameter has not been through a backward
  // pass yet, or if the parameter list changed shape since the last step.
  void step(std::span<Param> params);

  std::uint64_t steps() const { return t_; }
  const AdamOptions& options() const { return options_; }

 private:
  AdamOptions options_;
  std::uint64_t t_ = 0;
  std::vector<Tensor2> m_;
  std::vector<Tensor2> v_;
};

}  // namespace mlnc
