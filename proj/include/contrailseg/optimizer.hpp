#pragma once

#include <cstdint>
#include <vector>

#include "contrailseg/tensor.hpp"

namespace contrailseg {

enum class OptKind { sgd, adam };

struct OptimizerConfig {
  OptKind kind = OptKind::adam;
  float lr = 1e-3f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
};

// In-place parameter update. Zero gradients leave parameters unchanged for
// both variants. State (first/second moments, step count) is keyed by
// parameter position, so the caller must pass the same parameter list every
// step.
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig cfg) : cfg_(cfg) {}

  void step(std::vector<Tensor*>& params, const std::vector<const std::vector<float>*>& grads);

  const OptimizerConfig& config() const { return cfg_; }

 private:
  OptimizerConfig cfg_;
  int64_t t_ = 0;
  std::vector<std::vector<float>> m_, v_;
};

}  // namespace contrailseg
