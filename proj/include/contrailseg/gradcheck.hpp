#pragma once

#include <functional>
#include <string>
#include <vector>

#include "contrailseg/tape.hpp"

namespace contrailseg {

// Builds a scalar loss on the given tape from leaves already placed there,
// returning the loss node id. Called repeatedly with perturbed inputs.
using LossBuilder = std::function<int(Tape&, const std::vector<int>&)>;

struct GradcheckReport {
  float max_error = 0.0f;     // max over all input elements
  int worst_input = -1;       // which input tensor
  int64_t worst_element = -1;  // flat index within it
  float analytic = 0.0f;
  float numeric = 0.0f;
};

// Central-difference oracle: compares analytic gradients against
// (f(x+h) - f(x-h)) / 2h with everything evaluated in 32-bit, and reports
// max |analytic - numeric| / max(1, |numeric|). Throws UsageError if the
// builder does not produce a scalar.
GradcheckReport gradcheck(const LossBuilder& build, std::vector<Tensor> inputs,
                          float h = 1e-3f);

struct GradcheckCase {
  std::string name;
  float tolerance = 1e-3f;
  float max_error = 0.0f;
  bool pass = false;
};

// Finite-difference sweep: every differentiable primitive on small random
// tensors, plus the full model loss on a 1x1x16x16 input, `seeds` draws each.
std::vector<GradcheckCase> gradcheck_suite(int seeds);

}  // namespace contrailseg
