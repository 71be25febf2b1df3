#pragma once

#include "contrailseg/rng.hpp"
#include "contrailseg/tensor.hpp"

namespace contrailseg {

struct AugmentConfig {
  float ssr_prob = 0.6f;
  float shift_limit = 0.0625f;   // fraction of each spatial extent
  float scale_limit = 0.1f;      // scale drawn from [1-l, 1+l]
  float rotate_limit_deg = 15.0f;
  float hflip_prob = 0.5f;
};

// One sampled transform, shared by an image and its target mask.
struct AugmentTransform {
  bool ssr = false;
  bool hflip = false;
  float shift_x = 0.0f;  // fraction of width
  float shift_y = 0.0f;  // fraction of height
  float scale = 1.0f;
  float angle_deg = 0.0f;

  bool identity() const { return !ssr && !hflip; }
};

// Consumes a fixed number of draws from `rng` regardless of which parts apply,
// so downstream streams stay aligned across configurations.
AugmentTransform sample_transform(Rng& rng, const AugmentConfig& cfg);

// Warps the trailing two axes with bilinear sampling and edge clamping.
// Identity transforms return an exact copy (no resampling loss).
Tensor apply_transform(const Tensor& t, const AugmentTransform& tr);

}  // namespace contrailseg
