#pragma once

#include "contrailseg/tensor.hpp"

namespace contrailseg {

// Half-pixel alignment correction. The output at (x, y) is the input sampled
// bilinearly at (x + dx, y + dy) with edge clamping, per channel; the default
// (+0.5, +0.5) moves image content onto the footprint produced by the legacy
// rasterization convention. Masks are never run through this.
// Accepts [H,W], [C,H,W] or [N,C,H,W].
Tensor misalignment_correct(const Tensor& image, float dx = 0.5f, float dy = 0.5f);

}  // namespace contrailseg
