#pragma once

#include "contrailseg/mask.hpp"
#include "contrailseg/tape.hpp"

namespace contrailseg {

struct LossConfig {
  float bce_weight = 0.5f;
  float dice_weight = 0.5f;
  float dice_smooth = 1e-6f;
  float prob_clamp = 1e-7f;
};

// Hard-mask Dice: 2|A∩B| / (|A|+|B|); two empty masks score 1.
double dice_coefficient(const HardMask& a, const HardMask& b);

// Strictly-greater threshold on a single-plane probability tensor.
HardMask threshold(const Tensor& pred, float t = 0.5f);

// Differentiable losses over probability tensors of shape [N,C,H,W] (truth
// the same shape, values in [0,1]). Scalar outputs, per-sample terms
// averaged over the batch.
int bce(Tape& tp, int pred, int truth, float prob_clamp = 1e-7f);
int soft_dice(Tape& tp, int pred, int truth, float smooth = 1e-6f);

// Weighted sum of BCE and (1 - soft Dice) over sigmoid(logits).
int composite_loss(Tape& tp, int logits, int truth, const LossConfig& cfg = {});

}  // namespace contrailseg
