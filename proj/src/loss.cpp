#include "contrailseg/loss.hpp"

#include <cmath>

#include "contrailseg/errors.hpp"
#include "contrailseg/ops.hpp"

namespace contrailseg {

namespace {

float* grad_of(Tape& tp, int id) {
  Tensor& t = tp.at(id);
  t.ensure_grad();
  return t.grad.data();
}

void check_pair(const Tensor& pred, const Tensor& truth, const char* op) {
  if (!pred.same_shape(truth))
    throw DimensionError(std::string(op) + ": shape mismatch " + pred.shape_str() + " vs " +
                         truth.shape_str());
  for (float v : truth.data)
    if (!(v >= 0.0f && v <= 1.0f))
      throw ValueError(std::string(op) + ": truth value " + std::to_string(v) +
                       " outside [0,1]");
}

}  // namespace

double dice_coefficient(const HardMask& a, const HardMask& b) {
  if (a.height != b.height || a.width != b.width)
    throw DimensionError("dice_coefficient: mask size mismatch " + std::to_string(a.height) +
                         "x" + std::to_string(a.width) + " vs " + std::to_string(b.height) +
                         "x" + std::to_string(b.width));
  int64_t inter = 0, ca = 0, cb = 0;
  for (size_t i = 0; i < a.v.size(); ++i) {
    inter += a.v[i] & b.v[i];
    ca += a.v[i];
    cb += b.v[i];
  }
  if (ca + cb == 0) return 1.0;
  return 2.0 * static_cast<double>(inter) / static_cast<double>(ca + cb);
}

HardMask threshold(const Tensor& pred, float t) {
  SoftMask s = soft_from_tensor(pred);
  HardMask m(s.height, s.width);
  for (size_t i = 0; i < s.v.size(); ++i) m.v[i] = s.v[i] > t ? 1 : 0;
  return m;
}

int bce(Tape& tp, int pred, int truth, float prob_clamp) {
  const Tensor& p = tp.at(pred);
  const Tensor& g = tp.at(truth);
  check_pair(p, g, "bce");
  if (p.numel() == 0) throw UsageError("bce: empty tensor");
  const float lo = prob_clamp, hi = 1.0f - prob_clamp;
  double acc = 0.0;
  for (size_t i = 0; i < p.data.size(); ++i) {
    float pc = p.data[i] < lo ? lo : (p.data[i] > hi ? hi : p.data[i]);
    float t = g.data[i];
    acc -= static_cast<double>(t) * std::log(pc) +
           static_cast<double>(1.0f - t) * std::log(1.0f - pc);
  }
  float inv = 1.0f / static_cast<float>(p.numel());
  Tensor out = Tensor::scalar(static_cast<float>(acc) * inv);
  out.requires_grad = p.requires_grad;

  int self = static_cast<int>(tp.size());
  return tp.record(std::move(out), [=](Tape& t) {
    if (!t.at(pred).requires_grad) return;
    float go = t.at(self).grad[0];
    const Tensor& pv = t.at(pred);
    const Tensor& gv = t.at(truth);
    float* gp = grad_of(t, pred);
    for (size_t i = 0; i < pv.data.size(); ++i) {
      float raw = pv.data[i];
      if (raw < lo || raw > hi) continue;  // clamp region: zero slope
      float tv = gv.data[i];
      gp[i] += go * inv * (-(tv / raw) + (1.0f - tv) / (1.0f - raw));
    }
  });
}

int soft_dice(Tape& tp, int pred, int truth, float smooth) {
  const Tensor& p = tp.at(pred);
  const Tensor& g = tp.at(truth);
  check_pair(p, g, "soft_dice");
  if (p.numel() == 0) throw UsageError("soft_dice: empty tensor");
  const int64_t samples = p.ndim() == 4 ? p.dim(0) : 1;
  const int64_t per = p.numel() / samples;

  std::vector<float> inter(static_cast<size_t>(samples)), tot(static_cast<size_t>(samples));
  double acc = 0.0;
  for (int64_t n = 0; n < samples; ++n) {
    const float* pp = p.data.data() + n * per;
    const float* gg = g.data.data() + n * per;
    double i2 = 0.0, s2 = 0.0;
    for (int64_t j = 0; j < per; ++j) {
      i2 += static_cast<double>(pp[j]) * gg[j];
      s2 += static_cast<double>(pp[j]) + gg[j];
    }
    inter[static_cast<size_t>(n)] = static_cast<float>(i2);
    tot[static_cast<size_t>(n)] = static_cast<float>(s2);
    acc += (2.0 * i2 + smooth) / (s2 + smooth);
  }
  Tensor out = Tensor::scalar(static_cast<float>(acc / static_cast<double>(samples)));
  out.requires_grad = p.requires_grad;

  int self = static_cast<int>(tp.size());
  return tp.record(std::move(out), [=](Tape& t) {
    if (!t.at(pred).requires_grad) return;
    float go = t.at(self).grad[0] / static_cast<float>(samples);
    const Tensor& gv = t.at(truth);
    float* gp = grad_of(t, pred);
    for (int64_t n = 0; n < samples; ++n) {
      float denom = tot[static_cast<size_t>(n)] + smooth;
      float num = 2.0f * inter[static_cast<size_t>(n)] + smooth;
      const float* gg = gv.data.data() + n * per;
      float* out_g = gp + n * per;
      float inv_d2 = 1.0f / (denom * denom);
      for (int64_t j = 0; j < per; ++j)
        out_g[j] += go * (2.0f * gg[j] * denom - num) * inv_d2;
    }
  });
}

int composite_loss(Tape& tp, int logits, int truth, const LossConfig& cfg) {
  int probs = sigmoid(tp, logits);
  int b = bce(tp, probs, truth, cfg.prob_clamp);
  int d = soft_dice(tp, probs, truth, cfg.dice_smooth);
  // bce_weight * BCE + dice_weight * (1 - Dice)
  return affine2(tp, b, d, cfg.bce_weight, -cfg.dice_weight, cfg.dice_weight);
}

}  // namespace contrailseg
