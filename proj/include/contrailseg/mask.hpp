#pragma once

#include <cstdint>
#include <vector>

#include "contrailseg/tensor.hpp"

namespace contrailseg {

struct HardMask {
  int height = 0;
  int width = 0;
  std::vector<uint8_t> v;  // 0 or 1, row-major

  HardMask() = default;
  HardMask(int h, int w) : height(h), width(w), v(static_cast<size_t>(h) * w, 0) {}
  uint8_t at(int y, int x) const { return v[static_cast<size_t>(y) * width + x]; }
  void set(int y, int x, uint8_t val) { v[static_cast<size_t>(y) * width + x] = val; }
  int64_t count() const;
};

struct SoftMask {
  int height = 0;
  int width = 0;
  std::vector<float> v;  // [0,1], row-major

  SoftMask() = default;
  SoftMask(int h, int w) : height(h), width(w), v(static_cast<size_t>(h) * w, 0.0f) {}
  float at(int y, int x) const { return v[static_cast<size_t>(y) * width + x]; }
};

SoftMask to_soft(const HardMask& m);
Tensor mask_tensor(const SoftMask& m);  // [1,H,W]
Tensor mask_tensor(const HardMask& m);
SoftMask soft_from_tensor(const Tensor& t);  // accepts [H,W], [1,H,W] or [1,1,H,W]

}  // namespace contrailseg
