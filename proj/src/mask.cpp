#include "contrailseg/mask.hpp"

#include "contrailseg/errors.hpp"

namespace contrailseg {

int64_t HardMask::count() const {
  int64_t n = 0;
  for (uint8_t b : v) n += b;
  return n;
}

SoftMask to_soft(const HardMask& m) {
  SoftMask s(m.height, m.width);
  for (size_t i = 0; i < m.v.size(); ++i) s.v[i] = static_cast<float>(m.v[i]);
  return s;
}

Tensor mask_tensor(const SoftMask& m) {
  Tensor t = Tensor::from({1, m.height, m.width}, m.v);
  return t;
}

Tensor mask_tensor(const HardMask& m) { return mask_tensor(to_soft(m)); }

SoftMask soft_from_tensor(const Tensor& t) {
  int h = 0, w = 0;
  if (t.ndim() == 2) {
    h = t.dim(0);
    w = t.dim(1);
  } else if (t.ndim() == 3 && t.dim(0) == 1) {
    h = t.dim(1);
    w = t.dim(2);
  } else if (t.ndim() == 4 && t.dim(0) == 1 && t.dim(1) == 1) {
    h = t.dim(2);
    w = t.dim(3);
  } else {
    throw DimensionError("expected a single-plane mask tensor, got " + t.shape_str());
  }
  SoftMask s(h, w);
  s.v = t.data;
  return s;
}

}  // namespace contrailseg
