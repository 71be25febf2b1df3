#include "contrailseg/misalign.hpp"

#include <cmath>

#include "contrailseg/errors.hpp"

namespace contrailseg {

Tensor misalignment_correct(const Tensor& image, float dx, float dy) {
  int h = 0, w = 0;
  if (image.ndim() == 2) {
    h = image.dim(0);
    w = image.dim(1);
  } else if (image.ndim() == 3) {
    h = image.dim(1);
    w = image.dim(2);
  } else if (image.ndim() == 4) {
    h = image.dim(2);
    w = image.dim(3);
  } else {
    throw DimensionError("misalignment_correct: expected 2-4 dims, got " + image.shape_str());
  }
  if (h <= 0 || w <= 0)
    throw DimensionError("misalignment_correct: empty spatial extent in " + image.shape_str());

  int planes = static_cast<int>(image.numel() / (static_cast<int64_t>(h) * w));
  Tensor out(image.shape);
  auto clampi = [](int v, int hi) { return v < 0 ? 0 : (v > hi ? hi : v); };
  for (int p = 0; p < planes; ++p) {
    const float* src = image.data.data() + static_cast<int64_t>(p) * h * w;
    float* dst = out.data.data() + static_cast<int64_t>(p) * h * w;
    for (int y = 0; y < h; ++y) {
      float sy = static_cast<float>(y) + dy;
      int y0 = static_cast<int>(std::floor(sy));
      float fy = sy - static_cast<float>(y0);
      int ya = clampi(y0, h - 1), yb = clampi(y0 + 1, h - 1);
      for (int x = 0; x < w; ++x) {
        float sx = static_cast<float>(x) + dx;
        int x0 = static_cast<int>(std::floor(sx));
        float fx = sx - static_cast<float>(x0);
        int xa = clampi(x0, w - 1), xb = clampi(x0 + 1, w - 1);
        float top = src[ya * w + xa] + (src[ya * w + xb] - src[ya * w + xa]) * fx;
        float bot = src[yb * w + xa] + (src[yb * w + xb] - src[yb * w + xa]) * fx;
        dst[y * w + x] = top + (bot - top) * fy;
      }
    }
  }
  return out;
}

}  // namespace contrailseg
