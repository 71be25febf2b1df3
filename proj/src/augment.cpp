#include "contrailseg/augment.hpp"

#include <cmath>

#include "contrailseg/errors.hpp"

namespace contrailseg {

AugmentTransform sample_transform(Rng& rng, const AugmentConfig& cfg) {
  AugmentTransform tr;
  float gate = uniform01(rng);
  tr.shift_x = uniform(rng, -cfg.shift_limit, cfg.shift_limit);
  tr.shift_y = uniform(rng, -cfg.shift_limit, cfg.shift_limit);
  tr.scale = uniform(rng, 1.0f - cfg.scale_limit, 1.0f + cfg.scale_limit);
  tr.angle_deg = uniform(rng, -cfg.rotate_limit_deg, cfg.rotate_limit_deg);
  tr.ssr = gate < cfg.ssr_prob;
  if (!tr.ssr) {
    tr.shift_x = tr.shift_y = 0.0f;
    tr.scale = 1.0f;
    tr.angle_deg = 0.0f;
  }
  tr.hflip = uniform01(rng) < cfg.hflip_prob;
  return tr;
}

namespace {

inline int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

inline float sample_plane(const float* p, int h, int w, double x, double y) {
  int x0 = static_cast<int>(std::floor(x));
  int y0 = static_cast<int>(std::floor(y));
  double fx = x - x0, fy = y - y0;
  int x1 = clampi(x0 + 1, 0, w - 1), y1 = clampi(y0 + 1, 0, h - 1);
  x0 = clampi(x0, 0, w - 1);
  y0 = clampi(y0, 0, h - 1);
  double top = p[y0 * w + x0] * (1.0 - fx) + p[y0 * w + x1] * fx;
  double bot = p[y1 * w + x0] * (1.0 - fx) + p[y1 * w + x1] * fx;
  return static_cast<float>(top * (1.0 - fy) + bot * fy);
}

}  // namespace

Tensor apply_transform(const Tensor& t, const AugmentTransform& tr) {
  if (t.ndim() < 2)
    throw DimensionError("apply_transform: need at least 2 axes, got " + t.shape_str());
  if (tr.identity()) return t;

  int h = t.dim(t.ndim() - 2);
  int w = t.dim(t.ndim() - 1);
  int planes = static_cast<int>(t.numel()) / (h * w);
  Tensor out(t.shape);

  double cx = (w - 1) * 0.5, cy = (h - 1) * 0.5;
  double rad = tr.angle_deg * M_PI / 180.0;
  double c = std::cos(rad), s = std::sin(rad);
  double inv_scale = 1.0 / tr.scale;
  double tx = tr.shift_x * w, ty = tr.shift_y * h;

  for (int pl = 0; pl < planes; ++pl) {
    const float* src = t.data.data() + static_cast<size_t>(pl) * h * w;
    float* dst = out.data.data() + static_cast<size_t>(pl) * h * w;
    for (int i = 0; i < h; ++i) {
      for (int j = 0; j < w; ++j) {
        double x = j, y = i;
        if (tr.hflip) x = (w - 1) - x;
        if (tr.ssr) {
          // invert: forward maps p -> scale*R(theta)*(p-c) + c + shift
          double dx = x - cx - tx, dy = y - cy - ty;
          double rx = (c * dx + s * dy) * inv_scale;
          double ry = (-s * dx + c * dy) * inv_scale;
          x = rx + cx;
          y = ry + cy;
        }
        dst[i * w + j] = sample_plane(src, h, w, x, y);
      }
    }
  }
  return out;
}

}  // namespace contrailseg
