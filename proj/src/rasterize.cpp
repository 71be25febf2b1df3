#include "contrailseg/rasterize.hpp"

#include <cmath>

#include "contrailseg/errors.hpp"

namespace contrailseg {

RasterConvention convention_from_string(const std::string& s) {
  if (s == "center") return RasterConvention::center;
  if (s == "legacy") return RasterConvention::legacy;
  throw ConfigError("unknown rasterization convention '" + s + "' (expected center|legacy)");
}

std::string to_string(RasterConvention c) {
  return c == RasterConvention::center ? "center" : "legacy";
}

namespace {

bool on_segment(const Vec2& a, const Vec2& b, double px, double py) {
  double cross = (b.x - a.x) * (py - a.y) - (b.y - a.y) * (px - a.x);
  if (cross != 0.0) return false;
  double dot = (px - a.x) * (b.x - a.x) + (py - a.y) * (b.y - a.y);
  double len2 = (b.x - a.x) * (b.x - a.x) + (b.y - a.y) * (b.y - a.y);
  return dot >= 0.0 && dot <= len2;
}

}  // namespace

bool point_in_rings(const std::vector<Ring>& rings, double px, double py) {
  bool inside = false;
  for (const Ring& ring : rings) {
    if (ring.size() < 3)
      throw AnnotationError("degenerate polygon ring with " + std::to_string(ring.size()) +
                            " vertices");
    size_t n = ring.size();
    for (size_t i = 0, j = n - 1; i < n; j = i++) {
      const Vec2& a = ring[j];
      const Vec2& b = ring[i];
      if (on_segment(a, b, px, py)) return true;  // boundary counts as inside
      if ((b.y > py) != (a.y > py)) {
        double xint = b.x + (py - b.y) * (a.x - b.x) / (a.y - b.y);
        if (px < xint) inside = !inside;
      }
    }
  }
  return inside;
}

HardMask rasterize(const PolygonAnnotation& ann, int height, int width,
                   RasterConvention convention) {
  if (height <= 0 || width <= 0)
    throw DimensionError("rasterize: non-positive raster extent " + std::to_string(height) +
                         "x" + std::to_string(width));
  HardMask mask(height, width);
  if (ann.polygons.empty()) return mask;
  const double off = convention == RasterConvention::center ? 0.5 : 1.0;
  for (int i = 0; i < height; ++i) {
    for (int j = 0; j < width; ++j) {
      if (point_in_rings(ann.polygons, j + off, i + off)) mask.set(i, j, 1);
    }
  }
  return mask;
}

SoftMask aggregate_soft(const AnnotationSet& set, int height, int width,
                        RasterConvention convention) {
  if (set.annotations.empty())
    throw UsageError("aggregate_soft: annotation set '" + set.sample_id + "' is empty");
  std::vector<int> votes(static_cast<size_t>(height) * width, 0);
  for (const PolygonAnnotation& ann : set.annotations) {
    HardMask m = rasterize(ann, height, width, convention);
    for (size_t i = 0; i < votes.size(); ++i) votes[i] += m.v[i];
  }
  SoftMask out(height, width);
  const float n = static_cast<float>(set.annotations.size());
  for (size_t i = 0; i < votes.size(); ++i) out.v[i] = static_cast<float>(votes[i]) / n;
  return out;
}

HardMask aggregate_majority(const AnnotationSet& set, int height, int width,
                            RasterConvention convention) {
  SoftMask s = aggregate_soft(set, height, width, convention);
  HardMask out(height, width);
  for (size_t i = 0; i < s.v.size(); ++i) out.v[i] = s.v[i] > 0.5f ? 1 : 0;
  return out;
}

}  // namespace contrailseg
