#pragma once

#include <string>
#include <vector>

#include "contrailseg/mask.hpp"

namespace contrailseg {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

using Ring = std::vector<Vec2>;  // closed implicitly; at least 3 vertices

struct PolygonAnnotation {
  int annotator_id = 0;
  std::vector<Ring> polygons;
};

struct AnnotationSet {
  std::string sample_id;
  std::vector<PolygonAnnotation> annotations;
};

// Pixel sampling conventions. center tests the pixel center (j+0.5, i+0.5).
// legacy reproduces the half-pixel defect of the historical mask converter
// by testing the point (j+1.0, i+1.0) instead, which drags the footprint
// half a pixel up-left relative to center-convention output.
enum class RasterConvention { center, legacy };

RasterConvention convention_from_string(const std::string& s);
std::string to_string(RasterConvention c);

// Even-odd point-in-polygon over all rings; points exactly on a boundary
// count as inside. Throws AnnotationError on degenerate rings (< 3 vertices).
bool point_in_rings(const std::vector<Ring>& rings, double px, double py);

HardMask rasterize(const PolygonAnnotation& ann, int height, int width,
                   RasterConvention convention);

// Per-pixel mean of the annotators' rasterized masks (values are exactly
// k/N). Throws UsageError on an empty annotation set.
SoftMask aggregate_soft(const AnnotationSet& set, int height, int width,
                        RasterConvention convention);

// Strict majority: pixel set iff more than half of the annotators marked it.
HardMask aggregate_majority(const AnnotationSet& set, int height, int width,
                            RasterConvention convention);

}  // namespace contrailseg
