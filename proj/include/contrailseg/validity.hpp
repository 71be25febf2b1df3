#pragma once

#include <utility>
#include <vector>

#include "contrailseg/mask.hpp"

namespace contrailseg {

struct ValidityConfig {
  int min_pixels = 10;
  double min_aspect = 3.0;
  int min_frames = 2;       // temporal rule applies when the sequence has at least this many frames
  double temporal_iou = 0.1;
};

struct ComponentReport {
  int frame = 0;
  int component = 0;  // index within the frame, scan order
  int area = 0;
  double aspect = 0.0;  // principal-axis extent ratio, extents counted in pixels
  bool area_pass = false;
  bool aspect_pass = false;
  bool temporal_pass = false;  // true when the rule is inactive
  bool touches_edge = false;   // reported only; never used to reject
  bool kept = false;
};

struct ValidityReport {
  std::vector<ComponentReport> components;
};

// Filters 8-connected components of a mask sequence: area >= min_pixels,
// principal-axis aspect >= min_aspect, and (for sequences of min_frames or
// more) an IoU > temporal_iou match with a component in an adjacent frame.
// Temporal matching is evaluated against components that pass the per-frame
// rules, which makes the filter idempotent. Edge-entry is reported but never
// rejects.
std::pair<std::vector<HardMask>, ValidityReport> validity_filter(
    const std::vector<HardMask>& frames, const ValidityConfig& cfg = {});

// Extent of a pixel set along its two principal axes, in pixels
// (projection range + 1). Exposed for direct testing.
std::pair<double, double> principal_extents(const std::vector<std::pair<int, int>>& pixels);

}  // namespace contrailseg
