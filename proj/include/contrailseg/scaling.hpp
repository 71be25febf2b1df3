#pragma once

namespace contrailseg {

struct ScalingConfig {
  double alpha = 1.2;  // depth base
  double beta = 1.1;   // width base
  double gamma = 1.15; // resolution base
  double phi = 0.0;
};

struct ScaleMultipliers {
  double depth = 1.0;
  double width = 1.0;
  double resolution = 1.0;
};

// (alpha^phi, beta^phi, gamma^phi); bases below 1 are rejected.
ScaleMultipliers compound_scale(const ScalingConfig& cfg);

// ceil(repeats * depth), never below 1.
int scaled_repeats(int repeats, double depth_mult);

// round(channels * width) snapped up to a multiple of 4, never below 4.
int scaled_channels(int channels, double width_mult);

int scaled_resolution(int resolution, double resolution_mult);

}  // namespace contrailseg
