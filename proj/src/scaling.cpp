#include "contrailseg/scaling.hpp"

#include <cmath>
#include <string>

#include "contrailseg/errors.hpp"

namespace contrailseg {

ScaleMultipliers compound_scale(const ScalingConfig& cfg) {
  if (cfg.alpha < 1.0 || cfg.beta < 1.0 || cfg.gamma < 1.0)
    throw ConfigError("compound scaling bases must be >= 1, got alpha=" +
                      std::to_string(cfg.alpha) + " beta=" + std::to_string(cfg.beta) +
                      " gamma=" + std::to_string(cfg.gamma));
  ScaleMultipliers m;
  m.depth = std::pow(cfg.alpha, cfg.phi);
  m.width = std::pow(cfg.beta, cfg.phi);
  m.resolution = std::pow(cfg.gamma, cfg.phi);
  return m;
}

int scaled_repeats(int repeats, double depth_mult) {
  int r = static_cast<int>(std::ceil(repeats * depth_mult));
  return r < 1 ? 1 : r;
}

int scaled_channels(int channels, double width_mult) {
  int c = static_cast<int>(std::lround(channels * width_mult));
  c = ((c + 3) / 4) * 4;
  return c < 4 ? 4 : c;
}

int scaled_resolution(int resolution, double resolution_mult) {
  return static_cast<int>(std::lround(resolution * resolution_mult));
}

}  // namespace contrailseg
