#pragma once

#include <cstdint>
#include <string>

#include "contrailseg/dataset.hpp"
#include "contrailseg/rasterize.hpp"

namespace contrailseg {

// Synthetic contrail scenes: bright anti-aliased capsule streaks over a noisy
// background, drifting between frames, annotated by several jittered (and
// occasionally missing) annotators. Output is a pure function of the config
// and seed.
struct SceneConfig {
  int height = 64;
  int width = 64;
  int frames = 2;
  int annotators = 4;
  int num_samples = 20;
  int min_contrails = 1;
  int max_contrails = 2;
  float min_width = 2.5f;
  float max_width = 4.5f;
  float min_length = 18.0f;
  float max_length = 40.0f;
  float drift = 1.5f;          // per-frame center displacement, px
  float jitter_sigma = 1.0f;   // annotator vertex noise, px
  float miss_prob = 0.1f;      // chance an annotator skips a contrail
  float background = 0.25f;
  float noise_sigma = 0.04f;
  float streak_gain = 0.5f;
  RasterConvention convention = RasterConvention::legacy;
};

void apply_preset(SceneConfig& cfg, const std::string& name);  // "default" | "easy"
void validate_scene(const SceneConfig& cfg);

Corpus generate_corpus(const SceneConfig& cfg, uint64_t seed);

}  // namespace contrailseg
