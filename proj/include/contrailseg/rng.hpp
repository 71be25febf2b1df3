#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace contrailseg {

// std::mt19937 output is pinned by the standard, but the <random>
// distributions are not, so every draw below is built from raw engine
// words to keep results reproducible across toolchains.
using Rng = std::mt19937;

inline uint64_t mix_seed(uint64_t a, uint64_t b) {
  uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 0x632be59bd9b4e019ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline Rng make_rng(uint64_t seed) {
  return Rng(static_cast<uint32_t>(seed ^ (seed >> 32)));
}

// Uniform in [0,1) with a 24-bit mantissa, exact in float.
inline float uniform01(Rng& rng) {
  return static_cast<float>(rng() >> 8) * (1.0f / 16777216.0f);
}

inline float uniform(Rng& rng, float lo, float hi) {
  return lo + (hi - lo) * uniform01(rng);
}

inline uint32_t uniform_index(Rng& rng, uint32_t n) {
  return n ? rng() % n : 0;
}

inline bool bernoulli(Rng& rng, float p) {
  return uniform01(rng) < p;
}

// Box-Muller, cosine branch only so the draw count per call is fixed.
inline float normal(Rng& rng, float mean = 0.0f, float sigma = 1.0f) {
  float u1 = uniform01(rng);
  float u2 = uniform01(rng);
  if (u1 < 1.0f / 16777216.0f) u1 = 1.0f / 16777216.0f;
  float r = std::sqrt(-2.0f * std::log(u1));
  return mean + sigma * r * std::cos(6.2831853071795864f * u2);
}

}  // namespace contrailseg
