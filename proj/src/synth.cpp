#include "contrailseg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "contrailseg/errors.hpp"
#include "contrailseg/rng.hpp"

namespace contrailseg {

namespace {

struct Capsule {
  double cx, cy;      // center at frame 0
  double dirx, diry;  // unit axis
  double len, width;
  double dx, dy;      // per-frame drift
  float gain;

  double ax(int f) const { return cx + f * dx - dirx * len * 0.5; }
  double ay(int f) const { return cy + f * dy - diry * len * 0.5; }
  double bx(int f) const { return cx + f * dx + dirx * len * 0.5; }
  double by(int f) const { return cy + f * dy + diry * len * 0.5; }
};

double point_seg_dist(double px, double py, double ax, double ay, double bx, double by) {
  double vx = bx - ax, vy = by - ay;
  double len2 = vx * vx + vy * vy;
  double t = len2 > 0 ? ((px - ax) * vx + (py - ay) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  double qx = ax + t * vx, qy = ay + t * vy;
  return std::hypot(px - qx, py - qy);
}

double cross(double ox, double oy, double ax, double ay, double bx, double by) {
  return (ax - ox) * (by - oy) - (ay - oy) * (bx - ox);
}

double seg_seg_dist(double a1x, double a1y, double a2x, double a2y, double b1x, double b1y,
                    double b2x, double b2y) {
  double d1 = cross(b1x, b1y, b2x, b2y, a1x, a1y);
  double d2 = cross(b1x, b1y, b2x, b2y, a2x, a2y);
  double d3 = cross(a1x, a1y, a2x, a2y, b1x, b1y);
  double d4 = cross(a1x, a1y, a2x, a2y, b2x, b2y);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0)))
    return 0.0;  // proper crossing
  double d = point_seg_dist(a1x, a1y, b1x, b1y, b2x, b2y);
  d = std::min(d, point_seg_dist(a2x, a2y, b1x, b1y, b2x, b2y));
  d = std::min(d, point_seg_dist(b1x, b1y, a1x, a1y, a2x, a2y));
  d = std::min(d, point_seg_dist(b2x, b2y, a1x, a1y, a2x, a2y));
  return d;
}

Ring capsule_quad(const Capsule& c, int frame) {
  double nx = -c.diry, ny = c.dirx;
  double hw = c.width * 0.5;
  double ax = c.ax(frame), ay = c.ay(frame), bx = c.bx(frame), by = c.by(frame);
  return Ring{Vec2{ax + nx * hw, ay + ny * hw}, Vec2{bx + nx * hw, by + ny * hw},
              Vec2{bx - nx * hw, by - ny * hw}, Vec2{ax - nx * hw, ay - ny * hw}};
}

}  // namespace

void apply_preset(SceneConfig& cfg, const std::string& name) {
  if (name == "default") {
    cfg = SceneConfig{};
  } else if (name == "easy") {
    cfg = SceneConfig{};
    cfg.convention = RasterConvention::center;
    cfg.miss_prob = 0.0f;
    cfg.jitter_sigma = 0.5f;
    cfg.noise_sigma = 0.02f;
    cfg.streak_gain = 0.7f;
    cfg.max_contrails = 1;
  } else {
    throw ConfigError("unknown scene preset '" + name + "' (known: default, easy)");
  }
}

void validate_scene(const SceneConfig& cfg) {
  if (cfg.height < 16 || cfg.width < 16)
    throw ConfigError("scene.height/width must be >= 16");
  if (cfg.frames < 1) throw ConfigError("scene.frames must be >= 1");
  if (cfg.annotators < 1) throw ConfigError("scene.annotators must be >= 1");
  if (cfg.num_samples < 1) throw ConfigError("scene.num_samples must be >= 1");
  if (cfg.min_contrails < 1 || cfg.max_contrails < cfg.min_contrails)
    throw ConfigError("scene.min_contrails/max_contrails must satisfy 1 <= min <= max");
  if (cfg.min_width <= 0 || cfg.max_width < cfg.min_width)
    throw ConfigError("scene.min_width/max_width must satisfy 0 < min <= max");
  if (cfg.min_length <= 0 || cfg.max_length < cfg.min_length)
    throw ConfigError("scene.min_length/max_length must satisfy 0 < min <= max");
  if (cfg.min_length < 3.0f * cfg.max_width)
    throw ConfigError("scene.min_length must be >= 3x scene.max_width to keep streaks elongated");
  if (cfg.drift < 0 || cfg.jitter_sigma < 0 || cfg.noise_sigma < 0)
    throw ConfigError("scene noise magnitudes must be >= 0");
  if (cfg.miss_prob < 0 || cfg.miss_prob >= 1)
    throw ConfigError("scene.miss_prob must be in [0, 1)");
  if (cfg.max_length + 8.0f > static_cast<float>(std::min(cfg.height, cfg.width)))
    throw ConfigError("scene.max_length too large for the image size");
}

Corpus generate_corpus(const SceneConfig& cfg, uint64_t seed) {
  validate_scene(cfg);

  Corpus corpus;
  corpus.convention = cfg.convention;
  corpus.annotators = cfg.annotators;
  corpus.height = cfg.height;
  corpus.width = cfg.width;
  corpus.frames_per_sample = cfg.frames;

  for (int si = 0; si < cfg.num_samples; ++si) {
    Rng rng = make_rng(mix_seed(seed, 0x7363656e65ULL + static_cast<uint64_t>(si)));
    SampleRecord rec;
    char idbuf[16];
    std::snprintf(idbuf, sizeof idbuf, "s%04d", si);
    rec.id = idbuf;
    rec.height = cfg.height;
    rec.width = cfg.width;

    int count = cfg.min_contrails +
                static_cast<int>(uniform_index(
                    rng, static_cast<uint32_t>(cfg.max_contrails - cfg.min_contrails + 1)));

    std::vector<Capsule> caps;
    const double margin = 3.0;
    for (int ci = 0; ci < count; ++ci) {
      bool placed = false;
      for (int attempt = 0; attempt < 200 && !placed; ++attempt) {
        Capsule c;
        c.len = uniform(rng, cfg.min_length, cfg.max_length);
        c.width = uniform(rng, cfg.min_width, cfg.max_width);
        double theta = uniform(rng, 0.0f, static_cast<float>(M_PI));
        c.dirx = std::cos(theta);
        c.diry = std::sin(theta);
        c.cx = uniform(rng, static_cast<float>(margin + c.len * 0.5),
                       static_cast<float>(cfg.width - margin - c.len * 0.5));
        c.cy = uniform(rng, static_cast<float>(margin + c.len * 0.5),
                       static_cast<float>(cfg.height - margin - c.len * 0.5));
        double phi = uniform(rng, 0.0f, static_cast<float>(2.0 * M_PI));
        c.dx = cfg.drift * std::cos(phi);
        c.dy = cfg.drift * std::sin(phi);
        c.gain = cfg.streak_gain * uniform(rng, 0.8f, 1.2f);

        bool ok = true;
        for (int f = 0; f < cfg.frames && ok; ++f) {
          double xs[] = {c.ax(f), c.bx(f)}, ys[] = {c.ay(f), c.by(f)};
          for (int e = 0; e < 2; ++e) {
            double m = margin + c.width * 0.5;
            if (xs[e] < m || xs[e] > cfg.width - m || ys[e] < m || ys[e] > cfg.height - m)
              ok = false;
          }
        }
        for (const Capsule& o : caps) {
          if (!ok) break;
          for (int f = 0; f < cfg.frames && ok; ++f) {
            double d = seg_seg_dist(c.ax(f), c.ay(f), c.bx(f), c.by(f), o.ax(f), o.ay(f),
                                    o.bx(f), o.by(f));
            if (d < (c.width + o.width) * 0.5 + 2.0) ok = false;
          }
        }
        if (ok) {
          caps.push_back(c);
          placed = true;
        }
      }
      if (!placed)
        throw ConfigError("contrail placement failed after 200 attempts; scene too crowded");
    }

    // Images: background + noise + anti-aliased streaks, pixel centers at
    // (j+0.5, i+0.5).
    for (int f = 0; f < cfg.frames; ++f) {
      Tensor img({1, cfg.height, cfg.width});
      for (int i = 0; i < cfg.height; ++i) {
        for (int j = 0; j < cfg.width; ++j) {
          double v = cfg.background + normal(rng, 0.0f, cfg.noise_sigma);
          double px = j + 0.5, py = i + 0.5;
          for (const Capsule& c : caps) {
            double d = point_seg_dist(px, py, c.ax(f), c.ay(f), c.bx(f), c.by(f));
            double cov = std::clamp(c.width * 0.5 + 0.5 - d, 0.0, 1.0);
            v += c.gain * cov;
          }
          img.data[static_cast<size_t>(i) * cfg.width + j] =
              static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
      }
      rec.frames.push_back(std::move(img));
      rec.truth.emplace_back();
      for (const Capsule& c : caps) rec.truth.back().push_back(capsule_quad(c, f));
    }

    // Annotations: one miss decision per (annotator, contrail), fresh vertex
    // jitter per frame.
    std::vector<std::vector<bool>> missed(static_cast<size_t>(cfg.annotators));
    for (int a = 0; a < cfg.annotators; ++a)
      for (size_t ci = 0; ci < caps.size(); ++ci)
        missed[static_cast<size_t>(a)].push_back(bernoulli(rng, cfg.miss_prob));

    for (int f = 0; f < cfg.frames; ++f) {
      AnnotationSet set;
      set.sample_id = rec.id;
      for (int a = 0; a < cfg.annotators; ++a) {
        PolygonAnnotation ann;
        ann.annotator_id = a;
        for (size_t ci = 0; ci < caps.size(); ++ci) {
          if (missed[static_cast<size_t>(a)][ci]) continue;
          Ring quad = capsule_quad(caps[ci], f);
          for (Vec2& v : quad) {
            v.x += normal(rng, 0.0f, cfg.jitter_sigma);
            v.y += normal(rng, 0.0f, cfg.jitter_sigma);
          }
          ann.polygons.push_back(std::move(quad));
        }
        set.annotations.push_back(std::move(ann));
      }
      rec.annotations.push_back(std::move(set));
    }

    corpus.samples.push_back(std::move(rec));
  }
  return corpus;
}

}  // namespace contrailseg
