#include "contrailseg/validity.hpp"

#include <cmath>
#include <limits>

#include "contrailseg/errors.hpp"

namespace contrailseg {

namespace {

struct Component {
  std::vector<int> pixels;  // flat indices
  int area = 0;
  double aspect = 0.0;
  bool touches_edge = false;
  bool frame_pass = false;  // area + aspect
};

std::vector<Component> find_components(const HardMask& m) {
  const int h = m.height, w = m.width;
  std::vector<int> label(static_cast<size_t>(h) * w, -1);
  std::vector<Component> comps;
  std::vector<int> stack;
  for (int start = 0; start < h * w; ++start) {
    if (!m.v[static_cast<size_t>(start)] || label[static_cast<size_t>(start)] >= 0) continue;
    int id = static_cast<int>(comps.size());
    comps.emplace_back();
    stack.assign(1, start);
    label[static_cast<size_t>(start)] = id;
    while (!stack.empty()) {
      int cur = stack.back();
      stack.pop_back();
      comps[static_cast<size_t>(id)].pixels.push_back(cur);
      int cy = cur / w, cx = cur % w;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (!dy && !dx) continue;
          int ny = cy + dy, nx = cx + dx;
          if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
          int ni = ny * w + nx;
          if (m.v[static_cast<size_t>(ni)] && label[static_cast<size_t>(ni)] < 0) {
            label[static_cast<size_t>(ni)] = id;
            stack.push_back(ni);
          }
        }
      }
    }
  }
  for (Component& c : comps) {
    c.area = static_cast<int>(c.pixels.size());
    for (int p : c.pixels) {
      int y = p / w, x = p % w;
      if (y == 0 || y == h - 1 || x == 0 || x == w - 1) c.touches_edge = true;
    }
  }
  return comps;
}

double component_iou(const Component& a, const Component& b, std::vector<uint8_t>& scratch) {
  for (int p : a.pixels) scratch[static_cast<size_t>(p)] = 1;
  int inter = 0;
  for (int p : b.pixels) inter += scratch[static_cast<size_t>(p)];
  for (int p : a.pixels) scratch[static_cast<size_t>(p)] = 0;
  int uni = a.area + b.area - inter;
  return uni > 0 ? static_cast<double>(inter) / uni : 0.0;
}

}  // namespace

std::pair<double, double> principal_extents(const std::vector<std::pair<int, int>>& pixels) {
  if (pixels.empty()) return {0.0, 0.0};
  double mx = 0.0, my = 0.0;
  for (auto [y, x] : pixels) {
    mx += x;
    my += y;
  }
  mx /= static_cast<double>(pixels.size());
  my /= static_cast<double>(pixels.size());
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (auto [y, x] : pixels) {
    double dx = x - mx, dy = y - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  // Closed-form eigenvectors of [[sxx,sxy],[sxy,syy]]; axis-aligned when the
  // cross term vanishes so symmetric shapes stay deterministic.
  double ex1, ey1;
  if (sxy == 0.0) {
    if (sxx >= syy) {
      ex1 = 1.0;
      ey1 = 0.0;
    } else {
      ex1 = 0.0;
      ey1 = 1.0;
    }
  } else {
    double tr = sxx + syy;
    double det = sxx * syy - sxy * sxy;
    double l1 = tr / 2.0 + std::sqrt(std::fmax(tr * tr / 4.0 - det, 0.0));
    ex1 = l1 - syy;
    ey1 = sxy;
    double norm = std::sqrt(ex1 * ex1 + ey1 * ey1);
    ex1 /= norm;
    ey1 /= norm;
  }
  double ex2 = -ey1, ey2 = ex1;
  double lo1 = std::numeric_limits<double>::max(), hi1 = -lo1;
  double lo2 = lo1, hi2 = -lo1;
  for (auto [y, x] : pixels) {
    double p1 = x * ex1 + y * ey1;
    double p2 = x * ex2 + y * ey2;
    lo1 = std::fmin(lo1, p1);
    hi1 = std::fmax(hi1, p1);
    lo2 = std::fmin(lo2, p2);
    hi2 = std::fmax(hi2, p2);
  }
  double e1 = hi1 - lo1 + 1.0;
  double e2 = hi2 - lo2 + 1.0;
  if (e1 < e2) std::swap(e1, e2);
  return {e1, e2};
}

std::pair<std::vector<HardMask>, ValidityReport> validity_filter(
    const std::vector<HardMask>& frames, const ValidityConfig& cfg) {
  if (frames.empty()) return {{}, {}};
  const int h = frames[0].height, w = frames[0].width;
  for (size_t f = 1; f < frames.size(); ++f)
    if (frames[f].height != h || frames[f].width != w)
      throw DimensionError("validity_filter: frame " + std::to_string(f) +
                           " size mismatch with frame 0");

  std::vector<std::vector<Component>> per_frame;
  per_frame.reserve(frames.size());
  for (const HardMask& m : frames) per_frame.push_back(find_components(m));

  for (std::vector<Component>& comps : per_frame) {
    for (Component& c : comps) {
      std::vector<std::pair<int, int>> pts;
      pts.reserve(c.pixels.size());
      for (int p : c.pixels) pts.emplace_back(p / w, p % w);
      auto [e1, e2] = principal_extents(pts);
      c.aspect = e2 > 0.0 ? e1 / e2 : 0.0;
      c.frame_pass = c.area >= cfg.min_pixels && c.aspect >= cfg.min_aspect;
    }
  }

  const bool temporal_active = static_cast<int>(frames.size()) >= cfg.min_frames;
  std::vector<uint8_t> scratch(static_cast<size_t>(h) * w, 0);
  std::vector<HardMask> out(frames.size(), HardMask(h, w));
  ValidityReport report;
  for (size_t f = 0; f < per_frame.size(); ++f) {
    for (size_t ci = 0; ci < per_frame[f].size(); ++ci) {
      const Component& c = per_frame[f][ci];
      bool temporal = true;
      if (temporal_active) {
        temporal = false;
        for (int df : {-1, 1}) {
          int nf = static_cast<int>(f) + df;
          if (nf < 0 || nf >= static_cast<int>(per_frame.size())) continue;
          for (const Component& o : per_frame[static_cast<size_t>(nf)]) {
            if (!o.frame_pass) continue;
            if (component_iou(c, o, scratch) > cfg.temporal_iou) {
              temporal = true;
              break;
            }
          }
          if (temporal) break;
        }
      }
      bool kept = c.frame_pass && temporal;
      if (kept)
        for (int p : c.pixels) out[f].v[static_cast<size_t>(p)] = 1;
      report.components.push_back(ComponentReport{
          static_cast<int>(f), static_cast<int>(ci), c.area, c.aspect,
          c.area >= cfg.min_pixels, c.aspect >= cfg.min_aspect, temporal, c.touches_edge,
          kept});
    }
  }
  return {std::move(out), std::move(report)};
}

}  // namespace contrailseg
