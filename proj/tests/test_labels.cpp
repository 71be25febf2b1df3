#include <cmath>

#include "doctest.h"

#include "contrailseg/errors.hpp"
#include "contrailseg/loss.hpp"
#include "contrailseg/mask.hpp"
#include "contrailseg/misalign.hpp"
#include "contrailseg/rasterize.hpp"
#include "contrailseg/validity.hpp"

using namespace contrailseg;

namespace {
PolygonAnnotation rect_poly(double x0, double y0, double x1, double y1) {
  PolygonAnnotation ann;
  ann.polygons.push_back({{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}});
  return ann;
}
}  // namespace

TEST_CASE("convention names round-trip") {
  CHECK(convention_from_string("center") == RasterConvention::center);
  CHECK(convention_from_string("legacy") == RasterConvention::legacy);
  CHECK(to_string(RasterConvention::legacy) == "legacy");
  CHECK_THROWS_AS(convention_from_string("middle"), ConfigError);
}

TEST_CASE("full-grid rectangle covers every center-convention pixel") {
  HardMask m = rasterize(rect_poly(0, 0, 4, 4), 4, 4, RasterConvention::center);
  CHECK(m.count() == 16);
}

TEST_CASE("legacy convention shifts the footprint up-left") {
  // Rectangle [0.8, 3.2] x [0.9, 2.9] in general position: pixel centers
  // land in it at columns {1,2} rows {1,2}; the legacy sample points
  // (j+1, i+1) land in it at columns {0,1,2} rows {0,1}.
  PolygonAnnotation ann = rect_poly(0.8, 0.9, 3.2, 2.9);
  HardMask c = rasterize(ann, 4, 4, RasterConvention::center);
  HardMask l = rasterize(ann, 4, 4, RasterConvention::legacy);

  CHECK(c.count() == 4);
  for (int y : {1, 2})
    for (int x : {1, 2}) CHECK(c.at(y, x) == 1);

  CHECK(l.count() == 6);
  for (int y : {0, 1})
    for (int x : {0, 1, 2}) CHECK(l.at(y, x) == 1);
  CHECK(l.at(2, 1) == 0);
}

TEST_CASE("even-odd handles a concave outline") {
  // L-shape: full width for y < 1.8, left half above
  PolygonAnnotation ann;
  ann.polygons.push_back(
      {{0.2, 0.2}, {3.8, 0.2}, {3.8, 1.8}, {1.8, 1.8}, {1.8, 3.8}, {0.2, 3.8}});
  HardMask m = rasterize(ann, 4, 4, RasterConvention::center);
  CHECK(m.count() == 12);
  CHECK(m.at(0, 3) == 1);
  CHECK(m.at(2, 0) == 1);
  CHECK(m.at(2, 2) == 0);  // notch
  CHECK(m.at(3, 3) == 0);
}

TEST_CASE("rasterize edge cases") {
  PolygonAnnotation empty_ann;
  CHECK(rasterize(empty_ann, 4, 4, RasterConvention::center).count() == 0);

  PolygonAnnotation bad;
  bad.polygons.push_back({{0, 0}, {1, 1}});
  CHECK_THROWS_AS(rasterize(bad, 4, 4, RasterConvention::center), AnnotationError);
  CHECK_THROWS_AS(rasterize(empty_ann, 0, 4, RasterConvention::center), DimensionError);

  CHECK(point_in_rings({{{0, 0}, {2, 0}, {2, 2}, {0, 2}}}, 2.0, 1.0));  // boundary inside
  CHECK_FALSE(point_in_rings({{{0, 0}, {2, 0}, {2, 2}, {0, 2}}}, 2.1, 1.0));
}

TEST_CASE("soft aggregation is the exact vote fraction") {
  AnnotationSet set;
  set.sample_id = "s";
  // three annotators: two agree on the left square, one marks the right
  set.annotations.push_back(rect_poly(0.6, 0.6, 2.4, 2.4));
  set.annotations.push_back(rect_poly(0.6, 0.6, 2.4, 2.4));
  set.annotations.push_back(rect_poly(2.6, 0.6, 4.4, 2.4));
  for (int i = 0; i < 3; ++i) set.annotations[static_cast<size_t>(i)].annotator_id = i;

  SoftMask soft = aggregate_soft(set, 5, 5, RasterConvention::center);
  CHECK(soft.at(1, 1) == 2.0f / 3.0f);  // exact k/N
  CHECK(soft.at(1, 3) == 1.0f / 3.0f);
  CHECK(soft.at(4, 4) == 0.0f);

  HardMask maj = aggregate_majority(set, 5, 5, RasterConvention::center);
  CHECK(maj.at(1, 1) == 1);
  CHECK(maj.at(1, 3) == 0);

  AnnotationSet none;
  none.sample_id = "empty";
  CHECK_THROWS_AS(aggregate_soft(none, 4, 4, RasterConvention::center), UsageError);
}

TEST_CASE("exact half votes fail the strict majority") {
  AnnotationSet set;
  set.sample_id = "tie";
  set.annotations.push_back(rect_poly(0.6, 0.6, 3.4, 3.4));
  set.annotations.push_back(PolygonAnnotation{});  // marks nothing
  set.annotations[1].annotator_id = 1;
  SoftMask soft = aggregate_soft(set, 4, 4, RasterConvention::center);
  CHECK(soft.at(1, 1) == 0.5f);
  CHECK(aggregate_majority(set, 4, 4, RasterConvention::center).count() == 0);
}

TEST_CASE("misalignment correction closed forms") {
  // ramp row: averaging adjacent pixels, last column edge-clamped
  Tensor ramp = Tensor::from({1, 4}, {0.0f, 1.0f, 2.0f, 3.0f});
  Tensor out = misalignment_correct(ramp);
  CHECK(out.data[0] == doctest::Approx(0.5));
  CHECK(out.data[1] == doctest::Approx(1.5));
  CHECK(out.data[2] == doctest::Approx(2.5));
  CHECK(out.data[3] == doctest::Approx(3.0));

  Tensor flat({2, 5, 5}, 0.4f);
  Tensor fout = misalignment_correct(flat);
  for (float v : fout.data) CHECK(v == doctest::Approx(0.4));
  CHECK(fout.shape == flat.shape);

  CHECK_THROWS_AS(misalignment_correct(Tensor({4}, 1.0f)), DimensionError);
}

TEST_CASE("correction maps center footprints onto legacy footprints") {
  // Oriented quads in general position. Axis-aligned shapes are degenerate
  // here: a binary mask moved by exactly half a pixel yields 0.5 everywhere
  // along the footprint boundary, and the strict threshold erodes it.
  double corrected = 0.0, uncorrected = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    double cx = 10.0 + (trial % 5) * 0.61, cy = 10.0 + (trial % 7) * 0.47;
    double th = 0.3 + trial * 0.11;
    double ux = std::cos(th), uy = std::sin(th);
    double hl = 7.0, hw = 1.8;
    PolygonAnnotation ann;
    ann.polygons.push_back({{cx - hl * ux - hw * -uy, cy - hl * uy - hw * ux},
                            {cx + hl * ux - hw * -uy, cy + hl * uy - hw * ux},
                            {cx + hl * ux + hw * -uy, cy + hl * uy + hw * ux},
                            {cx - hl * ux + hw * -uy, cy - hl * uy + hw * ux}});
    HardMask c = rasterize(ann, 24, 24, RasterConvention::center);
    HardMask l = rasterize(ann, 24, 24, RasterConvention::legacy);
    HardMask shifted = threshold(misalignment_correct(mask_tensor(c)), 0.5f);
    corrected += dice_coefficient(shifted, l);
    uncorrected += dice_coefficient(c, l);
  }
  CHECK(corrected > uncorrected);
}

TEST_CASE("principal extents measure oriented length and width") {
  std::vector<std::pair<int, int>> line;
  for (int y = 10; y < 13; ++y)
    for (int x = 0; x < 30; ++x) line.push_back({y, x});
  auto [major, minor] = principal_extents(line);
  CHECK(major == doctest::Approx(30.0));
  CHECK(minor == doctest::Approx(3.0));

  std::vector<std::pair<int, int>> diag;
  for (int i = 0; i < 10; ++i) diag.push_back({i, i});
  auto [dmaj, dmin] = principal_extents(diag);
  CHECK(dmaj > 13.0);  // 9*sqrt(2) + 1
  CHECK(dmin < 1.5);
}

namespace {
HardMask block(int h, int w, int y0, int x0, int bh, int bw) {
  HardMask m(h, w);
  for (int y = y0; y < y0 + bh; ++y)
    for (int x = x0; x < x0 + bw; ++x) m.set(y, x, 1);
  return m;
}
}  // namespace

TEST_CASE("validity filter applies the area, aspect and persistence rules") {
  ValidityConfig cfg;

  SUBCASE("small blob is dropped") {
    HardMask m = block(32, 32, 4, 4, 3, 3);
    auto [out, rep] = validity_filter({m, m}, cfg);
    CHECK(out[0].count() == 0);
    REQUIRE(rep.components.size() == 2);
    CHECK_FALSE(rep.components[0].area_pass);
  }
  SUBCASE("long thin line survives") {
    HardMask m = block(32, 40, 10, 4, 3, 30);
    auto [out, rep] = validity_filter({m, m}, cfg);
    CHECK(out[0].count() == 90);
    CHECK(rep.components[0].kept);
    CHECK(rep.components[0].aspect == doctest::Approx(10.0));
  }
  SUBCASE("compact square is dropped on aspect") {
    HardMask m = block(32, 32, 8, 8, 6, 6);
    auto [out, rep] = validity_filter({m, m}, cfg);
    CHECK(out[0].count() == 0);
    CHECK(rep.components[0].area_pass);
    CHECK_FALSE(rep.components[0].aspect_pass);
  }
  SUBCASE("one-frame apparition is dropped from a sequence") {
    HardMask line = block(32, 40, 10, 4, 3, 30);
    auto [out, rep] = validity_filter({line, HardMask(32, 40)}, cfg);
    CHECK(out[0].count() == 0);
    CHECK_FALSE(rep.components[0].temporal_pass);
  }
  SUBCASE("drifting line keeps its temporal match") {
    HardMask a = block(32, 40, 10, 4, 3, 30);
    HardMask b = block(32, 40, 11, 5, 3, 30);
    auto [out, rep] = validity_filter({a, b}, cfg);
    CHECK(out[0].count() == 90);
    CHECK(out[1].count() == 90);
  }
  SUBCASE("temporal rule is inactive for a single frame") {
    HardMask m = block(32, 40, 10, 4, 3, 30);
    auto [out, rep] = validity_filter({m}, cfg);
    CHECK(out[0].count() == 90);
    CHECK(rep.components[0].temporal_pass);
  }
  SUBCASE("edge contact is reported but never rejects") {
    HardMask m = block(32, 40, 0, 0, 3, 30);  // touches the top-left border
    auto [out, rep] = validity_filter({m, m}, cfg);
    CHECK(out[0].count() == 90);
    CHECK(rep.components[0].touches_edge);
    CHECK(rep.components[0].kept);
  }
  SUBCASE("filtering is idempotent") {
    HardMask mixed(32, 40);
    for (int x = 4; x < 34; ++x)
      for (int y = 10; y < 13; ++y) mixed.set(y, x, 1);
    for (int y = 20; y < 23; ++y)
      for (int x = 20; x < 23; ++x) mixed.set(y, x, 1);  // noise blob
    auto [once, r1] = validity_filter({mixed, mixed}, cfg);
    auto [twice, r2] = validity_filter(once, cfg);
    CHECK(once[0].v == twice[0].v);
    CHECK(once[1].v == twice[1].v);
  }
  SUBCASE("frame size mismatch is rejected") {
    CHECK_THROWS_AS(validity_filter({HardMask(8, 8), HardMask(8, 9)}, cfg),
                    DimensionError);
  }
}

TEST_CASE("mask tensor conversions") {
  HardMask m(2, 3);
  m.set(1, 2, 1);
  Tensor t = mask_tensor(m);
  CHECK(t.shape == std::vector<int>{1, 2, 3});
  CHECK(t.data[5] == 1.0f);

  SoftMask s = soft_from_tensor(t);
  CHECK(s.at(1, 2) == 1.0f);
  CHECK(s.at(0, 0) == 0.0f);

  Tensor four({1, 1, 2, 3}, 0.25f);
  CHECK(soft_from_tensor(four).at(0, 0) == 0.25f);
  CHECK_THROWS_AS(soft_from_tensor(Tensor({2, 2, 2, 2}, 0.0f)), DimensionError);

  Tensor probs = Tensor::from({2, 2}, {0.4f, 0.5f, 0.6f, 0.9f});
  HardMask th = threshold(probs, 0.5f);
  CHECK(th.at(0, 0) == 0);
  CHECK(th.at(0, 1) == 0);  // strictly greater
  CHECK(th.at(1, 0) == 1);
}
