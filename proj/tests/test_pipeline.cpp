#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <set>

#include "doctest.h"

#include "contrailseg/augment.hpp"
#include "contrailseg/config.hpp"
#include "contrailseg/errors.hpp"
#include "contrailseg/kfold.hpp"
#include "contrailseg/synth.hpp"
#include "contrailseg/threading.hpp"
#include "contrailseg/train.hpp"

using namespace contrailseg;
namespace fs = std::filesystem;

TEST_CASE("kfold partitions are disjoint, covering and balanced") {
  for (int k : {2, 5, 10}) {
    auto folds = kfold_splits(10, k, 42);
    REQUIRE(static_cast<int>(folds.size()) == k);
    std::set<int> seen;
    size_t lo = 10, hi = 0;
    for (const auto& f : folds) {
      lo = std::min(lo, f.size());
      hi = std::max(hi, f.size());
      for (int i : f) {
        CHECK(i >= 0);
        CHECK(i < 10);
        CHECK_FALSE(seen.count(i));
        seen.insert(i);
      }
    }
    CHECK(seen.size() == 10);
    CHECK(hi - lo <= 1);
  }
}

TEST_CASE("kfold is seeded and validated") {
  CHECK(kfold_splits(6, 3, 1) == kfold_splits(6, 3, 1));
  CHECK(kfold_splits(50, 5, 1) != kfold_splits(50, 5, 2));
  CHECK_THROWS_AS(kfold_splits(5, 1, 0), ConfigError);
  CHECK_THROWS_AS(kfold_splits(3, 4, 0), ConfigError);

  auto folds = kfold_splits(9, 3, 7);
  FoldSplit split = fold_split(folds, 1);
  CHECK(split.val == folds[1]);
  CHECK(split.train.size() == 6);
  for (int i : split.val)
    CHECK(std::find(split.train.begin(), split.train.end(), i) == split.train.end());
  CHECK_THROWS_AS(fold_split(folds, 3), UsageError);
}

TEST_CASE("transform sampling always consumes the same number of draws") {
  AugmentConfig never;
  never.ssr_prob = 0.0f;
  never.hflip_prob = 0.0f;
  AugmentConfig always;
  always.ssr_prob = 1.0f;
  always.hflip_prob = 1.0f;

  Rng a = make_rng(9), b = make_rng(9);
  AugmentTransform ta = sample_transform(a, never);
  AugmentTransform tb = sample_transform(b, always);
  CHECK(ta.identity());
  CHECK_FALSE(tb.identity());
  CHECK(uniform01(a) == uniform01(b));  // streams stayed aligned

  // gated-off draws are zeroed, not skipped
  CHECK(ta.shift_x == 0.0f);
  CHECK(ta.scale == 1.0f);
}

TEST_CASE("identity transform is an exact copy") {
  Rng rng = make_rng(3);
  Tensor t({1, 5, 5});
  for (auto& v : t.data) v = uniform01(rng);
  Tensor out = apply_transform(t, AugmentTransform{});
  CHECK(out.data == t.data);
}

TEST_CASE("horizontal flip is an exact involution") {
  Rng rng = make_rng(4);
  Tensor t({2, 4, 6});
  for (auto& v : t.data) v = uniform01(rng);
  AugmentTransform flip;
  flip.hflip = true;
  Tensor once = apply_transform(t, flip);
  CHECK(once.data != t.data);
  CHECK(once.data[0] == t.data[5]);  // row ends swap
  Tensor twice = apply_transform(once, flip);
  CHECK(twice.data == t.data);
}

TEST_CASE("pixel shifts move content the stated direction") {
  Tensor t({1, 4, 4}, 0.0f);
  t.data[1 * 4 + 1] = 1.0f;
  AugmentTransform tr;
  tr.ssr = true;
  tr.shift_x = 0.25f;  // one pixel right on a 4-wide plane
  Tensor out = apply_transform(t, tr);
  CHECK(out.data[1 * 4 + 2] == doctest::Approx(1.0));
  CHECK(out.data[1 * 4 + 1] == doctest::Approx(0.0));

  CHECK_THROWS_AS(apply_transform(Tensor({4}, 0.0f), tr), DimensionError);
}

namespace {
Corpus tiny_corpus(int samples, uint64_t seed) {
  SceneConfig sc;
  sc.num_samples = samples;
  sc.height = sc.width = 24;
  sc.max_contrails = 1;
  sc.max_width = 3.0f;
  sc.min_width = 2.0f;
  sc.min_length = 10.0f;
  sc.max_length = 14.0f;
  return generate_corpus(sc, seed);
}

TrainOptions tiny_options() {
  TrainOptions opt;
  opt.train.epochs = 1;
  opt.train.folds = 2;
  opt.seed = 13;
  return opt;
}
}  // namespace

TEST_CASE("training is bit-deterministic") {
  Corpus c = tiny_corpus(4, 8);
  auto targets = build_targets(c, true);
  std::vector<Tensor> inputs;
  std::vector<TrainUnit> units;
  for (int s = 0; s < 4; ++s)
    for (int f = 0; f < c.frames_per_sample; ++f)
      inputs.push_back(unit_input(c, s, f, true));
  size_t k = 0;
  for (int s = 0; s < 4; ++s)
    for (int f = 0; f < c.frames_per_sample; ++f)
      units.push_back({&inputs[k++], &targets[static_cast<size_t>(s)][static_cast<size_t>(f)]});

  TrainOptions opt = tiny_options();
  SegModel a = train_model(units, opt, 5);
  SegModel b = train_model(units, opt, 5);
  for (size_t i = 0; i < a.params().size(); ++i)
    CHECK(a.params()[i].value.data == b.params()[i].value.data);
}

TEST_CASE("unit inputs shift only when the correction is on") {
  Corpus c = tiny_corpus(1, 2);
  Tensor plain = unit_input(c, 0, 0, false);
  Tensor shifted = unit_input(c, 0, 0, true);
  CHECK(plain.data == c.samples[0].frames[0].data);
  CHECK(plain.data != shifted.data);
  CHECK(plain.shape == shifted.shape);
}

TEST_CASE("target construction follows the label mode") {
  Corpus c = tiny_corpus(2, 3);
  auto soft = build_targets(c, true);
  auto hard = build_targets(c, false);
  REQUIRE(soft.size() == 2);
  bool saw_fraction = false;
  for (const auto& per_frame : soft)
    for (const auto& t : per_frame)
      for (float v : t.data)
        if (v > 0.0f && v < 1.0f) saw_fraction = true;
  CHECK(saw_fraction);  // annotators disagree somewhere
  for (const auto& per_frame : hard)
    for (const auto& t : per_frame)
      for (float v : t.data) CHECK((v == 0.0f || v == 1.0f));
}

TEST_CASE("cross-validation writes per-fold checkpoints and averages errors") {
  Corpus c = tiny_corpus(4, 21);
  TrainOptions opt = tiny_options();
  fs::path dir = fs::temp_directory_path() / "contrailseg_cv_unit";
  fs::remove_all(dir);
  fs::create_directories(dir);

  CrossValResult cv = cross_validate(c, opt, dir.string());
  REQUIRE(cv.folds.size() == 2);
  double acc = 0.0;
  for (const auto& f : cv.folds) {
    CHECK(fs::exists(f.checkpoint));
    CHECK_FALSE(f.val_samples.empty());
    acc += static_cast<double>(f.error);
  }
  CHECK(cv.e_cv == static_cast<float>(acc / 2.0));
  CHECK((cv.best_fold == 0 || cv.best_fold == 1));
  CHECK(cv.folds[static_cast<size_t>(cv.best_fold)].error ==
        std::min(cv.folds[0].error, cv.folds[1].error));

  // reloading the best checkpoint reproduces its validation error
  SegModel back = model_from_checkpoint(opt.network,
                                        cv.folds[static_cast<size_t>(cv.best_fold)].checkpoint);
  EvalResult ev = evaluate_model(back, c, cv.folds[static_cast<size_t>(cv.best_fold)].val_samples,
                                 opt);
  CHECK(1.0f - ev.pooled_dice == doctest::Approx(cv.folds[static_cast<size_t>(cv.best_fold)].error));
}

TEST_CASE("perfect predictions score a pooled dice of one") {
  Corpus c = tiny_corpus(2, 31);
  std::vector<std::vector<HardMask>> preds;
  for (int s = 0; s < 2; ++s) {
    preds.emplace_back();
    for (int f = 0; f < c.frames_per_sample; ++f)
      preds.back().push_back(sample_hard_target(c, s, f));
  }
  EvalResult ev = evaluate_masks(c, preds);
  CHECK(ev.pooled_dice == 1.0f);
  REQUIRE(ev.items.size() == static_cast<size_t>(2 * c.frames_per_sample));
  for (const auto& item : ev.items) CHECK(item.dice == 1.0f);
}

TEST_CASE("carved eval split is a deterministic fold-sized slice") {
  TrainOptions opt = tiny_options();
  auto a = carved_eval_split(10, opt);
  auto b = carved_eval_split(10, opt);
  CHECK(a == b);
  CHECK(a.size() == 5);  // n / folds with folds = 2
  for (int i : a) {
    CHECK(i >= 0);
    CHECK(i < 10);
  }
  opt.seed = 14;
  CHECK(a != carved_eval_split(10, opt));
}

TEST_CASE("two-phase training produces both phases") {
  Corpus labeled = tiny_corpus(4, 51);
  Corpus unlabeled = tiny_corpus(2, 52);
  TrainOptions opt = tiny_options();
  fs::path dir = fs::temp_directory_path() / "contrailseg_tp_unit";
  fs::remove_all(dir);
  fs::create_directories(dir);

  TwoPhaseResult r = two_phase_train(labeled, &unlabeled, nullptr, opt, dir.string());
  CHECK(r.phase1.folds.size() == 2);
  CHECK_FALSE(r.eval_samples.empty());
  CHECK(fs::exists(r.phase2_checkpoint));
  CHECK_FALSE(r.pseudo_dir.empty());
  CHECK(fs::exists(fs::path(r.pseudo_dir) / "manifest.json"));
  CHECK_FALSE(r.phase2_eval.items.empty());

  // pseudo labels can be disabled
  opt.train.use_pseudo_labels = false;
  fs::remove_all(dir);
  fs::create_directories(dir);
  TwoPhaseResult r2 = two_phase_train(labeled, &unlabeled, nullptr, opt, dir.string());
  CHECK(r2.pseudo_dir.empty());
}

TEST_CASE("pseudo labels are soft predictions for every unit") {
  Corpus c = tiny_corpus(2, 61);
  SegModel m(NetworkSpec{}, 77);
  PseudoLabels pl = generate_pseudo_labels(m, c, true);
  REQUIRE(pl.targets.size() == 2);
  for (const auto& per_frame : pl.targets) {
    REQUIRE(per_frame.size() == static_cast<size_t>(c.frames_per_sample));
    for (const auto& t : per_frame) {
      CHECK(t.shape == std::vector<int>{1, 24, 24});
      for (float v : t.data) {
        CHECK(v > 0.0f);
        CHECK(v < 1.0f);
      }
    }
  }
}

TEST_CASE("worker count respects the environment cap") {
  unsetenv("CONTRAILSEG_THREADS");
  CHECK(worker_count(4) >= 1);
  CHECK(worker_count(1) == 1);

  setenv("CONTRAILSEG_THREADS", "1", 1);
  CHECK(worker_count(8) == 1);

  setenv("CONTRAILSEG_THREADS", "zero", 1);
  CHECK_THROWS_AS(worker_count(8), ConfigError);
  setenv("CONTRAILSEG_THREADS", "0", 1);
  CHECK_THROWS_AS(worker_count(8), ConfigError);
  unsetenv("CONTRAILSEG_THREADS");
}

TEST_CASE("parallel_for visits every index once and rethrows") {
  std::atomic<long> sum{0};
  std::vector<std::atomic<int>> hits(64);
  parallel_for(64, [&](int i) {
    sum += i;
    hits[static_cast<size_t>(i)]++;
  });
  CHECK(sum == 64 * 63 / 2);
  for (const auto& h : hits) CHECK(h == 1);

  CHECK_THROWS_AS(parallel_for(8,
                               [](int i) {
                                 if (i == 5) throw ValueError("boom");
                               }),
                  ValueError);
  parallel_for(0, [](int) { FAIL("must not be called"); });
}

TEST_CASE("run config parsing") {
  RunConfig def = parse_run_config("{}", "inline");
  CHECK(def.train.epochs == 20);
  CHECK(def.train.folds == 5);

  RunConfig cfg = parse_run_config(
      R"({"seed": 9, "train": {"epochs": 3, "use_mc": false},
          "scene": {"preset": "easy"}, "network": {"se_activation": "swish"}})",
      "inline");
  CHECK(cfg.seed == 9);
  CHECK(cfg.train.epochs == 3);
  CHECK_FALSE(cfg.train.use_mc);
  CHECK(cfg.scene.convention == RasterConvention::center);  // easy preset
  CHECK(cfg.network.se_activation == SeActivation::swish);

  CHECK_THROWS_AS(parse_run_config(R"({"trian": {}})", "inline"), ConfigError);
  try {
    parse_run_config(R"({"train": {"epoch": 1}})", "inline");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("train.epoch") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_run_config(R"({"train": {"epochs": 0}})", "inline"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("[1,2]", "inline"), ConfigError);
  CHECK_THROWS_AS(load_run_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("canonical config text is stable and hash-sensitive") {
  RunConfig a, b;
  CHECK(canonical_config_json(a) == canonical_config_json(b));
  CHECK(config_hash(a) == config_hash(b));
  b.seed = 1;
  CHECK(config_hash(a) != config_hash(b));
  CHECK(config_hash_hex(a).size() == 16);

  // parsing the canonical form reproduces the same hash
  RunConfig back = parse_run_config(canonical_config_json(a), "inline");
  CHECK(config_hash(back) == config_hash(a));
}
