#include "contrailseg/train.hpp"

#include <algorithm>
#include <cstring>
#include <filesystem>

#include "contrailseg/checkpoint.hpp"
#include "contrailseg/errors.hpp"
#include "contrailseg/kfold.hpp"
#include "contrailseg/misalign.hpp"
#include "contrailseg/ops.hpp"
#include "contrailseg/optimizer.hpp"
#include "contrailseg/rng.hpp"
#include "contrailseg/threading.hpp"

namespace fs = std::filesystem;

namespace contrailseg {

namespace {

constexpr uint64_t kTrainTag = 0x747261696eULL;
constexpr uint64_t kFoldTag = 0x666f6c64ULL;
constexpr uint64_t kPhase2Tag = 0x706861736532ULL;
constexpr uint64_t kEvalSplitTag = 0x6576616cULL;

void copy_plane(Tensor& batch, int slot, const Tensor& unit) {
  size_t plane = unit.data.size();
  std::memcpy(batch.data.data() + static_cast<size_t>(slot) * plane, unit.data.data(),
              plane * sizeof(float));
}

std::vector<NamedTensor> to_named(const std::vector<Param>& params) {
  std::vector<NamedTensor> out;
  out.reserve(params.size());
  for (const Param& p : params) out.push_back(NamedTensor{p.name, p.value});
  return out;
}

}  // namespace

Tensor unit_input(const Corpus& c, int sample, int frame, bool use_mc) {
  const Tensor& raw = c.samples.at(static_cast<size_t>(sample))
                          .frames.at(static_cast<size_t>(frame));
  return use_mc ? misalignment_correct(raw) : raw;
}

std::vector<std::vector<Tensor>> build_targets(const Corpus& c, bool soft) {
  std::vector<std::vector<Tensor>> out(c.samples.size());
  for (size_t s = 0; s < c.samples.size(); ++s) {
    for (int f = 0; f < c.frames_per_sample; ++f) {
      if (soft)
        out[s].push_back(mask_tensor(sample_soft_target(c, static_cast<int>(s), f)));
      else
        out[s].push_back(mask_tensor(sample_hard_target(c, static_cast<int>(s), f)));
    }
  }
  return out;
}

SegModel train_model(const std::vector<TrainUnit>& units, const TrainOptions& opt,
                     uint64_t model_seed) {
  if (units.empty()) throw TrainingError("no training units");
  const Tensor& first = *units[0].image;
  if (first.ndim() != 3 || first.dim(0) != 1)
    throw DimensionError("training unit images must be [1,H,W], got " + first.shape_str());
  int h = first.dim(1), w = first.dim(2);
  for (const TrainUnit& u : units) {
    if (u.image->shape != first.shape || u.target->shape != first.shape)
      throw DimensionError("training units must share one shape");
  }

  SegModel model = build_segmentation_model(opt.network, model_seed);
  Optimizer optim(OptimizerConfig{OptKind::adam, opt.train.lr});
  Rng rng = make_rng(mix_seed(model_seed, kTrainTag));

  std::vector<int> order(units.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

  int batch = std::max(1, opt.train.batch);
  for (int epoch = 0; epoch < opt.train.epochs; ++epoch) {
    for (int i = static_cast<int>(order.size()) - 1; i > 0; --i) {
      int j = static_cast<int>(uniform_index(rng, static_cast<uint32_t>(i + 1)));
      std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(j)]);
    }

    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(batch)) {
      int b = static_cast<int>(std::min(order.size() - start, static_cast<size_t>(batch)));
      Tensor input({b, 1, h, w});
      Tensor target({b, 1, h, w});
      for (int k = 0; k < b; ++k) {
        const TrainUnit& u = units[static_cast<size_t>(order[start + static_cast<size_t>(k)])];
        if (opt.train.augment) {
          AugmentTransform tr = sample_transform(rng, opt.augment);
          copy_plane(input, k, apply_transform(*u.image, tr));
          copy_plane(target, k, apply_transform(*u.target, tr));
        } else {
          copy_plane(input, k, *u.image);
          copy_plane(target, k, *u.target);
        }
      }

      Tape tp;
      std::vector<int> ids = model.place_params(tp, true);
      int x = tp.leaf(std::move(input), false);
      int logits = model.forward(tp, ids, x);
      int truth = tp.leaf(std::move(target), false);
      int loss = composite_loss(tp, logits, truth, opt.loss);
      tp.backward(loss);

      std::vector<Tensor*> params;
      std::vector<const std::vector<float>*> grads;
      params.reserve(ids.size());
      grads.reserve(ids.size());
      for (size_t i = 0; i < ids.size(); ++i) {
        params.push_back(&model.params()[i].value);
        grads.push_back(&tp.at(ids[i]).grad);
      }
      optim.step(params, grads);
    }
  }
  return model;
}

EvalResult evaluate_model(const SegModel& model, const Corpus& c,
                          const std::vector<int>& samples, const TrainOptions& opt) {
  EvalResult res;
  int64_t pooled_inter = 0, pooled_pred = 0, pooled_truth = 0;
  for (int s : samples) {
    for (int f = 0; f < c.frames_per_sample; ++f) {
      Tensor in = unit_input(c, s, f, opt.train.use_mc);
      Tensor batched({1, 1, c.height, c.width});
      batched.data = in.data;
      Tensor probs = model.predict(batched);
      HardMask pred = threshold(probs, opt.train.threshold);
      HardMask truth = sample_hard_target(c, s, f);

      int64_t inter = 0, np = 0, nt = 0;
      for (size_t i = 0; i < pred.v.size(); ++i) {
        np += pred.v[i];
        nt += truth.v[i];
        inter += pred.v[i] & truth.v[i];
      }
      pooled_inter += inter;
      pooled_pred += np;
      pooled_truth += nt;
      float d = np + nt == 0
                    ? 1.0f
                    : static_cast<float>(2.0 * static_cast<double>(inter) /
                                         static_cast<double>(np + nt));
      res.items.push_back(EvalItem{c.samples[static_cast<size_t>(s)].id, f, d});
    }
  }
  res.pooled_dice = pooled_pred + pooled_truth == 0
                        ? 1.0f
                        : static_cast<float>(2.0 * static_cast<double>(pooled_inter) /
                                             static_cast<double>(pooled_pred + pooled_truth));
  return res;
}

EvalResult evaluate_masks(const Corpus& c, const std::vector<std::vector<HardMask>>& preds) {
  if (preds.size() != c.samples.size())
    throw DimensionError("predictions cover " + std::to_string(preds.size()) +
                         " samples, corpus has " + std::to_string(c.samples.size()));
  EvalResult res;
  int64_t pooled_inter = 0, pooled_pred = 0, pooled_truth = 0;
  for (size_t s = 0; s < preds.size(); ++s) {
    if (static_cast<int>(preds[s].size()) != c.frames_per_sample)
      throw DimensionError("sample '" + c.samples[s].id + "' has " +
                           std::to_string(preds[s].size()) + " prediction frames, expected " +
                           std::to_string(c.frames_per_sample));
    for (int f = 0; f < c.frames_per_sample; ++f) {
      const HardMask& pred = preds[s][static_cast<size_t>(f)];
      HardMask truth = sample_hard_target(c, static_cast<int>(s), f);
      if (pred.height != truth.height || pred.width != truth.width)
        throw DimensionError("prediction mask size mismatch for sample '" + c.samples[s].id +
                             "'");
      int64_t inter = 0, np = 0, nt = 0;
      for (size_t i = 0; i < pred.v.size(); ++i) {
        np += pred.v[i];
        nt += truth.v[i];
        inter += pred.v[i] & truth.v[i];
      }
      pooled_inter += inter;
      pooled_pred += np;
      pooled_truth += nt;
      float d = np + nt == 0
                    ? 1.0f
                    : static_cast<float>(2.0 * static_cast<double>(inter) /
                                         static_cast<double>(np + nt));
      res.items.push_back(EvalItem{c.samples[s].id, f, d});
    }
  }
  res.pooled_dice = pooled_pred + pooled_truth == 0
                        ? 1.0f
                        : static_cast<float>(2.0 * static_cast<double>(pooled_inter) /
                                             static_cast<double>(pooled_pred + pooled_truth));
  return res;
}

namespace {

// Prepared inputs/targets for one corpus; units reference into these pools.
struct UnitPool {
  std::vector<std::vector<Tensor>> inputs;
  std::vector<std::vector<Tensor>> targets;
};

UnitPool prepare_pool(const Corpus& c, const TrainOptions& opt) {
  UnitPool pool;
  pool.inputs.resize(c.samples.size());
  for (size_t s = 0; s < c.samples.size(); ++s)
    for (int f = 0; f < c.frames_per_sample; ++f)
      pool.inputs[s].push_back(unit_input(c, static_cast<int>(s), f, opt.train.use_mc));
  pool.targets = build_targets(c, opt.train.use_soft_labels);
  return pool;
}

void append_units(std::vector<TrainUnit>& units, const UnitPool& pool,
                  const std::vector<int>& samples) {
  for (int s : samples)
    for (size_t f = 0; f < pool.inputs[static_cast<size_t>(s)].size(); ++f)
      units.push_back(TrainUnit{&pool.inputs[static_cast<size_t>(s)][f],
                                &pool.targets[static_cast<size_t>(s)][f]});
}

CrossValResult cross_validate_pool(const Corpus& c, const UnitPool& pool,
                                   const TrainOptions& opt, const std::string& out_dir) {
  auto folds = kfold_splits(static_cast<int>(c.samples.size()), opt.train.folds, opt.seed);
  fs::create_directories(out_dir);

  CrossValResult res;
  res.folds.resize(folds.size());
  // Folds are independent: per-fold seeds and checkpoints, shared read-only
  // data, merged in fold order afterwards.
  parallel_for(static_cast<int>(folds.size()), [&](int f) {
    FoldSplit split = fold_split(folds, f);
    std::vector<TrainUnit> units;
    append_units(units, pool, split.train);
    SegModel model =
        train_model(units, opt, mix_seed(opt.seed, kFoldTag + static_cast<uint64_t>(f)));

    EvalResult val = evaluate_model(model, c, split.val, opt);
    FoldResult& fr = res.folds[static_cast<size_t>(f)];
    fr.fold = f;
    fr.error = 1.0f - val.pooled_dice;
    fr.val_samples = split.val;
    fr.checkpoint = (fs::path(out_dir) / ("fold_" + std::to_string(f) + ".ckpt")).string();
    save_tensors(fr.checkpoint, to_named(model.params()));
  });
  double error_sum = 0.0;
  for (const FoldResult& fr : res.folds) error_sum += fr.error;
  res.e_cv = static_cast<float>(error_sum / static_cast<double>(res.folds.size()));
  res.best_fold = 0;
  for (size_t f = 1; f < res.folds.size(); ++f)
    if (res.folds[f].error < res.folds[static_cast<size_t>(res.best_fold)].error)
      res.best_fold = static_cast<int>(f);
  return res;
}

}  // namespace

CrossValResult cross_validate(const Corpus& c, const TrainOptions& opt,
                              const std::string& out_dir) {
  UnitPool pool = prepare_pool(c, opt);
  return cross_validate_pool(c, pool, opt, out_dir);
}

SegModel train_on_corpus(const Corpus& c, const TrainOptions& opt) {
  UnitPool pool = prepare_pool(c, opt);
  std::vector<int> all(c.samples.size());
  for (size_t s = 0; s < all.size(); ++s) all[s] = static_cast<int>(s);
  std::vector<TrainUnit> units;
  append_units(units, pool, all);
  return train_model(units, opt, mix_seed(opt.seed, 0x666974ULL));
}

std::vector<int> carved_eval_split(int n_samples, const TrainOptions& opt) {
  auto splits = kfold_splits(n_samples, opt.train.folds, mix_seed(opt.seed, kEvalSplitTag));
  return splits[0];
}

PseudoLabels generate_pseudo_labels(const SegModel& model, const Corpus& unlabeled,
                                    bool use_mc) {
  PseudoLabels out;
  out.targets.resize(unlabeled.samples.size());
  for (size_t s = 0; s < unlabeled.samples.size(); ++s) {
    for (int f = 0; f < unlabeled.frames_per_sample; ++f) {
      Tensor in = unit_input(unlabeled, static_cast<int>(s), f, use_mc);
      Tensor batched({1, 1, unlabeled.height, unlabeled.width});
      batched.data = in.data;
      Tensor probs = model.predict(batched);
      Tensor target({1, unlabeled.height, unlabeled.width});
      target.data = probs.data;
      out.targets[s].push_back(std::move(target));
    }
  }
  return out;
}

SegModel model_from_checkpoint(const NetworkSpec& spec, const std::string& path) {
  SegModel model = build_segmentation_model(spec, 0);
  std::vector<NamedTensor> stored = load_tensors(path);
  std::vector<Param> values;
  values.reserve(stored.size());
  for (NamedTensor& nt : stored) values.push_back(Param{nt.name, std::move(nt.tensor)});
  model.load_param_values(values);
  return model;
}

TwoPhaseResult two_phase_train(const Corpus& labeled, const Corpus* unlabeled,
                               const Corpus* eval_corpus, const TrainOptions& opt,
                               const std::string& out_dir) {
  fs::create_directories(out_dir);
  TwoPhaseResult res;

  // Decide the evaluation pool and the labeled training pool.
  std::vector<int> train_samples;
  if (eval_corpus == nullptr) {
    res.eval_samples = carved_eval_split(static_cast<int>(labeled.samples.size()), opt);
    std::vector<bool> held(labeled.samples.size(), false);
    for (int s : res.eval_samples) held[static_cast<size_t>(s)] = true;
    for (size_t s = 0; s < labeled.samples.size(); ++s)
      if (!held[s]) train_samples.push_back(static_cast<int>(s));
  } else {
    for (size_t s = 0; s < labeled.samples.size(); ++s)
      train_samples.push_back(static_cast<int>(s));
  }

  Corpus pool_corpus;
  pool_corpus.convention = labeled.convention;
  pool_corpus.annotators = labeled.annotators;
  pool_corpus.height = labeled.height;
  pool_corpus.width = labeled.width;
  pool_corpus.frames_per_sample = labeled.frames_per_sample;
  for (int s : train_samples) pool_corpus.samples.push_back(labeled.samples[static_cast<size_t>(s)]);

  // Phase 1: cross-validation over the labeled pool.
  UnitPool pool = prepare_pool(pool_corpus, opt);
  res.phase1 = cross_validate_pool(pool_corpus, pool, opt, out_dir);

  // Pseudo-label the unlabeled corpus with the best phase-1 model.
  PseudoLabels pseudo;
  UnitPool pseudo_pool;
  bool use_pseudo = opt.train.use_pseudo_labels && unlabeled != nullptr &&
                    !unlabeled->samples.empty();
  if (use_pseudo) {
    SegModel best = model_from_checkpoint(
        opt.network, res.phase1.folds[static_cast<size_t>(res.phase1.best_fold)].checkpoint);
    pseudo = generate_pseudo_labels(best, *unlabeled, opt.train.use_mc);
    res.pseudo_dir = (fs::path(out_dir) / "pseudo").string();
    save_pseudo_labels(res.pseudo_dir, *unlabeled, pseudo);

    pseudo_pool.inputs.resize(unlabeled->samples.size());
    for (size_t s = 0; s < unlabeled->samples.size(); ++s)
      for (int f = 0; f < unlabeled->frames_per_sample; ++f)
        pseudo_pool.inputs[s].push_back(
            unit_input(*unlabeled, static_cast<int>(s), f, opt.train.use_mc));
    pseudo_pool.targets = pseudo.targets;
  }

  // Phase 2: fresh initialisation, labeled + pseudo units, equal epochs.
  std::vector<TrainUnit> units;
  std::vector<int> all_pool(pool_corpus.samples.size());
  for (size_t s = 0; s < all_pool.size(); ++s) all_pool[s] = static_cast<int>(s);
  append_units(units, pool, all_pool);
  if (use_pseudo) {
    std::vector<int> all_unlabeled(unlabeled->samples.size());
    for (size_t s = 0; s < all_unlabeled.size(); ++s) all_unlabeled[s] = static_cast<int>(s);
    append_units(units, pseudo_pool, all_unlabeled);
  }
  SegModel phase2 = train_model(units, opt, mix_seed(opt.seed, kPhase2Tag));
  res.phase2_checkpoint = (fs::path(out_dir) / "phase2.ckpt").string();
  save_tensors(res.phase2_checkpoint, to_named(phase2.params()));

  if (eval_corpus != nullptr) {
    std::vector<int> all_eval(eval_corpus->samples.size());
    for (size_t s = 0; s < all_eval.size(); ++s) all_eval[s] = static_cast<int>(s);
    res.phase2_eval = evaluate_model(phase2, *eval_corpus, all_eval, opt);
  } else {
    res.phase2_eval = evaluate_model(phase2, labeled, res.eval_samples, opt);
  }
  return res;
}

}  // namespace contrailseg
