#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "contrailseg/augment.hpp"
#include "contrailseg/dataset.hpp"
#include "contrailseg/loss.hpp"
#include "contrailseg/model.hpp"

namespace contrailseg {

struct TrainConfig {
  int epochs = 20;
  int folds = 5;
  int batch = 8;
  float lr = 1e-3f;
  bool use_mc = true;            // half-pixel misalignment correction
  bool use_soft_labels = true;   // train on annotator-fraction targets
  bool use_pseudo_labels = true;  // consulted by the two-phase pipeline only
  bool augment = true;
  float threshold = 0.5f;
};

struct TrainOptions {
  TrainConfig train;
  AugmentConfig augment;
  LossConfig loss;
  NetworkSpec network;
  uint64_t seed = 0;
};

// One training example: non-owning views of a prepared input and target.
struct TrainUnit {
  const Tensor* image;   // [1,H,W], misalignment-corrected if enabled
  const Tensor* target;  // [1,H,W]
};

// Model input for one (sample, frame): the stored image, shifted by the
// half-pixel correction when enabled.
Tensor unit_input(const Corpus& c, int sample, int frame, bool use_mc);

// Targets for every (sample, frame) under the corpus convention: annotator
// vote fractions when soft, strict-majority indicators otherwise.
std::vector<std::vector<Tensor>> build_targets(const Corpus& c, bool soft);

// Trains a freshly initialised model on the given units.
SegModel train_model(const std::vector<TrainUnit>& units, const TrainOptions& opt,
                     uint64_t model_seed);

// Fits one model on every sample of the corpus.
SegModel train_on_corpus(const Corpus& c, const TrainOptions& opt);

struct EvalItem {
  std::string sample_id;
  int frame = 0;
  float dice = 0.0f;
};

struct EvalResult {
  float pooled_dice = 0.0f;  // global pixel counts across all units
  std::vector<EvalItem> items;
};

// Thresholded Dice against strict-majority masks for the listed samples.
EvalResult evaluate_model(const SegModel& model, const Corpus& c,
                          const std::vector<int>& samples, const TrainOptions& opt);

// Dice of externally supplied prediction masks ([sample][frame]) against the
// corpus majority masks.
EvalResult evaluate_masks(const Corpus& c, const std::vector<std::vector<HardMask>>& preds);

struct FoldResult {
  int fold = 0;
  float error = 0.0f;  // 1 - pooled validation Dice
  std::string checkpoint;
  std::vector<int> val_samples;
};

struct CrossValResult {
  std::vector<FoldResult> folds;
  float e_cv = 0.0f;  // mean of fold errors
  int best_fold = 0;  // lowest error, ties to the lowest index
};

// K-fold cross-validation split by sample; writes fold_<k>.ckpt files.
CrossValResult cross_validate(const Corpus& c, const TrainOptions& opt,
                              const std::string& out_dir);

// Soft predicted targets for every (sample, frame) of a corpus.
PseudoLabels generate_pseudo_labels(const SegModel& model, const Corpus& unlabeled,
                                    bool use_mc);

SegModel model_from_checkpoint(const NetworkSpec& spec, const std::string& path);

// The held-out sample slice two_phase_train carves when no eval corpus is
// given: one fold of a deterministic k-fold split, k = opt.train.folds.
std::vector<int> carved_eval_split(int n_samples, const TrainOptions& opt);

struct TwoPhaseResult {
  CrossValResult phase1;
  std::vector<int> eval_samples;  // indices into the labeled corpus; empty if
                                  // a separate eval corpus was supplied
  EvalResult phase2_eval;
  std::string phase2_checkpoint;
  std::string pseudo_dir;  // empty when no pseudo labels were produced
};

// Phase 1: cross-validate on the labeled pool. Phase 2: retrain from scratch
// on labeled + pseudo-labeled units for the same number of epochs, then score
// on the eval set. When no eval corpus is given, one fold-sized slice of the
// labeled corpus is held out from both phases.
TwoPhaseResult two_phase_train(const Corpus& labeled, const Corpus* unlabeled,
                               const Corpus* eval_corpus, const TrainOptions& opt,
                               const std::string& out_dir);

}  // namespace contrailseg
