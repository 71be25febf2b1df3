#pragma once

#include <string>
#include <vector>

#include "contrailseg/mask.hpp"
#include "contrailseg/rasterize.hpp"
#include "contrailseg/tensor.hpp"

namespace contrailseg {

// On-disk corpus layout:
//   <dir>/manifest.json
//   <dir>/<sample_id>/frame_<k>.ten        raw image tensor [1,H,W], values in [0,1]
//   <dir>/<sample_id>/annotations.json     per-frame annotator polygons
//   <dir>/<sample_id>/truth.json           optional generator truth polygons
struct SampleRecord {
  std::string id;
  int height = 0;
  int width = 0;
  std::vector<Tensor> frames;               // per frame, [1,H,W]
  std::vector<AnnotationSet> annotations;   // per frame
  std::vector<std::vector<Ring>> truth;     // per frame; empty when absent
};

struct Corpus {
  RasterConvention convention = RasterConvention::center;
  int annotators = 0;
  int height = 0;
  int width = 0;
  int frames_per_sample = 0;
  std::vector<SampleRecord> samples;
};

Corpus load_corpus(const std::string& dir);
void save_corpus(const std::string& dir, const Corpus& corpus);

// Training/eval targets derived from the stored annotations under the
// corpus convention.
SoftMask sample_soft_target(const Corpus& c, int sample, int frame);
HardMask sample_hard_target(const Corpus& c, int sample, int frame);

// Pseudo-label store: soft targets for every (sample, frame) of a corpus.
struct PseudoLabels {
  std::vector<std::vector<Tensor>> targets;  // [sample][frame], each [1,H,W]
};

void save_pseudo_labels(const std::string& dir, const Corpus& unlabeled,
                        const PseudoLabels& labels);
PseudoLabels load_pseudo_labels(const std::string& dir, const Corpus& unlabeled);

}  // namespace contrailseg
