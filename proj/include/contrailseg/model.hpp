#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "contrailseg/scaling.hpp"
#include "contrailseg/tape.hpp"

namespace contrailseg {

enum class SeActivation { relu, swish };

struct StageSpec {
  int repeats = 1;
  int channels = 8;
  int stride = 1;
  int expansion = 4;
  int kernel = 3;
};

struct NetworkSpec {
  int in_channels = 1;
  int stem_channels = 8;
  std::vector<StageSpec> stages{{1, 8, 1, 4, 3}, {2, 16, 2, 4, 3}, {2, 24, 2, 4, 3}};
  int se_reduction = 4;
  SeActivation se_activation = SeActivation::relu;
  float swish_beta_init = 1.0f;
  ScalingConfig scaling;
};

// Returns the spec with compound scaling applied to repeats and channels.
NetworkSpec apply_scaling(const NetworkSpec& spec);

struct Param {
  std::string name;
  Tensor value;
};

// Squeeze-excitation gate built from primitives; weight layout is 1x1 convs.
// Exposed for block-level tests.
int se_block(Tape& tp, int x, int w1, int b1, int w2, int b2, SeActivation act);

// Encoder-decoder segmentation network: a scaled stack of MBConv stages with
// squeeze-excitation and learnable-beta swish, mirrored by a bilinear-upsample
// decoder with skip connections, ending in a 1x1 logit head.
class SegModel {
 public:
  // Builds parameters deterministically from the seed (He fan-in init).
  SegModel(const NetworkSpec& spec, uint64_t seed);

  // Places every parameter onto the tape; index-aligned with params().
  std::vector<int> place_params(Tape& tp, bool requires_grad) const;

  // Forward from an input node to logit node [N,1,H,W]. param_ids must come
  // from place_params on the same tape.
  int forward(Tape& tp, const std::vector<int>& param_ids, int input) const;

  // Convenience inference: sigmoid probabilities for a batch, no grads.
  Tensor predict(const Tensor& images) const;

  std::vector<Param>& params() { return params_; }
  const std::vector<Param>& params() const { return params_; }
  const NetworkSpec& spec() const { return spec_; }  // post-scaling
  int downsample_factor() const { return downsample_; }

  void load_param_values(const std::vector<Param>& values);

 private:
  struct BlockIR {
    enum Kind { stem, mbconv, decoder, head } kind = stem;
    int in_ch = 0, out_ch = 0, stride = 1, kernel = 3, expansion = 1;
    bool residual = false;
    int skip = -1;       // encoder feature index consumed by a decoder block
    int first_param = 0;  // index into params_
    int param_count = 0;
  };

  NetworkSpec spec_;
  std::vector<Param> params_;
  std::vector<BlockIR> blocks_;
  int downsample_ = 1;
};

SegModel build_segmentation_model(const NetworkSpec& spec, uint64_t seed);

}  // namespace contrailseg
