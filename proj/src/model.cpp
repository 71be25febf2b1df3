#include "contrailseg/model.hpp"

#include <cmath>
#include <unordered_map>

#include "contrailseg/errors.hpp"
#include "contrailseg/ops.hpp"
#include "contrailseg/rng.hpp"

namespace contrailseg {

NetworkSpec apply_scaling(const NetworkSpec& spec) {
  ScaleMultipliers m = compound_scale(spec.scaling);
  NetworkSpec out = spec;
  out.stem_channels = scaled_channels(spec.stem_channels, m.width);
  for (StageSpec& st : out.stages) {
    st.repeats = scaled_repeats(st.repeats, m.depth);
    st.channels = scaled_channels(st.channels, m.width);
  }
  return out;
}

int se_block(Tape& tp, int x, int w1, int b1, int w2, int b2, SeActivation act) {
  int pooled = global_avg_pool(tp, x);
  int z = conv2d(tp, pooled, w1, b1, 1, 0, 1);
  if (act == SeActivation::relu) {
    z = relu(tp, z);
  } else {
    int one = tp.leaf(Tensor::scalar(1.0f), false);
    z = swish(tp, z, one);
  }
  int gate = sigmoid(tp, conv2d(tp, z, w2, b2, 1, 0, 1));
  return mul_channel(tp, x, gate);
}

namespace {

Tensor he_conv(Rng& rng, int out_ch, int in_ch, int kh, int kw) {
  Tensor w({out_ch, in_ch, kh, kw});
  float std = std::sqrt(2.0f / static_cast<float>(in_ch * kh * kw));
  for (float& v : w.data) v = normal(rng, 0.0f, std);
  return w;
}

void validate_spec(const NetworkSpec& spec) {
  if (spec.in_channels < 1) throw ConfigError("network.in_channels must be >= 1");
  if (spec.stem_channels < 1) throw ConfigError("network.stem_channels must be >= 1");
  if (spec.stages.empty()) throw ConfigError("network.stages must not be empty");
  if (spec.se_reduction < 1) throw ConfigError("network.se_reduction must be >= 1");
  for (size_t i = 0; i < spec.stages.size(); ++i) {
    const StageSpec& st = spec.stages[i];
    std::string at = "network.stages[" + std::to_string(i) + "]";
    if (st.repeats < 1) throw ConfigError(at + ".repeats must be >= 1");
    if (st.channels < 1) throw ConfigError(at + ".channels must be >= 1");
    if (st.stride != 1 && st.stride != 2)
      throw ConfigError(at + ".stride must be 1 or 2, got " + std::to_string(st.stride));
    if (st.expansion < 1) throw ConfigError(at + ".expansion must be >= 1");
    if (st.kernel < 1 || st.kernel % 2 == 0)
      throw ConfigError(at + ".kernel must be odd and positive, got " +
                        std::to_string(st.kernel));
  }
}

}  // namespace

SegModel::SegModel(const NetworkSpec& raw, uint64_t seed) : spec_(apply_scaling(raw)) {
  validate_spec(spec_);
  Rng rng = make_rng(mix_seed(seed, 0x6d6f64656cULL));

  auto add_param = [&](const std::string& name, Tensor t) {
    params_.push_back(Param{name, std::move(t)});
  };
  auto add_conv = [&](const std::string& prefix, int out_ch, int in_ch, int k) {
    add_param(prefix + ".w", he_conv(rng, out_ch, in_ch, k, k));
    add_param(prefix + ".b", Tensor({out_ch}));
  };
  auto add_beta = [&](const std::string& prefix) {
    add_param(prefix + ".beta", Tensor::scalar(spec_.swish_beta_init));
  };

  // Stem.
  {
    BlockIR b;
    b.kind = BlockIR::stem;
    b.in_ch = spec_.in_channels;
    b.out_ch = spec_.stem_channels;
    b.kernel = 3;
    b.first_param = static_cast<int>(params_.size());
    add_conv("stem", b.out_ch, b.in_ch, 3);
    add_beta("stem");
    b.param_count = static_cast<int>(params_.size()) - b.first_param;
    blocks_.push_back(b);
  }

  // Encoder stages; a skip feature is captured ahead of every stride-2 block.
  int cur = spec_.stem_channels;
  std::vector<int> skip_channels;
  for (size_t si = 0; si < spec_.stages.size(); ++si) {
    const StageSpec& st = spec_.stages[si];
    for (int r = 0; r < st.repeats; ++r) {
      BlockIR b;
      b.kind = BlockIR::mbconv;
      b.in_ch = cur;
      b.out_ch = st.channels;
      b.stride = r == 0 ? st.stride : 1;
      b.kernel = st.kernel;
      b.expansion = st.expansion;
      b.residual = b.stride == 1 && b.in_ch == b.out_ch;
      if (b.stride > 1) {
        b.skip = static_cast<int>(skip_channels.size());
        skip_channels.push_back(cur);
        downsample_ *= b.stride;
      }
      std::string p = "enc.s" + std::to_string(si) + ".b" + std::to_string(r);
      b.first_param = static_cast<int>(params_.size());
      int exp_ch = b.in_ch * b.expansion;
      if (b.expansion > 1) {
        add_conv(p + ".expand", exp_ch, b.in_ch, 1);
        add_beta(p + ".expand");
      }
      add_param(p + ".dw.w", he_conv(rng, exp_ch, 1, b.kernel, b.kernel));
      add_param(p + ".dw.b", Tensor({exp_ch}));
      add_beta(p + ".dw");
      int red = exp_ch / spec_.se_reduction;
      if (red < 1) red = 1;
      add_conv(p + ".se.reduce", red, exp_ch, 1);
      add_conv(p + ".se.expand", exp_ch, red, 1);
      add_conv(p + ".project", b.out_ch, exp_ch, 1);
      b.param_count = static_cast<int>(params_.size()) - b.first_param;
      blocks_.push_back(b);
      cur = st.channels;
    }
  }

  // Decoder mirrors the skip stack.
  for (int i = static_cast<int>(skip_channels.size()) - 1; i >= 0; --i) {
    BlockIR b;
    b.kind = BlockIR::decoder;
    b.skip = i;
    b.in_ch = cur + skip_channels[static_cast<size_t>(i)];
    b.out_ch = skip_channels[static_cast<size_t>(i)];
    b.kernel = 3;
    std::string p = "dec." + std::to_string(skip_channels.size() - 1 - static_cast<size_t>(i));
    b.first_param = static_cast<int>(params_.size());
    add_conv(p, b.out_ch, b.in_ch, 3);
    add_beta(p);
    b.param_count = static_cast<int>(params_.size()) - b.first_param;
    blocks_.push_back(b);
    cur = b.out_ch;
  }

  // Logit head.
  {
    BlockIR b;
    b.kind = BlockIR::head;
    b.in_ch = cur;
    b.out_ch = 1;
    b.kernel = 1;
    b.first_param = static_cast<int>(params_.size());
    add_conv("head", 1, cur, 1);
    b.param_count = static_cast<int>(params_.size()) - b.first_param;
    blocks_.push_back(b);
  }
}

std::vector<int> SegModel::place_params(Tape& tp, bool requires_grad) const {
  std::vector<int> ids;
  ids.reserve(params_.size());
  for (const Param& p : params_) ids.push_back(tp.leaf(p.value, requires_grad));
  return ids;
}

int SegModel::forward(Tape& tp, const std::vector<int>& param_ids, int input) const {
  const Tensor& in = tp.at(input);
  if (in.ndim() != 4)
    throw DimensionError("model forward: input must be [N,C,H,W], got " + in.shape_str());
  if (in.dim(1) != spec_.in_channels)
    throw DimensionError("model forward: axis 1 expects " + std::to_string(spec_.in_channels) +
                         " channels, got " + std::to_string(in.dim(1)));
  if (in.dim(2) % downsample_ != 0 || in.dim(3) % downsample_ != 0)
    throw DimensionError("model forward: spatial extent " + std::to_string(in.dim(2)) + "x" +
                         std::to_string(in.dim(3)) + " not divisible by downsample factor " +
                         std::to_string(downsample_));
  if (param_ids.size() != params_.size())
    throw UsageError("model forward: wrong parameter id count");

  std::vector<int> skips;
  int x = input;
  for (const BlockIR& b : blocks_) {
    int cursor = b.first_param;
    auto next = [&]() { return param_ids[static_cast<size_t>(cursor++)]; };
    switch (b.kind) {
      case BlockIR::stem: {
        int w = next(), bias = next(), beta = next();
        x = swish(tp, conv2d(tp, x, w, bias, 1, 1, 1), beta);
        break;
      }
      case BlockIR::mbconv: {
        if (b.skip >= 0) skips.push_back(x);
        int branch = x;
        if (b.expansion > 1) {
          int w = next(), bias = next(), beta = next();
          branch = swish(tp, conv2d(tp, branch, w, bias, 1, 0, 1), beta);
        }
        int exp_ch = b.in_ch * b.expansion;
        {
          int w = next(), bias = next(), beta = next();
          branch = swish(tp, conv2d(tp, branch, w, bias, b.stride, b.kernel / 2, exp_ch), beta);
        }
        {
          int w1 = next(), b1 = next(), w2 = next(), b2 = next();
          branch = se_block(tp, branch, w1, b1, w2, b2, spec_.se_activation);
        }
        {
          int w = next(), bias = next();
          branch = conv2d(tp, branch, w, bias, 1, 0, 1);  // linear projection
        }
        x = b.residual ? add(tp, x, branch) : branch;
        break;
      }
      case BlockIR::decoder: {
        int up = upsample_bilinear(tp, x, 2);
        int cat = concat_channels(tp, up, skips[static_cast<size_t>(b.skip)]);
        int w = next(), bias = next(), beta = next();
        x = swish(tp, conv2d(tp, cat, w, bias, 1, 1, 1), beta);
        break;
      }
      case BlockIR::head: {
        int w = next(), bias = next();
        x = conv2d(tp, x, w, bias, 1, 0, 1);
        break;
      }
    }
  }
  return x;
}

Tensor SegModel::predict(const Tensor& images) const {
  Tape tp;
  std::vector<int> ids = place_params(tp, false);
  int x = tp.leaf(images, false);
  int logits = forward(tp, ids, x);
  int probs = sigmoid(tp, logits);
  return tp.at(probs);
}

void SegModel::load_param_values(const std::vector<Param>& values) {
  std::unordered_map<std::string, const Tensor*> by_name;
  for (const Param& p : values) by_name[p.name] = &p.value;
  for (Param& p : params_) {
    auto it = by_name.find(p.name);
    if (it == by_name.end())
      throw FormatError("checkpoint missing parameter '" + p.name + "'");
    if (it->second->shape != p.value.shape)
      throw FormatError("checkpoint parameter '" + p.name + "' has shape " +
                        it->second->shape_str() + ", expected " + p.value.shape_str());
    p.value.data = it->second->data;
  }
}

SegModel build_segmentation_model(const NetworkSpec& spec, uint64_t seed) {
  return SegModel(spec, seed);
}

}  // namespace contrailseg
