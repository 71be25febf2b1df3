#include <cmath>

#include "contrailseg/gradcheck.hpp"
#include "contrailseg/loss.hpp"
#include "contrailseg/model.hpp"
#include "contrailseg/ops.hpp"
#include "contrailseg/rng.hpp"

namespace contrailseg {

namespace {

constexpr uint64_t kSuiteTag = 0x67636b7375697465ULL;

Tensor rand_uniform(Rng& rng, std::vector<int> shape, float lo, float hi) {
  Tensor t(std::move(shape));
  for (float& v : t.data) v = uniform(rng, lo, hi);
  return t;
}

// Keeps every element at least `gap` away from zero (relu kink).
Tensor rand_off_zero(Rng& rng, std::vector<int> shape, float gap) {
  Tensor t = rand_uniform(rng, std::move(shape), -1.0f, 1.0f);
  for (float& v : t.data) v += v >= 0.0f ? gap : -gap;
  return t;
}

Tensor rand_binary(Rng& rng, std::vector<int> shape) {
  Tensor t(std::move(shape));
  for (float& v : t.data) v = bernoulli(rng, 0.4f) ? 1.0f : 0.0f;
  return t;
}

struct CaseDef {
  std::string name;
  float tolerance;
  // Builds fresh random inputs and the loss graph for one draw.
  std::function<GradcheckReport(Rng&)> run;
};

GradcheckReport check(const LossBuilder& build, std::vector<Tensor> inputs) {
  return gradcheck(build, std::move(inputs));
}

}  // namespace

std::vector<GradcheckCase> gradcheck_suite(int seeds) {
  std::vector<CaseDef> defs;

  defs.push_back({"conv2d", 1e-3f, [](Rng& rng) {
    Tensor x = rand_uniform(rng, {2, 3, 6, 6}, -1.0f, 1.0f);
    Tensor w = rand_uniform(rng, {4, 3, 3, 3}, -0.5f, 0.5f);
    Tensor b = rand_uniform(rng, {4}, -0.5f, 0.5f);
    return check(
        [](Tape& tp, const std::vector<int>& in) {
          return mean_all(tp, conv2d(tp, in[0], in[1], in[2], 1, 1, 1));
        },
        {x, w, b});
  }});

  defs.push_back({"conv2d_stride2", 1e-3f, [](Rng& rng) {
    Tensor x = rand_uniform(rng, {1, 2, 7, 7}, -1.0f, 1.0f);
    Tensor w = rand_uniform(rng, {3, 2, 3, 3}, -0.5f, 0.5f);
    Tensor b = rand_uniform(rng, {3}, -0.5f, 0.5f);
    return check(
        [](Tape& tp, const std::vector<int>& in) {
          return sum_all(tp, conv2d(tp, in[0], in[1], in[2], 2, 0, 1));
        },
        {x, w, b});
  }});

  defs.push_back({"conv2d_depthwise", 1e-3f, [](Rng& rng) {
    Tensor x = rand_uniform(rng, {1, 4, 6, 6}, -1.0f, 1.0f);
    Tensor w = rand_uniform(rng, {4, 1, 3, 3}, -0.5f, 0.5f);
    Tensor b = rand_uniform(rng, {4}, -0.5f, 0.5f);
    return check(
        [](Tape& tp, const std::vector<int>& in) {
          return mean_all(tp, conv2d(tp, in[0], in[1], in[2], 1, 1, 4));
        },
        {x, w, b});
  }});

  defs.push_back({"swish", 1e-3f, [](Rng& rng) {
    Tensor x = rand_uniform(rng, {2, 3, 4, 4}, -2.0f, 2.0f);
    Tensor beta = rand_uniform(rng, {}, 0.5f, 1.5f);
    return check(
        [](Tape& tp, const std::vector<int>& in) {
          return mean_all(tp, swish(tp, in[0], in[1]));
        },
        {x, beta});
  }});

  defs.push_back({"sigmoid", 1e-3f, [](Rng& rng) {
    Tensor x = rand_uniform(rng, {1, 2, 4, 4}, -3.0f, 3.0f);
    return check(
        [](Tape& tp, const std::vector<int>& in) {
          return mean_all(tp, sigmoid(tp, in[0]));
        },
        {x});
  }});

  defs.push_back({"relu", 1e-3f, [](Rng& rng) {
    Tensor x = rand_off_zero(rng, {1, 2, 4, 4}, 0.05f);
    return check(
        [](Tape& tp, const std::vector<int>& in) { return mean_all(tp, relu(tp, in[0])); },
        {x});
  }});

  defs.push_back({"global_avg_pool", 1e-3f, [](Rng& rng) {
    Tensor x = rand_uniform(rng, {2, 3, 4, 4}, -1.0f, 1.0f);
    return check(
        [](Tape& tp, const std::vector<int>& in) {
          return mean_all(tp, global_avg_pool(tp, in[0]));
        },
        {x});
  }});

  defs.push_back({"upsample_bilinear", 1e-3f, [](Rng& rng) {
    Tensor x = rand_uniform(rng, {1, 2, 3, 3}, -1.0f, 1.0f);
    return check(
        [](Tape& tp, const std::vector<int>& in) {
          return mean_all(tp, upsample_bilinear(tp, in[0], 2));
        },
        {x});
  }});

  defs.push_back({"add", 1e-3f, [](Rng& rng) {
    Tensor a = rand_uniform(rng, {2, 2, 3, 3}, -1.0f, 1.0f);
    Tensor b = rand_uniform(rng, {2, 2, 3, 3}, -1.0f, 1.0f);
    return check(
        [](Tape& tp, const std::vector<int>& in) {
          return mean_all(tp, add(tp, in[0], in[1]));
        },
        {a, b});
  }});

  defs.push_back({"mul", 1e-3f, [](Rng& rng) {
    Tensor a = rand_uniform(rng, {2, 2, 3, 3}, -1.0f, 1.0f);
    Tensor b = rand_uniform(rng, {2, 2, 3, 3}, -1.0f, 1.0f);
    return check(
        [](Tape& tp, const std::vector<int>& in) {
          return mean_all(tp, mul(tp, in[0], in[1]));
        },
        {a, b});
  }});

  defs.push_back({"mul_channel", 1e-3f, [](Rng& rng) {
    Tensor x = rand_uniform(rng, {2, 3, 4, 4}, -1.0f, 1.0f);
    Tensor g = rand_uniform(rng, {2, 3, 1, 1}, -1.0f, 1.0f);
    return check(
        [](Tape& tp, const std::vector<int>& in) {
          return mean_all(tp, mul_channel(tp, in[0], in[1]));
        },
        {x, g});
  }});

  defs.push_back({"concat_channels", 1e-3f, [](Rng& rng) {
    Tensor a = rand_uniform(rng, {1, 2, 3, 3}, -1.0f, 1.0f);
    Tensor b = rand_uniform(rng, {1, 3, 3, 3}, -1.0f, 1.0f);
    return check(
        [](Tape& tp, const std::vector<int>& in) {
          return mean_all(tp, concat_channels(tp, in[0], in[1]));
        },
        {a, b});
  }});

  defs.push_back({"mean_all", 1e-3f, [](Rng& rng) {
    Tensor x = rand_uniform(rng, {2, 3, 4, 4}, -1.0f, 1.0f);
    return check(
        [](Tape& tp, const std::vector<int>& in) { return mean_all(tp, in[0]); }, {x});
  }});

  // kept small: sum-reduced losses amplify f32 central-difference noise
  defs.push_back({"sum_all", 1e-3f, [](Rng& rng) {
    Tensor x = rand_uniform(rng, {1, 2, 3, 3}, -1.0f, 1.0f);
    return check(
        [](Tape& tp, const std::vector<int>& in) { return sum_all(tp, in[0]); }, {x});
  }});

  defs.push_back({"affine2", 1e-3f, [](Rng& rng) {
    Tensor a = rand_uniform(rng, {}, -1.0f, 1.0f);
    Tensor b = rand_uniform(rng, {}, -1.0f, 1.0f);
    return check(
        [](Tape& tp, const std::vector<int>& in) {
          return affine2(tp, in[0], in[1], 0.5f, -0.5f, 0.5f);
        },
        {a, b});
  }});

  defs.push_back({"bce", 1e-3f, [](Rng& rng) {
    Tensor p = rand_uniform(rng, {1, 1, 4, 4}, 0.05f, 0.95f);
    Tensor t = rand_binary(rng, {1, 1, 4, 4});
    return check(
        [t](Tape& tp, const std::vector<int>& in) {
          int truth = tp.leaf(t, false);
          return bce(tp, in[0], truth);
        },
        {p});
  }});

  defs.push_back({"soft_dice", 1e-3f, [](Rng& rng) {
    Tensor p = rand_uniform(rng, {2, 1, 4, 4}, 0.05f, 0.95f);
    Tensor t = rand_binary(rng, {2, 1, 4, 4});
    return check(
        [t](Tape& tp, const std::vector<int>& in) {
          int truth = tp.leaf(t, false);
          return soft_dice(tp, in[0], truth);
        },
        {p});
  }});

  defs.push_back({"composite_loss", 1e-3f, [](Rng& rng) {
    Tensor logits = rand_uniform(rng, {1, 1, 4, 4}, -2.0f, 2.0f);
    Tensor t = rand_binary(rng, {1, 1, 4, 4});
    return check(
        [t](Tape& tp, const std::vector<int>& in) {
          int truth = tp.leaf(t, false);
          return composite_loss(tp, in[0], truth, {});
        },
        {logits});
  }});

  defs.push_back({"model_end_to_end", 5e-3f, [](Rng& rng) {
    // Network weights vary with the draw; gradient is taken w.r.t. the input.
    uint64_t model_seed = rng();
    SegModel model = build_segmentation_model(NetworkSpec{}, model_seed);
    Tensor x = rand_uniform(rng, {1, 1, 16, 16}, 0.0f, 1.0f);
    Tensor t = rand_binary(rng, {1, 1, 16, 16});
    return check(
        [&model, t](Tape& tp, const std::vector<int>& in) {
          std::vector<int> ids = model.place_params(tp, false);
          int logits = model.forward(tp, ids, in[0]);
          int truth = tp.leaf(t, false);
          return composite_loss(tp, logits, truth, {});
        },
        {x});
  }});

  std::vector<GradcheckCase> out;
  for (size_t c = 0; c < defs.size(); ++c) {
    GradcheckCase gc;
    gc.name = defs[c].name;
    gc.tolerance = defs[c].tolerance;
    for (int s = 0; s < seeds; ++s) {
      Rng rng = make_rng(mix_seed(kSuiteTag, c * 1000 + static_cast<uint64_t>(s)));
      GradcheckReport rep = defs[c].run(rng);
      if (rep.max_error > gc.max_error) gc.max_error = rep.max_error;
    }
    gc.pass = gc.max_error <= gc.tolerance;
    out.push_back(std::move(gc));
  }
  return out;
}

}  // namespace contrailseg
