#include "contrailseg/ops.hpp"

#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "contrailseg/errors.hpp"

namespace contrailseg {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw DimensionError(msg);
}

float* grad_of(Tape& tp, int id) {
  Tensor& t = tp.at(id);
  t.ensure_grad();
  return t.grad.data();
}

bool wants_grad(const Tape& tp, int id) { return tp.at(id).requires_grad; }

bool any_grad(const Tape& tp, std::initializer_list<int> ids) {
  for (int id : ids)
    if (tp.at(id).requires_grad) return true;
  return false;
}

struct ConvDims {
  int n, cin, h, w, cout, kh, kw, oh, ow, groups, cing, coutg, stride, pad;
};

ConvDims conv_dims(const Tensor& in, const Tensor& wt, const Tensor& bias, int stride,
                   int padding, int groups) {
  require(in.ndim() == 4, "conv2d: input must be 4-D, got " + in.shape_str());
  require(wt.ndim() == 4, "conv2d: weight must be 4-D, got " + wt.shape_str());
  require(bias.ndim() == 1, "conv2d: bias must be 1-D, got " + bias.shape_str());
  if (stride < 1) throw UsageError("conv2d: stride must be >= 1");
  if (padding < 0) throw UsageError("conv2d: padding must be >= 0");
  if (groups < 1) throw UsageError("conv2d: groups must be >= 1");
  ConvDims d;
  d.n = in.dim(0);
  d.cin = in.dim(1);
  d.h = in.dim(2);
  d.w = in.dim(3);
  d.cout = wt.dim(0);
  d.kh = wt.dim(2);
  d.kw = wt.dim(3);
  d.groups = groups;
  d.stride = stride;
  d.pad = padding;
  require(d.cin % groups == 0, "conv2d: axis 1 (channels " + std::to_string(d.cin) +
                                   ") not divisible by groups " + std::to_string(groups));
  require(d.cout % groups == 0, "conv2d: axis 0 of weight (channels " + std::to_string(d.cout) +
                                    ") not divisible by groups " + std::to_string(groups));
  d.cing = d.cin / groups;
  d.coutg = d.cout / groups;
  require(wt.dim(1) == d.cing, "conv2d: weight axis 1 expects " + std::to_string(d.cing) +
                                   " channels, got " + std::to_string(wt.dim(1)));
  require(bias.dim(0) == d.cout, "conv2d: bias axis 0 expects " + std::to_string(d.cout) +
                                     " entries, got " + std::to_string(bias.dim(0)));
  require(d.h + 2 * padding >= d.kh && d.w + 2 * padding >= d.kw,
          "conv2d: kernel larger than padded input on axis 2 or 3");
  d.oh = (d.h + 2 * padding - d.kh) / stride + 1;
  d.ow = (d.w + 2 * padding - d.kw) / stride + 1;
  return d;
}

// Gathers one (sample, group) slice into a [cing*kh*kw, oh*ow] column matrix.
void im2col(const float* in, const ConvDims& d, int n, int g, float* col) {
  const int m = d.oh * d.ow;
  for (int ci = 0; ci < d.cing; ++ci) {
    const float* plane = in + (static_cast<int64_t>(n) * d.cin + g * d.cing + ci) *
                                  static_cast<int64_t>(d.h) * d.w;
    for (int ky = 0; ky < d.kh; ++ky) {
      for (int kx = 0; kx < d.kw; ++kx) {
        float* row = col + static_cast<int64_t>((ci * d.kh + ky) * d.kw + kx) * m;
        for (int oy = 0; oy < d.oh; ++oy) {
          int iy = oy * d.stride - d.pad + ky;
          float* dst = row + oy * d.ow;
          if (iy < 0 || iy >= d.h) {
            std::memset(dst, 0, sizeof(float) * static_cast<size_t>(d.ow));
            continue;
          }
          const float* src = plane + static_cast<int64_t>(iy) * d.w;
          for (int ox = 0; ox < d.ow; ++ox) {
            int ix = ox * d.stride - d.pad + kx;
            dst[ox] = (ix >= 0 && ix < d.w) ? src[ix] : 0.0f;
          }
        }
      }
    }
  }
}

void col2im_add(const float* col, const ConvDims& d, int n, int g, float* din) {
  const int m = d.oh * d.ow;
  for (int ci = 0; ci < d.cing; ++ci) {
    float* plane = din + (static_cast<int64_t>(n) * d.cin + g * d.cing + ci) *
                             static_cast<int64_t>(d.h) * d.w;
    for (int ky = 0; ky < d.kh; ++ky) {
      for (int kx = 0; kx < d.kw; ++kx) {
        const float* row = col + static_cast<int64_t>((ci * d.kh + ky) * d.kw + kx) * m;
        for (int oy = 0; oy < d.oh; ++oy) {
          int iy = oy * d.stride - d.pad + ky;
          if (iy < 0 || iy >= d.h) continue;
          float* dst = plane + static_cast<int64_t>(iy) * d.w;
          const float* src = row + oy * d.ow;
          for (int ox = 0; ox < d.ow; ++ox) {
            int ix = ox * d.stride - d.pad + kx;
            if (ix >= 0 && ix < d.w) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

}  // namespace

float sigmoid_value(float x) {
  if (x >= 0.0f) return 1.0f / (1.0f + std::exp(-x));
  float e = std::exp(x);
  return e / (1.0f + e);
}

int conv2d(Tape& tp, int input, int weight, int bias, int stride, int padding, int groups) {
  ConvDims d = conv_dims(tp.at(input), tp.at(weight), tp.at(bias), stride, padding, groups);
  const int m = d.oh * d.ow;
  const int k = d.cing * d.kh * d.kw;

  Tensor out({d.n, d.cout, d.oh, d.ow});
  out.requires_grad = any_grad(tp, {input, weight, bias});
  {
    const Tensor& in = tp.at(input);
    const Tensor& wt = tp.at(weight);
    const Tensor& bs = tp.at(bias);
    std::vector<float> col(static_cast<size_t>(k) * m);
    for (int n = 0; n < d.n; ++n) {
      for (int g = 0; g < d.groups; ++g) {
        im2col(in.data.data(), d, n, g, col.data());
        for (int oc = 0; oc < d.coutg; ++oc) {
          int c = g * d.coutg + oc;
          float* orow = out.data.data() + (static_cast<int64_t>(n) * d.cout + c) * m;
          float b = bs.data[static_cast<size_t>(c)];
          for (int j = 0; j < m; ++j) orow[j] = b;
          const float* wrow = wt.data.data() + static_cast<int64_t>(c) * k;
          for (int kk = 0; kk < k; ++kk) {
            float a = wrow[kk];
            const float* crow = col.data() + static_cast<int64_t>(kk) * m;
            for (int j = 0; j < m; ++j) orow[j] += a * crow[j];
          }
        }
      }
    }
  }
  check_finite(out, "conv2d");

  int self = static_cast<int>(tp.size());
  return tp.record(std::move(out), [=](Tape& t) {
    const float* go = t.at(self).grad.data();
    const Tensor& in = t.at(input);
    const Tensor& wt = t.at(weight);
    bool need_in = wants_grad(t, input);
    bool need_wt = wants_grad(t, weight);
    bool need_bs = wants_grad(t, bias);
    float* gin = need_in ? grad_of(t, input) : nullptr;
    float* gwt = need_wt ? grad_of(t, weight) : nullptr;
    float* gbs = need_bs ? grad_of(t, bias) : nullptr;
    std::vector<float> col;
    std::vector<float> dcol;
    if (need_wt || need_in) col.resize(static_cast<size_t>(k) * m);
    if (need_in) dcol.resize(static_cast<size_t>(k) * m);
    for (int n = 0; n < d.n; ++n) {
      for (int g = 0; g < d.groups; ++g) {
        if (need_wt || need_in) im2col(in.data.data(), d, n, g, col.data());
        if (need_in) std::memset(dcol.data(), 0, dcol.size() * sizeof(float));
        for (int oc = 0; oc < d.coutg; ++oc) {
          int c = g * d.coutg + oc;
          const float* grow = go + (static_cast<int64_t>(n) * d.cout + c) * m;
          if (need_bs) {
            float s = 0.0f;
            for (int j = 0; j < m; ++j) s += grow[j];
            gbs[c] += s;
          }
          if (need_wt) {
            float* gwrow = gwt + static_cast<int64_t>(c) * k;
            for (int kk = 0; kk < k; ++kk) {
              const float* crow = col.data() + static_cast<int64_t>(kk) * m;
              float s = 0.0f;
              for (int j = 0; j < m; ++j) s += grow[j] * crow[j];
              gwrow[kk] += s;
            }
          }
          if (need_in) {
            const float* wrow = wt.data.data() + static_cast<int64_t>(c) * k;
            for (int kk = 0; kk < k; ++kk) {
              float a = wrow[kk];
              if (a == 0.0f) continue;
              float* drow = dcol.data() + static_cast<int64_t>(kk) * m;
              for (int j = 0; j < m; ++j) drow[j] += a * grow[j];
            }
          }
        }
        if (need_in) col2im_add(dcol.data(), d, n, g, gin);
      }
    }
  });
}

int swish(Tape& tp, int x, int beta) {
  const Tensor& xt = tp.at(x);
  const Tensor& bt = tp.at(beta);
  if (bt.numel() != 1)
    throw DimensionError("swish: beta must be scalar, got " + bt.shape_str());
  float b = bt.data[0];
  Tensor out(xt.shape);
  out.requires_grad = any_grad(tp, {x, beta});
  for (size_t i = 0; i < xt.data.size(); ++i)
    out.data[i] = xt.data[i] * sigmoid_value(b * xt.data[i]);
  check_finite(out, "swish");

  int self = static_cast<int>(tp.size());
  return tp.record(std::move(out), [=](Tape& t) {
    const float* go = t.at(self).grad.data();
    const Tensor& xv = t.at(x);
    float bv = t.at(beta).data[0];
    bool need_x = wants_grad(t, x);
    bool need_b = wants_grad(t, beta);
    float* gx = need_x ? grad_of(t, x) : nullptr;
    double gb = 0.0;
    for (size_t i = 0; i < xv.data.size(); ++i) {
      float v = xv.data[i];
      float s = sigmoid_value(bv * v);
      float sp = s * (1.0f - s);
      if (need_x) gx[i] += go[i] * (s + bv * v * sp);
      if (need_b) gb += static_cast<double>(go[i]) * v * v * sp;
    }
    if (need_b) grad_of(t, beta)[0] += static_cast<float>(gb);
  });
}

int sigmoid(Tape& tp, int x) {
  const Tensor& xt = tp.at(x);
  Tensor out(xt.shape);
  out.requires_grad = xt.requires_grad;
  for (size_t i = 0; i < xt.data.size(); ++i) out.data[i] = sigmoid_value(xt.data[i]);
  check_finite(out, "sigmoid");

  int self = static_cast<int>(tp.size());
  return tp.record(std::move(out), [=](Tape& t) {
    if (!wants_grad(t, x)) return;
    const Tensor& o = t.at(self);
    const float* go = o.grad.data();
    float* gx = grad_of(t, x);
    for (size_t i = 0; i < o.data.size(); ++i) {
      float s = o.data[i];
      gx[i] += go[i] * s * (1.0f - s);
    }
  });
}

int relu(Tape& tp, int x) {
  const Tensor& xt = tp.at(x);
  Tensor out(xt.shape);
  out.requires_grad = xt.requires_grad;
  for (size_t i = 0; i < xt.data.size(); ++i) out.data[i] = xt.data[i] > 0.0f ? xt.data[i] : 0.0f;

  int self = static_cast<int>(tp.size());
  return tp.record(std::move(out), [=](Tape& t) {
    if (!wants_grad(t, x)) return;
    const float* go = t.at(self).grad.data();
    const Tensor& xv = t.at(x);
    float* gx = grad_of(t, x);
    for (size_t i = 0; i < xv.data.size(); ++i)
      if (xv.data[i] > 0.0f) gx[i] += go[i];
  });
}

int global_avg_pool(Tape& tp, int x) {
  const Tensor& xt = tp.at(x);
  require(xt.ndim() == 4, "global_avg_pool: input must be 4-D, got " + xt.shape_str());
  int n = xt.dim(0), c = xt.dim(1), h = xt.dim(2), w = xt.dim(3);
  require(h * w > 0, "global_avg_pool: empty spatial extent on axis 2 or 3");
  Tensor out({n, c, 1, 1});
  out.requires_grad = xt.requires_grad;
  float inv = 1.0f / static_cast<float>(h * w);
  for (int i = 0; i < n * c; ++i) {
    const float* plane = xt.data.data() + static_cast<int64_t>(i) * h * w;
    float s = 0.0f;
    for (int j = 0; j < h * w; ++j) s += plane[j];
    out.data[static_cast<size_t>(i)] = s * inv;
  }

  int self = static_cast<int>(tp.size());
  return tp.record(std::move(out), [=](Tape& t) {
    if (!wants_grad(t, x)) return;
    const float* go = t.at(self).grad.data();
    float* gx = grad_of(t, x);
    float inv2 = 1.0f / static_cast<float>(h * w);
    for (int i = 0; i < n * c; ++i) {
      float g = go[i] * inv2;
      float* plane = gx + static_cast<int64_t>(i) * h * w;
      for (int j = 0; j < h * w; ++j) plane[j] += g;
    }
  });
}

int upsample_bilinear(Tape& tp, int x, int factor) {
  const Tensor& xt = tp.at(x);
  require(xt.ndim() == 4, "upsample_bilinear: input must be 4-D, got " + xt.shape_str());
  if (factor < 1) throw UsageError("upsample_bilinear: factor must be >= 1");
  int n = xt.dim(0), c = xt.dim(1), h = xt.dim(2), w = xt.dim(3);
  int oh = h * factor, ow = w * factor;

  // Per-axis source indices and weights, shared by forward and backward.
  auto make_axis = [factor](int in_len, int out_len) {
    std::vector<int> i0(out_len), i1(out_len);
    std::vector<float> f(out_len);
    for (int o = 0; o < out_len; ++o) {
      float s = (static_cast<float>(o) + 0.5f) / static_cast<float>(factor) - 0.5f;
      if (s < 0.0f) s = 0.0f;
      float hi = static_cast<float>(in_len - 1);
      if (s > hi) s = hi;
      int a = static_cast<int>(s);
      if (a > in_len - 2) a = in_len - 2;
      if (a < 0) a = 0;
      i0[o] = a;
      i1[o] = (in_len == 1) ? 0 : a + 1;
      f[o] = (in_len == 1) ? 0.0f : s - static_cast<float>(a);
    }
    return std::tuple(i0, i1, f);
  };
  auto [y0, y1, fy] = make_axis(h, oh);
  auto [x0, x1, fx] = make_axis(w, ow);

  Tensor out({n, c, oh, ow});
  out.requires_grad = xt.requires_grad;
  for (int i = 0; i < n * c; ++i) {
    const float* plane = xt.data.data() + static_cast<int64_t>(i) * h * w;
    float* dst = out.data.data() + static_cast<int64_t>(i) * oh * ow;
    for (int oy = 0; oy < oh; ++oy) {
      const float* r0 = plane + static_cast<int64_t>(y0[oy]) * w;
      const float* r1 = plane + static_cast<int64_t>(y1[oy]) * w;
      float wy = fy[oy];
      float* drow = dst + static_cast<int64_t>(oy) * ow;
      for (int ox = 0; ox < ow; ++ox) {
        float top = r0[x0[ox]] + (r0[x1[ox]] - r0[x0[ox]]) * fx[ox];
        float bot = r1[x0[ox]] + (r1[x1[ox]] - r1[x0[ox]]) * fx[ox];
        drow[ox] = top + (bot - top) * wy;
      }
    }
  }
  check_finite(out, "upsample_bilinear");

  int self = static_cast<int>(tp.size());
  return tp.record(std::move(out), [=, y0 = y0, y1 = y1, fy = fy, x0 = x0, x1 = x1,
                                    fx = fx](Tape& t) {
    if (!wants_grad(t, x)) return;
    const float* go = t.at(self).grad.data();
    float* gx = grad_of(t, x);
    for (int i = 0; i < n * c; ++i) {
      float* plane = gx + static_cast<int64_t>(i) * h * w;
      const float* src = go + static_cast<int64_t>(i) * oh * ow;
      for (int oy = 0; oy < oh; ++oy) {
        float wy = fy[oy];
        const float* srow = src + static_cast<int64_t>(oy) * ow;
        float* r0 = plane + static_cast<int64_t>(y0[oy]) * w;
        float* r1 = plane + static_cast<int64_t>(y1[oy]) * w;
        for (int ox = 0; ox < ow; ++ox) {
          float g = srow[ox];
          float wx = fx[ox];
          r0[x0[ox]] += g * (1.0f - wy) * (1.0f - wx);
          r0[x1[ox]] += g * (1.0f - wy) * wx;
          r1[x0[ox]] += g * wy * (1.0f - wx);
          r1[x1[ox]] += g * wy * wx;
        }
      }
    }
  });
}

int add(Tape& tp, int a, int b) {
  const Tensor& at = tp.at(a);
  const Tensor& bt = tp.at(b);
  require(at.same_shape(bt),
          "add: shape mismatch " + at.shape_str() + " vs " + bt.shape_str());
  Tensor out(at.shape);
  out.requires_grad = any_grad(tp, {a, b});
  for (size_t i = 0; i < at.data.size(); ++i) out.data[i] = at.data[i] + bt.data[i];

  int self = static_cast<int>(tp.size());
  return tp.record(std::move(out), [=](Tape& t) {
    const float* go = t.at(self).grad.data();
    size_t n = t.at(self).data.size();
    if (wants_grad(t, a)) {
      float* ga = grad_of(t, a);
      for (size_t i = 0; i < n; ++i) ga[i] += go[i];
    }
    if (wants_grad(t, b)) {
      float* gb = grad_of(t, b);
      for (size_t i = 0; i < n; ++i) gb[i] += go[i];
    }
  });
}

int mul(Tape& tp, int a, int b) {
  const Tensor& at = tp.at(a);
  const Tensor& bt = tp.at(b);
  require(at.same_shape(bt),
          "mul: shape mismatch " + at.shape_str() + " vs " + bt.shape_str());
  Tensor out(at.shape);
  out.requires_grad = any_grad(tp, {a, b});
  for (size_t i = 0; i < at.data.size(); ++i) out.data[i] = at.data[i] * bt.data[i];

  int self = static_cast<int>(tp.size());
  return tp.record(std::move(out), [=](Tape& t) {
    const float* go = t.at(self).grad.data();
    const Tensor& av = t.at(a);
    const Tensor& bv = t.at(b);
    if (wants_grad(t, a)) {
      float* ga = grad_of(t, a);
      for (size_t i = 0; i < av.data.size(); ++i) ga[i] += go[i] * bv.data[i];
    }
    if (wants_grad(t, b)) {
      float* gb = grad_of(t, b);
      for (size_t i = 0; i < bv.data.size(); ++i) gb[i] += go[i] * av.data[i];
    }
  });
}

int mul_channel(Tape& tp, int x, int gate) {
  const Tensor& xt = tp.at(x);
  const Tensor& gt = tp.at(gate);
  require(xt.ndim() == 4, "mul_channel: input must be 4-D, got " + xt.shape_str());
  require(gt.ndim() == 4 && gt.dim(2) == 1 && gt.dim(3) == 1,
          "mul_channel: gate must be [N,C,1,1], got " + gt.shape_str());
  require(gt.dim(0) == xt.dim(0), "mul_channel: axis 0 mismatch " + xt.shape_str() + " vs " +
                                      gt.shape_str());
  require(gt.dim(1) == xt.dim(1), "mul_channel: axis 1 mismatch " + xt.shape_str() + " vs " +
                                      gt.shape_str());
  int n = xt.dim(0), c = xt.dim(1), hw = xt.dim(2) * xt.dim(3);
  Tensor out(xt.shape);
  out.requires_grad = any_grad(tp, {x, gate});
  for (int i = 0; i < n * c; ++i) {
    float g = gt.data[static_cast<size_t>(i)];
    const float* src = xt.data.data() + static_cast<int64_t>(i) * hw;
    float* dst = out.data.data() + static_cast<int64_t>(i) * hw;
    for (int j = 0; j < hw; ++j) dst[j] = src[j] * g;
  }

  int self = static_cast<int>(tp.size());
  return tp.record(std::move(out), [=](Tape& t) {
    const float* go = t.at(self).grad.data();
    const Tensor& xv = t.at(x);
    const Tensor& gv = t.at(gate);
    if (wants_grad(t, x)) {
      float* gx = grad_of(t, x);
      for (int i = 0; i < n * c; ++i) {
        float g = gv.data[static_cast<size_t>(i)];
        const float* srow = go + static_cast<int64_t>(i) * hw;
        float* drow = gx + static_cast<int64_t>(i) * hw;
        for (int j = 0; j < hw; ++j) drow[j] += srow[j] * g;
      }
    }
    if (wants_grad(t, gate)) {
      float* gg = grad_of(t, gate);
      for (int i = 0; i < n * c; ++i) {
        const float* srow = go + static_cast<int64_t>(i) * hw;
        const float* xrow = xv.data.data() + static_cast<int64_t>(i) * hw;
        float s = 0.0f;
        for (int j = 0; j < hw; ++j) s += srow[j] * xrow[j];
        gg[i] += s;
      }
    }
  });
}

int concat_channels(Tape& tp, int a, int b) {
  const Tensor& at = tp.at(a);
  const Tensor& bt = tp.at(b);
  require(at.ndim() == 4 && bt.ndim() == 4, "concat_channels: inputs must be 4-D");
  require(at.dim(0) == bt.dim(0),
          "concat_channels: axis 0 mismatch " + at.shape_str() + " vs " + bt.shape_str());
  require(at.dim(2) == bt.dim(2) && at.dim(3) == bt.dim(3),
          "concat_channels: spatial mismatch " + at.shape_str() + " vs " + bt.shape_str());
  int n = at.dim(0), ca = at.dim(1), cb = bt.dim(1), hw = at.dim(2) * at.dim(3);
  Tensor out({n, ca + cb, at.dim(2), at.dim(3)});
  out.requires_grad = any_grad(tp, {a, b});
  for (int i = 0; i < n; ++i) {
    std::memcpy(out.data.data() + static_cast<int64_t>(i) * (ca + cb) * hw,
                at.data.data() + static_cast<int64_t>(i) * ca * hw,
                sizeof(float) * static_cast<size_t>(ca) * hw);
    std::memcpy(out.data.data() + (static_cast<int64_t>(i) * (ca + cb) + ca) * hw,
                bt.data.data() + static_cast<int64_t>(i) * cb * hw,
                sizeof(float) * static_cast<size_t>(cb) * hw);
  }

  int self = static_cast<int>(tp.size());
  return tp.record(std::move(out), [=](Tape& t) {
    const float* go = t.at(self).grad.data();
    if (wants_grad(t, a)) {
      float* ga = grad_of(t, a);
      for (int i = 0; i < n; ++i) {
        const float* src = go + static_cast<int64_t>(i) * (ca + cb) * hw;
        float* dst = ga + static_cast<int64_t>(i) * ca * hw;
        for (int j = 0; j < ca * hw; ++j) dst[j] += src[j];
      }
    }
    if (wants_grad(t, b)) {
      float* gb = grad_of(t, b);
      for (int i = 0; i < n; ++i) {
        const float* src = go + (static_cast<int64_t>(i) * (ca + cb) + ca) * hw;
        float* dst = gb + static_cast<int64_t>(i) * cb * hw;
        for (int j = 0; j < cb * hw; ++j) dst[j] += src[j];
      }
    }
  });
}

int sum_all(Tape& tp, int x) {
  const Tensor& xt = tp.at(x);
  double s = 0.0;
  for (float v : xt.data) s += v;
  Tensor out = Tensor::scalar(static_cast<float>(s));
  out.requires_grad = xt.requires_grad;

  int self = static_cast<int>(tp.size());
  return tp.record(std::move(out), [=](Tape& t) {
    if (!wants_grad(t, x)) return;
    float g = t.at(self).grad[0];
    float* gx = grad_of(t, x);
    size_t n = t.at(x).data.size();
    for (size_t i = 0; i < n; ++i) gx[i] += g;
  });
}

int mean_all(Tape& tp, int x) {
  const Tensor& xt = tp.at(x);
  if (xt.numel() == 0) throw UsageError("mean_all: empty tensor");
  double s = 0.0;
  for (float v : xt.data) s += v;
  float inv = 1.0f / static_cast<float>(xt.numel());
  Tensor out = Tensor::scalar(static_cast<float>(s) * inv);
  out.requires_grad = xt.requires_grad;

  int self = static_cast<int>(tp.size());
  return tp.record(std::move(out), [=](Tape& t) {
    if (!wants_grad(t, x)) return;
    float g = t.at(self).grad[0] * inv;
    float* gx = grad_of(t, x);
    size_t n = t.at(x).data.size();
    for (size_t i = 0; i < n; ++i) gx[i] += g;
  });
}

int affine2(Tape& tp, int a, int b, float ca, float cb, float c0) {
  const Tensor& at = tp.at(a);
  const Tensor& bt = tp.at(b);
  if (at.numel() != 1 || bt.numel() != 1)
    throw UsageError("affine2: both inputs must be scalars");
  Tensor out = Tensor::scalar(ca * at.data[0] + cb * bt.data[0] + c0);
  out.requires_grad = any_grad(tp, {a, b});

  int self = static_cast<int>(tp.size());
  return tp.record(std::move(out), [=](Tape& t) {
    float g = t.at(self).grad[0];
    if (wants_grad(t, a)) grad_of(t, a)[0] += g * ca;
    if (wants_grad(t, b)) grad_of(t, b)[0] += g * cb;
  });
}

}  // namespace contrailseg
