#include "contrailseg/optimizer.hpp"

#include <cmath>

#include "contrailseg/errors.hpp"

namespace contrailseg {

void Optimizer::step(std::vector<Tensor*>& params,
                     const std::vector<const std::vector<float>*>& grads) {
  if (params.size() != grads.size())
    throw UsageError("optimizer step: param/grad count mismatch");
  if (m_.empty()) {
    m_.resize(params.size());
    v_.resize(params.size());
    for (size_t i = 0; i < params.size(); ++i) {
      m_[i].assign(params[i]->data.size(), 0.0f);
      v_[i].assign(params[i]->data.size(), 0.0f);
    }
  }
  ++t_;
  for (size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    if (!grads[i] || grads[i]->empty())
      throw UsageError("optimizer step: missing gradient for parameter " + std::to_string(i));
    const std::vector<float>& g = *grads[i];
    if (g.size() != p.data.size())
      throw DimensionError("optimizer step: gradient size mismatch for parameter " +
                           std::to_string(i));
    if (cfg_.kind == OptKind::sgd) {
      for (size_t j = 0; j < g.size(); ++j) p.data[j] -= cfg_.lr * g[j];
      continue;
    }
    float c1 = 1.0f - static_cast<float>(std::pow(cfg_.beta1, static_cast<double>(t_)));
    float c2 = 1.0f - static_cast<float>(std::pow(cfg_.beta2, static_cast<double>(t_)));
    std::vector<float>& m = m_[i];
    std::vector<float>& v = v_[i];
    for (size_t j = 0; j < g.size(); ++j) {
      m[j] = cfg_.beta1 * m[j] + (1.0f - cfg_.beta1) * g[j];
      v[j] = cfg_.beta2 * v[j] + (1.0f - cfg_.beta2) * g[j] * g[j];
      float mh = m[j] / c1;
      float vh = v[j] / c2;
      p.data[j] -= cfg_.lr * mh / (std::sqrt(vh) + cfg_.eps);
    }
  }
}

}  // namespace contrailseg
