#include "contrailseg/gradcheck.hpp"

#include <cmath>
#include <cstdlib>

#include "contrailseg/errors.hpp"

namespace contrailseg {

namespace {

float eval(const LossBuilder& build, const std::vector<Tensor>& inputs) {
  Tape tp;
  std::vector<int> ids;
  ids.reserve(inputs.size());
  for (const Tensor& t : inputs) ids.push_back(tp.leaf(t, false));
  int loss = build(tp, ids);
  if (tp.at(loss).numel() != 1)
    throw UsageError("gradcheck: builder must produce a scalar, got shape " +
                     tp.at(loss).shape_str());
  return tp.value_of(loss);
}

}  // namespace

GradcheckReport gradcheck(const LossBuilder& build, std::vector<Tensor> inputs, float h) {
  // Analytic pass.
  std::vector<std::vector<float>> analytic(inputs.size());
  {
    Tape tp;
    std::vector<int> ids;
    for (const Tensor& t : inputs) ids.push_back(tp.leaf(t, true));
    int loss = build(tp, ids);
    if (tp.at(loss).numel() != 1)
      throw UsageError("gradcheck: builder must produce a scalar, got shape " +
                       tp.at(loss).shape_str());
    tp.backward(loss);
    for (size_t i = 0; i < inputs.size(); ++i) {
      const Tensor& leaf = tp.at(ids[i]);
      analytic[i] = leaf.has_grad() ? leaf.grad : std::vector<float>(leaf.data.size(), 0.0f);
    }
  }

  GradcheckReport rep;
  for (size_t i = 0; i < inputs.size(); ++i) {
    for (size_t e = 0; e < inputs[i].data.size(); ++e) {
      float saved = inputs[i].data[e];
      inputs[i].data[e] = saved + h;
      float fp = eval(build, inputs);
      inputs[i].data[e] = saved - h;
      float fm = eval(build, inputs);
      inputs[i].data[e] = saved;
      float numeric = (fp - fm) / (2.0f * h);
      float err = std::fabs(analytic[i][e] - numeric) / std::fmax(1.0f, std::fabs(numeric));
      if (err > rep.max_error) {
        rep.max_error = err;
        rep.worst_input = static_cast<int>(i);
        rep.worst_element = static_cast<int64_t>(e);
        rep.analytic = analytic[i][e];
        rep.numeric = numeric;
      }
    }
  }
  return rep;
}

}  // namespace contrailseg
