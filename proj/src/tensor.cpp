#include "contrailseg/tensor.hpp"

#include <cassert>
#include <cmath>
#include <sstream>

#include "contrailseg/errors.hpp"

namespace contrailseg {

int64_t shape_numel(const std::vector<int>& shape) {
  int64_t n = 1;
  for (int d : shape) {
    if (d < 0) throw DimensionError("negative extent in shape " + shape_to_string(shape));
    n *= d;
  }
  return n;
}

std::string shape_to_string(const std::vector<int>& shape) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << "]";
  return os.str();
}

Tensor::Tensor(std::vector<int> s, float fill)
    : shape(std::move(s)), data(static_cast<size_t>(shape_numel(shape)), fill) {}

Tensor Tensor::scalar(float v) {
  Tensor t({1});
  t.data[0] = v;
  return t;
}

Tensor Tensor::from(std::vector<int> s, std::vector<float> values) {
  if (shape_numel(s) != static_cast<int64_t>(values.size()))
    throw DimensionError("value count " + std::to_string(values.size()) +
                         " does not match shape " + shape_to_string(s));
  Tensor t;
  t.shape = std::move(s);
  t.data = std::move(values);
  return t;
}

void Tensor::ensure_grad() {
  if (grad.empty()) grad.assign(data.size(), 0.0f);
}

void Tensor::zero_grad() {
  if (!grad.empty()) grad.assign(data.size(), 0.0f);
}

std::string Tensor::shape_str() const { return shape_to_string(shape); }

void check_finite(const Tensor& t, const char* where) {
#ifndef NDEBUG
  for (float v : t.data) assert(std::isfinite(v) && where);
#else
  (void)t;
  (void)where;
#endif
}

}  // namespace contrailseg
