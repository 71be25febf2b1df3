#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace contrailseg {

// Row-major 32-bit float tensor. grad is either empty or data-sized; it is
// allocated lazily by the tape during backward.
struct Tensor {
  std::vector<int> shape;
  std::vector<float> data;
  std::vector<float> grad;
  bool requires_grad = false;

  Tensor() = default;
  explicit Tensor(std::vector<int> s, float fill = 0.0f);
  static Tensor scalar(float v);
  static Tensor from(std::vector<int> s, std::vector<float> values);

  int64_t numel() const { return static_cast<int64_t>(data.size()); }
  int ndim() const { return static_cast<int>(shape.size()); }
  int dim(int i) const { return shape[static_cast<size_t>(i)]; }
  bool same_shape(const Tensor& o) const { return shape == o.shape; }
  bool has_grad() const { return !grad.empty(); }
  void ensure_grad();
  void zero_grad();
  std::string shape_str() const;
};

int64_t shape_numel(const std::vector<int>& shape);
std::string shape_to_string(const std::vector<int>& shape);

// Debug-build invariant: forward results stay finite on finite inputs.
void check_finite(const Tensor& t, const char* where);

}  // namespace contrailseg
