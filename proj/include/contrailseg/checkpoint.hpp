#pragma once

#include <string>
#include <vector>

#include "contrailseg/tensor.hpp"

namespace contrailseg {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

// Tensor container: one JSON header line listing name, shape, dtype "f32"
// and byte offset (relative to the end of the header line) for each entry,
// followed by the raw little-endian float payloads in header order.
// Round-trips bitwise.
void save_tensors(const std::string& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> load_tensors(const std::string& path);

void save_tensor(const std::string& path, const Tensor& t, const std::string& name = "tensor");
Tensor load_single_tensor(const std::string& path);

}  // namespace contrailseg
