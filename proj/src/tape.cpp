#include "contrailseg/tape.hpp"

#include "contrailseg/errors.hpp"

namespace contrailseg {

void Tape::backward(int root) {
  if (root < 0 || root >= static_cast<int>(nodes_.size()))
    throw UsageError("backward: node id " + std::to_string(root) + " is not on this tape");
  Tensor& r = nodes_[static_cast<size_t>(root)].t;
  if (r.numel() != 1)
    throw UsageError("backward requires a scalar root, got shape " + r.shape_str());

  // Interior grads are per-pass scratch; leaf grads persist and accumulate.
  for (size_t i = 0; i <= static_cast<size_t>(root); ++i) {
    if (nodes_[i].back) nodes_[i].t.zero_grad();
  }
  r.ensure_grad();
  r.grad[0] += 1.0f;
  for (int id = root; id >= 0; --id) {
    Node& n = nodes_[static_cast<size_t>(id)];
    if (n.back && n.t.has_grad()) n.back(*this);
  }
}

}  // namespace contrailseg
