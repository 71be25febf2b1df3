#pragma once

#include <functional>
#include <vector>

#include "contrailseg/tensor.hpp"

namespace contrailseg {

// Reverse-mode tape over whole tensors. Every op appends one node whose
// closure scatters the node's gradient into its parents, so replaying the
// tape in reverse recorded order visits each operation exactly once.
//
// Gradient contract: backward() recomputes interior gradients from scratch
// but accumulates into leaf gradients, so calling backward twice without
// zeroing doubles every leaf grad. A Tape is confined to one thread;
// distinct tapes may run in parallel.
class Tape {
 public:
  using BackFn = std::function<void(Tape&)>;

  struct Node {
    Tensor t;
    BackFn back;  // empty for leaves
  };

  int leaf(Tensor value) {
    nodes_.push_back(Node{std::move(value), nullptr});
    return static_cast<int>(nodes_.size()) - 1;
  }

  int leaf(Tensor value, bool requires_grad) {
    value.requires_grad = requires_grad;
    return leaf(std::move(value));
  }

  int record(Tensor value, BackFn back) {
    nodes_.push_back(Node{std::move(value), std::move(back)});
    return static_cast<int>(nodes_.size()) - 1;
  }

  Tensor& at(int id) { return nodes_[static_cast<size_t>(id)].t; }
  const Tensor& at(int id) const { return nodes_[static_cast<size_t>(id)].t; }
  float value_of(int id) const { return nodes_[static_cast<size_t>(id)].t.data[0]; }
  bool is_leaf(int id) const { return !nodes_[static_cast<size_t>(id)].back; }
  size_t size() const { return nodes_.size(); }

  // Seeds d(root)/d(root) = 1 and replays the tape in reverse. root must be
  // scalar. Populates grad on every requires_grad tensor reachable from it.
  void backward(int root);

 private:
  std::vector<Node> nodes_;
};

}  // namespace contrailseg
