#pragma once

#include <cstdint>
#include <vector>

namespace contrailseg {

// Deterministic shuffled partition of [0, n) into k folds whose sizes differ
// by at most one.
std::vector<std::vector<int>> kfold_splits(int n, int k, uint64_t seed);

struct FoldSplit {
  std::vector<int> train;
  std::vector<int> val;
};

FoldSplit fold_split(const std::vector<std::vector<int>>& folds, int fold_index);

}  // namespace contrailseg
