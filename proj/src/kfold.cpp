#include "contrailseg/kfold.hpp"

#include <numeric>
#include <string>

#include "contrailseg/errors.hpp"
#include "contrailseg/rng.hpp"

namespace contrailseg {

std::vector<std::vector<int>> kfold_splits(int n, int k, uint64_t seed) {
  if (k < 2) throw ConfigError("folds must be >= 2, got " + std::to_string(k));
  if (k > n)
    throw ConfigError("folds (" + std::to_string(k) + ") exceed sample count (" +
                      std::to_string(n) + ")");

  std::vector<int> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Rng rng = make_rng(mix_seed(seed, 0x6b666f6c64ULL));
  for (int i = n - 1; i > 0; --i) {
    int j = static_cast<int>(uniform_index(rng, static_cast<uint32_t>(i + 1)));
    std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(j)]);
  }

  std::vector<std::vector<int>> folds(static_cast<size_t>(k));
  int base = n / k, extra = n % k;
  size_t pos = 0;
  for (int f = 0; f < k; ++f) {
    int len = base + (f < extra ? 1 : 0);
    folds[static_cast<size_t>(f)].assign(order.begin() + static_cast<long>(pos),
                                         order.begin() + static_cast<long>(pos) + len);
    pos += static_cast<size_t>(len);
  }
  return folds;
}

FoldSplit fold_split(const std::vector<std::vector<int>>& folds, int fold_index) {
  if (fold_index < 0 || static_cast<size_t>(fold_index) >= folds.size())
    throw UsageError("fold index " + std::to_string(fold_index) + " out of range");
  FoldSplit split;
  for (size_t f = 0; f < folds.size(); ++f) {
    auto& dst = static_cast<int>(f) == fold_index ? split.val : split.train;
    dst.insert(dst.end(), folds[f].begin(), folds[f].end());
  }
  return split;
}

}  // namespace contrailseg
