#pragma once

#include <vector>

#include "mgmrf/gmrf.hpp"
#include "mgmrf/types.hpp"

namespace mgmrf {

// Entries of Q^-1 on the sparsity pattern of the Cholesky factor, via the
// Takahashi recursion. Covers every (i, j) with Q_ij != 0, in particular the
// full diagonal, without forming the dense inverse.
class PartialInverse {
 public:
  explicit PartialInverse(const CholeskyFactor& factor);

  bool has(int i, int j) const;   // original-ordering indices
  double entry(int i, int j) const;  // throws when (i, j) is off the pattern
  Vec diagonal() const;

 private:
  int find(int i, int j) const;  // position in the value array, -1 if absent
  int n_ = 0;
  std::vector<int> orig_to_factor_;
  std::vector<int> colptr_, rowind_;
  std::vector<double> values_;
};

Vec marginal_variances(const CholeskyFactor& factor);

}  // namespace mgmrf
