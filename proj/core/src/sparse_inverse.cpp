#include "mgmrf/sparse_inverse.hpp"

#include <algorithm>
#include <string>

#include "mgmrf/errors.hpp"

namespace mgmrf {

PartialInverse::PartialInverse(const CholeskyFactor& factor) {
  n_ = factor.dim();
  SparseMat l = factor.lower();
  const auto& f2o = factor.factor_to_original();
  orig_to_factor_.resize(n_);
  for (int k = 0; k < n_; ++k) orig_to_factor_[f2o[k]] = k;

  colptr_.assign(l.outerIndexPtr(), l.outerIndexPtr() + n_ + 1);
  rowind_.assign(l.innerIndexPtr(), l.innerIndexPtr() + l.nonZeros());
  values_.assign(static_cast<size_t>(l.nonZeros()), 0.0);
  const double* lv = l.valuePtr();

  // Takahashi recursion on the factor pattern, columns processed right to
  // left, rows within a column bottom up:
  //   Z(i,j) = delta_ij / L_jj^2 - sum_{k in col j, k > j} (L_kj / L_jj) Z(k,i)
  // Every Z(k,i) needed lies on the pattern because the filled pattern is
  // chordal.
  auto lookup = [this](int r, int c) -> double {
    const int lo = colptr_[c], hi = colptr_[c + 1];
    auto it = std::lower_bound(rowind_.begin() + lo, rowind_.begin() + hi, r);
    if (it == rowind_.begin() + hi || *it != r) return 0.0;
    return values_[static_cast<size_t>(it - rowind_.begin())];
  };

  for (int j = n_ - 1; j >= 0; --j) {
    const int p0 = colptr_[j], p1 = colptr_[j + 1];
    const double ljj = lv[p0];  // sorted rows put the diagonal first
    for (int pi = p1 - 1; pi >= p0; --pi) {
      const int i = rowind_[pi];
      double s = 0.0;
      for (int pk = p0 + 1; pk < p1; ++pk) {
        const int k = rowind_[pk];
        s += (lv[pk] / ljj) * lookup(std::max(k, i), std::min(k, i));
      }
      values_[pi] = (i == j ? 1.0 / (ljj * ljj) : 0.0) - s;
    }
  }
}

int PartialInverse::find(int i, int j) const {
  if (i < 0 || j < 0 || i >= n_ || j >= n_) return -1;
  int r = orig_to_factor_[i], c = orig_to_factor_[j];
  if (r < c) std::swap(r, c);
  const int lo = colptr_[c], hi = colptr_[c + 1];
  auto it = std::lower_bound(rowind_.begin() + lo, rowind_.begin() + hi, r);
  if (it == rowind_.begin() + hi || *it != r) return -1;
  return static_cast<int>(it - rowind_.begin());
}

bool PartialInverse::has(int i, int j) const { return find(i, j) >= 0; }

double PartialInverse::entry(int i, int j) const {
  const int pos = find(i, j);
  if (pos < 0)
    throw config_error("PartialInverse: entry (" + std::to_string(i) + ", " +
                       std::to_string(j) + ") is off the factor pattern");
  return values_[static_cast<size_t>(pos)];
}

Vec PartialInverse::diagonal() const {
  Vec d(n_);
  for (int i = 0; i < n_; ++i) {
    const int k = orig_to_factor_[i];
    d[i] = values_[static_cast<size_t>(colptr_[k])];
  }
  return d;
}

Vec marginal_variances(const CholeskyFactor& factor) {
  return PartialInverse(factor).diagonal();
}

}  // namespace mgmrf
