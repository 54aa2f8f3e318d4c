#pragma once

// Compressed-row sparse matrix with a fixed sparsity pattern.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "surfvec/error.hpp"

namespace surfvec {

using Vector = std::vector<double>;

class CsrMatrix {
 public:
  CsrMatrix() = default;

  /// Builds the pattern from per-row column lists; each list is sorted and deduplicated.
  explicit CsrMatrix(std::vector<std::vector<int>> rows) {
    n_ = static_cast<int>(rows.size());
    row_ptr_.assign(n_ + 1, 0);
    for (int i = 0; i < n_; ++i) {
      auto& r = rows[i];
      std::sort(r.begin(), r.end());
      r.erase(std::unique(r.begin(), r.end()), r.end());
      row_ptr_[i + 1] = row_ptr_[i] + static_cast<int>(r.size());
    }
    cols_.reserve(row_ptr_[n_]);
    for (auto& r : rows) {
      cols_.insert(cols_.end(), r.begin(), r.end());
      std::vector<int>().swap(r);
    }
    vals_.assign(cols_.size(), 0.0);
  }

  int rows() const { return n_; }
  std::size_t nnz() const { return cols_.size(); }
  const std::vector<int>& row_ptr() const { return row_ptr_; }
  const std::vector<int>& cols() const { return cols_; }
  const std::vector<double>& values() const { return vals_; }
  std::vector<double>& values() { return vals_; }

  /// Position of (r, c) in the value array, or -1 outside the pattern.
  std::ptrdiff_t find(int r, int c) const {
    const auto first = cols_.begin() + row_ptr_[r];
    const auto last = cols_.begin() + row_ptr_[r + 1];
    const auto it = std::lower_bound(first, last, c);
    if (it == last || *it != c) return -1;
    return it - cols_.begin();
  }

  double operator()(int r, int c) const {
    const auto k = find(r, c);
    return k < 0 ? 0.0 : vals_[k];
  }

  void add(int r, int c, double v) {
    const auto k = find(r, c);
    if (k < 0) throw Error("sparse entry outside the assembled pattern");
    vals_[k] += v;
  }

  void multiply(std::span<const double> x, std::span<double> y) const {
    for (int i = 0; i < n_; ++i) {
      double s = 0.0;
      for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) s += vals_[k] * x[cols_[k]];
      y[i] = s;
    }
  }

  Vector operator*(std::span<const double> x) const {
    Vector y(n_);
    multiply(x, y);
    return y;
  }

  Vector diagonal() const {
    Vector d(n_, 0.0);
    for (int i = 0; i < n_; ++i) d[i] = (*this)(i, i);
    return d;
  }

  /// Maximum absolute column sum.
  double norm1() const {
    Vector colsum(n_, 0.0);
    for (std::size_t k = 0; k < cols_.size(); ++k) colsum[cols_[k]] += std::abs(vals_[k]);
    return n_ == 0 ? 0.0 : *std::max_element(colsum.begin(), colsum.end());
  }

  bool same_pattern(const CsrMatrix& o) const {
    return row_ptr_ == o.row_ptr_ && cols_ == o.cols_;
  }

  /// Exact structural and numerical symmetry.
  bool is_symmetric() const {
    for (int i = 0; i < n_; ++i)
      for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
        const auto t = find(cols_[k], i);
        if (t < 0 || vals_[t] != vals_[k]) return false;
      }
    return true;
  }

 private:
  int n_ = 0;
  std::vector<int> row_ptr_;
  std::vector<int> cols_;
  std::vector<double> vals_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

}  // namespace surfvec
