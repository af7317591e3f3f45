#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace vesselnet {

/// Row-major dense square matrix; junction systems are (mu+1) x (mu+1) with small mu.
class DenseMatrix {
public:
  explicit DenseMatrix(std::size_t n) : n_(n), data_(n * n, 0.0) {}

  std::size_t size() const noexcept { return n_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }

  double norm1() const {
    double best = 0.0;
    for (std::size_t j = 0; j < n_; ++j) {
      double col = 0.0;
      for (std::size_t i = 0; i < n_; ++i) col += std::abs((*this)(i, j));
      best = std::max(best, col);
    }
    return best;
  }

private:
  std::size_t n_;
  std::vector<double> data_;
};

/// LU factorization with partial pivoting.
class LuDecomposition {
public:
  explicit LuDecomposition(DenseMatrix a) : lu_(std::move(a)), perm_(lu_.size()) {
    const std::size_t n = lu_.size();
    anorm_ = lu_.norm1();
    for (std::size_t i = 0; i < n; ++i) perm_[i] = i;
    det_ = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
      std::size_t piv = k;
      for (std::size_t i = k + 1; i < n; ++i) {
        if (std::abs(lu_(i, k)) > std::abs(lu_(piv, k))) piv = i;
      }
      if (lu_(piv, k) == 0.0) {
        singular_ = true;
        det_ = 0.0;
        return;
      }
      if (piv != k) {
        for (std::size_t j = 0; j < n; ++j) std::swap(lu_(k, j), lu_(piv, j));
        std::swap(perm_[k], perm_[piv]);
        det_ = -det_;
      }
      det_ *= lu_(k, k);
      for (std::size_t i = k + 1; i < n; ++i) {
        lu_(i, k) /= lu_(k, k);
        for (std::size_t j = k + 1; j < n; ++j) lu_(i, j) -= lu_(i, k) * lu_(k, j);
      }
    }
  }

  bool singular() const noexcept { return singular_; }
  double determinant() const noexcept { return det_; }

  std::vector<double> solve(std::span<const double> rhs) const {
    const std::size_t n = lu_.size();
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) {
      double v = rhs[perm_[i]];
      for (std::size_t j = 0; j < i; ++j) v -= lu_(i, j) * x[j];
      x[i] = v;
    }
    for (std::size_t i = n; i-- > 0;) {
      double v = x[i];
      for (std::size_t j = i + 1; j < n; ++j) v -= lu_(i, j) * x[j];
      x[i] = v / lu_(i, i);
    }
    return x;
  }

  /// Exact 1-norm condition number via the explicit inverse (fine for small systems).
  double condition_number() const {
    if (singular_) return std::numeric_limits<double>::infinity();
    const std::size_t n = lu_.size();
    double inv_norm = 0.0;
    std::vector<double> e(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      std::fill(e.begin(), e.end(), 0.0);
      e[j] = 1.0;
      const auto col = solve(e);
      double s = 0.0;
      for (double v : col) s += std::abs(v);
      inv_norm = std::max(inv_norm, s);
    }
    return anorm_ * inv_norm;
  }

private:
  DenseMatrix lu_;
  std::vector<std::size_t> perm_;
  double det_ = 0.0;
  double anorm_ = 0.0;
  bool singular_ = false;
};

}  // namespace vesselnet
