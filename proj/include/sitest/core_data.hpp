#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sitest/errors.hpp"

namespace sitest {

/*
 * n observations of (X, Y, Z): X in R^d stored row-major, Y in {0,1}, Z real.
 * Immutable once constructed; the constructor enforces every invariant.
 */
class Dataset {
 public:
  Dataset(std::vector<double> xs, std::size_t d, std::vector<std::uint8_t> ys,
          std::vector<double> zs)
      : xs_(std::move(xs)), ys_(std::move(ys)), zs_(std::move(zs)), d_(d) {
    if (d_ == 0) throw DataError("dataset: covariate dimension d must be at least 1");
    if (xs_.size() % d_ != 0 || xs_.size() / d_ != ys_.size() || ys_.size() != zs_.size()) {
      throw DataError("dataset: X, Y and Z must have the same number of rows");
    }
    if (ys_.size() < 2) throw DataError("dataset: need at least 2 observations");
    for (std::size_t i = 0; i < ys_.size(); ++i) {
      if (ys_[i] > 1) {
        throw DataError("dataset: y at row " + std::to_string(i + 1) + " is not 0/1");
      }
      if (!std::isfinite(zs_[i])) {
        throw DataError("dataset: z at row " + std::to_string(i + 1) + " is not finite");
      }
      for (std::size_t j = 0; j < d_; ++j) {
        if (!std::isfinite(xs_[i * d_ + j])) {
          throw DataError("dataset: x" + std::to_string(j + 1) + " at row " +
                          std::to_string(i + 1) + " is not finite");
        }
      }
    }
  }

  std::size_t size() const noexcept { return ys_.size(); }
  std::size_t dim() const noexcept { return d_; }

  std::span<const double> x(std::size_t i) const noexcept { return {xs_.data() + i * d_, d_}; }
  double x(std::size_t i, std::size_t j) const noexcept { return xs_[i * d_ + j]; }
  int y(std::size_t i) const noexcept { return ys_[i]; }
  double z(std::size_t i) const noexcept { return zs_[i]; }

  std::span<const double> xs() const noexcept { return xs_; }
  std::span<const std::uint8_t> ys() const noexcept { return ys_; }
  std::span<const double> zs() const noexcept { return zs_; }

 private:
  std::vector<double> xs_;
  std::vector<std::uint8_t> ys_;
  std::vector<double> zs_;
  std::size_t d_;
};

/// Unit vector defining the single index x'beta.
class Direction {
 public:
  static constexpr double kNormTolerance = 1e-12;

  explicit Direction(std::vector<double> beta) : beta_(std::move(beta)) {
    if (beta_.empty()) throw DataError("direction: empty vector");
    double sq = 0.0;
    for (double b : beta_) {
      if (!std::isfinite(b)) throw DataError("direction: non-finite component");
      sq += b * b;
    }
    if (std::abs(std::sqrt(sq) - 1.0) > kNormTolerance) {
      throw DataError("direction: vector does not have unit norm (norm = " +
                      std::to_string(std::sqrt(sq)) + ")");
    }
  }

  /// Scales an arbitrary nonzero vector to unit length.
  static Direction normalized(std::vector<double> v) {
    double sq = 0.0;
    for (double b : v) sq += b * b;
    const double norm = std::sqrt(sq);
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      throw DataError("direction: cannot normalize a zero or non-finite vector");
    }
    for (double& b : v) b /= norm;
    return Direction(std::move(v));
  }

  std::size_t dim() const noexcept { return beta_.size(); }
  double operator[](std::size_t j) const noexcept { return beta_[j]; }
  std::span<const double> values() const noexcept { return beta_; }

  Direction operator-() const {
    std::vector<double> v = beta_;
    for (double& b : v) b = -b;
    return Direction(std::move(v));
  }

 private:
  std::vector<double> beta_;
};

struct ClassCounts {
  std::size_t n0 = 0;
  std::size_t n1 = 0;

  std::size_t operator[](int label) const noexcept { return label == 0 ? n0 : n1; }
  friend bool operator==(const ClassCounts&, const ClassCounts&) = default;
};

inline ClassCounts class_counts(std::span<const std::uint8_t> ys) noexcept {
  ClassCounts c;
  for (auto y : ys) (y == 0 ? c.n0 : c.n1) += 1;
  return c;
}

inline ClassCounts class_counts(const Dataset& ds) noexcept { return class_counts(ds.ys()); }

}  // namespace sitest
