#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "sitest/core_data.hpp"
#include "sitest/errors.hpp"

namespace sitest {

/*
 * Tuning for the density-weighted average derivative estimator. The kernel is
 * always the product Gaussian. An empty `bandwidths` means "use default_bandwidths
 * times bandwidth_scale".
 */
struct AdeConfig {
  std::vector<double> bandwidths;
  double bandwidth_scale = 1.0;
  bool round_to_grid = true;
};

/// h_j = sd_j * n^(-1/(d+6)), the undersmoothed rule-of-thumb bandwidth.
inline std::vector<double> default_bandwidths(const Dataset& ds, double scale = 1.0) {
  const std::size_t n = ds.size();
  const std::size_t d = ds.dim();
  if (!(scale > 0.0)) throw ConfigError("ade: bandwidth scale must be positive");
  const double rate = std::pow(static_cast<double>(n), -1.0 / static_cast<double>(d + 6));
  std::vector<double> h(d);
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += ds.x(i, j);
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = ds.x(i, j) - mean;
      ss += e * e;
    }
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (!(sd > 0.0)) {
      throw DataError("ade: covariate x" + std::to_string(j + 1) +
                      " has zero variance; bandwidth undefined");
    }
    h[j] = sd * rate * scale;
  }
  return h;
}

inline std::vector<double> resolve_bandwidths(const Dataset& ds, const AdeConfig& cfg) {
  if (cfg.bandwidths.empty()) return default_bandwidths(ds, cfg.bandwidth_scale);
  if (cfg.bandwidths.size() != ds.dim()) {
    throw ConfigError("ade: expected " + std::to_string(ds.dim()) + " bandwidths, got " +
                      std::to_string(cfg.bandwidths.size()));
  }
  std::vector<double> h = cfg.bandwidths;
  for (double& v : h) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("ade: bandwidths must be positive");
    v *= cfg.bandwidth_scale;
  }
  return h;
}

/*
 * delta_hat = -(2/n) sum_i Y_i grad f_{-i}(X_i), with f_{-i} the leave-one-out
 * product-Gaussian kernel density estimate.
 *
 * The pair term grad K(X_i - X_l) is odd in (i, l), so pairs with Y_i = Y_l cancel and
 * only (class 1, class 0) pairs survive:
 *   delta_j = 2/(n(n-1)) sum_{i: Y=1} sum_{l: Y=0} K_h(X_i - X_l) (X_ij - X_lj) / h_j^2.
 * Accumulation order is fixed: outer i ascending, inner l ascending.
 */
inline std::vector<double> ade_estimate(const Dataset& ds, std::span<const double> h) {
  const std::size_t n = ds.size();
  const std::size_t d = ds.dim();
  if (n < 2) throw DataError("ade: need n >= 2");
  if (h.size() != d) throw ConfigError("ade: bandwidth dimension mismatch");

  double log_norm = 0.0;  // log prod_j 1/(h_j sqrt(2 pi))
  for (double hj : h) log_norm -= std::log(hj) + 0.5 * std::log(2.0 * std::numbers::pi);
  const double kernel_norm = std::exp(log_norm);

  std::vector<double> scaled(n * d);  // X_ij / h_j
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) scaled[i * d + j] = ds.x(i, j) / h[j];
  }
  std::vector<std::size_t> zeros;
  for (std::size_t l = 0; l < n; ++l) {
    if (ds.y(l) == 0) zeros.push_back(l);
  }

  std::vector<double> total(d, 0.0), row(d), u(d);
  for (std::size_t i = 0; i < n; ++i) {
    if (ds.y(i) == 0) continue;
    std::fill(row.begin(), row.end(), 0.0);
    const double* xi = &scaled[i * d];
    for (std::size_t l : zeros) {
      const double* xl = &scaled[l * d];
      double q = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        u[j] = xi[j] - xl[j];
        q += u[j] * u[j];
      }
      const double k = std::exp(-0.5 * q);
      for (std::size_t j = 0; j < d; ++j) row[j] += k * u[j];
    }
    for (std::size_t j = 0; j < d; ++j) total[j] += row[j];
  }
  const double scale = 2.0 * kernel_norm / (static_cast<double>(n) * static_cast<double>(n - 1));
  std::vector<double> delta(d);
  // u_j = (X_ij - X_lj)/h_j, so the factor (X_ij - X_lj)/h_j^2 is u_j / h_j.
  for (std::size_t j = 0; j < d; ++j) delta[j] = scale * total[j] / h[j];
  return delta;
}

inline std::vector<double> ade_estimate(const Dataset& ds, const AdeConfig& cfg) {
  const auto h = resolve_bandwidths(ds, cfg);
  return ade_estimate(ds, h);
}

/// Flips the sign so the first nonzero component is positive.
inline void canonicalize_sign(std::vector<double>& v) noexcept {
  for (double c : v) {
    if (c != 0.0) {
      if (c < 0.0) {
        for (double& e : v) e = -e;
      }
      return;
    }
  }
}

/*
 * Rounds each component down onto the 1/sqrt(n) lattice and normalizes. If every
 * component rounds to zero, the largest-magnitude one is kept at +-1/sqrt(n).
 */
inline Direction round_to_grid(std::span<const double> beta_hat, std::size_t n) {
  if (std::all_of(beta_hat.begin(), beta_hat.end(), [](double b) { return b == 0.0; })) {
    throw DataError("round_to_grid: zero input vector");
  }
  const double s = std::sqrt(static_cast<double>(n));
  std::vector<double> grid(beta_hat.size());
  bool all_zero = true;
  for (std::size_t j = 0; j < beta_hat.size(); ++j) {
    grid[j] = std::floor(s * beta_hat[j]) / s;
    all_zero = all_zero && grid[j] == 0.0;
  }
  if (all_zero) {
    std::size_t big = 0;
    for (std::size_t j = 1; j < beta_hat.size(); ++j) {
      if (std::abs(beta_hat[j]) > std::abs(beta_hat[big])) big = j;
    }
    grid[big] = std::copysign(1.0 / s, beta_hat[big]);
  }
  return Direction::normalized(std::move(grid));
}

/// Turns a raw average-derivative vector into the index direction used for partitioning.
inline Direction direction_from_delta(std::vector<double> delta, std::size_t n, bool round) {
  if (std::all_of(delta.begin(), delta.end(), [](double v) { return v == 0.0; })) {
    throw UnidentifiedDirectionError(
        "average-derivative estimate is the zero vector; the index direction is not identified");
  }
  canonicalize_sign(delta);
  const auto unit = Direction::normalized(std::move(delta));
  if (!round) return unit;
  // The lattice has spacing 1/sqrt(n) relative to a unit vector, so round after normalizing.
  const auto rounded = round_to_grid(unit.values(), n);
  std::vector<double> beta(rounded.values().begin(), rounded.values().end());
  canonicalize_sign(beta);
  return Direction(std::move(beta));
}

inline Direction estimate_direction(const Dataset& ds, const AdeConfig& cfg) {
  return direction_from_delta(ade_estimate(ds, cfg), ds.size(), cfg.round_to_grid);
}

}  // namespace sitest
