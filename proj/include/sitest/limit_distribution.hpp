#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "sitest/errors.hpp"

namespace sitest {

namespace detail {

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
inline void gauss_legendre(std::size_t n, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (std::size_t k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
        p0 = p1;
        p1 = p2;
      }
      dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // recompute derivative at the converged node
    double p0 = 1.0, p1 = x;
    for (std::size_t k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
      p0 = p1;
      p1 = p2;
    }
    dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    weights[i] = weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
}

}  // namespace detail

/*
 * Law of the integrated squared Brownian bridge, S = int_0^1 B(u)^2 du.
 *
 * Karhunen-Loeve: S = sum_k xi_k^2 / (k pi)^2 with xi_k iid N(0,1), so
 *   phi(t) = prod_k (1 - 2 i t lambda_k)^(-1/2),  lambda_k = 1/(k pi)^2.
 * The product is truncated at K terms; the remainder sum_{k>K} lambda_k xi_k^2 is replaced
 * by a Gaussian with the same mean and variance. The CDF comes from Gil-Pelaez inversion
 *   F(x) = 1/2 - (1/pi) int_0^inf Im(exp(-i t x) phi(t)) / t dt,
 * integrated by composite Gauss-Legendre panels on [0, t_max]. |phi(t)| ~ exp(-sqrt(t)/2),
 * so t_max = 2500 leaves a truncation error near 1e-12.
 *
 * phi is tabulated once at construction; afterwards every query is read-only.
 */
class CvmLimitLaw {
 public:
  struct Options {
    std::size_t terms = 1000;      // K
    double t_max = 2500.0;
    double panel_width = 1.0;      // resolves exp(-i t x) for x <= x_max
    std::size_t panel_order = 16;
    double x_max = 8.0;            // 1 - F(8) < 1e-16
    double x_min = 0.006;          // F(0.006) < 2e-9
  };

  CvmLimitLaw() : CvmLimitLaw(Options{}) {}

  explicit CvmLimitLaw(const Options& opt) : opt_(opt) {
    tabulate();
    for (std::size_t i = 0; i < kCachedLevels.size(); ++i) {
      cached_quantiles_[i] = solve_quantile(kCachedLevels[i]);
    }
  }

  /// Process-wide instance with default options.
  static const CvmLimitLaw& standard() {
    static const CvmLimitLaw law;
    return law;
  }

  static constexpr double mean() { return 1.0 / 6.0; }
  static constexpr double variance() { return 1.0 / 45.0; }

  double cdf(double x) const {
    if (!(x > opt_.x_min)) return 0.0;
    if (x >= opt_.x_max) return 1.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < t_.size(); ++i) {
      // Im(exp(-i t x) a) = a.imag cos(tx) - a.real sin(tx)
      const double tx = t_[i] * x;
      acc += cdf_coef_[i].imag() * std::cos(tx) - cdf_coef_[i].real() * std::sin(tx);
    }
    return std::clamp(0.5 - acc / std::numbers::pi, 0.0, 1.0);
  }

  double survival(double x) const { return 1.0 - cdf(x); }

  double density(double x) const {
    if (!(x > opt_.x_min) || x >= opt_.x_max) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < t_.size(); ++i) {
      const double tx = t_[i] * x;
      acc += pdf_coef_[i].real() * std::cos(tx) + pdf_coef_[i].imag() * std::sin(tx);
    }
    return std::max(acc / std::numbers::pi, 0.0);
  }

  double quantile(double p) const {
    if (!(p > 0.0 && p < 1.0)) {
      throw DataError("cvm_limit_quantile: probability must lie in (0, 1), got " + std::to_string(p));
    }
    for (std::size_t i = 0; i < kCachedLevels.size(); ++i) {
      if (p == kCachedLevels[i]) return cached_quantiles_[i];
    }
    return solve_quantile(p);
  }

  double p_value(double t) const {
    if (!(t >= 0.0)) throw DataError("p_value: statistic must be non-negative");
    return survival(t);
  }

  const Options& options() const noexcept { return opt_; }

  static constexpr std::array<double, 3> kCachedLevels{0.90, 0.95, 0.99};

 private:
  void tabulate() {
    const std::size_t K = opt_.terms;
    const double pi2 = std::numbers::pi * std::numbers::pi;
    std::vector<double> lambda(K);
    for (std::size_t k = 1; k <= K; ++k) lambda[k - 1] = 1.0 / (pi2 * static_cast<double>(k * k));

    // Tail sums over k > K via Euler-Maclaurin.
    const double Kd = static_cast<double>(K);
    const double tail2 = 1.0 / Kd - 1.0 / (2 * Kd * Kd) + 1.0 / (6 * Kd * Kd * Kd) -
                         1.0 / (30 * std::pow(Kd, 5));  // sum 1/k^2
    const double tail4 = 1.0 / (3 * Kd * Kd * Kd) - 1.0 / (2 * std::pow(Kd, 4)) +
                         1.0 / (3 * std::pow(Kd, 5));   // sum 1/k^4
    const double rem_mean = tail2 / pi2;
    const double rem_var = 2.0 * tail4 / (pi2 * pi2);

    std::vector<double> gx, gw;
    detail::gauss_legendre(opt_.panel_order, gx, gw);
    const auto panels = static_cast<std::size_t>(std::ceil(opt_.t_max / opt_.panel_width));
    t_.reserve(panels * gx.size());
    cdf_coef_.reserve(panels * gx.size());
    pdf_coef_.reserve(panels * gx.size());
    const double half = 0.5 * opt_.panel_width;
    for (std::size_t p = 0; p < panels; ++p) {
      const double mid = (static_cast<double>(p) + 0.5) * opt_.panel_width;
      for (std::size_t q = 0; q < gx.size(); ++q) {
        const double t = mid + half * gx[q];
        const double w = half * gw[q];
        // log phi(t) = sum_k [-1/4 log(1 + (2 lambda t)^2) + i/2 atan(2 lambda t)]
        double re = 0.0, im = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
          const double a = 2.0 * lambda[k] * t;
          re -= 0.25 * std::log1p(a * a);
          im += 0.5 * std::atan(a);
        }
        re -= 0.5 * rem_var * t * t;
        im += rem_mean * t;
        const std::complex<double> phi = std::polar(std::exp(re), im);
        t_.push_back(t);
        cdf_coef_.push_back(w * phi / t);
        pdf_coef_.push_back(w * phi);
      }
    }
  }

  double solve_quantile(double p) const {
    double lo = 0.0, hi = opt_.x_max;
    double x = mean();
    for (int iter = 0; iter < 200; ++iter) {
      const double f = cdf(x) - p;
      if (std::abs(f) <= 1e-13) return x;
      (f < 0.0 ? lo : hi) = x;
      if (hi - lo <= 1e-14 * std::max(1.0, hi)) return 0.5 * (lo + hi);
      const double dens = density(x);
      double next = dens > 0.0 ? x - f / dens : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      x = next;
    }
    return x;
  }

  Options opt_;
  std::vector<double> t_;
  std::vector<std::complex<double>> cdf_coef_;  // w phi(t) / t
  std::vector<std::complex<double>> pdf_coef_;  // w phi(t)
  std::array<double, 3> cached_quantiles_{};
};

inline double cvm_limit_cdf(double x) { return CvmLimitLaw::standard().cdf(x); }
inline double cvm_limit_quantile(double p) { return CvmLimitLaw::standard().quantile(p); }
inline double cvm_p_value(double t) { return CvmLimitLaw::standard().p_value(t); }

}  // namespace sitest
