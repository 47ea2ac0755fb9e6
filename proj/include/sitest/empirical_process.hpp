#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "sitest/core_data.hpp"
#include "sitest/errors.hpp"
#include "sitest/index_estimation.hpp"
#include "sitest/limit_distribution.hpp"
#include "sitest/partition.hpp"

namespace sitest {

/// Nonnegative rational p/q with q > 0; ranks and cell sizes stay integral until assembly.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  double value() const noexcept { return static_cast<double>(num) / static_cast<double>(den); }

  friend bool operator<(const Rational& a, const Rational& b) noexcept {
    return a.num * b.den < b.num * a.den;
  }
  friend bool operator==(const Rational& a, const Rational& b) noexcept {
    return a.num * b.den == b.num * a.den;
  }
};

/// b - a as a double, with a single rounding.
inline double rational_gap(const Rational& a, const Rational& b) noexcept {
  return static_cast<double>(b.num * a.den - a.num * b.den) /
         (static_cast<double>(a.den) * static_cast<double>(b.den));
}

/*
 * For each observation i: its cell, its class and t_i = F_k(Z_i), the pooled within-cell
 * empirical CDF (strict inequality) evaluated at Z_i. t_i = rank_i / cell_size with rank_i
 * the number of cell members having strictly smaller Z.
 */
struct TransformedSample {
  std::vector<std::size_t> cells;
  std::vector<std::uint8_t> labels;
  std::vector<Rational> t;

  std::size_t size() const noexcept { return t.size(); }
};

inline TransformedSample transform_sample(std::span<const double> zs,
                                          std::span<const std::uint8_t> ys,
                                          std::span<const std::size_t> cell_ids,
                                          const CellCounts& counts) {
  const std::size_t n = zs.size();
  const std::size_t m = counts.cells();
  TransformedSample ts;
  ts.cells.assign(cell_ids.begin(), cell_ids.end());
  ts.labels.assign(ys.begin(), ys.end());
  ts.t.assign(n, Rational{});

  std::vector<std::vector<std::size_t>> members(m);
  for (std::size_t k = 0; k < m; ++k) members[k].reserve(counts.cell_size(k + 1));
  for (std::size_t i = 0; i < n; ++i) members[cell_ids[i] - 1].push_back(i);

  for (std::size_t k = 0; k < m; ++k) {
    auto& idx = members[k];
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return zs[a] < zs[b]; });
    const auto size = static_cast<std::int64_t>(idx.size());
    std::int64_t rank = 0;
    for (std::size_t pos = 0; pos < idx.size(); ++pos) {
      if (pos > 0 && zs[idx[pos]] != zs[idx[pos - 1]]) rank = static_cast<std::int64_t>(pos);
      ts.t[idx[pos]] = Rational{rank, size};
    }
  }
  return ts;
}

inline TransformedSample transform_sample(const Dataset& ds, std::span<const std::size_t> cell_ids,
                                          const CellCounts& counts) {
  return transform_sample(ds.zs(), ds.ys(), cell_ids, counts);
}

/*
 * Left-continuous step function on [0, 1]: value 0 at u = 0 and values[a] on
 * (knots[a], knots[a+1]]. knots[0] = 0 and knots.back() = 1.
 */
struct StepFunction {
  std::vector<Rational> knots;
  std::vector<double> values;

  std::size_t pieces() const noexcept { return values.size(); }
  double length(std::size_t a) const noexcept { return rational_gap(knots[a], knots[a + 1]); }

  double operator()(double u) const {
    if (u <= 0.0) return 0.0;
    // first knot >= u closes the piece containing u
    std::size_t lo = 1, hi = knots.size() - 1;
    if (u > knots.back().value()) return values.back();
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      if (knots[mid].value() < u) lo = mid + 1; else hi = mid;
    }
    return values[lo - 1];
  }
};

/// Subsample empirical distribution of the transformed values of class `label`.
inline StepFunction gamma_hat(const TransformedSample& ts, int label) {
  std::vector<Rational> vals;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (ts.labels[i] == label) vals.push_back(ts.t[i]);
  }
  if (vals.empty()) throw DataError("gamma_hat: class " + std::to_string(label) + " is empty");
  std::sort(vals.begin(), vals.end());
  const double nj = static_cast<double>(vals.size());

  StepFunction f;
  f.knots.push_back(Rational{0, 1});
  std::size_t seen = 0;
  std::size_t pos = 0;
  if (vals.front() == Rational{0, 1}) {
    while (pos < vals.size() && vals[pos] == Rational{0, 1}) ++pos;
    seen = pos;
  }
  // value on (knots.back(), next knot]
  while (pos < vals.size()) {
    f.values.push_back(static_cast<double>(seen) / nj);
    const Rational knot = vals[pos];
    f.knots.push_back(knot);
    while (pos < vals.size() && vals[pos] == knot) ++pos;
    seen = pos;
  }
  f.values.push_back(static_cast<double>(seen) / nj);
  f.knots.push_back(Rational{1, 1});
  return f;
}

/*
 * sqrt(1 - (n0 n1 / n) sum_k (n_{0,k}/n0 - n_{1,k}/n1)^2 / (n_{0,k} + n_{1,k})).
 * The per-cell terms are summed in ascending order so the result does not depend on cell
 * numbering.
 */
inline double normalizer(const CellCounts& counts) {
  const double n0 = static_cast<double>(counts.total(0));
  const double n1 = static_cast<double>(counts.total(1));
  const double n = n0 + n1;
  std::vector<double> terms(counts.cells());
  for (std::size_t k = 1; k <= counts.cells(); ++k) {
    const double diff = static_cast<double>(counts.count(0, k)) / n0 -
                        static_cast<double>(counts.count(1, k)) / n1;
    terms[k - 1] = diff * diff / static_cast<double>(counts.cell_size(k));
  }
  std::sort(terms.begin(), terms.end());
  double sum = 0.0;
  for (double t : terms) sum += t;
  const double bracket = 1.0 - (n0 * n1 / n) * sum;
  if (!(bracket > 1e-12)) throw NonPositiveNormalizerError(bracket);
  return std::sqrt(bracket);
}

/// The normalized two-sample process gamma_n together with its normalizer.
struct GammaProcess {
  StepFunction path;
  double normalizer = 1.0;

  double operator()(double u) const { return path(u); }
};

inline GammaProcess gamma_process(const TransformedSample& ts, const CellCounts& counts) {
  const double norm = normalizer(counts);
  const std::size_t n0 = counts.total(0), n1 = counts.total(1);
  const double scale =
      std::sqrt(static_cast<double>(n0) * static_cast<double>(n1) / static_cast<double>(n0 + n1)) / norm;

  std::vector<std::size_t> order(ts.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return ts.t[a] < ts.t[b]; });

  GammaProcess g;
  g.normalizer = norm;
  auto& f = g.path;
  f.knots.push_back(Rational{0, 1});
  std::size_t c0 = 0, c1 = 0, pos = 0;
  auto value = [&] {
    const double diff = static_cast<double>(c0) / static_cast<double>(n0) -
                        static_cast<double>(c1) / static_cast<double>(n1);
    return scale * diff;
  };
  auto absorb = [&](const Rational& knot) {
    while (pos < order.size() && ts.t[order[pos]] == knot) {
      (ts.labels[order[pos]] == 0 ? c0 : c1) += 1;
      ++pos;
    }
  };
  absorb(Rational{0, 1});
  while (pos < order.size()) {
    f.values.push_back(value());
    const Rational knot = ts.t[order[pos]];
    f.knots.push_back(knot);
    absorb(knot);
  }
  f.values.push_back(value());
  f.knots.push_back(Rational{1, 1});
  return g;
}

/// T_n = int_0^1 gamma_n(u)^2 du, integrated exactly over the pieces.
inline double cvm_statistic(const StepFunction& f) {
  double sum = 0.0;
  for (std::size_t a = 0; a < f.pieces(); ++a) sum += f.values[a] * f.values[a] * f.length(a);
  return sum;
}
inline double cvm_statistic(const GammaProcess& g) { return cvm_statistic(g.path); }

/// sup_u |gamma_n(u)|.
inline double ks_statistic(const StepFunction& f) {
  double sup = 0.0;
  for (double v : f.values) sup = std::max(sup, std::abs(v));
  return sup;
}
inline double ks_statistic(const GammaProcess& g) { return ks_statistic(g.path); }

// ---------------------------------------------------------------------------
// Full pipeline

struct OracleMode {
  Direction direction;
};
struct EstimateMode {
  AdeConfig config;
};
using DirectionMode = std::variant<OracleMode, EstimateMode>;

struct TestResult {
  double t_n = 0.0;
  double ks_n = 0.0;
  double p_value = 1.0;
  std::size_t m = 0;
  std::size_t requested_m = 0;
  CellCounts counts{{1}, {1}};
  double normalizer = 1.0;
  Direction direction{{1.0}};
  std::string mode;  // "oracle" or "estimate"
  std::vector<double> boundaries;
};

/// Statistics for a fixed direction and cell count.
inline TestResult run_test_with_direction(const Dataset& ds, std::size_t m, const Direction& dir,
                                          CellRule rule = CellRule::both_classes) {
  const auto index = project_index(ds, dir);
  const auto partition = build_equal_mass_cells(index, m);
  const auto cells = assign_cells(index, partition);
  auto counts = validate_cells(cells, ds.ys(), m, rule);
  const auto ts = transform_sample(ds, cells, counts);
  const auto g = gamma_process(ts, counts);

  TestResult r;
  r.counts = std::move(counts);
  r.direction = dir;
  r.t_n = cvm_statistic(g);
  r.ks_n = ks_statistic(g);
  r.p_value = cvm_p_value(r.t_n);
  r.m = m;
  r.requested_m = m;
  r.normalizer = g.normalizer;
  r.boundaries.assign(partition.boundaries().begin(), partition.boundaries().end());
  return r;
}

inline Direction resolve_direction(const Dataset& ds, const DirectionMode& mode) {
  if (const auto* o = std::get_if<OracleMode>(&mode)) {
    if (o->direction.dim() != ds.dim()) {
      throw DataError("direction has dimension " + std::to_string(o->direction.dim()) +
                      " but data has d = " + std::to_string(ds.dim()));
    }
    return o->direction;
  }
  return estimate_direction(ds, std::get<EstimateMode>(mode).config);
}

/*
 * Projects, partitions, transforms and evaluates T_n, KS_n and the asymptotic p-value.
 * With `auto_shrink`, an EmptyCellError triggers a retry with m - 1 (reported through
 * `on_retry`) until the partition is valid or m reaches 1.
 */
inline TestResult run_test(const Dataset& ds, std::size_t m, const DirectionMode& mode,
                           bool auto_shrink = false,
                           const std::function<void(std::size_t, const EmptyCellError&)>& on_retry = {},
                           CellRule rule = CellRule::both_classes) {
  if (m < 1) throw DataError("run_test: m must be at least 1");
  const auto counts = class_counts(ds);
  if (counts.n0 == 0 || counts.n1 == 0) {
    throw DataError("run_test: both classes must be present (n0 = " + std::to_string(counts.n0) +
                    ", n1 = " + std::to_string(counts.n1) + ")");
  }
  const Direction dir = resolve_direction(ds, mode);
  const char* mode_name = std::holds_alternative<OracleMode>(mode) ? "oracle" : "estimate";
  std::size_t cur = m;
  while (true) {
    try {
      auto r = run_test_with_direction(ds, cur, dir, rule);
      r.requested_m = m;
      r.mode = mode_name;
      return r;
    } catch (const EmptyCellError& e) {
      if (!auto_shrink || cur <= 1) throw;
      if (on_retry) on_retry(cur, e);
      --cur;
    }
  }
}

}  // namespace sitest
