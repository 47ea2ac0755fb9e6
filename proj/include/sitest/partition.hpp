#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "sitest/core_data.hpp"
#include "sitest/errors.hpp"

namespace sitest {

/// x_i' beta for every row, accumulated left to right over coordinates.
inline std::vector<double> project_index(const Dataset& ds, const Direction& dir) {
  if (dir.dim() != ds.dim()) {
    throw DataError("project_index: direction has dimension " + std::to_string(dir.dim()) +
                    " but data has d = " + std::to_string(ds.dim()));
  }
  std::vector<double> v(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < ds.dim(); ++j) s += ds.x(i, j) * dir[j];
    v[i] = s;
  }
  return v;
}

/*
 * Strip partition of the index line: cell k (1-based) is (a_{k-1}, a_k].
 */
class Partition {
 public:
  explicit Partition(std::vector<double> boundaries) : boundaries_(std::move(boundaries)) {
    if (boundaries_.size() < 2) throw DataError("partition: need at least two boundaries");
    for (std::size_t k = 1; k < boundaries_.size(); ++k) {
      if (!(boundaries_[k - 1] < boundaries_[k])) {
        throw DataError("partition: boundaries must be strictly increasing");
      }
    }
  }

  std::size_t cells() const noexcept { return boundaries_.size() - 1; }
  std::span<const double> boundaries() const noexcept { return boundaries_; }
  double lower() const noexcept { return boundaries_.front(); }
  double upper() const noexcept { return boundaries_.back(); }

  /// Cell id in 1..m with a_{k-1} < v <= a_k.
  std::size_t cell_of(double v) const {
    if (!(v > lower() && v <= upper())) {
      throw DataError("assign_cells: index value " + std::to_string(v) +
                      " lies outside (a_0, a_m]");
    }
    const auto it = std::lower_bound(boundaries_.begin() + 1, boundaries_.end(), v);
    return static_cast<std::size_t>(it - boundaries_.begin());
  }

 private:
  std::vector<double> boundaries_;
};

/*
 * Equal empirical mass cells: a_k is the ceil(k n / m)-th order statistic for 0 < k < m,
 * a_0 = min - 1 and a_m = max. Tied index values at a cut all fall in the lower cell.
 */
inline Partition build_equal_mass_cells(std::span<const double> index_values, std::size_t m) {
  const std::size_t n = index_values.size();
  if (m < 1) throw DataError("build_equal_mass_cells: m must be at least 1");
  if (m > n) {
    throw DataError("build_equal_mass_cells: m = " + std::to_string(m) + " exceeds n = " +
                    std::to_string(n));
  }
  std::vector<double> sorted(index_values.begin(), index_values.end());
  std::sort(sorted.begin(), sorted.end());

  std::vector<double> b(m + 1);
  const double lo = sorted.front();
  b[0] = lo - 1.0;
  if (!(b[0] < lo)) b[0] = std::nextafter(lo, -std::numeric_limits<double>::infinity());
  for (std::size_t k = 1; k < m; ++k) {
    const std::size_t rank = (k * n + m - 1) / m;  // ceil(k n / m), 1-based
    b[k] = sorted[rank - 1];
  }
  b[m] = sorted.back();
  for (std::size_t k = 1; k <= m; ++k) {
    if (!(b[k - 1] < b[k])) {
      throw DataError("build_equal_mass_cells: too few distinct index values for m = " +
                      std::to_string(m) + " cells (boundaries " + std::to_string(k - 1) + " and " +
                      std::to_string(k) + " coincide)");
    }
  }
  return Partition(std::move(b));
}

inline std::vector<std::size_t> assign_cells(std::span<const double> index_values,
                                             const Partition& p) {
  std::vector<std::size_t> cells(index_values.size());
  for (std::size_t i = 0; i < index_values.size(); ++i) cells[i] = p.cell_of(index_values[i]);
  return cells;
}

/// Per-cell, per-class counts n_{j,k}. Cells are 1-based in the accessors.
class CellCounts {
 public:
  CellCounts(std::vector<std::size_t> class0, std::vector<std::size_t> class1)
      : counts_{std::move(class0), std::move(class1)} {
    if (counts_[0].size() != counts_[1].size() || counts_[0].empty()) {
      throw DataError("cell counts: both classes need the same positive number of cells");
    }
    for (int j = 0; j < 2; ++j) {
      for (auto c : counts_[j]) totals_[j] += c;
    }
  }

  std::size_t cells() const noexcept { return counts_[0].size(); }
  std::size_t count(int label, std::size_t cell) const noexcept { return counts_[label][cell - 1]; }
  std::size_t cell_size(std::size_t cell) const noexcept {
    return counts_[0][cell - 1] + counts_[1][cell - 1];
  }
  std::size_t total(int label) const noexcept { return totals_[label]; }
  std::size_t n() const noexcept { return totals_[0] + totals_[1]; }
  std::span<const std::size_t> row(int label) const noexcept { return counts_[label]; }

  friend bool operator==(const CellCounts&, const CellCounts&) = default;

 private:
  std::array<std::vector<std::size_t>, 2> counts_;
  std::array<std::size_t, 2> totals_{0, 0};
};

/*
 * Which (class, cell) configurations are admissible.
 *   both_classes: every n_{j,k} >= 1 (the default, and what `test` enforces).
 *   nonempty:     every cell holds at least one observation; a class may be absent from a
 *                 cell. The statistic stays well defined because the within-cell transform
 *                 and the normalizer only use pooled cell sizes.
 */
enum class CellRule { both_classes, nonempty };

/// Counts observations per (class, cell); throws EmptyCellError when `rule` is violated.
inline CellCounts validate_cells(std::span<const std::size_t> cell_ids,
                                 std::span<const std::uint8_t> ys, std::size_t m,
                                 CellRule rule = CellRule::both_classes) {
  if (cell_ids.size() != ys.size()) {
    throw DataError("validate_cells: cell ids and labels differ in length");
  }
  std::vector<std::size_t> c0(m, 0), c1(m, 0);
  for (std::size_t i = 0; i < cell_ids.size(); ++i) {
    const auto k = cell_ids[i];
    if (k < 1 || k > m) throw DataError("validate_cells: cell id out of range 1.." + std::to_string(m));
    (ys[i] == 0 ? c0 : c1)[k - 1] += 1;
  }
  for (std::size_t k = 1; k <= m; ++k) {
    if (rule == CellRule::nonempty) {
      if (c0[k - 1] + c1[k - 1] == 0) {
        throw EmptyCellError("empty cell: cell " + std::to_string(k) +
                             " has no observation; reduce m");
      }
      continue;
    }
    if (c0[k - 1] == 0) throw EmptyCellError(0, k);
    if (c1[k - 1] == 0) throw EmptyCellError(1, k);
  }
  return CellCounts(std::move(c0), std::move(c1));
}

}  // namespace sitest
