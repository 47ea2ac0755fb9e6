#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "sitest/empirical_process.hpp"

namespace sitest {
namespace {

struct Instance {
  std::vector<double> z;
  std::vector<std::uint8_t> y;
  std::vector<std::size_t> cells;
  std::size_t m = 1;

  CellCounts counts() const { return validate_cells(cells, y, m); }
  TransformedSample transformed() const { return transform_sample(z, y, cells, counts()); }
  GammaProcess gamma() const { return gamma_process(transformed(), counts()); }
};

// Each cell gets `size` members with both classes present.
Instance random_instance(std::mt19937_64& gen, const std::vector<std::size_t>& sizes,
                         bool ties = false) {
  Instance inst;
  inst.m = sizes.size();
  std::normal_distribution<double> nd;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    std::vector<std::uint8_t> labels(sizes[k]);
    labels[0] = 0;
    labels[1] = 1;
    for (std::size_t i = 2; i < sizes[k]; ++i) labels[i] = gen() % 2;
    std::shuffle(labels.begin(), labels.end(), gen);
    for (auto l : labels) {
      inst.y.push_back(l);
      inst.cells.push_back(k + 1);
      inst.z.push_back(ties ? static_cast<double>(gen() % 4) : nd(gen));
    }
  }
  return inst;
}

std::vector<int> as_int(const std::vector<std::uint8_t>& y) { return {y.begin(), y.end()}; }

TEST(transform_sample, single_cell_strict_ranks) {
  const Instance inst{{5, 1, 3}, {0, 1, 0}, {1, 1, 1}, 1};
  const auto ts = inst.transformed();
  EXPECT_EQ(ts.t[0], (Rational{2, 3}));
  EXPECT_EQ(ts.t[1], (Rational{0, 3}));
  EXPECT_EQ(ts.t[2], (Rational{1, 3}));

  const Instance flat{{2, 2, 2, 2}, {0, 1, 1, 0}, {1, 1, 1, 1}, 1};
  for (const auto& t : flat.transformed().t) EXPECT_EQ(t.num, 0);
}

TEST(transform_sample, ranks_are_cell_local) {
  const Instance inst{{10, 0, -5, 7}, {0, 1, 0, 1}, {1, 1, 2, 2}, 2};
  const auto ts = inst.transformed();
  EXPECT_EQ(ts.t[0], (Rational{1, 2}));
  EXPECT_EQ(ts.t[1], (Rational{0, 2}));
  EXPECT_EQ(ts.t[2], (Rational{0, 2}));
  EXPECT_EQ(ts.t[3], (Rational{1, 2}));
}

TEST(transform_sample, matches_pairwise_definition) {
  std::mt19937_64 gen(21);
  for (int trial = 0; trial < 200; ++trial) {
    const auto inst = random_instance(gen, {2 + gen() % 6, 2 + gen() % 6, 2 + gen() % 6},
                                      trial % 2 == 0);
    const auto ts = inst.transformed();
    const auto c = inst.counts();
    for (std::size_t i = 0; i < inst.z.size(); ++i) {
      std::int64_t below = 0;
      for (std::size_t l = 0; l < inst.z.size(); ++l) {
        below += inst.cells[l] == inst.cells[i] && inst.z[l] < inst.z[i] ? 1 : 0;
      }
      const auto size = static_cast<std::int64_t>(c.cell_size(inst.cells[i]));
      ASSERT_EQ(ts.t[i].num * size, below * ts.t[i].den);
      ASSERT_LT(ts.t[i].value(), 1.0);
    }
  }
}

TEST(gamma_hat, examples) {
  TransformedSample ts;
  ts.labels = {0, 0, 1};
  ts.t = {Rational{0, 2}, Rational{1, 2}, Rational{1, 2}};
  ts.cells = {1, 1, 1};
  const auto g = gamma_hat(ts, 0);
  EXPECT_EQ(g(0.25), 0.5);
  EXPECT_EQ(g(0.75), 1.0);
  EXPECT_EQ(g(0.0), 0.0);
  EXPECT_EQ(g(0.5), 0.5);  // strict inequality: t = 1/2 is not counted at u = 1/2
  EXPECT_EQ(g(1.0), 1.0);
}

TEST(normalizer, examples) {
  EXPECT_EQ(normalizer(CellCounts({7}, {3})), 1.0);
  EXPECT_EQ(normalizer(CellCounts({2, 2}, {2, 2})), 1.0);
  EXPECT_NEAR(normalizer(CellCounts({3, 1}, {1, 3})), std::sqrt(0.75), 1e-15);
}

TEST(gamma_process, six_point_hand_example) {
  // t = (0, 1/6, ..., 5/6); at u = 1/2 all of class 0 and none of class 1 lie strictly below,
  // so gamma(1/2) = sqrt(3 * 3 / 6) * (1 - 0) / 1.
  const Instance inst{{1, 2, 3, 4, 5, 6}, {0, 0, 0, 1, 1, 1}, {1, 1, 1, 1, 1, 1}, 1};
  const auto g = inst.gamma();
  EXPECT_EQ(g.normalizer, 1.0);
  EXPECT_NEAR(g(0.5), std::sqrt(1.5), 1e-15);
  EXPECT_EQ(g(0.0), 0.0);
  EXPECT_EQ(g(0.99), 0.0);
  // T_n = 1.5 * [ (1/3)^2/6 + (2/3)^2/6 + 1/6 + (2/3)^2/6 + (1/3)^2/6 ]
  const double expect = 1.5 * (1.0 / 9 + 4.0 / 9 + 1.0 + 4.0 / 9 + 1.0 / 9) / 6.0;
  EXPECT_NEAR(cvm_statistic(g), expect, 1e-15);
  EXPECT_NEAR(ks_statistic(g), std::sqrt(1.5), 1e-15);
}

TEST(gamma_process, identical_classes_give_zero) {
  const Instance inst{{1, 1, 2, 2, 3, 3}, {0, 1, 0, 1, 0, 1}, {1, 1, 1, 1, 1, 1}, 1};
  const auto g = inst.gamma();
  EXPECT_EQ(cvm_statistic(g), 0.0);
  EXPECT_EQ(ks_statistic(g), 0.0);
}

TEST(statistics, synthetic_step_functions) {
  StepFunction c;
  c.knots = {Rational{0, 1}, Rational{1, 1}};
  c.values = {2.5};
  EXPECT_EQ(cvm_statistic(c), 6.25);

  StepFunction s;
  s.knots = {Rational{0, 1}, Rational{1, 4}, Rational{1, 2}, Rational{1, 1}};
  s.values = {1.0, -3.0, 2.0};
  EXPECT_EQ(ks_statistic(s), 3.0);
  EXPECT_EQ(cvm_statistic(s), 0.25 + 9.0 * 0.25 + 4.0 * 0.5);
}

TEST(statistics, match_dense_grid_oracles) {
  // Cell sizes divide 10^6, so every jump sits on a grid point and the midpoint rule is exact
  // up to rounding.
  std::mt19937_64 gen(22);
  const std::vector<std::vector<std::size_t>> shapes{{10}, {5, 5}, {8, 8}, {4, 10, 5}, {16}};
  for (const auto& shape : shapes) {
    const auto g = random_instance(gen, shape).gamma();
    const std::size_t grid = 1000000;
    double sum = 0.0, sup = 0.0;
    for (std::size_t i = 0; i < grid; ++i) {
      const double v = g((static_cast<double>(i) + 0.5) / static_cast<double>(grid));
      sum += v * v;
      sup = std::max(sup, std::abs(v));
    }
    EXPECT_NEAR(cvm_statistic(g), sum / static_cast<double>(grid), 1e-5);
    EXPECT_EQ(ks_statistic(g), sup);
  }
}

TEST(run_test, empty_cell_and_auto_shrink) {
  const Dataset ds({1, 2, 3, 4}, 1, {0, 0, 1, 1}, {0.3, 0.1, 0.4, 0.2});
  const DirectionMode mode = OracleMode{Direction({1.0})};
  EXPECT_THROW(run_test(ds, 2, mode), EmptyCellError);

  int retries = 0;
  const auto r = run_test(ds, 2, mode, true, [&](std::size_t, const EmptyCellError&) { ++retries; });
  EXPECT_EQ(retries, 1);
  EXPECT_EQ(r.m, 1u);
  EXPECT_EQ(r.requested_m, 2u);
  EXPECT_EQ(r.mode, "oracle");
  EXPECT_EQ(r.normalizer, 1.0);
}

TEST(run_test, requires_both_classes) {
  const Dataset ds({1, 2, 3, 4}, 1, {1, 1, 1, 1}, {0.3, 0.1, 0.4, 0.2});
  EXPECT_THROW(run_test(ds, 1, OracleMode{Direction({1.0})}), DataError);
}

TEST(run_test, result_fields_are_consistent) {
  std::mt19937_64 gen(23);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 40, d = 2;
    std::vector<double> xs(n * d), zs(n);
    std::vector<std::uint8_t> ys(n);
    for (auto& v : xs) v = nd(gen);
    for (auto& v : zs) v = nd(gen);
    for (std::size_t i = 0; i < n; ++i) ys[i] = i % 2;
    const Dataset ds(xs, d, ys, zs);
    try {
      const auto r = run_test(ds, 3, OracleMode{Direction({0.6, 0.8})});
      ASSERT_GE(r.t_n, 0.0);
      ASSERT_GE(r.ks_n, 0.0);
      ASSERT_GE(r.p_value, 0.0);
      ASSERT_LE(r.p_value, 1.0);
      ASSERT_GT(r.normalizer, 0.0);
      ASSERT_LE(r.normalizer, 1.0);
      ASSERT_EQ(r.boundaries.size(), 4u);
    } catch (const EmptyCellError&) {
    }
  }
}

TEST(oracle_equivalence, naive_transcription) {
  std::mt19937_64 gen(24);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t m = 1 + gen() % 3;
    std::vector<std::size_t> sizes;
    for (std::size_t k = 0; k < m; ++k) sizes.push_back(2 + gen() % 5);
    const auto inst = random_instance(gen, sizes, trial % 3 == 0);
    const double fast = cvm_statistic(inst.gamma());
    const double slow = oracle::naive_cvm(inst.z, as_int(inst.y), inst.cells, m);
    ASSERT_NEAR(fast, slow, 1e-12 * std::max(1.0, slow)) << "trial " << trial;
  }
}

TEST(oracle_equivalence, single_class_cells) {
  // Cells drawn without forcing both classes; only cells that hold a single class test the
  // nonempty rule.
  std::mt19937_64 gen(30);
  std::normal_distribution<double> nd;
  int single = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t m = 1 + gen() % 4;
    const std::size_t n = m * (1 + gen() % 4);
    std::vector<double> z(n);
    std::vector<std::uint8_t> y(n);
    std::vector<std::size_t> cells(n);
    for (std::size_t i = 0; i < n; ++i) {
      z[i] = nd(gen);
      y[i] = gen() % 2;
      cells[i] = 1 + i % m;
    }
    if (std::count(y.begin(), y.end(), 0) == 0 || std::count(y.begin(), y.end(), 1) == 0) continue;
    const auto counts = validate_cells(cells, y, m, CellRule::nonempty);
    try {
      validate_cells(cells, y, m);
    } catch (const EmptyCellError&) {
      ++single;
    }
    GammaProcess g;
    try {
      g = gamma_process(transform_sample(z, y, cells, counts), counts);
    } catch (const NonPositiveNormalizerError&) {
      continue;  // cells separate the classes completely
    }
    const double slow = oracle::naive_cvm(z, as_int(y), cells, m);
    ASSERT_NEAR(cvm_statistic(g), slow, 1e-12 * std::max(1.0, slow)) << "trial " << trial;
    ASSERT_EQ(g(0.0), 0.0);
    ASSERT_EQ(g.path.values.back(), 0.0);
  }
  EXPECT_GT(single, 50);
}

TEST(run_test, cell_rule_is_forwarded) {
  const Dataset ds({1, 2, 3, 4}, 1, {0, 0, 1, 1}, {0.3, 0.1, 0.4, 0.2});
  // Cells separate the classes completely, so the normalizer bracket is
  // 1 - (2 * 2 / 4) * (1^2 / 2 + 1^2 / 2) = 0.
  EXPECT_THROW(run_test(ds, 2, OracleMode{Direction({1.0})}, false, {}, CellRule::nonempty),
               NonPositiveNormalizerError);
  const Dataset mixed({1, 2, 3, 4, 5, 6}, 1, {0, 0, 0, 1, 0, 1}, {0.3, 0.1, 0.4, 0.2, 0.5, 0.6});
  const auto r = run_test(mixed, 2, OracleMode{Direction({1.0})}, false, {}, CellRule::nonempty);
  EXPECT_EQ(r.m, 2u);
  EXPECT_EQ(r.counts.count(1, 1), 0u);
  EXPECT_THROW(run_test(mixed, 2, OracleMode{Direction({1.0})}), EmptyCellError);
}

TEST(oracle_equivalence, classical_two_sample_at_one_cell) {
  std::mt19937_64 gen(25);
  for (int trial = 0; trial < 300; ++trial) {
    const auto inst = random_instance(gen, {2 + gen() % 30}, trial % 2 == 0);
    const double fast = cvm_statistic(inst.gamma());
    const double classical = oracle::classical_two_sample_cvm(inst.z, as_int(inst.y));
    ASSERT_NEAR(fast, classical, 1e-12 * std::max(1.0, classical)) << "trial " << trial;
  }
}

TEST(invariance, strictly_increasing_transform_of_z) {
  std::mt19937_64 gen(26);
  for (int trial = 0; trial < 300; ++trial) {
    auto inst = random_instance(gen, {3 + gen() % 8, 3 + gen() % 8}, trial % 2 == 0);
    const auto g = inst.gamma();
    for (auto& z : inst.z) z = std::exp(z) + z * z * z;
    const auto h = inst.gamma();
    ASSERT_EQ(cvm_statistic(g), cvm_statistic(h));
    ASSERT_EQ(ks_statistic(g), ks_statistic(h));
    ASSERT_EQ(g.path.values, h.path.values);
  }
}

TEST(invariance, label_swap) {
  std::mt19937_64 gen(27);
  for (int trial = 0; trial < 300; ++trial) {
    auto inst = random_instance(gen, {3 + gen() % 8, 3 + gen() % 8, 3 + gen() % 8});
    const auto g = inst.gamma();
    for (auto& y : inst.y) y = 1 - y;
    const auto h = inst.gamma();
    ASSERT_EQ(cvm_statistic(g), cvm_statistic(h));
    ASSERT_EQ(ks_statistic(g), ks_statistic(h));
  }
}

TEST(invariance, direction_sign) {
  std::mt19937_64 gen(28);
  std::normal_distribution<double> nd;
  int evaluated = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t m = 1 + gen() % 4;
    const std::size_t n = m * (6 + gen() % 10);
    const std::size_t d = 1 + gen() % 3;
    std::vector<double> xs(n * d), zs(n), beta(d);
    std::vector<std::uint8_t> ys(n);
    for (auto& v : xs) v = nd(gen);
    for (auto& v : zs) v = nd(gen);
    for (auto& v : ys) v = gen() % 2;
    for (auto& v : beta) v = nd(gen);
    const Dataset ds(xs, d, ys, zs);
    const auto dir = Direction::normalized(beta);
    try {
      const auto a = run_test(ds, m, OracleMode{dir});
      const auto b = run_test(ds, m, OracleMode{-dir});
      ASSERT_EQ(a.t_n, b.t_n);
      ASSERT_EQ(a.ks_n, b.ks_n);
      ++evaluated;
    } catch (const Error&) {  // empty cell or a single class drawn
    }
  }
  EXPECT_GT(evaluated, 100);
}

TEST(invariance, boundary_values_and_balanced_normalizer) {
  std::mt19937_64 gen(29);
  for (int trial = 0; trial < 300; ++trial) {
    const auto inst = random_instance(gen, {2 + gen() % 9, 2 + gen() % 9}, trial % 2 == 0);
    const auto g = inst.gamma();
    ASSERT_EQ(g(0.0), 0.0);
    ASSERT_EQ(g.path.values.back(), 0.0);
    ASSERT_EQ(g.path.knots.back(), (Rational{1, 1}));
    ASSERT_GT(g.normalizer, 0.0);
    ASSERT_LE(g.normalizer, 1.0);
  }
  EXPECT_EQ(normalizer(CellCounts({2, 4, 6}, {1, 2, 3})), 1.0);
}

}  // namespace
}  // namespace sitest
