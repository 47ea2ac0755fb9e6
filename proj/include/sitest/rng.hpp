#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

#include <boost/math/distributions/normal.hpp>

namespace sitest {

/*
 * Child random stream keyed by an arbitrary tuple of integers, e.g.
 * (master seed, grid-cell key, replication, tag). Streams with different keys are
 * independently seeded through std::seed_seq, so results never depend on which worker
 * ran a replication or in what order.
 */
class Stream {
 public:
  explicit Stream(std::initializer_list<std::uint64_t> key) { seed(key); }
  explicit Stream(const std::vector<std::uint64_t>& key) { seed(key); }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on the open interval (0, 1).
  double open_uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal by inversion of one open uniform draw.
  double normal() {
    static const boost::math::normal_distribution<double> std_normal(0.0, 1.0);
    return boost::math::quantile(std_normal, open_uniform());
  }

 private:
  template <class Range>
  void seed(const Range& key) {
    std::vector<std::uint32_t> words;
    for (std::uint64_t k : key) {
      words.push_back(static_cast<std::uint32_t>(k));
      words.push_back(static_cast<std::uint32_t>(k >> 32));
    }
    std::seed_seq seq(words.begin(), words.end());
    engine_.seed(seq);
  }

  std::mt19937_64 engine_;
};

}  // namespace sitest
