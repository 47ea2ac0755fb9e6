#pragma once

#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "sitest/core_data.hpp"
#include "sitest/empirical_process.hpp"
#include "sitest/errors.hpp"
#include "sitest/index_estimation.hpp"
#include "sitest/rng.hpp"

namespace sitest {

/*
 * Data-generating process with beta = 1_d:
 *   X ~ Uniform(-1, 1)^d,  U, V ~ N(0, 1) independent,
 *   Z = exp(X'beta) + (1 + |X'beta|)^sigma U,
 *   Y = 1{X'beta + theta U > V}.
 * theta = 0 is the null hypothesis; sigma controls heteroskedasticity of Z given X.
 */
struct DgpConfig {
  std::size_t d = 3;
  double sigma = 0.0;
  double theta = 0.0;
  std::size_t n = 1000;

  void validate() const {
    if (d < 1) throw ConfigError("dgp: d must be at least 1");
    if (n < 2) throw ConfigError("dgp: n must be at least 2");
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ConfigError("dgp: sigma must be >= 0");
    if (!std::isfinite(theta)) throw ConfigError("dgp: theta must be finite");
  }
};

/// Draws per observation in the order: X_1..X_d, U, V.
inline Dataset draw_sample(const DgpConfig& cfg, Stream& rng) {
  cfg.validate();
  std::vector<double> xs(cfg.n * cfg.d);
  std::vector<std::uint8_t> ys(cfg.n);
  std::vector<double> zs(cfg.n);
  for (std::size_t i = 0; i < cfg.n; ++i) {
    double index = 0.0;
    for (std::size_t j = 0; j < cfg.d; ++j) {
      const double x = rng.uniform(-1.0, 1.0);
      xs[i * cfg.d + j] = x;
      index += x;
    }
    const double u = rng.normal();
    const double v = rng.normal();
    zs[i] = std::exp(index) + std::pow(1.0 + std::abs(index), cfg.sigma) * u;
    ys[i] = (index + cfg.theta * u > v) ? 1 : 0;
  }
  return Dataset(std::move(xs), cfg.d, std::move(ys), std::move(zs));
}

/// beta_0 = 1_d / sqrt(d).
inline Direction oracle_direction(const DgpConfig& cfg) {
  return Direction(std::vector<double>(cfg.d, 1.0 / std::sqrt(static_cast<double>(cfg.d))));
}

enum class SimMode { oracle, estimate };

inline std::string to_string(SimMode m) { return m == SimMode::oracle ? "oracle" : "estimate"; }

inline SimMode parse_sim_mode(const std::string& s) {
  if (s == "oracle") return SimMode::oracle;
  if (s == "estimate") return SimMode::estimate;
  throw ConfigError("unknown mode '" + s + "' (expected oracle or estimate)");
}

/*
 * Key of the random stream for replication r. Mode and m are deliberately absent: every
 * (mode, m) column of an experiment sees the same simulated samples.
 */
inline std::vector<std::uint64_t> replication_key(std::uint64_t master_seed, const DgpConfig& cfg,
                                                  std::uint64_t replication) {
  constexpr std::uint64_t kDgpTag = 0x64677031;  // "dgp1"
  return {master_seed, cfg.d, cfg.n, std::bit_cast<std::uint64_t>(cfg.sigma),
          std::bit_cast<std::uint64_t>(cfg.theta), replication, kDgpTag};
}

struct ReplicationOutcome {
  bool valid = true;  // false when the partition had an empty (class, cell)
  bool reject = false;
  double t_n = 0.0;
  double p_value = 1.0;

  friend bool operator==(const ReplicationOutcome&, const ReplicationOutcome&) = default;
};

inline ReplicationOutcome replicate(const DgpConfig& cfg, std::size_t m, SimMode mode,
                                    const AdeConfig& ade, const std::vector<std::uint64_t>& key,
                                    double level, CellRule rule = CellRule::nonempty) {
  Stream rng(key);
  const Dataset ds = draw_sample(cfg, rng);
  DirectionMode dm = mode == SimMode::oracle ? DirectionMode{OracleMode{oracle_direction(cfg)}}
                                             : DirectionMode{EstimateMode{ade}};
  try {
    const auto r = run_test(ds, m, dm, false, {}, rule);
    return {.valid = true, .reject = r.p_value < level, .t_n = r.t_n, .p_value = r.p_value};
  } catch (const EmptyCellError&) {
    return {.valid = false};
  }
}

inline ReplicationOutcome replicate(const DgpConfig& cfg, std::size_t m, SimMode mode,
                                    const AdeConfig& ade, std::uint64_t master_seed,
                                    std::uint64_t replication, double level,
                                    CellRule rule = CellRule::nonempty) {
  return replicate(cfg, m, mode, ade, replication_key(master_seed, cfg, replication), level, rule);
}

}  // namespace sitest
