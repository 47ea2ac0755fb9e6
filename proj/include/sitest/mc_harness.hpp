#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include "sitest/csv.hpp"
#include "sitest/errors.hpp"
#include "sitest/index_estimation.hpp"
#include "sitest/limit_distribution.hpp"
#include "sitest/simulation.hpp"

namespace sitest {

/// Runs fn(i) for i in [0, count) on `workers` threads. The first exception is rethrown.
template <class Fn>
void parallel_for(std::size_t count, std::size_t workers, Fn&& fn) {
  if (workers <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::jthread> pool;
  const std::size_t threads = std::min(workers, count);
  pool.reserve(threads);
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      while (!failed.load(std::memory_order_relaxed)) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          failed = true;
        }
      }
    });
  }
  pool.clear();  // joins
  if (error) std::rethrow_exception(error);
}

inline std::size_t default_workers() {
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

struct ExperimentGrid {
  std::vector<std::size_t> d{3};
  std::vector<double> sigma{0.0};
  std::vector<double> theta{0.0};
  std::vector<std::size_t> m{20};
  std::vector<SimMode> modes{SimMode::oracle};
  std::size_t n = 1000;
  std::size_t reps = 2000;
  double level = 0.05;
  std::uint64_t seed = 1;
  AdeConfig ade{};
  CellRule cell_rule = CellRule::nonempty;

  void validate() const {
    if (d.empty() || sigma.empty() || theta.empty() || m.empty() || modes.empty()) {
      throw ConfigError("grid: every grid list must be nonempty");
    }
    if (reps < 1) throw ConfigError("grid: reps must be at least 1");
    if (!(level > 0.0 && level < 1.0)) throw ConfigError("grid: level must lie in (0, 1)");
    for (auto mm : m) {
      if (mm < 1) throw ConfigError("grid: every m must be at least 1");
    }
    for (auto dd : d) DgpConfig{dd, 0.0, 0.0, n}.validate();
    for (double s : sigma) DgpConfig{1, s, 0.0, n}.validate();
    for (double t : theta) DgpConfig{1, 0.0, t, n}.validate();
  }
};

struct RowKey {
  std::size_t d = 0;
  std::size_t m = 0;
  double sigma = 0.0;
  double theta = 0.0;
  SimMode mode = SimMode::oracle;

  auto tie() const { return std::tuple(d, m, sigma, theta, static_cast<int>(mode)); }
  friend bool operator<(const RowKey& a, const RowKey& b) { return a.tie() < b.tie(); }
  friend bool operator==(const RowKey& a, const RowKey& b) { return a.tie() == b.tie(); }
};

struct RejectionRow {
  RowKey key;
  std::size_t rejections = 0;
  std::size_t invalid = 0;
  std::size_t reps = 0;

  double rate() const { return static_cast<double>(rejections) / static_cast<double>(reps); }
  double mc_se() const {
    const double p = rate();
    return std::sqrt(p * (1.0 - p) / static_cast<double>(reps));
  }
  friend bool operator==(const RejectionRow&, const RejectionRow&) = default;
};

struct RejectionTable {
  std::vector<RejectionRow> rows;     // sorted by key
  std::vector<RejectionRow> aborted;  // cells whose invalid replications exceeded 1%
  std::vector<std::string> diagnostics;

  const RejectionRow* find(const RowKey& key) const {
    for (const auto& r : rows) {
      if (r.key == key) return &r;
    }
    return nullptr;
  }
};

/// Grid cells are aborted once invalid (empty-cell) replications exceed this share of reps.
inline constexpr double kMaxInvalidShare = 0.01;

struct HarnessOptions {
  std::size_t workers = 1;
  /// If set, each finished grid cell is appended here and reused on the next run.
  std::string checkpoint_path;
  std::function<void(const std::string&)> log;
};

namespace detail {

inline std::string format_fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

inline std::string checkpoint_header(const ExperimentGrid& g) {
  std::ostringstream os;
  os << "# sitest-checkpoint n=" << g.n << " reps=" << g.reps << " level=" << format_double(g.level)
     << " seed=" << g.seed << " ade.scale=" << format_double(g.ade.bandwidth_scale)
     << " ade.round=" << (g.ade.round_to_grid ? 1 : 0)
     << " cells.both=" << (g.cell_rule == CellRule::both_classes ? 1 : 0) << " ade.h=";
  for (double h : g.ade.bandwidths) os << format_double(h) << ';';
  return os.str();
}

inline std::string row_record(const RejectionRow& r) {
  std::ostringstream os;
  os << r.key.d << ',' << r.key.m << ',' << format_double(r.key.sigma) << ','
     << format_double(r.key.theta) << ',' << to_string(r.key.mode) << ',' << r.rejections << ','
     << r.invalid << ',' << r.reps;
  return os.str();
}

inline RejectionRow parse_row_record(const std::string& line) {
  const auto f = split_commas(line);
  if (f.size() != 8) throw ConfigError("checkpoint: malformed record '" + line + "'");
  auto to_size = [&](std::string_view s) {
    const auto v = parse_double(s);
    if (!v || *v < 0) throw ConfigError("checkpoint: malformed record '" + line + "'");
    return static_cast<std::size_t>(*v);
  };
  auto to_real = [&](std::string_view s) {
    const auto v = parse_double(s);
    if (!v) throw ConfigError("checkpoint: malformed record '" + line + "'");
    return *v;
  };
  RejectionRow r;
  r.key = {to_size(f[0]), to_size(f[1]), to_real(f[2]), to_real(f[3]),
           parse_sim_mode(std::string(f[4]))};
  r.rejections = to_size(f[5]);
  r.invalid = to_size(f[6]);
  r.reps = to_size(f[7]);
  return r;
}

inline std::map<RowKey, RejectionRow> load_checkpoint(const std::string& path,
                                                      const ExperimentGrid& g) {
  std::map<RowKey, RejectionRow> done;
  std::ifstream in(path);
  if (!in) return done;
  std::string line;
  if (!std::getline(in, line)) return done;
  if (line != checkpoint_header(g)) {
    throw ConfigError("checkpoint '" + path + "' was written for a different experiment; "
                      "remove it or choose another path");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto r = parse_row_record(line);
    done[r.key] = r;
  }
  return done;
}

}  // namespace detail

/// All grid cells in key order.
inline std::vector<RowKey> grid_cells(const ExperimentGrid& g) {
  std::set<RowKey> keys;
  for (auto d : g.d)
    for (auto m : g.m)
      for (double s : g.sigma)
        for (double t : g.theta)
          for (auto mode : g.modes) keys.insert(RowKey{d, m, s, t, mode});
  return {keys.begin(), keys.end()};
}

/// Runs reps replications of one grid cell.
inline RejectionRow run_cell(const ExperimentGrid& g, const RowKey& key, std::size_t workers) {
  const DgpConfig cfg{key.d, key.sigma, key.theta, g.n};
  std::vector<ReplicationOutcome> out(g.reps);
  parallel_for(g.reps, workers, [&](std::size_t r) {
    out[r] = replicate(cfg, key.m, key.mode, g.ade, g.seed, r, g.level, g.cell_rule);
  });
  RejectionRow row{.key = key, .reps = g.reps};
  for (const auto& o : out) {
    if (!o.valid) ++row.invalid;
    else if (o.reject) ++row.rejections;
  }
  return row;
}

inline RejectionTable run_grid(const ExperimentGrid& g, const HarnessOptions& opt = {}) {
  g.validate();
  std::map<RowKey, RejectionRow> done;
  std::ofstream ckpt;
  if (!opt.checkpoint_path.empty()) {
    done = detail::load_checkpoint(opt.checkpoint_path, g);
    const bool fresh = !std::filesystem::exists(opt.checkpoint_path) ||
                       std::filesystem::file_size(opt.checkpoint_path) == 0;
    ckpt.open(opt.checkpoint_path, std::ios::app);
    if (!ckpt) throw ConfigError("cannot open checkpoint '" + opt.checkpoint_path + "'");
    if (fresh) ckpt << detail::checkpoint_header(g) << '\n' << std::flush;
  }

  RejectionTable table;
  for (const auto& key : grid_cells(g)) {
    RejectionRow row;
    if (auto it = done.find(key); it != done.end()) {
      row = it->second;
      if (opt.log) opt.log("resumed " + detail::row_record(row));
    } else {
      row = run_cell(g, key, opt.workers);
      if (ckpt.is_open()) ckpt << detail::row_record(row) << '\n' << std::flush;
      if (opt.log) opt.log("finished " + detail::row_record(row));
    }
    if (static_cast<double>(row.invalid) > kMaxInvalidShare * static_cast<double>(row.reps)) {
      table.diagnostics.push_back(
          "aborted grid cell d=" + std::to_string(key.d) + " m=" + std::to_string(key.m) +
          " sigma=" + detail::format_double(key.sigma) + " theta=" +
          detail::format_double(key.theta) + " mode=" + to_string(key.mode) + ": " +
          std::to_string(row.invalid) + " of " + std::to_string(row.reps) +
          " replications had an empty cell; reduce m");
      table.aborted.push_back(row);
    } else {
      table.rows.push_back(row);
    }
  }
  return table;
}

inline void write_table_csv(std::ostream& out, const RejectionTable& table) {
  out << "d,m,sigma,theta,mode,rate,mc_se,invalid_count\n";
  for (const auto& r : table.rows) {
    out << r.key.d << ',' << r.key.m << ',' << detail::format_double(r.key.sigma) << ','
        << detail::format_double(r.key.theta) << ',' << to_string(r.key.mode) << ','
        << detail::format_fixed(r.rate(), 3) << ',' << detail::format_fixed(r.mc_se(), 4) << ','
        << r.invalid << '\n';
  }
}

/*
 * Pivot layout: one block per (d, theta, mode), one line per sigma, one column per m.
 */
inline void write_pivot_csv(std::ostream& out, const RejectionTable& table) {
  std::set<std::size_t> ms;
  for (const auto& r : table.rows) ms.insert(r.key.m);
  out << "d,theta,mode,sigma";
  for (auto m : ms) out << ",m=" << m;
  out << '\n';
  using Block = std::tuple<std::size_t, int, double, double>;  // d, mode, theta, sigma
  std::map<Block, std::map<std::size_t, double>> lines;
  for (const auto& r : table.rows) {
    lines[{r.key.d, static_cast<int>(r.key.mode), r.key.theta, r.key.sigma}][r.key.m] = r.rate();
  }
  for (const auto& [b, rates] : lines) {
    const auto& [d, mode, theta, sigma] = b;
    out << d << ',' << detail::format_double(theta) << ',' << to_string(static_cast<SimMode>(mode))
        << ',' << detail::format_double(sigma);
    for (auto m : ms) {
      out << ',';
      if (auto it = rates.find(m); it != rates.end()) out << detail::format_fixed(it->second, 3);
    }
    out << '\n';
  }
}

inline void emit_table_csv(const RejectionTable& table, const std::string& path, bool pivot = false) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  pivot ? write_pivot_csv(out, table) : write_table_csv(out, table);
  if (!out) throw ConfigError("write failed for '" + path + "'");
}

// ---------------------------------------------------------------------------
// Probability-probability plots

struct PpPoint {
  double asymptotic = 0.0;  // limit CDF at the i-th order statistic
  double empirical = 0.0;   // i / R
};

/// Pairs (F(T_(i)), i/R) for the sorted statistics.
inline std::vector<PpPoint> pp_pairs(std::vector<double> stats,
                                     const CvmLimitLaw& law = CvmLimitLaw::standard()) {
  std::sort(stats.begin(), stats.end());
  const double r = static_cast<double>(stats.size());
  std::vector<PpPoint> out(stats.size());
  for (std::size_t i = 0; i < stats.size(); ++i) {
    out[i] = {law.cdf(stats[i]), static_cast<double>(i + 1) / r};
  }
  return out;
}

/// max_i |F(T_(i)) - i/R| over the emitted pairs.
inline double pp_pair_gap(const std::vector<PpPoint>& pts) {
  double gap = 0.0;
  for (const auto& p : pts) gap = std::max(gap, std::abs(p.asymptotic - p.empirical));
  return gap;
}

/// Kolmogorov distance between the empirical CDF of the statistics and the limit CDF.
inline double pp_sup_distance(const std::vector<PpPoint>& pts) {
  double gap = 0.0;
  const double r = static_cast<double>(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double below = static_cast<double>(i) / r;
    gap = std::max({gap, std::abs(pts[i].asymptotic - pts[i].empirical),
                    std::abs(pts[i].asymptotic - below)});
  }
  return gap;
}

struct PpRequest {
  std::size_t d = 3;
  double sigma = 0.0;
  std::size_t m = 20;
  SimMode mode = SimMode::estimate;
  std::size_t n = 1000;
  std::size_t reps = 2000;
  std::uint64_t seed = 1;
  AdeConfig ade{};
  CellRule cell_rule = CellRule::nonempty;
};

/// Null (theta = 0) statistics T_n for reps replications, in replication order.
inline std::vector<double> null_statistics(const PpRequest& req, std::size_t workers = 1) {
  if (req.reps < 1) throw ConfigError("ppplot: reps must be at least 1");
  const DgpConfig cfg{req.d, req.sigma, 0.0, req.n};
  cfg.validate();
  std::vector<ReplicationOutcome> out(req.reps);
  parallel_for(req.reps, workers, [&](std::size_t r) {
    out[r] = replicate(cfg, req.m, req.mode, req.ade, req.seed, r, 0.05, req.cell_rule);
  });
  std::vector<double> stats;
  std::size_t invalid = 0;
  for (const auto& o : out) {
    if (o.valid) stats.push_back(o.t_n); else ++invalid;
  }
  if (static_cast<double>(invalid) > kMaxInvalidShare * static_cast<double>(req.reps)) {
    throw EmptyCellError("ppplot: " + std::to_string(invalid) + " of " + std::to_string(req.reps) +
                         " replications had an empty cell; reduce m");
  }
  return stats;
}

inline std::vector<PpPoint> pp_plot_data(const PpRequest& req, std::size_t workers = 1) {
  return pp_pairs(null_statistics(req, workers));
}

inline void write_pp_csv(std::ostream& out, const std::vector<PpPoint>& pts) {
  out << "asymptotic_cdf,empirical_cdf\n";
  for (const auto& p : pts) {
    out << detail::format_double(p.asymptotic) << ',' << detail::format_double(p.empirical) << '\n';
  }
}

}  // namespace sitest
