#pragma once

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sitest/csv.hpp"
#include "sitest/empirical_process.hpp"
#include "sitest/errors.hpp"
#include "sitest/grid_config.hpp"
#include "sitest/limit_distribution.hpp"
#include "sitest/mc_harness.hpp"

namespace sitest::cli {

/// Process exit codes.
enum ExitCode : int {
  kSuccess = 0,
  kInternalError = 1,
  kDataError = 2,
  kEmptyCell = 3,
  kUnidentifiedDirection = 4,
  kConfigError = 5,
};

inline nlohmann::json to_json(const TestResult& r, double level) {
  nlohmann::json counts = nlohmann::json::array();
  for (int j = 0; j < 2; ++j) {
    auto row = r.counts.row(j);
    counts.push_back(std::vector<std::size_t>(row.begin(), row.end()));
  }
  return {
      {"t_n", r.t_n},
      {"ks_n", r.ks_n},
      {"p_value", r.p_value},
      {"level", level},
      {"reject", r.p_value < level},
      {"m", r.m},
      {"requested_m", r.requested_m},
      {"mode", r.mode},
      {"direction", std::vector<double>(r.direction.values().begin(), r.direction.values().end())},
      {"normalizer", r.normalizer},
      {"n0", r.counts.total(0)},
      {"n1", r.counts.total(1)},
      {"cell_counts", counts},
      {"boundaries", r.boundaries},
  };
}

inline void print_report(std::ostream& out, const TestResult& r, double level) {
  using detail::format_double;
  out << "T_n         " << format_double(r.t_n) << '\n';
  out << "KS_n        " << format_double(r.ks_n) << "  (no p-value reported for KS)\n";
  out << "p_value     " << format_double(r.p_value) << '\n';
  out << "level       " << format_double(level) << "  -> "
      << (r.p_value < level ? "reject" : "do not reject") << " H0\n";
  out << "m           " << r.m;
  if (r.m != r.requested_m) out << "  (requested " << r.requested_m << ")";
  out << '\n';
  out << "mode        " << r.mode << '\n';
  out << "direction  ";
  for (double b : r.direction.values()) out << ' ' << format_double(b);
  out << '\n';
  out << "normalizer  " << format_double(r.normalizer) << '\n';
  out << "n0 n1       " << r.counts.total(0) << ' ' << r.counts.total(1) << '\n';
  out << "cell  n0k  n1k\n";
  for (std::size_t k = 1; k <= r.counts.cells(); ++k) {
    out << k << ' ' << r.counts.count(0, k) << ' ' << r.counts.count(1, k) << '\n';
  }
}

inline std::vector<double> parse_vector(const std::string& text) {
  std::vector<double> v;
  for (auto s : detail::split_commas(text)) {
    const auto x = detail::parse_double(s);
    if (!x) throw ConfigError("--direction: '" + std::string(s) + "' is not a number");
    v.push_back(*x);
  }
  return v;
}

/*
 * Entry point shared by the executable and the tests. Subcommands: test, simulate,
 * ppplot, critval.
 */
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Distribution-free test of conditional independence given a single index"};
  app.require_subcommand(1);

  // test
  auto* test = app.add_subcommand("test", "Run the Cramer-von Mises test on a CSV data file");
  std::string data_path;
  std::size_t m = 10;
  std::string direction = "estimate";
  double level = 0.05;
  std::string format = "text";
  bool auto_shrink = false;
  double bandwidth_scale = 1.0;
  bool no_round = false;
  bool single_class_cells = false;
  CsvSchema schema;
  test->add_option("data", data_path, "CSV file with columns x1..xd, y, z")->required();
  test->add_option("-m,--cells", m, "Number of cells m")->check(CLI::PositiveNumber);
  test->add_option("--direction", direction,
                   "Comma-separated direction vector, or 'estimate' (average derivative)");
  test->add_option("--level", level, "Nominal level")->check(CLI::Range(0.0, 1.0));
  test->add_option("--format", format, "text or json-lines")
      ->check(CLI::IsMember({"text", "json-lines"}));
  test->add_flag("--auto-shrink-m", auto_shrink, "Retry with m-1 while a cell is empty");
  test->add_option("--bandwidth-scale", bandwidth_scale, "Multiplier on the default bandwidths")
      ->check(CLI::PositiveNumber);
  test->add_flag("--no-round-to-grid", no_round, "Skip rounding the estimated direction");
  test->add_flag("--allow-single-class-cells", single_class_cells,
                 "Accept cells that hold only one class (every cell must still be nonempty)");
  test->add_option("--x-prefix", schema.x_prefix, "Covariate column prefix");
  test->add_option("--y-column", schema.y_column, "Binary response column");
  test->add_option("--z-column", schema.z_column, "Tested variable column");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Run a Monte Carlo size/power grid");
  std::string config_path, out_path, checkpoint;
  std::optional<std::uint64_t> seed_override;
  std::size_t workers = default_workers();
  bool pivot = false;
  sim->add_option("--config", config_path, "Grid config file")->required();
  sim->add_option("--out", out_path, "Output CSV")->required();
  sim->add_option("--seed", seed_override, "Override the config's master seed");
  sim->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
  sim->add_option("--checkpoint", checkpoint, "Checkpoint file for resuming");
  sim->add_flag("--pivot", pivot, "Write one line per sigma and one column per m");

  // ppplot
  auto* pp = app.add_subcommand("ppplot", "Probability-probability pairs under the null");
  PpRequest req;
  std::string pp_mode = "estimate";
  std::string pp_out;
  std::size_t pp_workers = default_workers();
  pp->add_option("--d", req.d, "Dimension")->check(CLI::PositiveNumber);
  pp->add_option("--sigma", req.sigma, "Heteroskedasticity exponent")->check(CLI::NonNegativeNumber);
  pp->add_option("-m,--cells", req.m, "Number of cells")->check(CLI::PositiveNumber);
  pp->add_option("--mode", pp_mode, "oracle or estimate")->check(CLI::IsMember({"oracle", "estimate"}));
  pp->add_option("--n", req.n, "Sample size")->check(CLI::Range(std::size_t{2}, std::size_t(1) << 40));
  pp->add_option("--reps", req.reps, "Replications")->check(CLI::PositiveNumber);
  pp->add_option("--seed", req.seed, "Master seed");
  pp->add_option("--out", pp_out, "Output CSV (stdout if omitted)");
  pp->add_option("--workers", pp_workers, "Worker threads")->check(CLI::PositiveNumber);
  pp->add_option("--bandwidth-scale", req.ade.bandwidth_scale, "Bandwidth multiplier")
      ->check(CLI::PositiveNumber);
  bool pp_both = false;
  pp->add_flag("--require-both-classes", pp_both,
               "Count replications with a single-class cell as invalid");

  // critval
  auto* cv = app.add_subcommand("critval", "Quantiles of the limiting null law");
  std::vector<double> levels{0.90, 0.95, 0.99};
  cv->add_option("levels", levels, "Probabilities in (0, 1)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }

  try {
    if (*test) {
      const Dataset ds = load_csv(data_path, schema);
      DirectionMode mode = EstimateMode{AdeConfig{{}, bandwidth_scale, !no_round}};
      if (direction != "estimate") mode = OracleMode{Direction::normalized(parse_vector(direction))};
      auto on_retry = [&](std::size_t cur, const EmptyCellError& e) {
        err << "warning: " << e.what() << "; retrying with m = " << cur - 1 << '\n';
      };
      const auto rule = single_class_cells ? CellRule::nonempty : CellRule::both_classes;
      const auto r = run_test(ds, m, mode, auto_shrink, on_retry, rule);
      if (format == "json-lines") {
        out << to_json(r, level).dump() << '\n';
      } else {
        print_report(out, r, level);
      }
      return kSuccess;
    }

    if (*sim) {
      auto grid = load_grid_config(config_path);
      if (seed_override) grid.seed = *seed_override;
      HarnessOptions opt{.workers = workers, .checkpoint_path = checkpoint,
                         .log = [&](const std::string& s) { err << s << '\n'; }};
      const auto table = run_grid(grid, opt);
      emit_table_csv(table, out_path, pivot);
      write_table_csv(out, table);
      for (const auto& d : table.diagnostics) err << "warning: " << d << '\n';
      return table.aborted.empty() ? kSuccess : kEmptyCell;
    }

    if (*pp) {
      req.mode = parse_sim_mode(pp_mode);
      if (pp_both) req.cell_rule = CellRule::both_classes;
      const auto pts = pp_plot_data(req, pp_workers);
      if (pp_out.empty()) {
        write_pp_csv(out, pts);
      } else {
        std::ofstream f(pp_out);
        if (!f) throw ConfigError("cannot write '" + pp_out + "'");
        write_pp_csv(f, pts);
      }
      out << "# pairs=" << pts.size() << " sup_gap=" << detail::format_double(pp_pair_gap(pts))
          << " ks_distance=" << detail::format_double(pp_sup_distance(pts)) << '\n';
      return kSuccess;
    }

    if (*cv) {
      for (double p : levels) {
        if (!(p > 0.0 && p < 1.0)) {
          throw ConfigError("critval: level " + detail::format_double(p) + " is outside (0, 1)");
        }
      }
      const auto& law = CvmLimitLaw::standard();
      for (double p : levels) out << detail::format_double(p) << ' ' << detail::format_fixed(law.quantile(p), 6) << '\n';
      return kSuccess;
    }
  } catch (const EmptyCellError& e) {
    err << "error: " << e.what() << '\n';
    return kEmptyCell;
  } catch (const UnidentifiedDirectionError& e) {
    err << "error: " << e.what() << '\n';
    return kUnidentifiedDirection;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const Error& e) {  // DataError, NonPositiveNormalizerError
    err << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kInternalError;
  }
  return kInternalError;
}

}  // namespace sitest::cli
