// Command-line front end. Exit codes: 0 success, 1 numeric or domain
// failure, 2 usage error.
#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "seqstop/analysis.hpp"
#include "seqstop/estimators.hpp"
#include "seqstop/model.hpp"
#include "seqstop/montecarlo.hpp"
#include "seqstop/output.hpp"

namespace seqstop::cli {

inline constexpr std::uint64_t kDefaultSeed = 1;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string format = "json";
  std::string out;
  std::optional<std::uint64_t> seed;
};

struct RuleFlags {
  std::string kind = "indicator";
  double gamma = 0.5;
  double param = 1.0;

  StoppingRule build() const {
    if (kind == "indicator") return StoppingRule::indicator(gamma);
    if (kind == "logistic") return StoppingRule::logistic(param, gamma);
    return StoppingRule::constant(param, gamma);
  }
};

inline void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
  sub->add_option("--out", c.out, "Write output to this file instead of stdout");
  sub->add_option("--seed", c.seed, "Random seed (falls back to $SEQSTOP_SEED)");
}

inline void add_rule(CLI::App* sub, RuleFlags& r) {
  sub->add_option("--rule", r.kind, "Stopping rule: indicator, logistic or constant")
      ->check(CLI::IsMember({"indicator", "logistic", "constant"}));
  sub->add_option("--gamma", r.gamma, "Shape parameter: 0.5 Pocock, 0 O'Brien-Fleming")->check(CLI::NonNegativeNumber);
  sub->add_option("--rule-param", r.param, "Logistic scale, or the constant stop probability");
}

inline std::uint64_t resolve_seed(const Common& c) {
  if (c.seed) return *c.seed;
  if (const char* env = std::getenv("SEQSTOP_SEED"); env && *env) {
    std::size_t used = 0;
    std::uint64_t v = 0;
    try {
      v = std::stoull(env, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || env[used] != '\0') throw UsageError(std::string("invalid SEQSTOP_SEED '") + env + "'");
    return v;
  }
  return kDefaultSeed;
}

inline std::string join(const std::vector<double>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + format_number(xs[i]);
  return s;
}

inline void emit(const OutputRecord& rec, const Common& c, std::ostream& out) {
  std::ostringstream buf;
  if (c.format == "csv") write_csv(buf, rec); else write_json(buf, rec);
  if (c.out.empty()) {
    out << buf.str();
    return;
  }
  std::ofstream file(c.out, std::ios::binary);
  if (!file) throw NumericError("cannot open output file '" + c.out + "'");
  file << buf.str();
}

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Runs the command line; output goes to `out`, diagnostics to `err`.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Two-stage group-sequential estimation: marginal vs conditional MLE"};
  app.require_subcommand(1, 1);

  // simulate
  Common sim_c;
  RuleFlags sim_rule;
  int sim_n = 0;
  double sim_mu = 0.0, sim_sigma = 1.0;
  long sim_reps = 0;
  unsigned sim_workers = default_workers();
  std::vector<double> sim_thresholds{10.0, 100.0, 1000.0, 10000.0};
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo MAE and truncated conditional MAE");
  add_common(simulate, sim_c);
  add_rule(simulate, sim_rule);
  simulate->add_option("--n", sim_n, "First-stage sample size")->required()->check(CLI::PositiveNumber);
  simulate->add_option("--mu", sim_mu, "True mean");
  simulate->add_option("--sigma", sim_sigma, "Known standard deviation")->check(CLI::PositiveNumber);
  simulate->add_option("--reps", sim_reps, "Replications")->required()->check(CLI::PositiveNumber);
  simulate->add_option("--thresholds", sim_thresholds, "Truncation levels T of E[min(|estimate|, T)]")
      ->delimiter(',')
      ->check(CLI::PositiveNumber);
  simulate->add_option("--workers", sim_workers, "Worker threads (does not change the output)")
      ->check(CLI::PositiveNumber);

  // tail
  Common tail_c;
  int tail_n = 1;
  long tail_reps = 0;
  int tail_bins = 16;
  unsigned tail_workers = default_workers();
  auto* tail = app.add_subcommand("tail", "Octave histogram of |conditional MLE| over stage-one outcomes");
  add_common(tail, tail_c);
  tail->add_option("--n", tail_n, "First-stage sample size")->check(CLI::PositiveNumber);
  tail->add_option("--reps", tail_reps, "Replications")->required()->check(CLI::PositiveNumber);
  tail->add_option("--bins", tail_bins, "Number of octaves")->check(CLI::Range(10, 1000));
  tail->add_option("--workers", tail_workers, "Worker threads")->check(CLI::PositiveNumber);

  // mae
  Common mae_c;
  std::vector<int> mae_n{1};
  auto* mae = app.add_subcommand("mae", "Closed-form mean absolute error of the marginal MLE");
  add_common(mae, mae_c);
  mae->add_option("--n", mae_n, "Comma-separated first-stage sample sizes")->delimiter(',')->check(CLI::PositiveNumber);

  // divergence
  Common div_c;
  int div_n = 1;
  std::vector<double> div_levels;
  bool div_fit = false;
  unsigned div_workers = 1;
  auto* divergence = app.add_subcommand("divergence", "Truncated lower bound on the conditional MLE's MAE");
  add_common(divergence, div_c);
  divergence->add_option("--n", div_n, "First-stage sample size")->check(CLI::PositiveNumber);
  divergence->add_option("--levels", div_levels, "Strictly increasing truncation levels N")
      ->required()
      ->delimiter(',')
      ->check(CLI::PositiveNumber);
  divergence->add_flag("--fit", div_fit, "Append the least-squares slope of the bound against log N");
  divergence->add_option("--workers", div_workers, "Rows evaluated concurrently")->check(CLI::PositiveNumber);

  // estimate
  Common est_c;
  RuleFlags est_rule;
  int est_stage = 1;
  int est_n = 1;
  double est_ksum = 0.0;
  std::optional<double> est_kinterim;
  double est_sigma = 1.0;
  auto* estimate = app.add_subcommand("estimate", "Marginal and conditional MLE for one outcome");
  add_common(estimate, est_c);
  add_rule(estimate, est_rule);
  estimate->add_option("--stage", est_stage, "Realized stage (1 or 2)")->required()->check(CLI::IsMember({1, 2}));
  estimate->add_option("--n", est_n, "First-stage sample size")->required()->check(CLI::PositiveNumber);
  estimate->add_option("--ksum", est_ksum, "Final sum K_N")->required();
  estimate->add_option("--kinterim", est_kinterim, "Interim sum K_n (stage two)");
  estimate->add_option("--sigma", est_sigma, "Known standard deviation")->check(CLI::PositiveNumber);

  // density
  Common den_c;
  int den_n = 1;
  double den_mu = 0.0, den_kmin = -5.0, den_kmax = 5.0;
  int den_points = 101;
  auto* density = app.add_subcommand("density", "Joint density of (stage, final sum) on a grid");
  add_common(density, den_c);
  density->add_option("--n", den_n, "First-stage sample size")->check(CLI::PositiveNumber);
  density->add_option("--mu", den_mu, "True mean");
  density->add_option("--kmin", den_kmin, "Grid start");
  density->add_option("--kmax", den_kmax, "Grid end");
  density->add_option("--points", den_points, "Grid points")->check(CLI::Range(2, 10'000'000));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (*simulate) {
      McSpec spec;
      spec.config = {sim_n, sim_mu, sim_sigma, sim_rule.build()};
      spec.reps = sim_reps;
      spec.seed = resolve_seed(sim_c);
      spec.thresholds = sim_thresholds;
      try {
        spec.validate();
      } catch (const DomainError& e) {
        throw UsageError(e.what());
      }
      const McSummary s = run_mc(spec, sim_workers);
      OutputRecord rec("simulate", {"threshold", "conditional_truncated_mae", "conditional_truncated_mae_se",
                                    "marginal_mae", "marginal_mae_se", "stage_one_freq", "reps", "degenerate_count"});
      rec.param("n", sim_n);
      rec.param("mu", sim_mu);
      rec.param("sigma", sim_sigma);
      rec.param("reps", static_cast<double>(sim_reps));
      rec.param("seed", std::to_string(spec.seed));
      rec.param("rule", sim_rule.kind);
      rec.param("gamma", sim_rule.gamma);
      rec.param("thresholds", join(sim_thresholds));
      auto row = [&](double t, double v, double se) {
        rec.add_row({t, v, se, s.marginal_mae.value, s.marginal_mae.se, s.stage_one_freq,
                     static_cast<double>(s.reps), static_cast<double>(s.degenerate_count)});
      };
      if (s.conditional_truncated_mae.empty()) row(kNaN, kNaN, kNaN);
      for (const auto& t : s.conditional_truncated_mae) row(t.threshold, t.value, t.se);
      emit(rec, sim_c, out);
    } else if (*tail) {
      McSpec spec;
      spec.config = {tail_n, 0.0, 1.0, StoppingRule::indicator()};
      spec.reps = tail_reps;
      spec.seed = resolve_seed(tail_c);
      const TailHistogram h = tail_histogram(spec, tail_bins, tail_workers);
      OutputRecord rec("tail", {"octave", "lower", "upper", "count", "mean_contribution"});
      rec.param("n", tail_n);
      rec.param("reps", static_cast<double>(tail_reps));
      rec.param("seed", std::to_string(spec.seed));
      rec.param("stage_one", static_cast<double>(h.stage_one));
      rec.param("stage_two", static_cast<double>(h.stage_two));
      rec.param("degenerate", static_cast<double>(h.degenerate));
      rec.param("underflow", static_cast<double>(h.underflow));
      rec.param("overflow", static_cast<double>(h.overflow));
      for (const auto& b : h.bins) {
        rec.add_row({static_cast<double>(b.octave), std::ldexp(1.0, b.octave), std::ldexp(1.0, b.octave + 1),
                     static_cast<double>(b.count), b.mean_contribution});
      }
      emit(rec, tail_c, out);
    } else if (*mae) {
      OutputRecord rec("mae", {"n", "mae", "stage_one_term", "stage_two_term"});
      std::string ns;
      for (std::size_t i = 0; i < mae_n.size(); ++i) ns += (i ? "," : "") + std::to_string(mae_n[i]);
      rec.param("n", ns);
      for (const int n : mae_n) {
        const MaeReport r = marginal_mae(n);
        rec.add_row({static_cast<double>(n), r.mae, r.stage_one_term, r.stage_two_term});
      }
      emit(rec, mae_c, out);
    } else if (*divergence) {
      for (std::size_t i = 1; i < div_levels.size(); ++i) {
        if (!(div_levels[i] > div_levels[i - 1])) throw UsageError("--levels must be strictly increasing");
      }
      const auto rows = divergence_curve(div_n, div_levels, div_workers);
      std::vector<std::string> cols{"N", "bound", "quadrature"};
      double slope = kNaN;
      if (div_fit) {
        cols.emplace_back("bound_slope_log_N");
        slope = rows.size() >= 2 ? fit_log_slope(rows) : kNaN;
      }
      OutputRecord rec("divergence", cols);
      rec.param("n", div_n);
      rec.param("levels", join(div_levels));
      for (const auto& r : rows) {
        std::vector<double> row{r.level, r.bound, r.quadrature};
        if (div_fit) row.push_back(slope);
        rec.add_row(std::move(row));
      }
      emit(rec, div_c, out);
    } else if (*estimate) {
      const StoppingRule rule = est_rule.build();
      const Stage stage = est_stage == 1 ? Stage::One : Stage::Two;
      if (rule.is_indicator()) {
        if (stage == Stage::One && est_ksum < 0.0) {
          throw DomainError("stage-one sum is inconsistent with stopping rule (ksum < 0)");
        }
        if (stage == Stage::One && est_ksum == 0.0) {
          throw DomainError("degenerate statistic: ksum = 0 sends the conditional MLE to -inf");
        }
        if (stage == Stage::Two && est_kinterim && *est_kinterim >= 0.0) {
          throw DomainError("stage-two interim sum is inconsistent with stopping rule (kinterim >= 0)");
        }
      }
      const double k_interim = est_kinterim.value_or(stage == Stage::One ? est_ksum : kNaN);
      const TrialOutcome raw{stage, est_n, k_interim, est_ksum};
      const TrialOutcome z = standardized(raw, est_sigma);
      const StoppingRule zrule = standardized(rule, est_sigma);

      const Estimate marginal = marginal_mle(raw);
      Estimate closed{kNaN, Method::ConditionalClosed, 0, kNaN, kNaN, kNaN};
      if (rule.is_indicator()) closed = conditional_mle(z);
      const Estimate generic = conditional_mle_generic(z, zrule);

      OutputRecord rec("estimate", {"marginal", "conditional", "conditional_iterations", "conditional_residual",
                                    "generic", "generic_iterations", "generic_residual", "generic_bracket_lo",
                                    "generic_bracket_hi"});
      rec.param("stage", static_cast<double>(est_stage));
      rec.param("n", est_n);
      rec.param("ksum", est_ksum);
      if (est_kinterim) rec.param("kinterim", *est_kinterim);
      rec.param("sigma", est_sigma);
      rec.param("rule", est_rule.kind);
      rec.param("gamma", est_rule.gamma);
      rec.add_row({marginal.value, est_sigma * closed.value, static_cast<double>(closed.iterations), closed.residual,
                   est_sigma * generic.value, static_cast<double>(generic.iterations), generic.residual,
                   est_sigma * generic.bracket_lo, est_sigma * generic.bracket_hi});
      emit(rec, est_c, out);
    } else if (*density) {
      if (!(den_kmax > den_kmin)) throw UsageError("--kmax must exceed --kmin");
      OutputRecord rec("density", {"k", "stage_one", "stage_two"});
      rec.param("n", den_n);
      rec.param("mu", den_mu);
      rec.param("kmin", den_kmin);
      rec.param("kmax", den_kmax);
      rec.param("points", den_points);
      for (int i = 0; i < den_points; ++i) {
        const double k = den_kmin + (den_kmax - den_kmin) * i / (den_points - 1);
        rec.add_row({k, joint_density(den_n, Stage::One, k, den_mu), joint_density(den_n, Stage::Two, k, den_mu)});
      }
      emit(rec, den_c, out);
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace seqstop::cli
