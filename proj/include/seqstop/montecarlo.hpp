// Replicated trial simulation with a worker-count independent reduction.
//
// Replications are cut into fixed chunks of kChunkSize. Chunk i draws from
// CounterStream(seed, i) and accumulates sequentially; chunk results are
// merged in chunk order. The summary is therefore bit-identical for any
// number of worker threads.
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <thread>
#include <vector>

#include "seqstop/errors.hpp"
#include "seqstop/estimators.hpp"
#include "seqstop/model.hpp"
#include "seqstop/random.hpp"

namespace seqstop {

inline constexpr long kChunkSize = 1L << 16;

struct McSpec {
  TrialConfig config;
  long reps = 1;
  std::uint64_t seed = 1;
  std::vector<double> thresholds;

  void validate() const {
    config.validate();
    if (reps < 1) throw DomainError("McSpec: reps must be at least 1");
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
      if (!(thresholds[i] > 0.0)) throw DomainError("McSpec: thresholds must be positive");
      if (i > 0 && !(thresholds[i] > thresholds[i - 1])) {
        throw DomainError("McSpec: thresholds must be strictly increasing");
      }
    }
  }
};

struct MeanWithError {
  double value = 0.0;
  double se = 0.0;
};

struct TruncatedMae {
  double threshold = 0.0;
  double value = 0.0;
  double se = 0.0;
};

struct McSummary {
  long reps = 0;
  double stage_one_freq = 0.0;
  MeanWithError marginal_mae;
  std::vector<TruncatedMae> conditional_truncated_mae;
  long degenerate_count = 0;
};

namespace detail {

struct Moments {
  double sum = 0.0;
  double sum_sq = 0.0;

  void add(double x) {
    sum += x;
    sum_sq += x * x;
  }
  void merge(const Moments& o) {
    sum += o.sum;
    sum_sq += o.sum_sq;
  }
  // Mean and standard error (sample standard deviation / sqrt(count)).
  MeanWithError summarize(long count) const {
    if (count < 1) return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
    const double c = static_cast<double>(count);
    const double mean = sum / c;
    if (count < 2) return {mean, 0.0};
    const double var = std::max(0.0, (sum_sq - c * mean * mean) / (c - 1.0));
    return {mean, std::sqrt(var / c)};
  }
};

/// Run `visit(acc, outcome)` over all replications, one accumulator per
/// chunk, and return the accumulators in chunk order.
template <class Acc, class Make, class Visit>
std::vector<Acc> run_chunks(const McSpec& spec, unsigned workers, Make make, Visit visit) {
  const long chunks = (spec.reps + kChunkSize - 1) / kChunkSize;
  std::vector<Acc> out;
  out.reserve(chunks);
  for (long i = 0; i < chunks; ++i) out.push_back(make());

  std::atomic<long> next{0};
  auto work = [&] {
    for (long c = next.fetch_add(1); c < chunks; c = next.fetch_add(1)) {
      CounterStream rng(spec.seed, static_cast<std::uint64_t>(c));
      const long begin = c * kChunkSize;
      const long end = std::min(spec.reps, begin + kChunkSize);
      for (long r = begin; r < end; ++r) visit(out[c], simulate_trial(spec.config, rng));
    }
  };
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(chunks)));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  return out;
}

/// Conditional MLE in the units of the data, or false for an outcome where
/// it does not exist (stage-one sum of zero, or no interior maximum).
inline bool conditional_estimate(const TrialConfig& config, const StoppingRule& standardized_rule,
                                 const TrialOutcome& outcome, double& value) {
  const TrialOutcome z = standardized(outcome, config.sigma);
  try {
    const Estimate e = config.rule.is_indicator() ? conditional_mle(z) : conditional_mle_generic(z, standardized_rule);
    value = config.sigma * e.value;
    return true;
  } catch (const DomainError&) {
    return false;
  } catch (const SolverError&) {
    return false;
  }
}

}  // namespace detail

inline unsigned default_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

inline McSummary run_mc(const McSpec& spec, unsigned workers = default_workers()) {
  spec.validate();
  struct Acc {
    long stage_one = 0;
    long degenerate = 0;
    detail::Moments marginal;
    std::vector<detail::Moments> truncated;
  };
  const std::size_t nt = spec.thresholds.size();
  const StoppingRule rule = standardized(spec.config.rule, spec.config.sigma);
  const double mu = spec.config.mu;

  auto chunks = detail::run_chunks<Acc>(
      spec, workers, [nt] { return Acc{0, 0, {}, std::vector<detail::Moments>(nt)}; },
      [&](Acc& acc, const TrialOutcome& o) {
        if (o.stage == Stage::One) ++acc.stage_one;
        acc.marginal.add(std::fabs(marginal_mle(o).value - mu));
        if (nt == 0) return;
        double c;
        if (!detail::conditional_estimate(spec.config, rule, o, c)) {
          ++acc.degenerate;
          return;
        }
        const double err = std::fabs(c - mu);
        for (std::size_t j = 0; j < nt; ++j) acc.truncated[j].add(std::min(err, spec.thresholds[j]));
      });

  Acc total{0, 0, {}, std::vector<detail::Moments>(nt)};
  for (const auto& a : chunks) {
    total.stage_one += a.stage_one;
    total.degenerate += a.degenerate;
    total.marginal.merge(a.marginal);
    for (std::size_t j = 0; j < nt; ++j) total.truncated[j].merge(a.truncated[j]);
  }

  McSummary s;
  s.reps = spec.reps;
  s.stage_one_freq = static_cast<double>(total.stage_one) / static_cast<double>(spec.reps);
  s.marginal_mae = total.marginal.summarize(spec.reps);
  s.degenerate_count = total.degenerate;
  const long used = spec.reps - total.degenerate;
  for (std::size_t j = 0; j < nt; ++j) {
    const auto m = total.truncated[j].summarize(used);
    s.conditional_truncated_mae.push_back({spec.thresholds[j], m.value, m.se});
  }
  return s;
}

struct OctaveBin {
  int octave = 0;  // |estimate| in [2^octave, 2^(octave+1))
  long count = 0;
  // Sum of |estimate| over the bin divided by reps: the bin's contribution
  // to the mean absolute error.
  double mean_contribution = 0.0;
};

struct TailHistogram {
  long reps = 0;
  long stage_one = 0;
  long stage_two = 0;
  long degenerate = 0;
  long underflow = 0;  // |estimate| < 1
  long overflow = 0;   // |estimate| >= 2^bins
  std::vector<OctaveBin> bins;

  long total() const {
    long t = underflow + overflow;
    for (const auto& b : bins) t += b.count;
    return t;
  }
};

/// Octave histogram of |conditional MLE - mu| over stage-one outcomes.
/// With a density tail ~ c/x^2 the counts halve from one octave to the next
/// while each octave's contribution to the mean stays near c log 2, which is
/// what makes the mean infinite.
inline TailHistogram tail_histogram(const McSpec& spec, int bins, unsigned workers = default_workers()) {
  spec.validate();
  if (bins < 10) throw DomainError("tail_histogram: need at least 10 bins");
  struct Acc {
    long stage_one = 0, stage_two = 0, degenerate = 0, underflow = 0, overflow = 0;
    std::vector<long> count;
    std::vector<double> sum;
  };
  const StoppingRule rule = standardized(spec.config.rule, spec.config.sigma);
  const double mu = spec.config.mu;
  auto chunks = detail::run_chunks<Acc>(
      spec, workers,
      [bins] { return Acc{0, 0, 0, 0, 0, std::vector<long>(bins), std::vector<double>(bins)}; },
      [&](Acc& acc, const TrialOutcome& o) {
        if (o.stage == Stage::Two) {
          ++acc.stage_two;
          return;
        }
        ++acc.stage_one;
        double c;
        if (!detail::conditional_estimate(spec.config, rule, o, c)) {
          ++acc.degenerate;
          return;
        }
        const double err = std::fabs(c - mu);
        if (err < 1.0) {
          ++acc.underflow;
          return;
        }
        const int j = std::ilogb(err);
        if (j >= bins) {
          ++acc.overflow;
          return;
        }
        ++acc.count[j];
        acc.sum[j] += err;
      });

  TailHistogram h;
  h.reps = spec.reps;
  std::vector<long> count(bins);
  std::vector<double> sum(bins);
  for (const auto& a : chunks) {
    h.stage_one += a.stage_one;
    h.stage_two += a.stage_two;
    h.degenerate += a.degenerate;
    h.underflow += a.underflow;
    h.overflow += a.overflow;
    for (int j = 0; j < bins; ++j) {
      count[j] += a.count[j];
      sum[j] += a.sum[j];
    }
  }
  for (int j = 0; j < bins; ++j) h.bins.push_back({j, count[j], sum[j] / static_cast<double>(spec.reps)});
  return h;
}

}  // namespace seqstop
