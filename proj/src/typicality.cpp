#include "feedtype/typicality.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

#include <fmt/format.h>

#include "feedtype/error.hpp"
#include "feedtype/rng.hpp"

namespace feedtype {

std::string_view to_string(Method m) {
  return m == Method::ExactEnumeration ? "exact_enumeration" : "monte_carlo";
}

bool DeviationReport::passed() const {
  if (method == Method::ExactEnumeration) return value <= bound + 1e-12;
  return ci_high <= bound;
}

WilsonInterval wilson_interval(std::uint64_t hits, std::uint64_t trials, double z) {
  if (trials == 0) return {0.0, 1.0};
  const double nt = static_cast<double>(trials);
  const double phat = static_cast<double>(hits) / nt;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nt;
  const double centre = (phat + z2 / (2.0 * nt)) / denom;
  const double half = z * std::sqrt(phat * (1.0 - phat) / nt + z2 / (4.0 * nt * nt)) / denom;
  // the closed form gives the endpoints only up to rounding
  const double low = hits == 0 ? 0.0 : std::max(0.0, centre - half);
  const double high = hits == trials ? 1.0 : std::min(1.0, centre + half);
  return {low, high};
}

double lemma1_bound(std::size_t n, double mu) {
  if (!(mu > 0.0)) throw ValueError(ErrorCode::NonpositiveMu, fmt::format("mu = {}", mu), mu);
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "blocklength must be >= 1");
  return 1.0 / (4.0 * static_cast<double>(n) * mu * mu);
}

double kolmogorov_rhs(std::size_t n, double mu, const Dmc& dmc, Symbol a, Symbol b) {
  const double bound = lemma1_bound(n, mu);
  const double p = dmc.prob(b, a);
  const double rhs = p * (1.0 - p) / (static_cast<double>(n) * mu * mu);
  if (rhs > bound * (1.0 + 1e-12)) {
    throw ValueError(ErrorCode::BoundViolated, fmt::format("variance term {} above {}", rhs, bound), rhs - bound);
  }
  return rhs;
}

DeviationReport verify_lemma1_exhaustive(std::size_t n, const ScoreParams& p, const ExecPolicy& policy) {
  const MaxSuccess best = exhaustive_max_success(n, p, policy);
  DeviationReport r;
  r.n = n;
  r.mu = p.mu();
  r.a = p.a();
  r.b = p.b();
  r.value = best.value;
  r.bound = lemma1_bound(n, p.mu());
  r.margin = r.bound - r.value;
  r.method = Method::ExactEnumeration;
  r.ci_low = r.ci_high = r.value;
  r.trials = enumerate_trees(n, p.dmc().input().size(), p.dmc().output().size()).size();
  if (!r.passed()) {
    throw ValueError(ErrorCode::BoundViolated,
                     fmt::format("n={} mu={} (a,b)=({},{}): max {:.17g} > bound {:.17g}", n, p.mu(), p.a(), p.b(),
                                 r.value, r.bound),
                     r.value - r.bound);
  }
  return r;
}

bool deviation_event(std::uint64_t count_ab, std::uint64_t count_a, std::size_t n, const ScoreParams& p) {
  const double dev = static_cast<double>(count_ab) - static_cast<double>(count_a) * p.p_ba();
  return std::abs(dev) > p.threshold(n);
}

namespace {

// One closed-loop run of length n; returns whether the deviation event fired.
bool run_trial(OnlineStrategy& strategy, std::size_t n, const ScoreParams& p, RngStream& rng) {
  strategy.reset();
  std::uint64_t count_a = 0;
  std::uint64_t count_ab = 0;
  const Dmc& dmc = p.dmc();
  for (std::size_t i = 0; i < n; ++i) {
    const Symbol x = strategy.next_input();
    const Symbol y = dmc_sample(dmc, x, rng);
    if (x == p.a()) {
      ++count_a;
      if (y == p.b()) ++count_ab;
    }
    strategy.observe(y);
  }
  return deviation_event(count_ab, count_a, n, p);
}

DeviationReport mc_report(std::size_t n, const ScoreParams& p, std::uint64_t trials, std::uint64_t hits) {
  DeviationReport r;
  r.n = n;
  r.mu = p.mu();
  r.a = p.a();
  r.b = p.b();
  r.method = Method::MonteCarlo;
  r.trials = trials;
  r.hits = hits;
  r.value = static_cast<double>(hits) / static_cast<double>(trials);
  r.bound = lemma1_bound(n, p.mu());
  const WilsonInterval ci = wilson_interval(hits, trials);
  r.ci_low = ci.low;
  r.ci_high = ci.high;
  r.ci_halfwidth = 0.5 * (ci.high - ci.low);
  r.margin = r.bound - r.ci_high;
  return r;
}

void check_mc_args(std::size_t n, std::uint64_t trials) {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "blocklength must be >= 1");
  if (trials == 0) throw Error(ErrorCode::InvalidArgument, "need at least one trial");
}

}  // namespace

DeviationReport monte_carlo_deviation(const OnlineStrategy& strategy, std::size_t n, const ScoreParams& p,
                                      std::uint64_t trials, std::uint64_t seed, const ExecPolicy& policy) {
  check_mc_args(n, trials);
  const int workers = policy.resolved();
  const auto total = static_cast<std::int64_t>(trials);
  std::uint64_t hits = 0;
#pragma omp parallel num_threads(workers) reduction(+ : hits)
  {
    std::unique_ptr<OnlineStrategy> local = strategy.clone();
#pragma omp for schedule(static)
    for (std::int64_t t = 0; t < total; ++t) {
      RngStream rng(seed, static_cast<std::uint64_t>(t));
      if (run_trial(*local, n, p, rng)) ++hits;
    }
  }
  return mc_report(n, p, trials, hits);
}

namespace serial {

DeviationReport monte_carlo_deviation(const OnlineStrategy& strategy, std::size_t n, const ScoreParams& p,
                                      std::uint64_t trials, std::uint64_t seed) {
  check_mc_args(n, trials);
  std::unique_ptr<OnlineStrategy> local = strategy.clone();
  std::uint64_t hits = 0;
  for (std::uint64_t t = 0; t < trials; ++t) {
    RngStream rng(seed, t);
    if (run_trial(*local, n, p, rng)) ++hits;
  }
  return mc_report(n, p, trials, hits);
}

}  // namespace serial

MartingaleReport martingale_check(const StrategyTree& tree, const ScoreParams& p) {
  const std::uint64_t leaves = checked_leaf_count(tree.depth(), tree.output_size());
  if (leaves > (std::uint64_t{1} << 20)) {
    throw Error(ErrorCode::DepthOverflow, "martingale check limited to |Y|^n <= 2^20");
  }
  if (tree.input_size() != p.dmc().input().size() || tree.output_size() != p.dmc().output().size()) {
    throw Error(ErrorCode::LengthMismatch, "tree alphabets differ from channel alphabets");
  }
  MartingaleReport r;
  r.n = tree.depth();
  for (std::size_t v = 0; v < tree.node_count(); ++v) {
    const Symbol x = tree.label(v);
    const Pmf& row = p.dmc().row(x);
    double drift = 0.0;
    for (Symbol y = 0; y < tree.output_size(); ++y) drift += row[y] * p.increment(x, y);
    r.max_abs_step_bias = std::max(r.max_abs_step_bias, std::abs(drift));
    ++r.histories;
  }
  return r;
}

MartingaleReport martingale_check(const StrategyFn& h, std::size_t n, const ScoreParams& p) {
  const std::size_t ny = p.dmc().output().size();
  if (checked_leaf_count(n, ny) > (std::uint64_t{1} << 20)) {
    throw Error(ErrorCode::DepthOverflow, "martingale check limited to |Y|^n <= 2^20");
  }
  return martingale_check(tree_from_strategy(h, n, p.dmc().input().size(), ny), p);
}

}  // namespace feedtype
