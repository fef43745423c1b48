#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

#include "feedtype/parallel.hpp"
#include "feedtype/strategy_tree.hpp"

namespace feedtype {

enum class Method { ExactEnumeration, MonteCarlo };
std::string_view to_string(Method m);

struct DeviationReport {
  std::size_t n = 0;
  double mu = 0.0;
  Symbol a = 0;
  Symbol b = 0;
  double value = 0.0;  // exact maximum, or Monte Carlo estimate
  double bound = 0.0;  // 1/(4 n mu^2)
  double margin = 0.0; // bound - value (exact) or bound - ci_high (Monte Carlo)
  Method method = Method::ExactEnumeration;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double ci_halfwidth = 0.0;
  std::uint64_t trials = 0;
  std::uint64_t hits = 0;

  bool passed() const;
};

struct WilsonInterval {
  double low;
  double high;
};

// 95% Wilson score interval for `hits` successes in `trials`.
WilsonInterval wilson_interval(std::uint64_t hits, std::uint64_t trials, double z = 1.959963984540054);

double lemma1_bound(std::size_t n, double mu);

// p(1-p)/(n mu^2) with p = P(b|a); never above lemma1_bound.
double kolmogorov_rhs(std::size_t n, double mu, const Dmc& dmc, Symbol a, Symbol b);

// Maximum deviation probability over all strategies by exhaustive
// enumeration. Throws BoundViolated if it exceeds 1/(4 n mu^2) + 1e-12.
DeviationReport verify_lemma1_exhaustive(std::size_t n, const ScoreParams& p, const ExecPolicy& policy = {});

// |N(a,b) - N(a) P(b|a)| > n mu, the deviation event in count form.
bool deviation_event(std::uint64_t count_ab, std::uint64_t count_a, std::size_t n, const ScoreParams& p);

// Closed-loop simulation: trial t draws from RngStream(seed, t), so results
// do not depend on the worker count.
DeviationReport monte_carlo_deviation(const OnlineStrategy& strategy, std::size_t n, const ScoreParams& p,
                                      std::uint64_t trials, std::uint64_t seed, const ExecPolicy& policy = {});

namespace serial {
DeviationReport monte_carlo_deviation(const OnlineStrategy& strategy, std::size_t n, const ScoreParams& p,
                                      std::uint64_t trials, std::uint64_t seed);
}  // namespace serial

struct MartingaleReport {
  std::size_t n = 0;
  double max_abs_step_bias = 0.0;
  std::uint64_t histories = 0;
};

// Exact E[S_k - S_{k-1} | y^{k-1}] over every history of the strategy.
MartingaleReport martingale_check(const StrategyTree& tree, const ScoreParams& p);
MartingaleReport martingale_check(const StrategyFn& h, std::size_t n, const ScoreParams& p);

}  // namespace feedtype
