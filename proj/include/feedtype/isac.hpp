#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "feedtype/channel.hpp"
#include "feedtype/parallel.hpp"
#include "feedtype/strategy_tree.hpp"
#include "feedtype/typicality.hpp"

namespace feedtype {

// Nonnegative bounded table d(shat, s).
class DistortionFn {
 public:
  DistortionFn(std::size_t estimate_size, std::size_t state_size, std::vector<double> table);
  static DistortionFn hamming(std::size_t size);

  std::size_t estimate_size() const noexcept { return estimate_size_; }
  std::size_t state_size() const noexcept { return state_size_; }
  double operator()(Symbol shat, Symbol s) const noexcept { return table_[shat * state_size_ + s]; }

 private:
  std::size_t estimate_size_;
  std::size_t state_size_;
  std::vector<double> table_;
};

// "dist |Shat| |S|" then |Shat| rows of |S| entries.
DistortionFn parse_distortion(std::istream& in);
DistortionFn load_distortion(const std::string& path);

Pmf posterior_state(const Sdmc& sdmc, const Pmf& ps, Symbol x, Symbol y);
// Minimizer of the posterior-weighted distortion; ties to the smallest index.
Symbol optimal_estimate(const Sdmc& sdmc, const Pmf& ps, const DistortionFn& d, Symbol x, Symbol y);

// Per-letter estimator (x, y) -> shat, indexed x * |Y| + y.
using EstimatorMap = std::vector<Symbol>;
// Cells where y is impossible under x map to 0.
EstimatorMap optimal_estimator_map(const Sdmc& sdmc, const Pmf& ps, const DistortionFn& d);

double expected_distortion(const Pmf& px, const Sdmc& sdmc, const Pmf& ps, const DistortionFn& d);
double expected_distortion(const Pmf& px, const Sdmc& sdmc, const Pmf& ps, const DistortionFn& d,
                           const EstimatorMap& estimator);

// I(X;Y) in bits for the state-averaged channel.
double mutual_information(const Pmf& px, const Sdmc& sdmc, const Pmf& ps);

struct FrontierPoint {
  std::vector<double> px;
  double rate;        // bits
  double distortion;
};

// Evaluates (I(X;Y), E[d]) on the simplex grid with `resolution` points per
// axis (step 1/(resolution-1)); sorted by distortion, then rate descending.
// Only for |X| <= 4.
std::vector<FrontierPoint> frontier_sweep(const Sdmc& sdmc, const Pmf& ps, const DistortionFn& d,
                                          std::size_t resolution, const ExecPolicy& policy = {});

// Heuristic for larger input alphabets: coarse-grid seeds refined by pairwise
// coordinate ascent on R - lambda * D for a ladder of lambda values.
std::vector<FrontierPoint> frontier_search_heuristic(const Sdmc& sdmc, const Pmf& ps, const DistortionFn& d,
                                                     std::size_t seed_resolution);

namespace serial {
std::vector<FrontierPoint> frontier_sweep(const Sdmc& sdmc, const Pmf& ps, const DistortionFn& d,
                                          std::size_t resolution);
}  // namespace serial

const FrontierPoint& max_rate_point(std::span<const FrontierPoint> points);
const FrontierPoint& min_distortion_point(std::span<const FrontierPoint> points);
// Points not dominated by another with lower-or-equal distortion and higher rate.
std::vector<FrontierPoint> pareto_front(std::span<const FrontierPoint> points);

// ---------------------------------------------------------------------------

// floor(2^{nR}); n*R within 1e-9 of an integer is snapped to it.
std::uint64_t message_count(std::size_t n, double rate);

// Encoders f_i(m, y^{i-1}), decoder g(y^n), state estimator h(x^n, y^n).
struct IsacCode {
  std::size_t n = 0;
  double rate = 0.0;
  std::uint64_t messages = 0;
  std::size_t input_size = 0;
  std::size_t output_size = 0;
  std::function<Symbol(std::uint64_t m, std::span<const Symbol> past)> encode;
  std::function<std::uint64_t(std::span<const Symbol> ys)> decode;
  std::function<void(std::span<const Symbol> xs, std::span<const Symbol> ys, std::span<Symbol> shat)> estimate;
};

// Declarative form read from code files.
struct CodeSpec {
  enum class Family { Table, Constant, Repetition, IdentityDecoder };
  Family family = Family::Table;
  std::size_t n = 0;
  double rate = 0.0;
  std::size_t input_size = 0;
  std::size_t output_size = 0;
  std::vector<StrategyTree> encoders;       // table: one per message
  std::vector<std::uint64_t> decoder;       // table: one entry per y^n ordinal
  Symbol constant_symbol = 0;               // constant family
  std::optional<EstimatorMap> estimator;    // absent: optimal estimator
};

CodeSpec parse_code(std::istream& in);
CodeSpec load_code(const std::string& path);
std::string format_code(const CodeSpec& spec);

// Turns a spec into a runnable code; the estimator defaults to the optimal
// per-letter map for (sdmc, ps, d).
IsacCode build_code(const CodeSpec& spec, const Sdmc& sdmc, const Pmf& ps, const DistortionFn& d);

IsacCode make_table_code(std::size_t n, double rate, std::vector<StrategyTree> encoders,
                         std::vector<std::uint64_t> decoder, EstimatorMap estimator);
IsacCode make_per_letter_estimator(IsacCode code, EstimatorMap estimator);

// Maximum-likelihood decoder table for given per-message encoder trees;
// likelihoods within a relative 1e-12 count as ties, broken to the smallest m.
std::vector<std::uint64_t> ml_decoder_table(std::span<const StrategyTree> encoders, const Sdmc& sdmc,
                                            const Pmf& ps);

struct SimStats {
  std::uint64_t trials = 0;
  std::uint64_t decoding_errors = 0;
  std::uint64_t excess_distortions = 0;
  double pe = 0.0;
  double pd = 0.0;
  WilsonInterval pe_ci{0.0, 1.0};
  WilsonInterval pd_ci{0.0, 1.0};
  double mean_distortion = 0.0;
};

// Trial t uses RngStream(seed, t): message, then per step state and output.
SimStats simulate_code(const IsacCode& code, const Sdmc& sdmc, const Pmf& ps, const DistortionFn& d,
                       double max_distortion, std::uint64_t trials, std::uint64_t seed,
                       const ExecPolicy& policy = {});

namespace serial {
SimStats simulate_code(const IsacCode& code, const Sdmc& sdmc, const Pmf& ps, const DistortionFn& d,
                       double max_distortion, std::uint64_t trials, std::uint64_t seed);
}  // namespace serial

// ---------------------------------------------------------------------------
// Finite-n pieces of the converse.

class ConverseParams {
 public:
  ConverseParams(double eps, double delta, double eta, double max_distortion);

  double eps() const noexcept { return eps_; }
  double delta() const noexcept { return delta_; }
  double eta() const noexcept { return eta_; }
  double max_distortion() const noexcept { return max_distortion_; }
  // n^{-1/4}
  static double mu(std::size_t n);

 private:
  double eps_;
  double delta_;
  double eta_;
  double max_distortion_;
};

// One closed-loop realization (s^n, y^n) given message m, with its inputs
// and probability.
struct Realization {
  std::span<const Symbol> xs;
  std::span<const Symbol> ss;
  std::span<const Symbol> ys;
  double prob;
};

// Visits every (s^n, y^n) with positive probability; requires
// (|S||Y|)^n <= 2^20.
void for_each_realization(const IsacCode& code, const Sdmc& sdmc, const Pmf& ps, std::uint64_t m,
                          const std::function<void(const Realization&)>& visit);

enum class EvalMode { Exact, MonteCarlo };

struct GoodMessageSet {
  std::vector<std::uint64_t> members;
  std::vector<double> failure;  // P(g != m or dist > D | M = m)
  std::vector<double> error;    // P(g != m | M = m)
  std::vector<double> excess;   // P(dist > D | M = m)
  double pe = 0.0;
  double pd = 0.0;
  double gamma = 0.0;
  double fraction = 0.0;  // |M~| / 2^{nR}
};

GoodMessageSet build_good_message_set(const IsacCode& code, const Sdmc& sdmc, const Pmf& ps,
                                      const DistortionFn& d, const ConverseParams& cp, EvalMode mode,
                                      std::uint64_t mc_trials = 10000, std::uint64_t seed = 0,
                                      const ExecPolicy& policy = {});

struct RestrictedMass {
  double delta = 0.0;       // mass of pairs meeting all three conditions
  double mu = 0.0;          // n^{-1/4}
  double bound_rhs = 0.0;   // eta - |X||Y||S| / (4 n mu^2)
  bool in_good_set = false;
  bool bound_checked = false;
  // P(|pi(a,b,c) - pi(a) P_S(b) P(c|a,b)| > mu | M = m), (a,b,c) row-major
  // over X x S x Y.
  std::vector<double> triple_deviation;
  double triple_bound = 0.0;  // 1/(4 n mu^2)
};

RestrictedMass restricted_measure_mass(const IsacCode& code, const Sdmc& sdmc, const Pmf& ps,
                                       const DistortionFn& d, std::uint64_t m, const ConverseParams& cp);

}  // namespace feedtype
