// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <functional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "feedtype/channel.hpp"
#include "feedtype/isac.hpp"
#include "feedtype/rng.hpp"
#include "feedtype/strategy_tree.hpp"
#include "feedtype/typicality.hpp"

using namespace feedtype;

namespace {

const std::string kData = std::string(FEEDTYPE_SOURCE_DIR) + "/data/";

struct Outcome {
  bool pass;
  std::string detail;
};

int failures = 0;

void criterion(int id, const char* name, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o{false, ""};
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, fmt::format("exception: {}", e.what())};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.pass) ++failures;
  fmt::print("criterion {} {}: {} ({}; {:.2f} s)\n", id, name, o.pass ? "PASS" : "FAIL", o.detail, secs);
  std::fflush(stdout);
}

std::vector<ScoreParams> binary_grid() {
  std::vector<ScoreParams> out;
  for (double q : {0.1, 0.3, 0.5})
    for (double mu : {0.15, 0.25, 0.4, 0.6})
      for (Symbol a = 0; a < 2; ++a)
        for (Symbol b = 0; b < 2; ++b) out.emplace_back(a, b, mu, Dmc::bsc(q));
  return out;
}

const ExecPolicy kOne{1};

Outcome c1() {
  double worst = 0;
  int instances = 0;
  const auto t0 = std::chrono::steady_clock::now();
  for (std::size_t n = 2; n <= 4; ++n) {
    for (const ScoreParams& p : binary_grid()) {
      const double opt = success_probability(optimal_tree(n, p), p);
      const double ex = exhaustive_max_success(n, p, kOne).value;
      worst = std::max(worst, std::abs(opt - ex));
      ++instances;
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {worst <= 1e-12 && secs < 60.0,
          fmt::format("{} instances, max |optimal - exhaustive| = {:.3g}, single worker {:.2f} s", instances, worst,
                      secs)};
}

Outcome c2() {
  double worst_margin = -1.0;
  int instances = 0;
  auto check = [&](std::size_t n, const ScoreParams& p) {
    const double v = exhaustive_max_success(n, p).value;
    worst_margin = std::max(worst_margin, v - lemma1_bound(n, p.mu()));
    ++instances;
  };
  for (std::size_t n = 2; n <= 4; ++n)
    for (const ScoreParams& p : binary_grid()) check(n, p);
  const Dmc tern = load_channel(kData + "ternary.chan").as_dmc();
  int ternary = 0;
  for (double mu : {0.15, 0.25, 0.4, 0.6})
    for (Symbol a = 0; a < 2; ++a)
      for (Symbol b = 0; b < 3; ++b) {
        check(3, ScoreParams(a, b, mu, tern));
        ++ternary;
      }
  return {worst_margin <= 1e-12, fmt::format("{} instances ({} ternary-output), max (value - bound) = {:.4g}",
                                             instances, ternary, worst_margin)};
}

Outcome c3() {
  const std::size_t n = 10000;
  const double mu = std::pow(static_cast<double>(n), -0.25);
  const ScoreParams p(0, 1, mu, Dmc::bsc(0.3));
  const auto strat = make_threshold_strategy(n, p);
  const DeviationReport r = monte_carlo_deviation(*strat, n, p, 100000, 20240601);
  const double bound = lemma1_bound(n, mu);
  return {r.ci_high <= bound, fmt::format("BSC(0.3) a=0 b=1, hits {}/{}, p^ = {:.3g}, Wilson upper {:.4g} <= {:.4g}",
                                          r.hits, r.trials, r.value, r.ci_high, bound)};
}

Outcome c4() {
  double worst_identity = 0;
  double worst_drop = 0;
  std::size_t worst_steps = 0;
  std::uint64_t sites = 0;
  bool terminated = true;
  for (const ScoreParams& p : binary_grid()) {
    for (const StrategyTree& t : enumerate_trees(3, 2, 2)) {
      const double before = success_probability(t, p);
      for (std::size_t v : surgery_sites(t, p.a())) {
        worst_identity = std::max(worst_identity, std::abs(expected_replacement_success(SurgerySite(t, v, p.a()), p) - before));
        ++sites;
      }
      StrategyTree cur = t;
      double prev = before;
      std::size_t steps = 0;
      while (!is_well_ordered(cur, p.a())) {
        if (++steps > t.node_count()) {
          terminated = false;
          break;
        }
        cur = well_order_step(cur, p);
        const double now = success_probability(cur, p);
        worst_drop = std::max(worst_drop, prev - now);
        prev = now;
      }
      worst_steps = std::max(worst_steps, steps);
    }
  }
  return {worst_identity <= 1e-12 && worst_drop <= 1e-12 && terminated,
          fmt::format("128 trees x 48 instances, {} sites, max identity err {:.3g}, max drop {:.3g}, max steps {} <= 7",
                      sites, worst_identity, worst_drop, worst_steps)};
}

Outcome c5() {
  double worst = 0;
  std::uint64_t trees = 0;
  std::vector<Dmc> chans{Dmc::bsc(0.1), Dmc::bsc(0.3), Dmc::bsc(0.5), load_channel(kData + "ternary.chan").as_dmc()};
  for (const Dmc& d : chans) {
    const std::size_t ny = d.output().size();
    for (Symbol a = 0; a < 2; ++a) {
      for (Symbol b = 0; b < ny; ++b) {
        const ScoreParams p(a, b, 0.25, d);
        for (std::size_t n = 1; n <= 3; ++n) {
          for (const StrategyTree& t : enumerate_trees(n, 2, ny)) {
            worst = std::max(worst, martingale_check(t, p).max_abs_step_bias);
            ++trees;
          }
        }
        RngStream rng(7, a * 16 + b);
        const std::size_t nodes = tree_node_count(4, ny);
        for (int k = 0; k < 100; ++k) {
          std::vector<Symbol> labels(nodes);
          for (auto& l : labels) l = static_cast<Symbol>(rng.next_u64() & 1u);
          worst = std::max(worst, martingale_check(StrategyTree(4, 2, ny, labels), p).max_abs_step_bias);
          ++trees;
        }
      }
    }
  }
  return {worst <= 1e-12, fmt::format("{} trees (exhaustive n<=3, 100 random at n=4), max step bias {:.3g}", trees, worst)};
}

Outcome c6() {
  const Sdmc s = load_channel(kData + "isac_2x2x2.chan").as_sdmc();
  const Pmf ps({0.6, 0.4});
  const DistortionFn d = load_distortion(kData + "hamming2.dist");
  double argmin_gap = 0;
  for (Symbol x = 0; x < 2; ++x) {
    for (Symbol y = 0; y < 2; ++y) {
      const Pmf post = posterior_state(s, ps, x, y);
      auto cost = [&](Symbol sh) { return post[0] * d(sh, 0) + post[1] * d(sh, 1); };
      const double best = cost(optimal_estimate(s, ps, d, x, y));
      for (Symbol sh = 0; sh < 2; ++sh) argmin_gap = std::max(argmin_gap, best - cost(sh));
    }
  }
  double worst = 0;
  for (double p1 : {0.0, 0.1, 0.25, 0.5, 0.75, 1.0}) {
    const Pmf px({1 - p1, p1});
    const double opt = expected_distortion(px, s, ps, d);
    for (unsigned bits = 0; bits < 16; ++bits) {
      const EstimatorMap m{bits & 1u, (bits >> 1) & 1u, (bits >> 2) & 1u, (bits >> 3) & 1u};
      worst = std::max(worst, opt - expected_distortion(px, s, ps, d, m));
    }
  }
  return {argmin_gap <= 1e-12 && worst <= 1e-12,
          fmt::format("4 cells argmin gap {:.3g}; 16 maps x 6 input laws, max advantage over optimal {:.3g}", argmin_gap,
                      worst)};
}

Outcome c7() {
  // crossover 0.6 * 0.05 + 0.4 * 0.2 = 0.11
  const double m[] = {0.95, 0.05, 0.8, 0.2, 0.05, 0.95, 0.2, 0.8};
  const Pmf ps({0.6, 0.4});
  const double mi = mutual_information(Pmf::uniform(2), Sdmc::from_matrix(2, 2, 2, m), ps);
  const double h = -(0.11 * std::log2(0.11) + 0.89 * std::log2(0.89));
  const double mi_err = std::abs(mi - (1 - h));

  const Sdmc s = load_channel(kData + "isac_2x2x2.chan").as_sdmc();
  const DistortionFn d = DistortionFn::hamming(2);
  const double grid_best = max_rate_point(frontier_sweep(s, ps, d, 101)).rate;
  double oracle = 0;
  const int fine = 100000;
  for (int k = 0; k <= fine; ++k) {
    const double p1 = static_cast<double>(k) / fine;
    oracle = std::max(oracle, mutual_information(Pmf({1 - p1, p1}), s, ps));
  }
  const double gap = std::abs(oracle - grid_best);
  return {mi_err <= 1e-6 && gap <= 1e-3,
          fmt::format("I = {:.15g} (err {:.3g}); frontier max R {:.10g} vs fine {:.10g} (gap {:.3g})", mi, mi_err,
                      grid_best, oracle, gap)};
}

Outcome c8() {
  const Sdmc s = load_channel(kData + "isac_2x2x2.chan").as_sdmc();
  const Pmf ps({0.6, 0.4});
  const DistortionFn d = load_distortion(kData + "hamming2.dist");
  const IsacCode code = build_code(load_code(kData + "code_n4.code"), s, ps, d);
  // exact rational oracle (tests/oracles/freeze.py)
  const double frozen_delta[] = {0.42896304, 0.46503264, 0.28300224, 0.56848896};
  bool ok = true;
  std::string detail;
  double worst_delta = 0;
  double worst_triple = -1;
  for (double eta : {0.1, 0.3}) {
    const ConverseParams cp(0.3, 0.2, eta, 0.5);
    const GoodMessageSet g = build_good_message_set(code, s, ps, d, cp, EvalMode::Exact);
    ok = ok && g.fraction >= g.gamma;
    detail += fmt::format("eta={}: |M~|/M = {} >= gamma {:.6f}; ", eta, g.fraction, g.gamma);
    for (std::uint64_t msg = 0; msg < code.messages; ++msg) {
      int pairs = 0;
      for_each_realization(code, s, ps, msg, [&](const Realization&) { ++pairs; });
      ok = ok && pairs == 256;
      const RestrictedMass r = restricted_measure_mass(code, s, ps, d, msg, cp);
      worst_delta = std::max(worst_delta, std::abs(r.delta - frozen_delta[msg]));
      for (double t : r.triple_deviation) worst_triple = std::max(worst_triple, t - r.triple_bound);
    }
  }
  ok = ok && worst_delta <= 1e-12 && worst_triple <= 1e-12;
  detail += fmt::format("max |Delta - frozen| {:.3g}, max (triple dev - bound) {:.4g}", worst_delta, worst_triple);
  return {ok, detail};
}

}  // namespace

int main() {
  criterion(1, "optimal tree equals exhaustive maximum", c1);
  criterion(2, "exhaustive deviation maximum within 1/(4 n mu^2)", c2);
  criterion(3, "Monte Carlo deviation at n=10^4", c3);
  criterion(4, "surgery identity and well-ordering monotonicity", c4);
  criterion(5, "score martingale", c5);
  criterion(6, "state estimator optimality", c6);
  criterion(7, "mutual information and frontier", c7);
  criterion(8, "converse constructions at n=4", c8);
  fmt::print("{}\n", failures == 0 ? "ALL PASS" : fmt::format("{} FAILED", failures));
  return failures == 0 ? 0 : 1;
}
