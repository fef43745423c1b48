#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "feedtype/error.hpp"
#include "feedtype/isac.hpp"

using namespace feedtype;

namespace {

const std::string kData = std::string(FEEDTYPE_SOURCE_DIR) + "/data/";

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::Io;
}

Sdmc bundled_sdmc() { return load_channel(kData + "isac_2x2x2.chan").as_sdmc(); }
const Pmf kPs({0.6, 0.4});
const DistortionFn kHam = DistortionFn::hamming(2);

// y reveals s, whatever x is
Sdmc state_revealing() {
  const double m[] = {1, 0, 0, 1, 1, 0, 0, 1};
  return Sdmc::from_matrix(2, 2, 2, m);
}

// |Y| = 4, y = 2x + s
Sdmc fully_revealing() {
  std::vector<double> m(2 * 2 * 4, 0.0);
  for (int x = 0; x < 2; ++x)
    for (int s = 0; s < 2; ++s) m[(x * 2 + s) * 4 + 2 * x + s] = 1.0;
  return Sdmc::from_matrix(2, 2, 4, m);
}

IsacCode bundled_code() {
  return build_code(load_code(kData + "code_n4.code"), bundled_sdmc(), kPs, kHam);
}

}  // namespace

// --- posterior and estimator ---------------------------------------------------

TEST(Posterior, StateIndependentChannelKeepsPrior) {
  Sdmc s = Sdmc::state_independent(Dmc::bsc(0.2), 3);
  Pmf ps({0.2, 0.3, 0.5});
  for (Symbol x = 0; x < 2; ++x) {
    for (Symbol y = 0; y < 2; ++y) {
      const Pmf post = posterior_state(s, ps, x, y);
      for (Symbol t = 0; t < 3; ++t) EXPECT_NEAR(post[t], ps[t], 1e-15);
    }
  }
}

TEST(Posterior, StateRevealingGivesPointMass) {
  Pmf ps({0.5, 0.5});
  for (Symbol y = 0; y < 2; ++y) {
    const Pmf post = posterior_state(state_revealing(), ps, 1, y);
    EXPECT_EQ(post[y], 1.0);
    EXPECT_EQ(post[1 - y], 0.0);
  }
}

TEST(Posterior, BayesByHand) {
  const double m[] = {0.8, 0.2, 0.2, 0.8, 0.8, 0.2, 0.2, 0.8};
  const Pmf post = posterior_state(Sdmc::from_matrix(2, 2, 2, m), Pmf({0.5, 0.5}), 0, 1);
  EXPECT_NEAR(post[0], 0.2, 1e-15);
  EXPECT_NEAR(post[1], 0.8, 1e-15);
}

TEST(Posterior, ZeroLikelihood) {
  EXPECT_EQ(code_of([] { posterior_state(fully_revealing(), Pmf({0.5, 0.5}), 0, 3); }), ErrorCode::ZeroLikelihood);
}

TEST(Estimator, HammingIsMap) {
  Sdmc s = Sdmc::state_independent(Dmc::bsc(0.3), 2);
  EXPECT_EQ(optimal_estimate(s, Pmf({0.9, 0.1}), kHam, 0, 1), 0u);
  EXPECT_EQ(optimal_estimate(s, Pmf({0.1, 0.9}), kHam, 0, 1), 1u);
}

TEST(Estimator, ConstantDistortionTiesToZero) {
  Sdmc s = Sdmc::state_independent(Dmc::bsc(0.3), 2);
  DistortionFn d(3, 2, std::vector<double>(6, 0.7));
  EXPECT_EQ(optimal_estimate(s, Pmf({0.3, 0.7}), d, 1, 0), 0u);
}

TEST(Estimator, WeightedCost) {
  Sdmc s = Sdmc::state_independent(Dmc::bsc(0.3), 2);
  DistortionFn d(2, 2, {0, 1, 4, 0});  // costs (0.5, 2.0)
  EXPECT_EQ(optimal_estimate(s, Pmf({0.5, 0.5}), d, 0, 0), 0u);
}

TEST(Estimator, ArgminOverEveryCell) {
  const Sdmc s = bundled_sdmc();
  DistortionFn d(3, 2, {0, 1, 1, 0, 0.3, 0.3});
  for (Symbol x = 0; x < 2; ++x) {
    for (Symbol y = 0; y < 2; ++y) {
      const Pmf post = posterior_state(s, kPs, x, y);
      double total = 0;
      for (Symbol t = 0; t < 2; ++t) total += post[t];
      EXPECT_NEAR(total, 1.0, 1e-12);
      auto cost = [&](Symbol sh) { return post[0] * d(sh, 0) + post[1] * d(sh, 1); };
      const Symbol best = optimal_estimate(s, kPs, d, x, y);
      for (Symbol sh = 0; sh < 3; ++sh) EXPECT_LE(cost(best), cost(sh) + 1e-12);
    }
  }
}

TEST(Estimator, BundledMapFrozen) {
  EXPECT_EQ(optimal_estimator_map(bundled_sdmc(), kPs, kHam), (EstimatorMap{0, 1, 1, 0}));
}

TEST(Estimator, NoDeterministicMapBeatsOptimal) {
  const Sdmc s = bundled_sdmc();
  for (double p1 : {0.0, 0.25, 0.5, 0.9}) {
    const Pmf px({1 - p1, p1});
    const double best = expected_distortion(px, s, kPs, kHam);
    for (unsigned bits = 0; bits < 16; ++bits) {
      EstimatorMap m{bits & 1u, (bits >> 1) & 1u, (bits >> 2) & 1u, (bits >> 3) & 1u};
      EXPECT_GE(expected_distortion(px, s, kPs, kHam, m), best - 1e-12);
    }
  }
}

// --- distortion -----------------------------------------------------------------

TEST(Distortion, StateRevealingIsZero) {
  EXPECT_EQ(expected_distortion(Pmf({0.5, 0.5}), state_revealing(), Pmf({0.3, 0.7}), kHam), 0.0);
}

TEST(Distortion, UninformativeChannelUsesPriorOnly) {
  Sdmc s = Sdmc::state_independent(Dmc::bsc(0.4), 2);
  DistortionFn d(2, 2, {0, 2, 1, 0});
  const Pmf ps({0.3, 0.7});
  // min(0.7 * 2, 0.3 * 1)
  EXPECT_NEAR(expected_distortion(Pmf({0.5, 0.5}), s, ps, d), 0.3, 1e-15);
}

TEST(Distortion, PosteriorExampleFrozen) {
  const double m[] = {0.8, 0.2, 0.2, 0.8, 0.8, 0.2, 0.2, 0.8};
  EXPECT_NEAR(expected_distortion(Pmf({0.5, 0.5}), Sdmc::from_matrix(2, 2, 2, m), Pmf({0.5, 0.5}), kHam), 0.2,
              1e-12);
}

TEST(Distortion, FileParsing) {
  std::istringstream ok("# c\ndist 2 3\n0 1 1\n1 0 0.5\n");
  DistortionFn d = parse_distortion(ok);
  EXPECT_EQ(d.estimate_size(), 2u);
  EXPECT_EQ(d(1, 2), 0.5);
  std::istringstream short_table("dist 2 2\n0 1\n");
  EXPECT_EQ(code_of([&] { parse_distortion(short_table); }), ErrorCode::ChannelParse);
  std::istringstream negative("dist 1 2\n0 -1\n");
  EXPECT_NE(code_of([&] { parse_distortion(negative); }), ErrorCode::Io);
  EXPECT_NO_THROW(load_distortion(kData + "hamming2.dist"));
}

// --- mutual information and frontier -----------------------------------------------------

TEST(MutualInformation, NoiselessIsOneBit) {
  Sdmc s = Sdmc::state_independent(Dmc::bsc(0.0), 2);
  EXPECT_NEAR(mutual_information(Pmf::uniform(2), s, kPs), 1.0, 1e-15);
}

TEST(MutualInformation, IdenticalRowsGiveZero) {
  const double m[] = {0.3, 0.7, 0.1, 0.9, 0.3, 0.7, 0.1, 0.9};
  EXPECT_EQ(mutual_information(Pmf({0.4, 0.6}), Sdmc::from_matrix(2, 2, 2, m), kPs), 0.0);
}

TEST(MutualInformation, InducedBsc011) {
  // 0.6 * 0.05 + 0.4 * 0.2 = 0.11
  const double m[] = {0.95, 0.05, 0.8, 0.2, 0.05, 0.95, 0.2, 0.8};
  const double h2 = -(0.11 * std::log2(0.11) + 0.89 * std::log2(0.89));
  const double got = mutual_information(Pmf::uniform(2), Sdmc::from_matrix(2, 2, 2, m), kPs);
  EXPECT_NEAR(got, 1 - h2, 1e-12);
  EXPECT_NEAR(got, 0.500084041835472, 1e-6);
}

TEST(Frontier, BundledMaxRateMatchesFineOracle) {
  const auto pts = frontier_sweep(bundled_sdmc(), kPs, kHam, 101);
  EXPECT_EQ(pts.size(), 101u);
  EXPECT_NEAR(max_rate_point(pts).rate, 0.06666121883511007, 1e-3);
  EXPECT_LE(max_rate_point(pts).rate, 0.06666121883511007 + 1e-12);
}

TEST(Frontier, PointsAreConsistentAndSorted) {
  const Sdmc s = bundled_sdmc();
  const auto pts = frontier_sweep(s, kPs, kHam, 41);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Pmf px(pts[i].px);
    EXPECT_EQ(pts[i].distortion, expected_distortion(px, s, kPs, kHam));
    EXPECT_EQ(pts[i].rate, mutual_information(px, s, kPs));
    EXPECT_GE(pts[i].rate, 0.0);
    EXPECT_LE(pts[i].rate, 1.0);
    if (i) {
      EXPECT_TRUE(pts[i - 1].distortion < pts[i].distortion ||
                  (pts[i - 1].distortion == pts[i].distortion && pts[i - 1].rate >= pts[i].rate));
    }
  }
  EXPECT_EQ(min_distortion_point(pts).distortion, pts.front().distortion);
  const auto front = pareto_front(pts);
  for (std::size_t i = 1; i < front.size(); ++i) EXPECT_GT(front[i].rate, front[i - 1].rate);
}

TEST(Frontier, NoiselessStateIndependent) {
  Sdmc s = Sdmc::state_independent(Dmc::bsc(0.0), 2);
  const auto pts = frontier_sweep(s, kPs, kHam, 11);
  for (const auto& p : pts) EXPECT_NEAR(p.distortion, 0.4, 1e-15);
  const auto& best = max_rate_point(pts);
  EXPECT_NEAR(best.rate, 1.0, 1e-15);
  EXPECT_NEAR(best.px[0], 0.5, 1e-15);
}

TEST(Frontier, ParallelMatchesSerial) {
  const Sdmc s = bundled_sdmc();
  const auto ser = serial::frontier_sweep(s, kPs, kHam, 57);
  for (int w : {1, 3}) {
    const auto par = frontier_sweep(s, kPs, kHam, 57, ExecPolicy{w});
    ASSERT_EQ(par.size(), ser.size());
    for (std::size_t i = 0; i < par.size(); ++i) {
      EXPECT_EQ(par[i].px, ser[i].px);
      EXPECT_EQ(par[i].rate, ser[i].rate);
      EXPECT_EQ(par[i].distortion, ser[i].distortion);
    }
  }
}

TEST(Frontier, ThreeInputGridSumsToOne) {
  std::vector<double> m(3 * 2 * 2);
  const double rows[] = {0.9, 0.1, 0.6, 0.4, 0.5, 0.5, 0.2, 0.8, 0.1, 0.9, 0.3, 0.7};
  std::copy(std::begin(rows), std::end(rows), m.begin());
  const auto pts = frontier_sweep(Sdmc::from_matrix(3, 2, 2, m), kPs, kHam, 11);
  EXPECT_EQ(pts.size(), 66u);  // C(12, 2)
}

TEST(Frontier, LargeAlphabetNeedsHeuristic) {
  std::vector<double> m(5 * 1 * 5, 0.0);
  for (int x = 0; x < 5; ++x) m[x * 5 + x] = 1.0;
  const Sdmc s = Sdmc::from_matrix(5, 1, 5, m);
  const Pmf ps({1.0});
  const DistortionFn d = DistortionFn::hamming(1);
  EXPECT_EQ(code_of([&] { frontier_sweep(s, ps, d, 11); }), ErrorCode::AlphabetTooLarge);
  const auto pts = frontier_search_heuristic(s, ps, d, 3);
  EXPECT_NEAR(max_rate_point(pts).rate, std::log2(5.0), 1e-4);
}

TEST(Frontier, ResolutionGuard) {
  EXPECT_EQ(code_of([] { frontier_sweep(bundled_sdmc(), kPs, kHam, 1); }), ErrorCode::InvalidArgument);
}

// --- codes ------------------------------------------------------------------------

TEST(Code, MessageCount) {
  EXPECT_EQ(message_count(4, 0.5), 4u);
  EXPECT_EQ(message_count(1, 1.0), 2u);
  EXPECT_EQ(message_count(3, 1.0 / 3.0), 2u);
  EXPECT_EQ(message_count(2, 0.6), 2u);  // floor(2^1.2)
  EXPECT_EQ(message_count(5, 0.0), 1u);
}

TEST(Code, BundledFileLoadsAndRoundTrips) {
  const CodeSpec spec = load_code(kData + "code_n4.code");
  EXPECT_EQ(spec.n, 4u);
  EXPECT_EQ(spec.encoders.size(), 4u);
  std::istringstream again(format_code(spec));
  const CodeSpec back = parse_code(again);
  EXPECT_EQ(back.encoders, spec.encoders);
  EXPECT_EQ(back.decoder, spec.decoder);
  EXPECT_EQ(back.rate, spec.rate);
}

TEST(Code, BundledDecoderIsMaximumLikelihood) {
  const CodeSpec spec = load_code(kData + "code_n4.code");
  EXPECT_EQ(ml_decoder_table(spec.encoders, bundled_sdmc(), kPs), spec.decoder);
}

TEST(Code, ParseErrors) {
  auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return parse_code(in);
  };
  EXPECT_EQ(code_of([&] { parse("isac_code 2\n"); }), ErrorCode::CodeParse);
  EXPECT_EQ(code_of([&] { parse("isac_code 1\nn 1\nrate 1\nalphabets 2 2\nfamily table\nencoder 0 0\n"); }),
            ErrorCode::CodeParse);
  EXPECT_EQ(code_of([&] { parse("isac_code 1\nn 1\nrate 1\nalphabets 2 2\nfamily bogus\n"); }), ErrorCode::CodeParse);
  EXPECT_EQ(code_of([&] {
              parse("isac_code 1\nn 1\nrate 1\nalphabets 2 2\nfamily table\nencoder 0 0\nencoder 1 1\ndecoder 0 2\n");
            }),
            ErrorCode::CodeParse);
  EXPECT_EQ(code_of([&] { parse("isac_code 1\nn 1\nrate 1\nalphabets 2 2\nfamily repetition\nwhat 1\n"); }),
            ErrorCode::CodeParse);
  EXPECT_NO_THROW(parse("isac_code 1\nn 1\nrate 1\nalphabets 2 2\nfamily repetition\n"));
}

TEST(Code, IdentityDecoderFamilyEncodesDigits) {
  CodeSpec spec;
  spec.family = CodeSpec::Family::IdentityDecoder;
  spec.n = 3;
  spec.rate = 1.0;
  spec.input_size = 2;
  spec.output_size = 2;
  const Sdmc s = Sdmc::state_independent(Dmc::bsc(0.0), 2);
  const IsacCode code = build_code(spec, s, kPs, kHam);
  for (std::uint64_t m = 0; m < 8; ++m) {
    std::vector<Symbol> ys;
    for (std::size_t i = 0; i < 3; ++i) ys.push_back(code.encode(m, ys));
    EXPECT_EQ(code.decode(ys), m);
  }
}

// --- simulation ----------------------------------------------------------------------

TEST(Simulate, NoiselessRepetitionNeverErrs) {
  CodeSpec spec;
  spec.family = CodeSpec::Family::Repetition;
  spec.n = 1;
  spec.rate = 1.0;
  spec.input_size = 2;
  spec.output_size = 2;
  const Sdmc s = Sdmc::state_independent(Dmc::bsc(0.0), 2);
  const SimStats st = simulate_code(build_code(spec, s, kPs, kHam), s, kPs, kHam, 1.0, 20000, 3);
  EXPECT_EQ(st.decoding_errors, 0u);
  EXPECT_EQ(st.pe, 0.0);
}

TEST(Simulate, ConstantDecoderErrsThreeQuarters) {
  CodeSpec spec;
  spec.family = CodeSpec::Family::Constant;
  spec.n = 2;
  spec.rate = 1.0;
  spec.input_size = 2;
  spec.output_size = 2;
  const Sdmc s = bundled_sdmc();
  const SimStats st = simulate_code(build_code(spec, s, kPs, kHam), s, kPs, kHam, 0.5, 100000, 8);
  EXPECT_LE(st.pe_ci.low, 0.75);
  EXPECT_GE(st.pe_ci.high, 0.75);
}

TEST(Simulate, StateRevealingZeroDistortion) {
  CodeSpec spec;
  spec.family = CodeSpec::Family::Constant;
  spec.n = 5;
  spec.rate = 0.0;
  spec.input_size = 2;
  spec.output_size = 2;
  const Sdmc s = state_revealing();
  const SimStats st = simulate_code(build_code(spec, s, kPs, kHam), s, kPs, kHam, 0.0, 10000, 8);
  EXPECT_EQ(st.excess_distortions, 0u);
  EXPECT_EQ(st.mean_distortion, 0.0);
}

TEST(Simulate, WorkerCountDoesNotChangeResult) {
  const IsacCode code = bundled_code();
  const Sdmc s = bundled_sdmc();
  const SimStats ref = serial::simulate_code(code, s, kPs, kHam, 0.5, 40000, 21);
  for (int w : {1, 2, 5}) {
    const SimStats st = simulate_code(code, s, kPs, kHam, 0.5, 40000, 21, ExecPolicy{w});
    EXPECT_EQ(st.decoding_errors, ref.decoding_errors);
    EXPECT_EQ(st.excess_distortions, ref.excess_distortions);
    EXPECT_EQ(st.mean_distortion, ref.mean_distortion);
  }
}

TEST(Simulate, AgreesWithExactFailureRates) {
  const IsacCode code = bundled_code();
  const Sdmc s = bundled_sdmc();
  const SimStats st = simulate_code(code, s, kPs, kHam, 0.5, 200000, 4);
  // exact values from tests/oracles/freeze.py
  EXPECT_LE(st.pe_ci.low, 0.546675);
  EXPECT_GE(st.pe_ci.high, 0.546675);
  EXPECT_LE(st.pd_ci.low, 0.04055908);
  EXPECT_GE(st.pd_ci.high, 0.04055908);
}

// --- converse pieces -------------------------------------------------------------------

TEST(Converse, ParamsValidation) {
  EXPECT_NO_THROW(ConverseParams(0.1, 0.1, 0.5, 0.2));
  EXPECT_THROW(ConverseParams(0.6, 0.5, 0.1, 0.2), Error);
  EXPECT_THROW(ConverseParams(0.1, 0.1, 0.9, 0.2), Error);
  EXPECT_THROW(ConverseParams(0.1, 0.1, 0.0, 0.2), Error);
  EXPECT_NEAR(ConverseParams::mu(10000), 0.1, 1e-15);
}

TEST(Converse, RealizationsCoverTheMeasure) {
  const IsacCode code = bundled_code();
  const Sdmc s = bundled_sdmc();
  for (std::uint64_t m = 0; m < 4; ++m) {
    double total = 0;
    int count = 0;
    for_each_realization(code, s, kPs, m, [&](const Realization& r) {
      total += r.prob;
      ++count;
    });
    EXPECT_EQ(count, 256);
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(Converse, EnumerationGuard) {
  CodeSpec spec;
  spec.family = CodeSpec::Family::Constant;
  spec.n = 11;
  spec.rate = 0.0;
  spec.input_size = 2;
  spec.output_size = 2;
  const Sdmc s = bundled_sdmc();
  const IsacCode code = build_code(spec, s, kPs, kHam);
  EXPECT_EQ(code_of([&] { for_each_realization(code, s, kPs, 0, [](const Realization&) {}); }),
            ErrorCode::EnumerationTooLarge);
  EXPECT_EQ(code_of([&] { build_good_message_set(code, s, kPs, kHam, ConverseParams(0.1, 0.1, 0.5, 0.5), EvalMode::Exact); }),
            ErrorCode::EnumerationTooLarge);
  EXPECT_NO_THROW(
      build_good_message_set(code, s, kPs, kHam, ConverseParams(0.1, 0.1, 0.5, 0.5), EvalMode::MonteCarlo, 500));
}

TEST(Converse, PerfectCodeKeepsEveryMessage) {
  const Sdmc s = fully_revealing();
  // n = 1, two messages: x = m, decoder reads x from y = 2x + s
  std::vector<StrategyTree> enc{StrategyTree(1, 2, 4, {0}), StrategyTree(1, 2, 4, {1})};
  const IsacCode code = make_table_code(1, 1.0, enc, {0, 0, 1, 1}, optimal_estimator_map(s, kPs, kHam));
  const ConverseParams cp(0.1, 0.1, 0.5, 1.0);
  const GoodMessageSet g = build_good_message_set(code, s, kPs, kHam, cp, EvalMode::Exact);
  EXPECT_EQ(g.members.size(), 2u);
  EXPECT_EQ(g.gamma, 1.0);
  EXPECT_EQ(g.pe, 0.0);
  for (std::uint64_t m = 0; m < 2; ++m) {
    EXPECT_NEAR(restricted_measure_mass(code, s, kPs, kHam, m, cp).delta, 1.0, 1e-15);  // mu_1 = 1
  }
}

TEST(Converse, OneAlwaysFailingMessage) {
  std::vector<double> m(4 * 1 * 4, 0.0);
  for (int x = 0; x < 4; ++x) m[x * 4 + x] = 1.0;
  const Sdmc s = Sdmc::from_matrix(4, 1, 4, m);
  const Pmf ps({1.0});
  const DistortionFn d = DistortionFn::hamming(1);
  std::vector<StrategyTree> enc;
  for (Symbol x = 0; x < 4; ++x) enc.emplace_back(1, 4, 4, std::vector<Symbol>{x});
  const IsacCode code = make_table_code(1, 2.0, enc, {0, 1, 2, 0}, EstimatorMap(16, 0));
  const GoodMessageSet g = build_good_message_set(code, s, ps, d, ConverseParams(0.1, 0.1, 0.5, 1.0), EvalMode::Exact);
  EXPECT_EQ(g.fraction, 0.75);
  EXPECT_NEAR(g.gamma, 0.5, 1e-15);
  EXPECT_EQ(g.members, (std::vector<std::uint64_t>{0, 1, 2}));
  EXPECT_EQ(restricted_measure_mass(code, s, ps, d, 3, ConverseParams(0.1, 0.1, 0.5, 1.0)).delta, 0.0);
}

TEST(Converse, BundledCodeFrozen) {
  const IsacCode code = bundled_code();
  const Sdmc s = bundled_sdmc();
  const double delta[] = {0.42896304, 0.46503264, 0.28300224, 0.56848896};
  const double failure[] = {0.57103696, 0.53496736, 0.71699776, 0.43151104};
  const double max_triple[] = {0.00331776, 0.0, 0.0, 0.00614656};
  struct Case {
    double eta;
    std::size_t good;
    double gamma;
  };
  for (const Case c : {Case{0.1, 4, 0.3475176888888889}, Case{0.3, 3, 0.16109417142857144}}) {
    const ConverseParams cp(0.3, 0.2, c.eta, 0.5);
    const GoodMessageSet g = build_good_message_set(code, s, kPs, kHam, cp, EvalMode::Exact);
    EXPECT_EQ(g.members.size(), c.good);
    EXPECT_NEAR(g.gamma, c.gamma, 1e-12);
    EXPECT_GE(g.fraction, g.gamma);
    EXPECT_NEAR(g.pe, 0.546675, 1e-12);
    EXPECT_NEAR(g.pd, 0.04055908, 1e-12);
    for (std::uint64_t m = 0; m < 4; ++m) {
      EXPECT_NEAR(g.failure[m], failure[m], 1e-12);
      const RestrictedMass r = restricted_measure_mass(code, s, kPs, kHam, m, cp);
      EXPECT_NEAR(r.delta, delta[m], 1e-12);
      EXPECT_NEAR(*std::max_element(r.triple_deviation.begin(), r.triple_deviation.end()), max_triple[m], 1e-12);
      for (double v : r.triple_deviation) EXPECT_LE(v, r.triple_bound + 1e-12);
      EXPECT_FALSE(r.bound_checked);  // eta - 8/(4 n mu^2) < 0 at n = 4
    }
  }
}

TEST(Converse, MonteCarloGoodSetTracksExact) {
  const IsacCode code = bundled_code();
  const Sdmc s = bundled_sdmc();
  const ConverseParams cp(0.3, 0.2, 0.1, 0.5);
  const GoodMessageSet ex = build_good_message_set(code, s, kPs, kHam, cp, EvalMode::Exact);
  const GoodMessageSet mc = build_good_message_set(code, s, kPs, kHam, cp, EvalMode::MonteCarlo, 50000, 6);
  for (std::uint64_t m = 0; m < 4; ++m) EXPECT_NEAR(mc.failure[m], ex.failure[m], 0.01);
}

TEST(Converse, DeltaBoundCheckedWhenPositive) {
  CodeSpec spec;
  spec.family = CodeSpec::Family::Constant;
  spec.n = 8;
  spec.rate = 0.0;
  spec.input_size = 2;
  spec.output_size = 2;
  const Sdmc s = bundled_sdmc();
  const IsacCode code = build_code(spec, s, kPs, kHam);
  const ConverseParams cp(0.05, 0.05, 0.8, 1.0);
  const RestrictedMass r = restricted_measure_mass(code, s, kPs, kHam, 0, cp);
  EXPECT_TRUE(r.in_good_set);
  EXPECT_GT(r.bound_rhs, 0.0);
  EXPECT_TRUE(r.bound_checked);
  EXPECT_GE(r.delta, r.bound_rhs);
}
