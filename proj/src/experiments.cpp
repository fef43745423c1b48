#include "feedtype/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <optional>

#include <fmt/format.h>

#include "feedtype/channel.hpp"
#include "feedtype/error.hpp"
#include "feedtype/isac.hpp"
#include "feedtype/rng.hpp"
#include "feedtype/strategy_tree.hpp"
#include "feedtype/typicality.hpp"

namespace feedtype::experiments {

namespace {

constexpr double kTol = 1e-12;

std::string fmt_bool(bool v) { return v ? "true" : "false"; }

struct NamedDmc {
  std::string name;
  Dmc dmc;
};

std::vector<NamedDmc> load_dmcs(const ExperimentConfig& cfg) {
  std::vector<NamedDmc> out;
  for (const auto& path : cfg.channels) {
    try {
      out.push_back({path.stem().string(), load_channel(path.string()).as_dmc()});
    } catch (const Error& e) {
      throw Error(e.code(), fmt::format("{}: {}", path.string(), e.what()));
    }
  }
  return out;
}

std::vector<Symbol> symbols_or_all(const std::vector<std::uint32_t>& chosen, std::size_t size) {
  std::vector<Symbol> out;
  if (chosen.empty()) {
    for (Symbol s = 0; s < size; ++s) out.push_back(s);
    return out;
  }
  for (auto s : chosen) {
    if (s >= size) throw Error(ErrorCode::SymbolOutOfRange, fmt::format("symbol {} outside alphabet of size {}", s, size));
    out.push_back(s);
  }
  return out;
}

std::vector<double> mus_for(const ExperimentConfig& cfg, std::size_t n) {
  std::vector<double> out;
  if (cfg.mu_schedule) out.push_back(ConverseParams::mu(n));
  out.insert(out.end(), cfg.mu.begin(), cfg.mu.end());
  return out;
}

// One (channel, n, mu, a, b) point of a scan grid.
struct Instance {
  const NamedDmc* channel;
  std::size_t n;
  double mu;
  Symbol a;
  Symbol b;
};

std::vector<Instance> scan_grid(const ExperimentConfig& cfg, const std::vector<NamedDmc>& dmcs, bool with_mu) {
  std::vector<Instance> out;
  for (const auto& ch : dmcs) {
    const auto as = symbols_or_all(cfg.a, ch.dmc.input().size());
    const auto bs = symbols_or_all(cfg.b, ch.dmc.output().size());
    for (std::size_t n : cfg.n) {
      const std::vector<double> mus = with_mu ? mus_for(cfg, n) : std::vector<double>{1.0};
      for (double mu : mus) {
        for (Symbol a : as) {
          for (Symbol b : bs) out.push_back({&ch, n, mu, a, b});
        }
      }
    }
  }
  return out;
}

std::vector<std::string> instance_cells(const Instance& in, bool with_mu = true) {
  std::vector<std::string> row{in.channel->name, std::to_string(in.n)};
  if (with_mu) row.push_back(format_double(in.mu));
  row.push_back(std::to_string(in.a));
  row.push_back(std::to_string(in.b));
  return row;
}

void append(std::vector<std::string>& row, std::initializer_list<std::string> more) {
  row.insert(row.end(), more.begin(), more.end());
}

// ---------------------------------------------------------------------------

void lemma1_scan(const ExperimentConfig& cfg, const ExecPolicy& policy, ExperimentResult& res) {
  const auto dmcs = load_dmcs(cfg);
  OutputTable t{"lemma1_scan", {"channel", "n", "mu", "a", "b", "method", "value", "ci", "bound", "pass"}, {}};
  for (const auto& in : scan_grid(cfg, dmcs, true)) {
    const ScoreParams p(in.a, in.b, in.mu, in.channel->dmc);
    const MaxSuccess best = exhaustive_max_success(in.n, p, policy);
    const double bound = lemma1_bound(in.n, in.mu);
    const bool pass = best.value <= bound + kTol;
    res.all_pass = res.all_pass && pass;
    auto row = instance_cells(in);
    append(row, {std::string(to_string(Method::ExactEnumeration)), format_double(best.value), format_double(0.0),
                 format_double(bound), fmt_bool(pass)});
    t.rows.push_back(std::move(row));
  }
  res.tables.push_back(std::move(t));
}

void optimal_audit(const ExperimentConfig& cfg, const ExecPolicy& policy, ExperimentResult& res) {
  const auto dmcs = load_dmcs(cfg);
  OutputTable t{"optimal_audit",
                {"channel", "n", "mu", "a", "b", "optimal", "exhaustive", "abs_diff", "equal"},
                {}};
  for (const auto& in : scan_grid(cfg, dmcs, true)) {
    const ScoreParams p(in.a, in.b, in.mu, in.channel->dmc);
    const double opt = success_probability(optimal_tree(in.n, p), p);
    const double best = exhaustive_max_success(in.n, p, policy).value;
    const double diff = std::abs(opt - best);
    const bool pass = diff <= kTol;
    res.all_pass = res.all_pass && pass;
    auto row = instance_cells(in);
    append(row, {format_double(opt), format_double(best), format_double(diff), fmt_bool(pass)});
    t.rows.push_back(std::move(row));
  }
  res.tables.push_back(std::move(t));
}

struct TreeSurgery {
  std::uint64_t sites = 0;
  double max_identity_err = 0.0;
  std::uint64_t steps = 0;
  double min_step_gain = 0.0;
  bool terminated = true;
  bool ok = true;
};

TreeSurgery audit_tree(const StrategyTree& tree, const ScoreParams& p) {
  TreeSurgery r;
  const double before = success_probability(tree, p);
  for (std::size_t node : surgery_sites(tree, p.a())) {
    const double after = expected_replacement_success(SurgerySite(tree, node, p.a()), p);
    r.max_identity_err = std::max(r.max_identity_err, std::abs(after - before));
    ++r.sites;
  }
  StrategyTree cur = tree;
  r.min_step_gain = 0.0;
  bool first = true;
  while (!is_well_ordered(cur, p.a())) {
    if (r.steps >= tree.node_count()) {
      r.terminated = false;
      break;
    }
    try {
      WellOrderStep step = well_order_step_detailed(cur, p);
      const double gain = step.after - step.before;
      r.min_step_gain = first ? gain : std::min(r.min_step_gain, gain);
      first = false;
      cur = std::move(step.tree);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::BoundViolated) throw;
      r.min_step_gain = std::min(r.min_step_gain, -1.0);
      r.ok = false;
      break;
    }
    ++r.steps;
  }
  r.ok = r.ok && r.terminated && r.max_identity_err <= kTol && r.min_step_gain >= -kTol;
  return r;
}

void surgery_audit(const ExperimentConfig& cfg, const ExecPolicy& policy, ExperimentResult& res) {
  const auto dmcs = load_dmcs(cfg);
  OutputTable t{"surgery_audit",
                {"channel", "n", "mu", "a", "b", "trees", "sites", "max_identity_err", "max_steps", "node_count",
                 "min_step_gain", "pass"},
                {}};
  for (const auto& in : scan_grid(cfg, dmcs, true)) {
    const ScoreParams p(in.a, in.b, in.mu, in.channel->dmc);
    const TreeEnumerator trees = enumerate_trees(in.n, in.channel->dmc.input().size(), in.channel->dmc.output().size());
    std::vector<TreeSurgery> per(trees.size());
    const auto count = static_cast<std::int64_t>(trees.size());
#pragma omp parallel for schedule(dynamic, 16) num_threads(policy.resolved())
    for (std::int64_t i = 0; i < count; ++i) {
      per[static_cast<std::size_t>(i)] = audit_tree(trees.tree_at(static_cast<std::uint64_t>(i)), p);
    }
    TreeSurgery total;
    std::uint64_t max_steps = 0;
    bool first = true;
    for (const auto& r : per) {
      total.sites += r.sites;
      total.max_identity_err = std::max(total.max_identity_err, r.max_identity_err);
      max_steps = std::max(max_steps, r.steps);
      if (r.steps > 0) {
        total.min_step_gain = first ? r.min_step_gain : std::min(total.min_step_gain, r.min_step_gain);
        first = false;
      }
      total.ok = total.ok && r.ok;
    }
    res.all_pass = res.all_pass && total.ok;
    auto row = instance_cells(in);
    append(row, {std::to_string(trees.size()), std::to_string(total.sites), format_double(total.max_identity_err),
                 std::to_string(max_steps), std::to_string(trees.node_count()), format_double(total.min_step_gain),
                 fmt_bool(total.ok)});
    t.rows.push_back(std::move(row));
  }
  res.tables.push_back(std::move(t));
}

void martingale_audit(const ExperimentConfig& cfg, std::uint64_t seed, const ExecPolicy& policy,
                      ExperimentResult& res) {
  const auto dmcs = load_dmcs(cfg);
  OutputTable t{"martingale_audit", {"channel", "n", "a", "b", "mode", "trees", "max_bias", "pass"}, {}};
  std::uint64_t instance = 0;
  for (const auto& in : scan_grid(cfg, dmcs, false)) {
    const ScoreParams p(in.a, in.b, 1.0, in.channel->dmc);
    const std::size_t nx = in.channel->dmc.input().size();
    const std::size_t ny = in.channel->dmc.output().size();
    const bool exhaustive = in.n <= cfg.exhaustive_max_n;
    const std::optional<TreeEnumerator> trees =
        exhaustive ? std::optional<TreeEnumerator>(enumerate_trees(in.n, nx, ny)) : std::nullopt;
    const std::uint64_t count = exhaustive ? trees->size() : cfg.random_trees;
    const auto node_count = static_cast<std::size_t>(tree_node_count(in.n, ny));
    const std::uint64_t inst_seed = RngStream(seed, instance++).next_u64();
    std::vector<double> bias(count, 0.0);
    const auto total = static_cast<std::int64_t>(count);
#pragma omp parallel for schedule(static) num_threads(policy.resolved())
    for (std::int64_t i = 0; i < total; ++i) {
      const auto k = static_cast<std::uint64_t>(i);
      StrategyTree tree = [&] {
        if (exhaustive) return trees->tree_at(k);
        RngStream rng(inst_seed, k);
        std::vector<Symbol> labels(node_count);
        for (auto& l : labels) l = static_cast<Symbol>(rng.next_u64() % nx);
        return StrategyTree(in.n, nx, ny, std::move(labels));
      }();
      bias[static_cast<std::size_t>(i)] = martingale_check(tree, p).max_abs_step_bias;
    }
    const double max_bias = bias.empty() ? 0.0 : *std::max_element(bias.begin(), bias.end());
    const bool pass = max_bias <= kTol;
    res.all_pass = res.all_pass && pass;
    auto row = instance_cells(in, false);
    append(row, {exhaustive ? "exhaustive" : "random", std::to_string(count), format_double(max_bias), fmt_bool(pass)});
    t.rows.push_back(std::move(row));
  }
  res.tables.push_back(std::move(t));
}

void mc_deviation(const ExperimentConfig& cfg, std::uint64_t seed, const ExecPolicy& policy, ExperimentResult& res) {
  const auto dmcs = load_dmcs(cfg);
  OutputTable t{"mc_deviation",
                {"channel", "n", "mu", "a", "b", "strategy", "method", "value", "ci_low", "ci_high", "bound",
                 "trials", "pass"},
                {}};
  std::uint64_t instance = 0;
  for (const auto& in : scan_grid(cfg, dmcs, true)) {
    const ScoreParams p(in.a, in.b, in.mu, in.channel->dmc);
    const auto strategy =
        cfg.strategy == "optimal" ? make_threshold_strategy(in.n, p) : make_constant_strategy(in.a);
    const std::uint64_t inst_seed = RngStream(seed, instance++).next_u64();
    const DeviationReport r = monte_carlo_deviation(*strategy, in.n, p, cfg.trials, inst_seed, policy);
    const bool pass = r.passed();
    res.all_pass = res.all_pass && pass;
    auto row = instance_cells(in);
    append(row, {cfg.strategy, std::string(to_string(r.method)), format_double(r.value), format_double(r.ci_low),
                 format_double(r.ci_high), format_double(r.bound), std::to_string(r.trials), fmt_bool(pass)});
    t.rows.push_back(std::move(row));
  }
  res.tables.push_back(std::move(t));
}

// ---------------------------------------------------------------------------

struct IsacSetup {
  Sdmc sdmc;
  Pmf ps;
  DistortionFn d;
};

IsacSetup load_isac(const ExperimentConfig& cfg) {
  if (cfg.channels.size() != 1) throw Error(ErrorCode::ConfigParse, "ISAC experiments take exactly one channel file");
  Sdmc sdmc = load_channel(cfg.channels.front().string()).as_sdmc();
  Pmf ps(cfg.state_pmf);
  if (ps.size() != sdmc.state().size()) throw Error(ErrorCode::ConfigParse, "state_pmf length differs from |S|");
  DistortionFn d = cfg.distortion ? load_distortion(cfg.distortion->string()) : DistortionFn::hamming(ps.size());
  if (d.state_size() != sdmc.state().size()) throw Error(ErrorCode::ConfigParse, "distortion columns differ from |S|");
  return {std::move(sdmc), std::move(ps), std::move(d)};
}

OutputTable frontier_table(const std::string& name, std::size_t nx, const std::vector<FrontierPoint>& pts) {
  OutputTable t{name, {}, {}};
  for (std::size_t x = 0; x < nx; ++x) t.header.push_back(fmt::format("px{}", x));
  t.header.push_back("R_bits");
  t.header.push_back("D");
  for (const auto& p : pts) {
    std::vector<std::string> row;
    for (double w : p.px) row.push_back(format_double(w));
    row.push_back(format_double(p.rate));
    row.push_back(format_double(p.distortion));
    t.rows.push_back(std::move(row));
  }
  return t;
}

void isac_frontier(const ExperimentConfig& cfg, const ExecPolicy& policy, ExperimentResult& res) {
  const IsacSetup s = load_isac(cfg);
  const std::size_t nx = s.sdmc.input().size();
  const auto pts = nx <= 4 ? frontier_sweep(s.sdmc, s.ps, s.d, cfg.resolution, policy)
                           : frontier_search_heuristic(s.sdmc, s.ps, s.d, std::min<std::size_t>(cfg.resolution, 5));
  for (const auto& p : pts) {
    res.all_pass = res.all_pass && p.rate >= 0.0 && p.distortion >= 0.0;
  }
  res.tables.push_back(frontier_table("frontier", nx, pts));
  res.tables.push_back(frontier_table("pareto", nx, pareto_front(pts)));
}

void isac_simulate(const ExperimentConfig& cfg, std::uint64_t seed, const ExecPolicy& policy, ExperimentResult& res) {
  const IsacSetup s = load_isac(cfg);
  const IsacCode code = build_code(load_code(cfg.code->string()), s.sdmc, s.ps, s.d);
  const SimStats st = simulate_code(code, s.sdmc, s.ps, s.d, cfg.max_distortion, cfg.trials, seed, policy);
  OutputTable t{"isac_simulate",
                {"n", "rate", "messages", "D", "trials", "pe", "pe_ci_low", "pe_ci_high", "pd", "pd_ci_low",
                 "pd_ci_high", "mean_distortion"},
                {}};
  t.rows.push_back({std::to_string(code.n), format_double(code.rate), std::to_string(code.messages),
                    format_double(cfg.max_distortion), std::to_string(st.trials), format_double(st.pe),
                    format_double(st.pe_ci.low), format_double(st.pe_ci.high), format_double(st.pd),
                    format_double(st.pd_ci.low), format_double(st.pd_ci.high), format_double(st.mean_distortion)});
  res.tables.push_back(std::move(t));
}

void converse_demo(const ExperimentConfig& cfg, const ExecPolicy& policy, ExperimentResult& res) {
  const IsacSetup s = load_isac(cfg);
  const IsacCode code = build_code(load_code(cfg.code->string()), s.sdmc, s.ps, s.d);
  OutputTable summary{"converse_summary",
                      {"eta", "n", "messages", "good", "fraction", "gamma", "pe", "pd", "pass"},
                      {}};
  OutputTable per{"converse_messages",
                  {"eta", "m", "failure", "in_good_set", "delta_nm", "bound_rhs", "bound_checked", "max_triple_dev",
                   "triple_bound", "pass"},
                  {}};
  for (double eta : cfg.eta) {
    const ConverseParams cp(cfg.eps, cfg.delta, eta, cfg.max_distortion);
    bool pass = true;
    GoodMessageSet g;
    try {
      g = build_good_message_set(code, s.sdmc, s.ps, s.d, cp, EvalMode::Exact, 0, 0, policy);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::BoundViolated) throw;
      pass = false;
    }
    res.all_pass = res.all_pass && pass;
    summary.rows.push_back({format_double(eta), std::to_string(code.n), std::to_string(code.messages),
                            std::to_string(g.members.size()), format_double(g.fraction), format_double(g.gamma),
                            format_double(g.pe), format_double(g.pd), fmt_bool(pass)});
    for (std::uint64_t m = 0; m < code.messages; ++m) {
      bool ok = true;
      RestrictedMass r;
      try {
        r = restricted_measure_mass(code, s.sdmc, s.ps, s.d, m, cp);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::BoundViolated) throw;
        ok = false;
      }
      res.all_pass = res.all_pass && ok;
      const double max_dev =
          r.triple_deviation.empty() ? 0.0 : *std::max_element(r.triple_deviation.begin(), r.triple_deviation.end());
      per.rows.push_back({format_double(eta), std::to_string(m),
                          m < g.failure.size() ? format_double(g.failure[m]) : "", fmt_bool(r.in_good_set),
                          format_double(r.delta), format_double(r.bound_rhs), fmt_bool(r.bound_checked),
                          format_double(max_dev), format_double(r.triple_bound), fmt_bool(ok)});
    }
  }
  res.tables.push_back(std::move(summary));
  res.tables.push_back(std::move(per));
}

}  // namespace

std::string format_double(double v) {
  if (v == 0.0) return "0";  // folds -0
  return fmt::format("{:.17g}", v);
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, std::uint64_t seed, const ExecPolicy& policy) {
  ExperimentResult res;
  const auto start = std::chrono::steady_clock::now();
  switch (cfg.kind) {
    case Kind::Lemma1Scan: lemma1_scan(cfg, policy, res); break;
    case Kind::OptimalAudit: optimal_audit(cfg, policy, res); break;
    case Kind::SurgeryAudit: surgery_audit(cfg, policy, res); break;
    case Kind::MartingaleAudit: martingale_audit(cfg, seed, policy, res); break;
    case Kind::McDeviation: mc_deviation(cfg, seed, policy, res); break;
    case Kind::IsacFrontier: isac_frontier(cfg, policy, res); break;
    case Kind::IsacSimulate: isac_simulate(cfg, seed, policy, res); break;
    case Kind::ConverseDemo: converse_demo(cfg, policy, res); break;
  }
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  res.stages.push_back({std::string(to_string(cfg.kind)), elapsed.count()});
  return res;
}

std::string to_csv(const OutputTable& table) {
  auto field = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + '"';
  };
  auto line = [&](const std::vector<std::string>& cells) {
    std::string out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += field(cells[i]);
    }
    return out + '\n';
  };
  std::string out = "# schema=1\n" + line(table.header);
  for (const auto& row : table.rows) out += line(row);
  return out;
}

}  // namespace feedtype::experiments
