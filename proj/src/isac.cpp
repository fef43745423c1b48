#include "feedtype/isac.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <fmt/format.h>

#include "feedtype/error.hpp"
#include "feedtype/rng.hpp"

namespace feedtype {

DistortionFn::DistortionFn(std::size_t estimate_size, std::size_t state_size, std::vector<double> table)
    : estimate_size_(estimate_size), state_size_(state_size), table_(std::move(table)) {
  if (estimate_size_ == 0 || state_size_ == 0) throw Error(ErrorCode::EmptyInput, "empty distortion alphabet");
  if (table_.size() != estimate_size_ * state_size_) {
    throw Error(ErrorCode::LengthMismatch, "distortion table needs |Shat|*|S| entries");
  }
  for (double v : table_) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw ValueError(ErrorCode::InvalidArgument, fmt::format("distortion entry {} not finite and >= 0", v), v);
    }
  }
}

DistortionFn DistortionFn::hamming(std::size_t size) {
  std::vector<double> t(size * size, 1.0);
  for (std::size_t i = 0; i < size; ++i) t[i * size + i] = 0.0;
  return DistortionFn(size, size, std::move(t));
}

DistortionFn parse_distortion(std::istream& in) {
  std::string line;
  std::vector<double> values;
  std::size_t shat = 0, s = 0;
  bool header = false;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    std::istringstream ls(hash == std::string::npos ? line : line.substr(0, hash));
    std::string tok;
    if (!header) {
      if (!(ls >> tok)) continue;
      if (tok != "dist" || !(ls >> shat >> s) || shat == 0 || s == 0) {
        throw Error(ErrorCode::ChannelParse, "expected header 'dist |Shat| |S|'");
      }
      header = true;
      continue;
    }
    while (ls >> tok) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw Error(ErrorCode::ChannelParse, "bad distortion entry '" + tok + "'");
      }
    }
  }
  if (!header) throw Error(ErrorCode::ChannelParse, "missing distortion header");
  if (values.size() != shat * s) {
    throw Error(ErrorCode::ChannelParse, fmt::format("expected {} distortion entries, found {}", shat * s, values.size()));
  }
  return DistortionFn(shat, s, std::move(values));
}

DistortionFn load_distortion(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open distortion file " + path);
  return parse_distortion(in);
}

namespace {

void check_state_alphabets(const Sdmc& sdmc, const Pmf& ps) {
  if (ps.size() != sdmc.state().size()) throw Error(ErrorCode::LengthMismatch, "P_S size differs from |S|");
}

void check_distortion(const Sdmc& sdmc, const DistortionFn& d) {
  if (d.state_size() != sdmc.state().size()) {
    throw Error(ErrorCode::LengthMismatch, "distortion columns differ from |S|");
  }
}

}  // namespace

Pmf posterior_state(const Sdmc& sdmc, const Pmf& ps, Symbol x, Symbol y) {
  check_state_alphabets(sdmc, ps);
  if (!sdmc.output().contains(y)) throw Error(ErrorCode::SymbolOutOfRange, "output outside |Y|");
  std::vector<double> w(sdmc.state().size());
  double total = 0.0;
  for (Symbol s = 0; s < w.size(); ++s) {
    w[s] = ps[s] * sdmc.prob(y, x, s);
    total += w[s];
  }
  if (!(total > 0.0)) {
    throw Error(ErrorCode::ZeroLikelihood, fmt::format("y={} impossible under x={} for every state", y, x));
  }
  for (double& v : w) v /= total;
  return Pmf(std::move(w));
}

Symbol optimal_estimate(const Sdmc& sdmc, const Pmf& ps, const DistortionFn& d, Symbol x, Symbol y) {
  check_distortion(sdmc, d);
  const Pmf post = posterior_state(sdmc, ps, x, y);
  Symbol best = 0;
  double best_cost = std::numeric_limits<double>::infinity();
  for (Symbol shat = 0; shat < d.estimate_size(); ++shat) {
    double cost = 0.0;
    for (Symbol s = 0; s < post.size(); ++s) cost += post[s] * d(shat, s);
    if (cost < best_cost) {
      best_cost = cost;
      best = shat;
    }
  }
  return best;
}

EstimatorMap optimal_estimator_map(const Sdmc& sdmc, const Pmf& ps, const DistortionFn& d) {
  const std::size_t ny = sdmc.output().size();
  EstimatorMap map(sdmc.input().size() * ny, 0);
  for (Symbol x = 0; x < sdmc.input().size(); ++x) {
    for (Symbol y = 0; y < ny; ++y) {
      try {
        map[x * ny + y] = optimal_estimate(sdmc, ps, d, x, y);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::ZeroLikelihood) throw;
      }
    }
  }
  return map;
}

double expected_distortion(const Pmf& px, const Sdmc& sdmc, const Pmf& ps, const DistortionFn& d,
                           const EstimatorMap& estimator) {
  check_state_alphabets(sdmc, ps);
  check_distortion(sdmc, d);
  if (px.size() != sdmc.input().size()) throw Error(ErrorCode::LengthMismatch, "P_X size differs from |X|");
  const std::size_t ny = sdmc.output().size();
  if (estimator.size() != px.size() * ny) throw Error(ErrorCode::LengthMismatch, "estimator map needs |X||Y| cells");
  double total = 0.0;
  for (Symbol x = 0; x < px.size(); ++x) {
    for (Symbol s = 0; s < ps.size(); ++s) {
      for (Symbol y = 0; y < ny; ++y) {
        const double w = px[x] * ps[s] * sdmc.prob(y, x, s);
        if (w == 0.0) continue;
        const Symbol shat = estimator[x * ny + y];
        if (shat >= d.estimate_size()) throw Error(ErrorCode::SymbolOutOfRange, "estimate outside |Shat|");
        total += w * d(shat, s);
      }
    }
  }
  return total;
}

double expected_distortion(const Pmf& px, const Sdmc& sdmc, const Pmf& ps, const DistortionFn& d) {
  return expected_distortion(px, sdmc, ps, d, optimal_estimator_map(sdmc, ps, d));
}

double mutual_information(const Pmf& px, const Sdmc& sdmc, const Pmf& ps) {
  if (px.size() != sdmc.input().size()) throw Error(ErrorCode::LengthMismatch, "P_X size differs from |X|");
  const Dmc channel = sdmc.marginal(ps);
  const std::size_t ny = channel.output().size();
  std::vector<double> py(ny, 0.0);
  for (Symbol x = 0; x < px.size(); ++x) {
    for (Symbol y = 0; y < ny; ++y) py[y] += px[x] * channel.prob(y, x);
  }
  double info = 0.0;
  for (Symbol x = 0; x < px.size(); ++x) {
    if (px[x] == 0.0) continue;
    for (Symbol y = 0; y < ny; ++y) {
      const double pyx = channel.prob(y, x);
      if (pyx == 0.0) continue;
      info += px[x] * pyx * std::log2(pyx / py[y]);
    }
  }
  return std::max(0.0, info);
}

// ---------------------------------------------------------------------------

namespace {

// All compositions of `total` into `parts` nonnegative parts, lexicographic.
std::vector<std::vector<std::size_t>> compositions(std::size_t total, std::size_t parts) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> cur(parts, 0);
  auto rec = [&](auto&& self, std::size_t i, std::size_t left) -> void {
    if (i + 1 == parts) {
      cur[i] = left;
      out.push_back(cur);
      return;
    }
    for (std::size_t k = 0; k <= left; ++k) {
      cur[i] = k;
      self(self, i + 1, left - k);
    }
  };
  rec(rec, 0, total);
  return out;
}

Pmf grid_pmf(const std::vector<std::size_t>& comp, std::size_t steps) {
  std::vector<double> w(comp.size());
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < comp.size(); ++i) {
    w[i] = static_cast<double>(comp[i]) / static_cast<double>(steps);
    acc += w[i];
  }
  // last coordinate closes the sum exactly
  w.back() = comp.back() == 0 ? 0.0 : std::max(0.0, 1.0 - acc);
  return Pmf(std::move(w));
}

FrontierPoint evaluate_point(const Pmf& px, const Sdmc& sdmc, const Pmf& ps, const DistortionFn& d,
                             const EstimatorMap& estimator) {
  return {std::vector<double>(px.weights().begin(), px.weights().end()), mutual_information(px, sdmc, ps),
          expected_distortion(px, sdmc, ps, d, estimator)};
}

void sort_points(std::vector<FrontierPoint>& pts) {
  std::sort(pts.begin(), pts.end(), [](const FrontierPoint& l, const FrontierPoint& r) {
    if (l.distortion != r.distortion) return l.distortion < r.distortion;
    if (l.rate != r.rate) return l.rate > r.rate;
    return l.px < r.px;
  });
}

void check_frontier_args(const Sdmc& sdmc, std::size_t resolution) {
  if (resolution < 2) throw Error(ErrorCode::InvalidArgument, "frontier resolution must be >= 2");
  if (sdmc.input().size() > 4) {
    throw Error(ErrorCode::AlphabetTooLarge,
                fmt::format("simplex grid limited to |X| <= 4 (got {}); use the heuristic search",
                            sdmc.input().size()));
  }
}

}  // namespace

std::vector<FrontierPoint> frontier_sweep(const Sdmc& sdmc, const Pmf& ps, const DistortionFn& d,
                                          std::size_t resolution, const ExecPolicy& policy) {
  check_frontier_args(sdmc, resolution);
  const EstimatorMap estimator = optimal_estimator_map(sdmc, ps, d);
  const auto comps = compositions(resolution - 1, sdmc.input().size());
  std::vector<FrontierPoint> pts(comps.size());
  const auto count = static_cast<std::int64_t>(comps.size());
#pragma omp parallel for schedule(static) num_threads(policy.resolved())
  for (std::int64_t i = 0; i < count; ++i) {
    const auto k = static_cast<std::size_t>(i);
    pts[k] = evaluate_point(grid_pmf(comps[k], resolution - 1), sdmc, ps, d, estimator);
  }
  sort_points(pts);
  return pts;
}

namespace serial {

std::vector<FrontierPoint> frontier_sweep(const Sdmc& sdmc, const Pmf& ps, const DistortionFn& d,
                                          std::size_t resolution) {
  check_frontier_args(sdmc, resolution);
  const EstimatorMap estimator = optimal_estimator_map(sdmc, ps, d);
  std::vector<FrontierPoint> pts;
  for (const auto& comp : compositions(resolution - 1, sdmc.input().size())) {
    pts.push_back(evaluate_point(grid_pmf(comp, resolution - 1), sdmc, ps, d, estimator));
  }
  sort_points(pts);
  return pts;
}

}  // namespace serial

std::vector<FrontierPoint> frontier_search_heuristic(const Sdmc& sdmc, const Pmf& ps, const DistortionFn& d,
                                                     std::size_t seed_resolution) {
  if (seed_resolution < 2) throw Error(ErrorCode::InvalidArgument, "seed resolution must be >= 2");
  const EstimatorMap estimator = optimal_estimator_map(sdmc, ps, d);
  const std::size_t nx = sdmc.input().size();
  std::vector<FrontierPoint> pts;
  for (const auto& comp : compositions(seed_resolution - 1, nx)) {
    pts.push_back(evaluate_point(grid_pmf(comp, seed_resolution - 1), sdmc, ps, d, estimator));
  }
  const std::vector<FrontierPoint> seeds = pts;
  const double lambdas[] = {0.0, 0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 64.0};
  for (double lambda : lambdas) {
    auto objective = [&](const FrontierPoint& fp) { return fp.rate - lambda * fp.distortion; };
    const FrontierPoint* start = &seeds.front();
    for (const auto& s : seeds) {
      if (objective(s) > objective(*start)) start = &s;
    }
    std::vector<double> w = start->px;
    FrontierPoint current = *start;
    for (double step = 1.0 / static_cast<double>(seed_resolution - 1); step > 1e-7; step *= 0.5) {
      bool improved = true;
      while (improved) {
        improved = false;
        for (std::size_t i = 0; i < nx; ++i) {
          for (std::size_t j = 0; j < nx; ++j) {
            if (i == j || w[j] <= 0.0) continue;
            std::vector<double> cand = w;
            const double moved = std::min(step, cand[j]);
            cand[j] -= moved;
            cand[i] += moved;
            const double total = std::accumulate(cand.begin(), cand.end(), 0.0);
            for (double& c : cand) c /= total;
            const FrontierPoint fp = evaluate_point(Pmf(cand), sdmc, ps, d, estimator);
            if (objective(fp) > objective(current) + 1e-15) {
              current = fp;
              w = cand;
              improved = true;
            }
          }
        }
      }
    }
    pts.push_back(current);
  }
  sort_points(pts);
  return pts;
}

const FrontierPoint& max_rate_point(std::span<const FrontierPoint> points) {
  if (points.empty()) throw Error(ErrorCode::EmptyInput, "no frontier points");
  const FrontierPoint* best = &points.front();
  for (const auto& p : points) {
    if (p.rate > best->rate) best = &p;
  }
  return *best;
}

const FrontierPoint& min_distortion_point(std::span<const FrontierPoint> points) {
  if (points.empty()) throw Error(ErrorCode::EmptyInput, "no frontier points");
  const FrontierPoint* best = &points.front();
  for (const auto& p : points) {
    if (p.distortion < best->distortion || (p.distortion == best->distortion && p.rate > best->rate)) best = &p;
  }
  return *best;
}

std::vector<FrontierPoint> pareto_front(std::span<const FrontierPoint> points) {
  std::vector<FrontierPoint> sorted(points.begin(), points.end());
  sort_points(sorted);
  std::vector<FrontierPoint> out;
  double best_rate = -1.0;
  for (const auto& p : sorted) {
    if (p.rate > best_rate) {
      out.push_back(p);
      best_rate = p.rate;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

std::uint64_t message_count(std::size_t n, double rate) {
  if (!(rate >= 0.0)) throw Error(ErrorCode::InvalidArgument, "rate must be >= 0");
  double e = static_cast<double>(n) * rate;
  const double r = std::round(e);
  if (std::abs(e - r) < 1e-9) e = r;
  if (e >= 63.0) throw Error(ErrorCode::InvalidArgument, "2^{nR} exceeds 2^63");
  return static_cast<std::uint64_t>(std::floor(std::exp2(e)));
}

namespace {

std::uint64_t ordinal_of(std::span<const Symbol> ys, std::size_t base) {
  std::uint64_t v = 0;
  for (Symbol y : ys) v = v * base + y;
  return v;
}

}  // namespace

IsacCode make_per_letter_estimator(IsacCode code, EstimatorMap estimator) {
  if (estimator.size() != code.input_size * code.output_size) {
    throw Error(ErrorCode::LengthMismatch, "estimator map needs |X||Y| cells");
  }
  const std::size_t ny = code.output_size;
  code.estimate = [est = std::move(estimator), ny](std::span<const Symbol> xs, std::span<const Symbol> ys,
                                                   std::span<Symbol> shat) {
    for (std::size_t i = 0; i < xs.size(); ++i) shat[i] = est[xs[i] * ny + ys[i]];
  };
  return code;
}

IsacCode make_table_code(std::size_t n, double rate, std::vector<StrategyTree> encoders,
                         std::vector<std::uint64_t> decoder, EstimatorMap estimator) {
  const std::uint64_t messages = message_count(n, rate);
  if (encoders.size() != messages) {
    throw Error(ErrorCode::CodeParse, fmt::format("need {} encoder trees, got {}", messages, encoders.size()));
  }
  const std::size_t nx = encoders.front().input_size();
  const std::size_t ny = encoders.front().output_size();
  for (const auto& t : encoders) {
    if (t.depth() != n || t.input_size() != nx || t.output_size() != ny) {
      throw Error(ErrorCode::CodeParse, "encoder trees must share depth n and alphabets");
    }
  }
  if (decoder.size() != checked_leaf_count(n, ny)) throw Error(ErrorCode::CodeParse, "decoder needs |Y|^n entries");
  for (auto v : decoder) {
    if (v >= messages) throw Error(ErrorCode::CodeParse, "decoder output outside the message set");
  }
  IsacCode code;
  code.n = n;
  code.rate = rate;
  code.messages = messages;
  code.input_size = nx;
  code.output_size = ny;
  code.encode = [enc = std::move(encoders)](std::uint64_t m, std::span<const Symbol> past) {
    return enc[m].label_at(past);
  };
  code.decode = [dec = std::move(decoder), ny](std::span<const Symbol> ys) { return dec[ordinal_of(ys, ny)]; };
  return make_per_letter_estimator(std::move(code), std::move(estimator));
}

std::vector<std::uint64_t> ml_decoder_table(std::span<const StrategyTree> encoders, const Sdmc& sdmc,
                                            const Pmf& ps) {
  if (encoders.empty()) throw Error(ErrorCode::EmptyInput, "no encoders");
  const Dmc channel = sdmc.marginal(ps);
  std::vector<std::vector<double>> lik;
  for (const auto& t : encoders) lik.push_back(leaf_masses(t, channel));
  std::vector<std::uint64_t> table(lik.front().size(), 0);
  for (std::size_t leaf = 0; leaf < table.size(); ++leaf) {
    for (std::uint64_t m = 1; m < lik.size(); ++m) {
      // relative slack so rounding noise cannot break exact ties away from the smallest index
      if (lik[m][leaf] > lik[table[leaf]][leaf] * (1.0 + 1e-12)) table[leaf] = m;
    }
  }
  return table;
}

IsacCode build_code(const CodeSpec& spec, const Sdmc& sdmc, const Pmf& ps, const DistortionFn& d) {
  if (spec.input_size != sdmc.input().size() || spec.output_size != sdmc.output().size()) {
    throw Error(ErrorCode::CodeParse, "code alphabets differ from the channel");
  }
  EstimatorMap estimator = spec.estimator ? *spec.estimator : optimal_estimator_map(sdmc, ps, d);
  for (Symbol v : estimator) {
    if (v >= d.estimate_size()) throw Error(ErrorCode::CodeParse, "estimator output outside |Shat|");
  }
  if (spec.family == CodeSpec::Family::Table) {
    return make_table_code(spec.n, spec.rate, spec.encoders, spec.decoder, std::move(estimator));
  }
  IsacCode code;
  code.n = spec.n;
  code.rate = spec.rate;
  code.messages = message_count(spec.n, spec.rate);
  code.input_size = spec.input_size;
  code.output_size = spec.output_size;
  const std::uint64_t messages = code.messages;
  const std::size_t nx = spec.input_size;
  const std::size_t ny = spec.output_size;
  switch (spec.family) {
    case CodeSpec::Family::Constant: {
      const Symbol x = spec.constant_symbol;
      if (x >= nx) throw Error(ErrorCode::CodeParse, "constant symbol outside |X|");
      code.encode = [x](std::uint64_t, std::span<const Symbol>) { return x; };
      code.decode = [](std::span<const Symbol>) { return std::uint64_t{0}; };
      break;
    }
    case CodeSpec::Family::Repetition: {
      if (messages > nx) throw Error(ErrorCode::CodeParse, "repetition code needs 2^{nR} <= |X|");
      code.encode = [](std::uint64_t m, std::span<const Symbol>) { return static_cast<Symbol>(m); };
      // plurality over outputs read as message indices; ties to the smallest
      code.decode = [messages, ny](std::span<const Symbol> ys) {
        std::vector<std::size_t> votes(ny, 0);
        for (Symbol y : ys) ++votes[y];
        std::uint64_t best = 0;
        std::size_t best_votes = 0;
        for (std::uint64_t m = 0; m < std::min<std::uint64_t>(messages, ny); ++m) {
          if (votes[m] > best_votes) {
            best_votes = votes[m];
            best = m;
          }
        }
        return best;
      };
      break;
    }
    case CodeSpec::Family::IdentityDecoder: {
      bool overflow = false;
      std::uint64_t cap = 1;
      for (std::size_t i = 0; i < spec.n && !overflow; ++i) {
        if (cap > messages) break;
        cap *= nx;
      }
      if (cap < messages) throw Error(ErrorCode::CodeParse, "identity-decoder code needs |X|^n >= 2^{nR}");
      const std::size_t n = spec.n;
      // x_i is digit i (most significant first) of m in base |X|
      code.encode = [n, nx](std::uint64_t m, std::span<const Symbol> past) {
        std::uint64_t v = m;
        for (std::size_t i = past.size() + 1; i < n; ++i) v /= nx;
        return static_cast<Symbol>(v % nx);
      };
      code.decode = [nx, messages](std::span<const Symbol> ys) {
        std::uint64_t v = 0;
        for (Symbol y : ys) {
          if (y >= nx) return std::uint64_t{0};
          v = v * nx + y;
        }
        return v < messages ? v : std::uint64_t{0};
      };
      break;
    }
    case CodeSpec::Family::Table:
      break;
  }
  return make_per_letter_estimator(std::move(code), std::move(estimator));
}

// ---------------------------------------------------------------------------

namespace {

std::string_view family_name(CodeSpec::Family f) {
  switch (f) {
    case CodeSpec::Family::Table: return "table";
    case CodeSpec::Family::Constant: return "constant";
    case CodeSpec::Family::Repetition: return "repetition";
    case CodeSpec::Family::IdentityDecoder: return "identity-decoder";
  }
  return "table";
}

template <typename T>
std::vector<T> read_all(std::istringstream& ls, const std::string& what, std::size_t line_no) {
  std::vector<T> out;
  std::string tok;
  while (ls >> tok) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(tok, &used);
      if (used != tok.size() || v < 0) throw std::invalid_argument(tok);
      out.push_back(static_cast<T>(v));
    } catch (const std::exception&) {
      throw Error(ErrorCode::CodeParse, fmt::format("line {}: bad {} entry '{}'", line_no, what, tok));
    }
  }
  return out;
}

}  // namespace

CodeSpec parse_code(std::istream& in) {
  CodeSpec spec;
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  bool have_n = false, have_rate = false, have_alphabets = false;
  std::vector<std::pair<std::uint64_t, std::vector<Symbol>>> raw_encoders;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    std::istringstream ls(hash == std::string::npos ? line : line.substr(0, hash));
    std::string key;
    if (!(ls >> key)) continue;
    if (!header) {
      int version = 0;
      if (key != "isac_code" || !(ls >> version) || version != 1) {
        throw Error(ErrorCode::CodeParse, "expected header 'isac_code 1'");
      }
      header = true;
      continue;
    }
    if (key == "n") {
      have_n = static_cast<bool>(ls >> spec.n) && spec.n > 0;
      if (!have_n) throw Error(ErrorCode::CodeParse, fmt::format("line {}: bad n", line_no));
    } else if (key == "rate") {
      have_rate = static_cast<bool>(ls >> spec.rate) && spec.rate >= 0.0;
      if (!have_rate) throw Error(ErrorCode::CodeParse, fmt::format("line {}: bad rate", line_no));
    } else if (key == "alphabets") {
      have_alphabets = static_cast<bool>(ls >> spec.input_size >> spec.output_size) && spec.input_size > 0 &&
                       spec.output_size > 0;
      if (!have_alphabets) throw Error(ErrorCode::CodeParse, fmt::format("line {}: bad alphabets", line_no));
    } else if (key == "family") {
      std::string f;
      ls >> f;
      if (f == "table") spec.family = CodeSpec::Family::Table;
      else if (f == "constant") spec.family = CodeSpec::Family::Constant;
      else if (f == "repetition") spec.family = CodeSpec::Family::Repetition;
      else if (f == "identity-decoder") spec.family = CodeSpec::Family::IdentityDecoder;
      else throw Error(ErrorCode::CodeParse, fmt::format("line {}: unknown family '{}'", line_no, f));
    } else if (key == "symbol") {
      if (!(ls >> spec.constant_symbol)) throw Error(ErrorCode::CodeParse, fmt::format("line {}: bad symbol", line_no));
    } else if (key == "encoder") {
      std::uint64_t m = 0;
      if (!(ls >> m)) throw Error(ErrorCode::CodeParse, fmt::format("line {}: encoder needs a message index", line_no));
      raw_encoders.emplace_back(m, read_all<Symbol>(ls, "encoder", line_no));
    } else if (key == "decoder") {
      spec.decoder = read_all<std::uint64_t>(ls, "decoder", line_no);
    } else if (key == "estimator") {
      spec.estimator = read_all<Symbol>(ls, "estimator", line_no);
    } else {
      throw Error(ErrorCode::CodeParse, fmt::format("line {}: unknown key '{}'", line_no, key));
    }
  }
  if (!header || !have_n || !have_rate || !have_alphabets) {
    throw Error(ErrorCode::CodeParse, "code file needs isac_code header, n, rate and alphabets");
  }
  const std::uint64_t messages = message_count(spec.n, spec.rate);
  if (spec.family == CodeSpec::Family::Table) {
    std::sort(raw_encoders.begin(), raw_encoders.end(),
              [](const auto& l, const auto& r) { return l.first < r.first; });
    if (raw_encoders.size() != messages) {
      throw Error(ErrorCode::CodeParse, fmt::format("table code needs {} encoders, got {}", messages, raw_encoders.size()));
    }
    for (std::uint64_t m = 0; m < messages; ++m) {
      if (raw_encoders[m].first != m) throw Error(ErrorCode::CodeParse, fmt::format("encoder {} missing", m));
      try {
        spec.encoders.emplace_back(spec.n, spec.input_size, spec.output_size, std::move(raw_encoders[m].second));
      } catch (const Error& e) {
        throw Error(ErrorCode::CodeParse, fmt::format("encoder {}: {}", m, e.what()));
      }
    }
    if (spec.decoder.size() != checked_leaf_count(spec.n, spec.output_size)) {
      throw Error(ErrorCode::CodeParse, "decoder needs |Y|^n entries");
    }
    for (auto v : spec.decoder) {
      if (v >= messages) throw Error(ErrorCode::CodeParse, "decoder output outside the message set");
    }
  } else if (!raw_encoders.empty() || !spec.decoder.empty()) {
    throw Error(ErrorCode::CodeParse, "encoder/decoder tables only allowed for family table");
  }
  if (spec.estimator && spec.estimator->size() != spec.input_size * spec.output_size) {
    throw Error(ErrorCode::CodeParse, "estimator needs |X||Y| entries");
  }
  return spec;
}

CodeSpec load_code(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open code file " + path);
  try {
    return parse_code(in);
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.what());
  }
}

std::string format_code(const CodeSpec& spec) {
  std::string out = "isac_code 1\n";
  out += fmt::format("n {}\nrate {:.17g}\nalphabets {} {}\nfamily {}\n", spec.n, spec.rate, spec.input_size,
                     spec.output_size, family_name(spec.family));
  if (spec.family == CodeSpec::Family::Constant) out += fmt::format("symbol {}\n", spec.constant_symbol);
  for (std::size_t m = 0; m < spec.encoders.size(); ++m) {
    out += fmt::format("encoder {} {}\n", m, fmt::join(spec.encoders[m].labels(), " "));
  }
  if (!spec.decoder.empty()) out += fmt::format("decoder {}\n", fmt::join(spec.decoder, " "));
  if (spec.estimator) out += fmt::format("estimator {}\n", fmt::join(*spec.estimator, " "));
  return out;
}

// ---------------------------------------------------------------------------

namespace {

struct TrialOutcome {
  bool error;
  bool excess;
  double distortion;
};

class TrialScratch {
 public:
  explicit TrialScratch(std::size_t n) : xs(n), ss(n), ys(n), shat(n) {}
  std::vector<Symbol> xs, ss, ys, shat;
};

double block_distortion(const DistortionFn& d, std::span<const Symbol> shat, std::span<const Symbol> ss) {
  double total = 0.0;
  for (std::size_t i = 0; i < ss.size(); ++i) total += d(shat[i], ss[i]);
  return total / static_cast<double>(ss.size());
}

TrialOutcome run_code_trial(const IsacCode& code, const Sdmc& sdmc, const Pmf& ps, const DistortionFn& d,
                            double max_distortion, RngStream& rng, TrialScratch& w) {
  const auto m = std::min<std::uint64_t>(code.messages - 1,
                                         static_cast<std::uint64_t>(rng.uniform() * static_cast<double>(code.messages)));
  for (std::size_t i = 0; i < code.n; ++i) {
    w.xs[i] = code.encode(m, std::span<const Symbol>(w.ys.data(), i));
    w.ss[i] = ps.sample(rng);
    w.ys[i] = sdmc_sample(sdmc, w.xs[i], w.ss[i], rng);
  }
  const std::uint64_t mhat = code.decode(w.ys);
  code.estimate(w.xs, w.ys, w.shat);
  const double dist = block_distortion(d, w.shat, w.ss);
  return {mhat != m, dist > max_distortion, dist};
}

void check_code(const IsacCode& code, const Sdmc& sdmc, const Pmf& ps, const DistortionFn& d) {
  if (code.n == 0 || code.messages == 0) throw Error(ErrorCode::InvalidArgument, "empty code");
  if (code.input_size != sdmc.input().size() || code.output_size != sdmc.output().size()) {
    throw Error(ErrorCode::LengthMismatch, "code alphabets differ from the channel");
  }
  check_state_alphabets(sdmc, ps);
  check_distortion(sdmc, d);
}

SimStats summarize(std::uint64_t trials, std::uint64_t errors, std::uint64_t excess,
                   const std::vector<double>& distortions) {
  SimStats st;
  st.trials = trials;
  st.decoding_errors = errors;
  st.excess_distortions = excess;
  st.pe = static_cast<double>(errors) / static_cast<double>(trials);
  st.pd = static_cast<double>(excess) / static_cast<double>(trials);
  st.pe_ci = wilson_interval(errors, trials);
  st.pd_ci = wilson_interval(excess, trials);
  st.mean_distortion = std::accumulate(distortions.begin(), distortions.end(), 0.0) / static_cast<double>(trials);
  return st;
}

}  // namespace

SimStats simulate_code(const IsacCode& code, const Sdmc& sdmc, const Pmf& ps, const DistortionFn& d,
                       double max_distortion, std::uint64_t trials, std::uint64_t seed, const ExecPolicy& policy) {
  check_code(code, sdmc, ps, d);
  if (trials == 0) throw Error(ErrorCode::InvalidArgument, "need at least one trial");
  std::vector<double> distortions(trials);
  std::uint64_t errors = 0;
  std::uint64_t excess = 0;
  const auto total = static_cast<std::int64_t>(trials);
#pragma omp parallel num_threads(policy.resolved()) reduction(+ : errors, excess)
  {
    TrialScratch w(code.n);
#pragma omp for schedule(static)
    for (std::int64_t t = 0; t < total; ++t) {
      RngStream rng(seed, static_cast<std::uint64_t>(t));
      const TrialOutcome o = run_code_trial(code, sdmc, ps, d, max_distortion, rng, w);
      errors += o.error ? 1 : 0;
      excess += o.excess ? 1 : 0;
      distortions[static_cast<std::size_t>(t)] = o.distortion;
    }
  }
  return summarize(trials, errors, excess, distortions);
}

namespace serial {

SimStats simulate_code(const IsacCode& code, const Sdmc& sdmc, const Pmf& ps, const DistortionFn& d,
                       double max_distortion, std::uint64_t trials, std::uint64_t seed) {
  check_code(code, sdmc, ps, d);
  if (trials == 0) throw Error(ErrorCode::InvalidArgument, "need at least one trial");
  std::vector<double> distortions(trials);
  std::uint64_t errors = 0;
  std::uint64_t excess = 0;
  TrialScratch w(code.n);
  for (std::uint64_t t = 0; t < trials; ++t) {
    RngStream rng(seed, t);
    const TrialOutcome o = run_code_trial(code, sdmc, ps, d, max_distortion, rng, w);
    errors += o.error ? 1 : 0;
    excess += o.excess ? 1 : 0;
    distortions[t] = o.distortion;
  }
  return summarize(trials, errors, excess, distortions);
}

}  // namespace serial

// ---------------------------------------------------------------------------

ConverseParams::ConverseParams(double eps, double delta, double eta, double max_distortion)
    : eps_(eps), delta_(delta), eta_(eta), max_distortion_(max_distortion) {
  if (!(eps >= 0.0 && delta >= 0.0 && eps + delta < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "need eps, delta >= 0 with eps + delta < 1");
  }
  if (!(eta > 0.0 && eta < 1.0 - eps - delta)) {
    throw Error(ErrorCode::InvalidArgument, "need 0 < eta < 1 - eps - delta");
  }
  if (!(max_distortion >= 0.0)) throw Error(ErrorCode::InvalidArgument, "distortion cap must be >= 0");
}

double ConverseParams::mu(std::size_t n) { return std::pow(static_cast<double>(n), -0.25); }

void for_each_realization(const IsacCode& code, const Sdmc& sdmc, const Pmf& ps, std::uint64_t m,
                          const std::function<void(const Realization&)>& visit) {
  check_state_alphabets(sdmc, ps);
  if (m >= code.messages) throw Error(ErrorCode::InvalidArgument, "message outside the message set");
  const std::size_t pair = sdmc.state().size() * sdmc.output().size();
  bool overflow = false;
  std::uint64_t total = 1;
  for (std::size_t i = 0; i < code.n; ++i) {
    if (total > (std::uint64_t{1} << 20) / pair) {
      overflow = true;
      break;
    }
    total *= pair;
  }
  if (overflow || total > (std::uint64_t{1} << 20)) {
    throw Error(ErrorCode::EnumerationTooLarge, fmt::format("(|S||Y|)^n = {}^{} exceeds 2^20", pair, code.n));
  }
  std::vector<Symbol> xs(code.n), ss(code.n), ys(code.n);
  auto rec = [&](auto&& self, std::size_t i, double prob) -> void {
    if (i == code.n) {
      visit(Realization{xs, ss, ys, prob});
      return;
    }
    const Symbol x = code.encode(m, std::span<const Symbol>(ys.data(), i));
    xs[i] = x;
    for (Symbol s = 0; s < sdmc.state().size(); ++s) {
      for (Symbol y = 0; y < sdmc.output().size(); ++y) {
        const double p = prob * (ps[s] * sdmc.prob(y, x, s));
        if (p == 0.0) continue;
        ss[i] = s;
        ys[i] = y;
        self(self, i + 1, p);
      }
    }
  };
  rec(rec, 0, 1.0);
}

namespace {

struct MessageFailure {
  double failure = 0.0;
  double error = 0.0;
  double excess = 0.0;
};

MessageFailure exact_failure(const IsacCode& code, const Sdmc& sdmc, const Pmf& ps, const DistortionFn& d,
                             std::uint64_t m, double max_distortion) {
  MessageFailure f;
  std::vector<Symbol> shat(code.n);
  for_each_realization(code, sdmc, ps, m, [&](const Realization& r) {
    const bool err = code.decode(r.ys) != m;
    code.estimate(r.xs, r.ys, shat);
    const bool exc = block_distortion(d, shat, r.ss) > max_distortion;
    if (err) f.error += r.prob;
    if (exc) f.excess += r.prob;
    if (err || exc) f.failure += r.prob;
  });
  return f;
}

MessageFailure mc_failure(const IsacCode& code, const Sdmc& sdmc, const Pmf& ps, const DistortionFn& d,
                          std::uint64_t m, double max_distortion, std::uint64_t trials, std::uint64_t seed) {
  std::uint64_t fail = 0, err = 0, exc = 0;
  TrialScratch w(code.n);
  for (std::uint64_t t = 0; t < trials; ++t) {
    RngStream rng(seed, (m << 32) | t);
    for (std::size_t i = 0; i < code.n; ++i) {
      w.xs[i] = code.encode(m, std::span<const Symbol>(w.ys.data(), i));
      w.ss[i] = ps.sample(rng);
      w.ys[i] = sdmc_sample(sdmc, w.xs[i], w.ss[i], rng);
    }
    const bool e = code.decode(w.ys) != m;
    code.estimate(w.xs, w.ys, w.shat);
    const bool x = block_distortion(d, w.shat, w.ss) > max_distortion;
    err += e;
    exc += x;
    fail += (e || x);
  }
  const double nt = static_cast<double>(trials);
  return {static_cast<double>(fail) / nt, static_cast<double>(err) / nt, static_cast<double>(exc) / nt};
}

bool in_good_set(double failure, double eta) { return failure <= (1.0 - eta) + 1e-12; }

}  // namespace

GoodMessageSet build_good_message_set(const IsacCode& code, const Sdmc& sdmc, const Pmf& ps,
                                      const DistortionFn& d, const ConverseParams& cp, EvalMode mode,
                                      std::uint64_t mc_trials, std::uint64_t seed, const ExecPolicy& policy) {
  check_code(code, sdmc, ps, d);
  if (mode == EvalMode::MonteCarlo && (mc_trials == 0 || mc_trials >= (std::uint64_t{1} << 32))) {
    throw Error(ErrorCode::InvalidArgument, "Monte Carlo trials must be in [1, 2^32)");
  }
  if (mode == EvalMode::Exact) {
    // surface the enumeration guard before spawning workers
    for_each_realization(code, sdmc, ps, 0, [](const Realization&) {});
  }
  const std::uint64_t messages = code.messages;
  std::vector<MessageFailure> per(messages);
  const auto count = static_cast<std::int64_t>(messages);
#pragma omp parallel for schedule(dynamic, 1) num_threads(policy.resolved())
  for (std::int64_t i = 0; i < count; ++i) {
    const auto m = static_cast<std::uint64_t>(i);
    per[m] = mode == EvalMode::Exact ? exact_failure(code, sdmc, ps, d, m, cp.max_distortion())
                                     : mc_failure(code, sdmc, ps, d, m, cp.max_distortion(), mc_trials, seed);
  }
  GoodMessageSet g;
  for (std::uint64_t m = 0; m < messages; ++m) {
    g.failure.push_back(per[m].failure);
    g.error.push_back(per[m].error);
    g.excess.push_back(per[m].excess);
    g.pe += per[m].error;
    g.pd += per[m].excess;
    if (in_good_set(per[m].failure, cp.eta())) g.members.push_back(m);
  }
  g.pe /= static_cast<double>(messages);
  g.pd /= static_cast<double>(messages);
  g.gamma = 1.0 - (g.pe + g.pd) / (1.0 - cp.eta());
  g.fraction = static_cast<double>(g.members.size()) / static_cast<double>(messages);
  if (mode == EvalMode::Exact && g.fraction < g.gamma - 1e-12) {
    throw ValueError(ErrorCode::BoundViolated,
                     fmt::format("|M~|/2^nR = {} below gamma = {}", g.fraction, g.gamma), g.gamma - g.fraction);
  }
  return g;
}

RestrictedMass restricted_measure_mass(const IsacCode& code, const Sdmc& sdmc, const Pmf& ps,
                                       const DistortionFn& d, std::uint64_t m, const ConverseParams& cp) {
  check_code(code, sdmc, ps, d);
  const std::size_t nx = sdmc.input().size();
  const std::size_t ns = sdmc.state().size();
  const std::size_t ny = sdmc.output().size();
  const std::size_t cells = nx * ns * ny;
  const Dmc pair_channel = sdmc.state_output_channel(ps);
  std::vector<double> q(cells);
  for (Symbol a = 0; a < nx; ++a) {
    for (std::size_t bc = 0; bc < ns * ny; ++bc) q[a * ns * ny + bc] = pair_channel.prob(static_cast<Symbol>(bc), a);
  }
  RestrictedMass out;
  out.mu = ConverseParams::mu(code.n);
  const double n = static_cast<double>(code.n);
  const double slack = n * out.mu;
  out.triple_bound = lemma1_bound(code.n, out.mu);
  out.bound_rhs = cp.eta() - static_cast<double>(cells) * out.triple_bound;
  out.triple_deviation.assign(cells, 0.0);

  double failure = 0.0;
  std::vector<Symbol> shat(code.n);
  std::vector<std::uint64_t> counts(cells), counts_x(nx);
  for_each_realization(code, sdmc, ps, m, [&](const Realization& r) {
    const bool decoded = code.decode(r.ys) == m;
    code.estimate(r.xs, r.ys, shat);
    const bool within = block_distortion(d, shat, r.ss) <= cp.max_distortion();
    if (!(decoded && within)) failure += r.prob;
    std::fill(counts.begin(), counts.end(), 0);
    std::fill(counts_x.begin(), counts_x.end(), 0);
    for (std::size_t i = 0; i < code.n; ++i) {
      ++counts[(r.xs[i] * ns + r.ss[i]) * ny + r.ys[i]];
      ++counts_x[r.xs[i]];
    }
    bool typical = true;
    for (std::size_t c = 0; c < cells; ++c) {
      const double dev = static_cast<double>(counts[c]) - static_cast<double>(counts_x[c / (ns * ny)]) * q[c];
      if (std::abs(dev) > slack) {
        typical = false;
        out.triple_deviation[c] += r.prob;
      }
    }
    if (decoded && within && typical) out.delta += r.prob;
  });

  out.in_good_set = in_good_set(failure, cp.eta());
  for (std::size_t c = 0; c < cells; ++c) {
    if (out.triple_deviation[c] > out.triple_bound + 1e-12) {
      throw ValueError(ErrorCode::BoundViolated,
                       fmt::format("triple {} deviation probability {} above {}", c, out.triple_deviation[c],
                                   out.triple_bound),
                       out.triple_deviation[c] - out.triple_bound);
    }
  }
  if (out.in_good_set && out.bound_rhs > 0.0) {
    out.bound_checked = true;
    if (out.delta < out.bound_rhs - 1e-12) {
      throw ValueError(ErrorCode::BoundViolated,
                       fmt::format("Delta_(n,m) = {} below {}", out.delta, out.bound_rhs), out.bound_rhs - out.delta);
    }
  }
  return out;
}

}  // namespace feedtype
