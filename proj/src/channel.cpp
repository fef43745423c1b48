#include "feedtype/channel.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <fmt/format.h>

#include "feedtype/error.hpp"

namespace feedtype {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NegativeWeight: return "NegativeWeight";
    case ErrorCode::SumNotOne: return "SumNotOne";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::SymbolOutOfRange: return "SymbolOutOfRange";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::EmptySequence: return "EmptySequence";
    case ErrorCode::LabelOutOfAlphabet: return "LabelOutOfAlphabet";
    case ErrorCode::DepthOverflow: return "DepthOverflow";
    case ErrorCode::PathTooLong: return "PathTooLong";
    case ErrorCode::SingletonInputAlphabet: return "SingletonInputAlphabet";
    case ErrorCode::EnumerationTooLarge: return "EnumerationTooLarge";
    case ErrorCode::InvalidSite: return "InvalidSite";
    case ErrorCode::AlreadyWellOrdered: return "AlreadyWellOrdered";
    case ErrorCode::NonpositiveMu: return "NonpositiveMu";
    case ErrorCode::BoundViolated: return "BoundViolated";
    case ErrorCode::ZeroLikelihood: return "ZeroLikelihood";
    case ErrorCode::AlphabetTooLarge: return "AlphabetTooLarge";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ChannelParse: return "ChannelParse";
    case ErrorCode::CodeParse: return "CodeParse";
    case ErrorCode::ConfigParse: return "ConfigParse";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

Alphabet::Alphabet(std::size_t size) : size_(size) {
  if (size == 0) throw Error(ErrorCode::EmptyInput, "alphabet must be nonempty");
}

Pmf::Pmf(std::vector<double> weights) : weights_(std::move(weights)) {
  if (weights_.empty()) throw Error(ErrorCode::EmptyInput, "pmf needs at least one weight");
  double total = 0.0;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    const double w = weights_[i];
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw ValueError(ErrorCode::NegativeWeight, fmt::format("weight[{}] = {}", i, w), w);
    }
    total += w;
  }
  if (std::abs(total - 1.0) > kPmfTolerance) {
    throw ValueError(ErrorCode::SumNotOne,
                     fmt::format("weights sum to {:.17g} (deviation {:.3g})", total, total - 1.0),
                     total - 1.0);
  }
  cdf_.resize(weights_.size());
  std::partial_sum(weights_.begin(), weights_.end(), cdf_.begin());
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    if (weights_[i] > 0.0) last_positive_ = static_cast<Symbol>(i);
  }
}

Pmf Pmf::uniform(std::size_t size) {
  return Pmf(std::vector<double>(size, 1.0 / static_cast<double>(size)));
}

Pmf Pmf::point_mass(std::size_t size, Symbol at) {
  if (at >= size) throw Error(ErrorCode::SymbolOutOfRange, "point mass outside alphabet");
  std::vector<double> w(size, 0.0);
  w[at] = 1.0;
  return Pmf(std::move(w));
}

Symbol Pmf::quantile(double u) const noexcept {
  for (std::size_t i = 0; i < cdf_.size(); ++i) {
    if (u < cdf_[i]) return static_cast<Symbol>(i);
  }
  return last_positive_;
}

Pmf validate_pmf(std::vector<double> weights) { return Pmf(std::move(weights)); }

Dmc::Dmc(std::size_t input_size, std::size_t output_size, std::vector<Pmf> rows)
    : input_(input_size), output_(output_size), rows_(std::move(rows)) {
  if (rows_.size() != input_size) {
    throw Error(ErrorCode::LengthMismatch,
                fmt::format("dmc has {} rows for {} inputs", rows_.size(), input_size));
  }
  for (const Pmf& r : rows_) {
    if (r.size() != output_size) {
      throw Error(ErrorCode::LengthMismatch, "dmc row length differs from |Y|");
    }
  }
}

Dmc Dmc::from_matrix(std::size_t input_size, std::size_t output_size,
                     std::span<const double> matrix) {
  if (matrix.size() != input_size * output_size) {
    throw Error(ErrorCode::LengthMismatch, "dmc matrix has wrong number of entries");
  }
  std::vector<Pmf> rows;
  rows.reserve(input_size);
  for (std::size_t x = 0; x < input_size; ++x) {
    auto row = matrix.subspan(x * output_size, output_size);
    rows.emplace_back(std::vector<double>(row.begin(), row.end()));
  }
  return Dmc(input_size, output_size, std::move(rows));
}

Dmc Dmc::bsc(double crossover) {
  const double m[] = {1.0 - crossover, crossover, crossover, 1.0 - crossover};
  return from_matrix(2, 2, m);
}

const Pmf& Dmc::row(Symbol x) const {
  if (!input_.contains(x)) {
    throw Error(ErrorCode::SymbolOutOfRange, fmt::format("input {} outside |X|={}", x, input_.size()));
  }
  return rows_[x];
}

Symbol dmc_sample(const Dmc& dmc, Symbol x, RngStream& rng) { return dmc.row(x).sample(rng); }

Sdmc::Sdmc(std::size_t input_size, std::size_t state_size, std::size_t output_size,
           std::vector<Pmf> rows)
    : input_(input_size), state_(state_size), output_(output_size), rows_(std::move(rows)) {
  if (rows_.size() != input_size * state_size) {
    throw Error(ErrorCode::LengthMismatch, "sdmc needs |X|*|S| rows");
  }
  for (const Pmf& r : rows_) {
    if (r.size() != output_size) {
      throw Error(ErrorCode::LengthMismatch, "sdmc row length differs from |Y|");
    }
  }
}

Sdmc Sdmc::from_matrix(std::size_t input_size, std::size_t state_size, std::size_t output_size,
                       std::span<const double> matrix) {
  if (matrix.size() != input_size * state_size * output_size) {
    throw Error(ErrorCode::LengthMismatch, "sdmc matrix has wrong number of entries");
  }
  std::vector<Pmf> rows;
  rows.reserve(input_size * state_size);
  for (std::size_t r = 0; r < input_size * state_size; ++r) {
    auto row = matrix.subspan(r * output_size, output_size);
    rows.emplace_back(std::vector<double>(row.begin(), row.end()));
  }
  return Sdmc(input_size, state_size, output_size, std::move(rows));
}

Sdmc Sdmc::state_independent(const Dmc& dmc, std::size_t state_size) {
  std::vector<Pmf> rows;
  for (Symbol x = 0; x < dmc.input().size(); ++x) {
    for (std::size_t s = 0; s < state_size; ++s) rows.push_back(dmc.row(x));
  }
  return Sdmc(dmc.input().size(), state_size, dmc.output().size(), std::move(rows));
}

const Pmf& Sdmc::row(Symbol x, Symbol s) const {
  if (!input_.contains(x) || !state_.contains(s)) {
    throw Error(ErrorCode::SymbolOutOfRange, fmt::format("(x={}, s={}) outside alphabets", x, s));
  }
  return rows_[x * state_.size() + s];
}

Dmc Sdmc::marginal(const Pmf& ps) const {
  if (ps.size() != state_.size()) throw Error(ErrorCode::LengthMismatch, "P_S size differs from |S|");
  std::vector<double> m(input_.size() * output_.size(), 0.0);
  for (Symbol x = 0; x < input_.size(); ++x) {
    for (Symbol s = 0; s < state_.size(); ++s) {
      for (Symbol y = 0; y < output_.size(); ++y) {
        m[x * output_.size() + y] += ps[s] * prob(y, x, s);
      }
    }
  }
  return Dmc::from_matrix(input_.size(), output_.size(), m);
}

Dmc Sdmc::state_output_channel(const Pmf& ps) const {
  if (ps.size() != state_.size()) throw Error(ErrorCode::LengthMismatch, "P_S size differs from |S|");
  const std::size_t pair = state_.size() * output_.size();
  std::vector<double> m(input_.size() * pair, 0.0);
  for (Symbol x = 0; x < input_.size(); ++x) {
    for (Symbol s = 0; s < state_.size(); ++s) {
      for (Symbol y = 0; y < output_.size(); ++y) {
        m[x * pair + s * output_.size() + y] = ps[s] * prob(y, x, s);
      }
    }
  }
  return Dmc::from_matrix(input_.size(), pair, m);
}

Symbol sdmc_sample(const Sdmc& sdmc, Symbol x, Symbol s, RngStream& rng) {
  return sdmc.row(x, s).sample(rng);
}

// ---------------------------------------------------------------------------

JointType::JointType(std::vector<std::size_t> dims, std::vector<std::uint64_t> counts,
                     std::uint64_t length)
    : dims_(std::move(dims)), counts_(std::move(counts)), length_(length) {
  std::size_t cells = 1;
  for (std::size_t d : dims_) cells *= d;
  if (cells != counts_.size()) throw Error(ErrorCode::LengthMismatch, "type counts do not match dims");
  if (length_ == 0) throw Error(ErrorCode::EmptySequence, "type of an empty sequence");
  if (std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0}) != length_) {
    throw Error(ErrorCode::InvalidArgument, "type counts must sum to the sequence length");
  }
}

std::size_t JointType::flat_index(std::span<const Symbol> cell) const {
  if (cell.size() != dims_.size()) throw Error(ErrorCode::LengthMismatch, "cell arity differs from type arity");
  std::size_t idx = 0;
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    if (cell[i] >= dims_[i]) throw Error(ErrorCode::SymbolOutOfRange, "type cell outside alphabet");
    idx = idx * dims_[i] + cell[i];
  }
  return idx;
}

std::uint64_t JointType::count(std::span<const Symbol> cell) const { return counts_[flat_index(cell)]; }

std::uint64_t JointType::count(Symbol a, Symbol b) const {
  const Symbol cell[] = {a, b};
  return count(cell);
}

std::uint64_t JointType::count(Symbol a, Symbol b, Symbol c) const {
  const Symbol cell[] = {a, b, c};
  return count(cell);
}

JointType JointType::marginal(std::size_t keep) const {
  if (keep >= dims_.size()) throw Error(ErrorCode::InvalidArgument, "marginal axis out of range");
  std::size_t inner = 1;
  for (std::size_t i = keep + 1; i < dims_.size(); ++i) inner *= dims_[i];
  std::vector<std::uint64_t> out(dims_[keep], 0);
  for (std::size_t idx = 0; idx < counts_.size(); ++idx) {
    out[(idx / inner) % dims_[keep]] += counts_[idx];
  }
  return JointType({dims_[keep]}, std::move(out), length_);
}

Pmf JointType::normalized() const {
  std::vector<double> w(counts_.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = static_cast<double>(counts_[i]) / static_cast<double>(length_);
  }
  return Pmf(std::move(w));
}

namespace {

JointType build_type(std::span<const std::span<const Symbol>> seqs, std::span<const std::size_t> sizes) {
  const std::size_t n = seqs.front().size();
  if (n == 0) throw Error(ErrorCode::EmptySequence, "type of an empty sequence");
  for (auto s : seqs) {
    if (s.size() != n) throw Error(ErrorCode::LengthMismatch, "sequences differ in length");
  }
  std::size_t cells = 1;
  for (std::size_t d : sizes) cells *= d;
  std::vector<std::uint64_t> counts(cells, 0);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t idx = 0;
    for (std::size_t k = 0; k < seqs.size(); ++k) {
      const Symbol v = seqs[k][i];
      if (v >= sizes[k]) throw Error(ErrorCode::SymbolOutOfRange, "sequence symbol outside alphabet");
      idx = idx * sizes[k] + v;
    }
    ++counts[idx];
  }
  return JointType(std::vector<std::size_t>(sizes.begin(), sizes.end()), std::move(counts), n);
}

}  // namespace

JointType sequence_type(std::span<const Symbol> xs, std::size_t size) {
  const std::span<const Symbol> seqs[] = {xs};
  const std::size_t sizes[] = {size};
  return build_type(seqs, sizes);
}

JointType joint_type(std::span<const Symbol> xs, std::size_t x_size, std::span<const Symbol> ys,
                     std::size_t y_size) {
  const std::span<const Symbol> seqs[] = {xs, ys};
  const std::size_t sizes[] = {x_size, y_size};
  return build_type(seqs, sizes);
}

JointType joint_type(std::span<const Symbol> xs, std::size_t x_size, std::span<const Symbol> ss,
                     std::size_t s_size, std::span<const Symbol> ys, std::size_t y_size) {
  const std::span<const Symbol> seqs[] = {xs, ss, ys};
  const std::size_t sizes[] = {x_size, s_size, y_size};
  return build_type(seqs, sizes);
}

double conditional_deviation(const JointType& joint, const JointType& marginal, Symbol a, Symbol b,
                             const Dmc& dmc) {
  if (joint.dims().size() != 2 || marginal.dims().size() != 1) {
    throw Error(ErrorCode::InvalidArgument, "expected a pair type and a single-sequence type");
  }
  if (joint.length() != marginal.length() || joint.marginal(0) != marginal) {
    throw Error(ErrorCode::InvalidArgument, "marginal does not derive from the joint type");
  }
  if (!dmc.input().contains(a) || !dmc.output().contains(b)) {
    throw Error(ErrorCode::SymbolOutOfRange, fmt::format("(a={}, b={}) outside channel alphabets", a, b));
  }
  const double n = static_cast<double>(joint.length());
  return std::abs(static_cast<double>(joint.count(a, b)) / n -
                  static_cast<double>(marginal.count(a)) / n * dmc.prob(b, a));
}

// ---------------------------------------------------------------------------

namespace {

std::string strip_comment(const std::string& line) {
  const auto hash = line.find('#');
  return hash == std::string::npos ? line : line.substr(0, hash);
}

}  // namespace

ChannelFile parse_channel(std::istream& in) {
  std::string line;
  std::vector<std::string> tokens;
  std::size_t line_no = 0;
  bool have_header = false;
  ChannelFile file{ChannelFile::Kind::Dmc, {}, {}};
  std::size_t expected = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(strip_comment(line));
    if (!have_header) {
      std::string kind;
      if (!(ls >> kind)) continue;
      std::size_t arity = 0;
      if (kind == "dmc") {
        file.kind = ChannelFile::Kind::Dmc;
        arity = 2;
      } else if (kind == "sdmc") {
        file.kind = ChannelFile::Kind::Sdmc;
        arity = 3;
      } else {
        throw Error(ErrorCode::ChannelParse, fmt::format("line {}: unknown channel kind '{}'", line_no, kind));
      }
      for (std::size_t i = 0; i < arity; ++i) {
        long long d = 0;
        if (!(ls >> d) || d <= 0) {
          throw Error(ErrorCode::ChannelParse, fmt::format("line {}: bad alphabet size", line_no));
        }
        file.dims.push_back(static_cast<std::size_t>(d));
      }
      std::string extra;
      if (ls >> extra) throw Error(ErrorCode::ChannelParse, fmt::format("line {}: trailing header token", line_no));
      expected = 1;
      for (std::size_t d : file.dims) expected *= d;
      have_header = true;
      continue;
    }
    std::vector<double> row;
    std::string tok;
    while (ls >> tok) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw Error(ErrorCode::ChannelParse, fmt::format("line {}: bad probability '{}'", line_no, tok));
      }
    }
    if (row.empty()) continue;
    if (row.size() != file.dims.back()) {
      throw Error(ErrorCode::ChannelParse,
                  fmt::format("line {}: row has {} entries, expected |Y|={}", line_no, row.size(), file.dims.back()));
    }
    file.matrix.insert(file.matrix.end(), row.begin(), row.end());
  }
  if (!have_header) throw Error(ErrorCode::ChannelParse, "missing channel header");
  if (file.matrix.size() != expected) {
    throw Error(ErrorCode::ChannelParse,
                fmt::format("expected {} rows, found {}", expected / file.dims.back(),
                            file.matrix.size() / file.dims.back()));
  }
  try {
    if (file.kind == ChannelFile::Kind::Dmc) {
      (void)file.as_dmc();
    } else {
      (void)file.as_sdmc();
    }
  } catch (const Error& e) {
    throw Error(ErrorCode::ChannelParse, e.what());
  }
  return file;
}

ChannelFile load_channel(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open channel file " + path);
  try {
    return parse_channel(in);
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.what());
  }
}

Dmc ChannelFile::as_dmc() const {
  if (kind != Kind::Dmc) throw Error(ErrorCode::ChannelParse, "file holds an sdmc, expected dmc");
  return Dmc::from_matrix(dims[0], dims[1], matrix);
}

Sdmc ChannelFile::as_sdmc() const {
  if (kind != Kind::Sdmc) throw Error(ErrorCode::ChannelParse, "file holds a dmc, expected sdmc");
  return Sdmc::from_matrix(dims[0], dims[1], dims[2], matrix);
}

namespace {

void append_row(std::string& out, const Pmf& row) {
  for (std::size_t y = 0; y < row.size(); ++y) {
    if (y != 0) out += ' ';
    out += fmt::format("{:.17g}", row[static_cast<Symbol>(y)]);
  }
  out += '\n';
}

}  // namespace

std::string format_channel(const Dmc& dmc) {
  std::string out = fmt::format("dmc {} {}\n", dmc.input().size(), dmc.output().size());
  for (Symbol x = 0; x < dmc.input().size(); ++x) append_row(out, dmc.row(x));
  return out;
}

std::string format_channel(const Sdmc& sdmc) {
  std::string out =
      fmt::format("sdmc {} {} {}\n", sdmc.input().size(), sdmc.state().size(), sdmc.output().size());
  for (Symbol x = 0; x < sdmc.input().size(); ++x) {
    for (Symbol s = 0; s < sdmc.state().size(); ++s) append_row(out, sdmc.row(x, s));
  }
  return out;
}

}  // namespace feedtype
