#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "feedtype/rng.hpp"

namespace feedtype {

// Symbols are dense indices 0..size-1 of a finite alphabet.
using Symbol = std::uint32_t;

class Alphabet {
 public:
  explicit Alphabet(std::size_t size);

  std::size_t size() const noexcept { return size_; }
  bool contains(Symbol s) const noexcept { return s < size_; }

  friend bool operator==(const Alphabet&, const Alphabet&) = default;

 private:
  std::size_t size_;
};

inline constexpr double kPmfTolerance = 1e-12;

// Probability mass function over an alphabet. Weights are kept exactly as
// given; construction rejects negative entries and sums off by > 1e-12.
class Pmf {
 public:
  explicit Pmf(std::vector<double> weights);

  static Pmf uniform(std::size_t size);
  static Pmf point_mass(std::size_t size, Symbol at);

  std::size_t size() const noexcept { return weights_.size(); }
  double operator[](Symbol s) const noexcept { return weights_[s]; }
  std::span<const double> weights() const noexcept { return weights_; }

  // Inverse-CDF lookup over canonical symbol order: first symbol whose
  // cumulative weight exceeds u. Falls back to the last positive symbol.
  Symbol quantile(double u) const noexcept;

  // Draws one symbol, consuming exactly one uniform from rng.
  Symbol sample(RngStream& rng) const noexcept { return quantile(rng.uniform()); }

 private:
  std::vector<double> weights_;
  std::vector<double> cdf_;
  Symbol last_positive_ = 0;
};

// Validates and wraps a raw weight array.
Pmf validate_pmf(std::vector<double> weights);

// Conditional law P_{Y|X}: one Pmf over Y per input symbol.
class Dmc {
 public:
  Dmc(std::size_t input_size, std::size_t output_size, std::vector<Pmf> rows);
  // Row-major matrix convenience constructor.
  static Dmc from_matrix(std::size_t input_size, std::size_t output_size,
                         std::span<const double> matrix);
  static Dmc bsc(double crossover);

  const Alphabet& input() const noexcept { return input_; }
  const Alphabet& output() const noexcept { return output_; }
  const Pmf& row(Symbol x) const;
  double prob(Symbol y, Symbol x) const { return row(x)[y]; }

 private:
  Alphabet input_;
  Alphabet output_;
  std::vector<Pmf> rows_;
};

Symbol dmc_sample(const Dmc& dmc, Symbol x, RngStream& rng);

// State-dependent law P_{Y|XS}; rows stored input-major, state-minor.
class Sdmc {
 public:
  Sdmc(std::size_t input_size, std::size_t state_size, std::size_t output_size,
       std::vector<Pmf> rows);
  static Sdmc from_matrix(std::size_t input_size, std::size_t state_size,
                          std::size_t output_size, std::span<const double> matrix);
  // Channel whose law does not depend on the state.
  static Sdmc state_independent(const Dmc& dmc, std::size_t state_size);

  const Alphabet& input() const noexcept { return input_; }
  const Alphabet& state() const noexcept { return state_; }
  const Alphabet& output() const noexcept { return output_; }
  const Pmf& row(Symbol x, Symbol s) const;
  double prob(Symbol y, Symbol x, Symbol s) const { return row(x, s)[y]; }

  // P_{Y|X} obtained by averaging out the state under ps.
  Dmc marginal(const Pmf& ps) const;
  // Treats (S, Y) as the output of a DMC with input X: P(s, y | x) =
  // ps(s) P(y|x,s), with pair index s * |Y| + y.
  Dmc state_output_channel(const Pmf& ps) const;

 private:
  Alphabet input_;
  Alphabet state_;
  Alphabet output_;
  std::vector<Pmf> rows_;
};

Symbol sdmc_sample(const Sdmc& sdmc, Symbol x, Symbol s, RngStream& rng);

// Empirical type with integer counts over a product alphabet. Cell index is
// row-major in the order of dims().
class JointType {
 public:
  JointType(std::vector<std::size_t> dims, std::vector<std::uint64_t> counts,
            std::uint64_t length);

  std::span<const std::size_t> dims() const noexcept { return dims_; }
  std::uint64_t length() const noexcept { return length_; }
  std::span<const std::uint64_t> counts() const noexcept { return counts_; }

  std::uint64_t count(std::span<const Symbol> cell) const;
  std::uint64_t count(Symbol a) const { return count(std::span<const Symbol>(&a, 1)); }
  std::uint64_t count(Symbol a, Symbol b) const;
  std::uint64_t count(Symbol a, Symbol b, Symbol c) const;
  double weight(Symbol a, Symbol b) const {
    return static_cast<double>(count(a, b)) / static_cast<double>(length_);
  }

  // Sums out every axis except `keep`.
  JointType marginal(std::size_t keep) const;
  Pmf normalized() const;

  friend bool operator==(const JointType&, const JointType&) = default;

 private:
  std::size_t flat_index(std::span<const Symbol> cell) const;

  std::vector<std::size_t> dims_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t length_;
};

// Type of a single sequence over an alphabet of `size` symbols.
JointType sequence_type(std::span<const Symbol> xs, std::size_t size);
JointType joint_type(std::span<const Symbol> xs, std::size_t x_size,
                     std::span<const Symbol> ys, std::size_t y_size);
JointType joint_type(std::span<const Symbol> xs, std::size_t x_size,
                     std::span<const Symbol> ss, std::size_t s_size,
                     std::span<const Symbol> ys, std::size_t y_size);

// |pi(a,b) - pi(a) P(b|a)| from integer counts.
double conditional_deviation(const JointType& joint, const JointType& marginal,
                             Symbol a, Symbol b, const Dmc& dmc);

// Channel text files: "dmc |X| |Y|" or "sdmc |X| |S| |Y|" header followed by
// one probability row per input (input-major, state-minor for sdmc).
struct ChannelFile {
  enum class Kind { Dmc, Sdmc } kind;
  std::vector<std::size_t> dims;
  std::vector<double> matrix;

  Dmc as_dmc() const;
  Sdmc as_sdmc() const;
};

ChannelFile parse_channel(std::istream& in);
ChannelFile load_channel(const std::string& path);
std::string format_channel(const Dmc& dmc);
std::string format_channel(const Sdmc& sdmc);

}  // namespace feedtype
