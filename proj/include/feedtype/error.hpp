#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace feedtype {

enum class ErrorCode {
  NegativeWeight,
  SumNotOne,
  EmptyInput,
  SymbolOutOfRange,
  LengthMismatch,
  EmptySequence,
  LabelOutOfAlphabet,
  DepthOverflow,
  PathTooLong,
  SingletonInputAlphabet,
  EnumerationTooLarge,
  InvalidSite,
  AlreadyWellOrdered,
  NonpositiveMu,
  BoundViolated,
  ZeroLikelihood,
  AlphabetTooLarge,
  InvalidArgument,
  ChannelParse,
  CodeParse,
  ConfigParse,
  Io,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Like Error but carrying a numeric payload (e.g. the deviation of a pmf sum).
class ValueError : public Error {
 public:
  ValueError(ErrorCode code, const std::string& what, double value)
      : Error(code, what), value_(value) {}

  double value() const noexcept { return value_; }

 private:
  double value_;
};

}  // namespace feedtype
