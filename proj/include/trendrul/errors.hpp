#pragma once

#include <stdexcept>
#include <string>

namespace trendrul {

// Base for all library errors. `code()` is a stable machine-readable tag
// that the CLI mirrors into its JSON error output.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

#define TRENDRUL_DEFINE_ERROR(NAME)                         \
  class NAME : public Error {                               \
   public:                                                  \
    explicit NAME(const std::string& message)               \
        : Error(#NAME, message) {}                          \
  }

// timeseries
TRENDRUL_DEFINE_ERROR(SensorDegenerate);
TRENDRUL_DEFINE_ERROR(InvalidWindow);

// emd
TRENDRUL_DEFINE_ERROR(EnvelopeUnderdetermined);
TRENDRUL_DEFINE_ERROR(NotDecomposable);

// ensemble
TRENDRUL_DEFINE_ERROR(LevelOutOfRange);

// cmapss
TRENDRUL_DEFINE_ERROR(RulFileMismatch);
TRENDRUL_DEFINE_ERROR(EmptySensorSet);
TRENDRUL_DEFINE_ERROR(RoleError);
TRENDRUL_DEFINE_ERROR(PadTooShort);

// neural
TRENDRUL_DEFINE_ERROR(ShapeError);
TRENDRUL_DEFINE_ERROR(MaskError);
TRENDRUL_DEFINE_ERROR(InvalidProbability);
TRENDRUL_DEFINE_ERROR(EmptyLoss);
TRENDRUL_DEFINE_ERROR(CacheMismatch);
TRENDRUL_DEFINE_ERROR(GradientBlowup);

// metrics
TRENDRUL_DEFINE_ERROR(CoverageError);
TRENDRUL_DEFINE_ERROR(InvalidSigma);
TRENDRUL_DEFINE_ERROR(EmptyInput);

// cli / pipeline
TRENDRUL_DEFINE_ERROR(ConfigError);
TRENDRUL_DEFINE_ERROR(PipelineOrderError);

#undef TRENDRUL_DEFINE_ERROR

// Parse failures carry the 1-based line number of the offending row.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& message)
      : Error("ParseError", message), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace trendrul
