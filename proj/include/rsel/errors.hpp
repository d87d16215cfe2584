#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace rsel {

// Base of all library errors. `kind()` is a stable machine-parsable class
// name; the CLI prints it as the first token of its single-line diagnostics.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& msg)
      : std::runtime_error(kind + ": " + msg), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define RSEL_ERROR_CLASS(Name)                    \
  struct Name : Error {                           \
    explicit Name(const std::string& msg)         \
        : Error(#Name, msg) {}                    \
  }

RSEL_ERROR_CLASS(NotPositiveDefinite);
RSEL_ERROR_CLASS(NoConvergence);
RSEL_ERROR_CLASS(DomainError);
RSEL_ERROR_CLASS(DimensionMismatch);
RSEL_ERROR_CLASS(IsolatedSubject);
RSEL_ERROR_CLASS(DegenerateEmbedding);
RSEL_ERROR_CLASS(SingleClass);
RSEL_ERROR_CLASS(InvalidBand);
RSEL_ERROR_CLASS(ResolutionMismatch);
RSEL_ERROR_CLASS(MalformedHeader);
RSEL_ERROR_CLASS(TruncatedData);
RSEL_ERROR_CLASS(MixedRates);
RSEL_ERROR_CLASS(OverlapError);
RSEL_ERROR_CLASS(NegativeDuration);
RSEL_ERROR_CLASS(BadMagic);
RSEL_ERROR_CLASS(ChecksumMismatch);
RSEL_ERROR_CLASS(ParseError);
RSEL_ERROR_CLASS(InvalidArgument);
RSEL_ERROR_CLASS(IoError);

#undef RSEL_ERROR_CLASS

}  // namespace rsel
