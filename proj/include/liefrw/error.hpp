#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace liefrw {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(std::string message, std::size_t offset, std::vector<std::string> expected = {});

  std::size_t offset() const noexcept { return offset_; }
  const std::vector<std::string>& expected() const noexcept { return expected_; }

 private:
  std::size_t offset_;
  std::vector<std::string> expected_;
};

#define LIEFRW_DEFINE_ERROR(Name) \
  class Name : public Error {     \
   public:                        \
    using Error::Error;           \
  }

LIEFRW_DEFINE_ERROR(NotPolynomial);
LIEFRW_DEFINE_ERROR(UnboundSymbol);
LIEFRW_DEFINE_ERROR(DomainError);
LIEFRW_DEFINE_ERROR(NormalizationInconsistency);
LIEFRW_DEFINE_ERROR(OrderOverflow);
LIEFRW_DEFINE_ERROR(ContextMismatch);
LIEFRW_DEFINE_ERROR(NotClosed);
LIEFRW_DEFINE_ERROR(NotLinearlyIndependent);
LIEFRW_DEFINE_ERROR(DegenerateLapse);
LIEFRW_DEFINE_ERROR(ConstraintInfeasible);
LIEFRW_DEFINE_ERROR(StepUnderflow);
LIEFRW_DEFINE_ERROR(NonFiniteDerivative);
LIEFRW_DEFINE_ERROR(MonitorUnbound);
LIEFRW_DEFINE_ERROR(UnknownMonitor);
LIEFRW_DEFINE_ERROR(NonPositiveScaleFactor);
LIEFRW_DEFINE_ERROR(TurningPoint);
LIEFRW_DEFINE_ERROR(QuadratureFailure);
LIEFRW_DEFINE_ERROR(ConfigError);

#undef LIEFRW_DEFINE_ERROR

}  // namespace liefrw
