#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mvlab {

enum class ErrorCode {
  InvalidArgument,
  ResolutionTooCoarse,
  MetricNotPositiveDefinite,
  CenterBelowBoundary,
  CenterOffGrid,
  DomainHasNoFlatBoundary,
  DomainNotHalfBall,
  SubregionOutsideDomain,
  ShellExitsDomain,
  RadiusBelowResolution,
  RadiusOutOfRange,
  BothNonlinearitiesZero,
  BothLinearTermsZero,
  EmptyBall,
  AllNodesBelowFloor,
  EmptyFamily,
  HypothesisViolated,
  SpecOutOfDomain,
  UnresolvableScale,
  InconsistentSequence,
  ConfigError,
  IoError,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the library; the code identifies the failure class.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace mvlab
