#include "mvlab/error.hpp"

namespace mvlab {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ResolutionTooCoarse: return "ResolutionTooCoarse";
    case ErrorCode::MetricNotPositiveDefinite: return "MetricNotPositiveDefinite";
    case ErrorCode::CenterBelowBoundary: return "CenterBelowBoundary";
    case ErrorCode::CenterOffGrid: return "CenterOffGrid";
    case ErrorCode::DomainHasNoFlatBoundary: return "DomainHasNoFlatBoundary";
    case ErrorCode::DomainNotHalfBall: return "DomainNotHalfBall";
    case ErrorCode::SubregionOutsideDomain: return "SubregionOutsideDomain";
    case ErrorCode::ShellExitsDomain: return "ShellExitsDomain";
    case ErrorCode::RadiusBelowResolution: return "RadiusBelowResolution";
    case ErrorCode::RadiusOutOfRange: return "RadiusOutOfRange";
    case ErrorCode::BothNonlinearitiesZero: return "BothNonlinearitiesZero";
    case ErrorCode::BothLinearTermsZero: return "BothLinearTermsZero";
    case ErrorCode::EmptyBall: return "EmptyBall";
    case ErrorCode::AllNodesBelowFloor: return "AllNodesBelowFloor";
    case ErrorCode::EmptyFamily: return "EmptyFamily";
    case ErrorCode::HypothesisViolated: return "HypothesisViolated";
    case ErrorCode::SpecOutOfDomain: return "SpecOutOfDomain";
    case ErrorCode::UnresolvableScale: return "UnresolvableScale";
    case ErrorCode::InconsistentSequence: return "InconsistentSequence";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace mvlab
