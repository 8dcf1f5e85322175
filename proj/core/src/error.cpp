#include "saf/error.hpp"

namespace saf {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::EmptyEdgeSet: return "EmptyEdgeSet";
    case ErrorCode::DegenerateLabels: return "DegenerateLabels";
    case ErrorCode::DimensionTooLarge: return "DimensionTooLarge";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::BreakdownNotRecovered: return "BreakdownNotRecovered";
    case ErrorCode::InvalidMode: return "InvalidMode";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::AllZeroCoefficients: return "AllZeroCoefficients";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::MisalignedBasis: return "MisalignedBasis";
    case ErrorCode::NonPositiveTau: return "NonPositiveTau";
    case ErrorCode::NegativeEpsilon: return "NegativeEpsilon";
    case ErrorCode::PartialBasisUnsupported: return "PartialBasisUnsupported";
    case ErrorCode::NoSurvivingEdges: return "NoSurvivingEdges";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonPositiveDelta: return "NonPositiveDelta";
    case ErrorCode::EmptyMask: return "EmptyMask";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::DivergedRun: return "DivergedRun";
    case ErrorCode::InfeasibleScheme: return "InfeasibleScheme";
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::BadLabel: return "BadLabel";
    case ErrorCode::MalformedSplit: return "MalformedSplit";
    case ErrorCode::MissingCheckpoint: return "MissingCheckpoint";
  }
  return "Unknown";
}

ErrorClass classify(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonFiniteValue:
    case ErrorCode::DivergedRun:
    case ErrorCode::BreakdownNotRecovered:
      return ErrorClass::Numerical;
    case ErrorCode::NotConverged:
      return ErrorClass::NotConverged;
    default:
      return ErrorClass::Validation;
  }
}

}  // namespace saf
