#include "qw/errors.hpp"

namespace qw {

std::string_view to_string(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::NotHermitian: return "NotHermitian";
    case ErrorKind::NotCP: return "NotCP";
    case ErrorKind::NotInRange: return "NotInRange";
    case ErrorKind::DegenerateRange: return "DegenerateRange";
    case ErrorKind::NumericalDegeneracy: return "NumericalDegeneracy";
    case ErrorKind::PreconditionViolated: return "PreconditionViolated";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::DivergentCross: return "DivergentCross";
    case ErrorKind::UnsupportedProfile: return "UnsupportedProfile";
    case ErrorKind::SingularSystem: return "SingularSystem";
    case ErrorKind::UnsupportedWeightComparison: return "UnsupportedWeightComparison";
    case ErrorKind::NotDominated: return "NotDominated";
    case ErrorKind::Misaligned: return "Misaligned";
    case ErrorKind::NotSquareSummable: return "NotSquareSummable";
    case ErrorKind::IllDefinedH: return "IllDefinedH";
    case ErrorKind::NotTrivialSpine: return "NotTrivialSpine";
    case ErrorKind::RankMismatch: return "RankMismatch";
    case ErrorKind::InputError: return "InputError";
    }
    return "Unknown";
}

}  // namespace qw
