#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qw {

enum class ErrorKind {
    NotHermitian,
    NotCP,
    NotInRange,
    DegenerateRange,
    NumericalDegeneracy,
    PreconditionViolated,
    IndexOutOfRange,
    DimensionMismatch,
    DivergentCross,
    UnsupportedProfile,
    SingularSystem,
    UnsupportedWeightComparison,
    NotDominated,
    Misaligned,
    NotSquareSummable,
    IllDefinedH,
    NotTrivialSpine,
    RankMismatch,
    InputError,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind)
    {
    }

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace qw
