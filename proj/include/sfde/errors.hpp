#ifndef SFDE_ERRORS_HPP
#define SFDE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace sfde {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Segment / history errors
struct SkeletonMismatch : Error {
    using Error::Error;
};
struct OutOfRange : Error {
    using Error::Error;
};

// Noise errors
struct InvalidHorizon : Error {
    using Error::Error;
};
struct ZeroStep : Error {
    using Error::Error;
};
struct UnsortedEvents : Error {
    using Error::Error;
};
struct UnknownMark : Error {
    using Error::Error;
};

// Expression DSL errors
struct SyntaxError : Error {
    std::size_t position;
    SyntaxError(const std::string& what, std::size_t pos)
        : Error(what + " (at position " + std::to_string(pos) + ")"), position(pos) {}
};
struct UnknownSymbol : Error {
    using Error::Error;
};
struct ThetaOutOfRange : Error {
    using Error::Error;
};

// Coefficient errors
struct NonFiniteCoefficient : Error {
    using Error::Error;
};
struct UnknownName : Error {
    using Error::Error;
};
struct BadParams : Error {
    using Error::Error;
};

// Solver errors
struct NonFiniteState : Error {
    using Error::Error;
};
struct ConfigMismatch : Error {
    using Error::Error;
};

// Checker errors
struct SamplerContractBroken : Error {
    using Error::Error;
};

// Bihari errors
struct RangeExceeded : Error {
    using Error::Error;
};

}  // namespace sfde

#endif
