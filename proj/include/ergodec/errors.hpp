#pragma once

#include <stdexcept>
#include <string>

namespace ergodec {

// Base class for all errors raised by the toolkit.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Point and system variants do not fit together (e.g. symbol stream fed to a
// circle rotation).
struct TypeMismatchError : Error {
    using Error::Error;
};

// Two moment vectors from different test-function families were combined.
struct FamilyMismatchError : Error {
    using Error::Error;
};

// A (measure, function) pair with no closed-form moment. The message names
// both sides.
struct UnsupportedPairError : Error {
    using Error::Error;
};

// Invalid or inconsistent configuration / registration input.
struct ConfigError : Error {
    using Error::Error;
};

// Requested enumeration or orbit length exceeds the supported size.
struct SizeError : Error {
    using Error::Error;
};

// decompose() could not produce a usable decomposition. Carries the verdict
// fractions so the caller can see whether the detector was too strict.
struct DecompositionFailedError : Error {
    double converged_frac;
    double undecided_frac;
    double not_converged_frac;
    DecompositionFailedError(const std::string& msg, double conv, double undec, double nc)
        : Error(msg), converged_frac(conv), undecided_frac(undec), not_converged_frac(nc) {}
};

// An atom of a decomposition could not be matched to any registered component.
struct AtomMatchError : Error {
    using Error::Error;
};

} // namespace ergodec
