#pragma once

#include <stdexcept>
#include <string>

namespace effcap {

/// Bisection exhausted its iteration budget before meeting the tolerance.
class NonConvergence : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A user-supplied mgf/cumulant evaluator returned a non-finite value where
/// the root was expected (typically a heavy-tailed interarrival distribution).
class EvaluatorDiverged : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The exact finite-time enumeration would visit too many count vectors.
class EnumerationTooLarge : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Characteristic roots closer than the separation threshold; the
/// Vandermonde system is numerically singular. Fall back to the recursion.
class CoincidentRoots : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// No closed-form outage expression for this scheme/fading combination.
class NeedsMonteCarlo : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Interarrival times could not be placed on a common integer lattice.
class LatticeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Rate grid exceeds the exhaustive-search budget.
class GridTooLarge : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Configuration/schema violation; carries the offending key.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& key, const std::string& detail)
        : std::runtime_error(detail), key_(key) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

} // namespace effcap
