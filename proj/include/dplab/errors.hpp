#pragma once

#include <stdexcept>
#include <string>

namespace dplab {

// Solver ran out of its iteration budget; carries the last measured residual.
class SolverFailure : public std::runtime_error {
public:
    SolverFailure(const std::string& what, double last_residual)
        : std::runtime_error(what), last_residual_(last_residual) {}
    double last_residual() const { return last_residual_; }

private:
    double last_residual_;
};

// No ladder element satisfies the discrepancy condition: the ladder is too
// coarse or the noise budget too small.
class NoAdmissibleLambda : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class CalibrationFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InconclusiveVerdict : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NoTameContinuation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InadmissibleDatum : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Field evolution produced NaN/overflow; carries the offending step index.
class EvolutionBlowup : public std::runtime_error {
public:
    EvolutionBlowup(const std::string& what, int step)
        : std::runtime_error(what), step_(step) {}
    int step() const { return step_; }

private:
    int step_;
};

// Fewer ensemble members survived than the configured quorum.
class QuorumFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Quantifier-prefix parse error; carries the token position.
class PrefixParseError : public std::runtime_error {
public:
    PrefixParseError(const std::string& what, std::size_t position)
        : std::runtime_error(what), position_(position) {}
    std::size_t position() const { return position_; }

private:
    std::size_t position_;
};

}  // namespace dplab
