#pragma once

#include <stdexcept>
#include <string>

namespace mjs {

/// Error kinds raised by the library. Each maps to a coarse status code at
/// the C API boundary; the fine-grained kind is kept for diagnostics.
enum class Err {
    ChartViolation,
    Degenerate,
    NoConvergence,
    OutOfRange,
    EnergyTooLow,
    EmptyTorus,
    SingularJacobian,
    ClassificationChange,
    SmallDivisor,
    ResidualTooLarge,
    NotOnSurface,
    NotParallel,
    NotRational,
    DegenerateCritical,
    StepUnderflow,
    NoCrossing,
    Tangency,
    NotPeriodic,
    IllConditioned,
    TooFewSamples,
    EmptyTrajectory,
    WindowEmpty,
    NotPositive,
    NotConverged,
    TooFewEigenvalues,
    NotClosed,
    ConfigError,
    InvalidArgument,
};

const char* err_name(Err kind);

class Error : public std::runtime_error {
public:
    Error(Err kind, const std::string& msg)
        : std::runtime_error(std::string(err_name(kind)) + ": " + msg), kind_(kind) {}

    Err kind() const { return kind_; }

private:
    Err kind_;
};

[[noreturn]] inline void fail(Err kind, const std::string& msg) { throw Error(kind, msg); }

inline void require(bool cond, Err kind, const std::string& msg) {
    if (!cond) fail(kind, msg);
}

}  // namespace mjs
