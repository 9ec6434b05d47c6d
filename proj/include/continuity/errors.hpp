#pragma once

#include <stdexcept>
#include <string>

namespace continuity {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// A state or intermediate stage value became non-finite during integration
// or training.  Callers that treat divergence as data (the convergence
// sweep, which records an infinite error instead of aborting) catch this.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, int stage, long step)
        : Error(what), stage_index(stage), step_index(step) {}
    int stage_index;   // which scheme stage produced the non-finite value
    long step_index;   // which step of the rollout (-1 if not in a rollout)
};

// Requested target times are not reachable with the given constant step.
class AlignmentError : public Error {
public:
    using Error::Error;
};

// Operand shapes disagree (state dimension, layer sizes, pair lengths).
class DimensionError : public Error {
public:
    using Error::Error;
};

// Malformed or inconsistent input data (files, trajectories, configs).
class DataError : public Error {
public:
    using Error::Error;
};

// A numerical subroutine could not produce a meaningful result
// (degenerate least-squares fit, no real root, singular solve).
class NumericalError : public Error {
public:
    using Error::Error;
};

// Bad invocation: unknown flags, missing required arguments or input files,
// refusing to overwrite without the force flag.
class UsageError : public Error {
public:
    using Error::Error;
};

}  // namespace continuity
