#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ehmac {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed scenario, schedule, file or flag.
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// A numerical routine failed to reach its tolerance.
class SolverError : public Error {
public:
    SolverError(const std::string& what, double residual = 0.0)
        : Error(what), residual_(residual)
    {
    }
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// Block coordinate ascent hit its sweep cap; carries the throughput trace so far.
class ConvergenceError : public SolverError {
public:
    ConvergenceError(const std::string& what, std::vector<double> trace)
        : SolverError(what), trace_(std::move(trace))
    {
    }
    const std::vector<double>& trace() const noexcept { return trace_; }

private:
    std::vector<double> trace_;
};

}  // namespace ehmac
