#pragma once

#include <optional>
#include <vector>

#include "ehmac/model.hpp"
#include "ehmac/rate_oracle.hpp"
#include "ehmac/tautening.hpp"

namespace ehmac {

/// Decoupled point-to-point schedules of every user, stacked by column.
PowerSchedule initialize(const Scenario& scenario);

/// W = sum_i L_i R(P_i), bits.
double throughput(const Scenario& scenario, const PowerSchedule& powers);

/// Per-epoch optimal covariances at fixed powers.
CovarianceSchedule covariances(const Scenario& scenario, const PowerSchedule& powers);

struct BcaOptions {
    double tolerance = 1e-4;  // relative increment of W that stops the sweeps
    int max_sweeps = 200;
    bool reverse_order = false;
    std::optional<PowerSchedule> initial;  // default: initialize(scenario)
};

struct BcaResult {
    PowerSchedule powers;
    CovarianceSchedule covariances;
    std::vector<double> trace;  // W^(0), W^(1), ... in bits
    int sweeps = 0;
    double tolerance = 0.0;
    TauteningStats stats;
    double throughput() const { return trace.back(); }
};

/// Gauss-Seidel block coordinate ascent over users. Throws ConvergenceError
/// carrying the W trace when max_sweeps is exhausted.
BcaResult solve(const Scenario& scenario, const BcaOptions& options = {});

/// Coupled: marginals of the full MAC. Decoupled: each user's own point-to-point link.
enum class KktLevel { Coupled, Decoupled };

struct KktReport {
    KktLevel level = KktLevel::Coupled;
    FeasibilityReport feasibility;
    double worst_spread = 0.0;  // relative price spread among active epochs with no tight constraint between them
    double worst_idle = 0.0;    // relative excess of g(0) over the price on idle epochs
    double worst_chain = 0.0;   // relative price move against the tight constraint's sign
    bool passes(double tolerance) const
    {
        return feasibility.feasible() && worst_spread <= tolerance && worst_idle <= tolerance &&
               worst_chain <= tolerance;
    }
};

/// Rebuilds each user's prices from finite-difference marginals and checks
/// stationarity, complementary slackness and the sign of the multipliers.
KktReport verify_kkt(const Scenario& scenario, const PowerSchedule& powers, KktLevel level = KktLevel::Coupled);

}  // namespace ehmac
