#pragma once

#include "ehmac/model.hpp"

namespace ehmac {

/// First-phase constant power from the virtual-arrival candidates
///   P+_n = rate (battery + (n-1) mean) / n,  P-_n = rate (battery + n mean - capacity)^+ / n
/// for n = 1..ceil(rate * remaining) + 1, with the taut-string first-change rule.
double online_power(double battery, double capacity, double rate, double mean_energy, double remaining);

/// Causal scheduler fed one arrival instant at a time. At every instant each
/// user re-bases its battery and recomputes its power.
class OnlineScheduler {
public:
    OnlineScheduler(Vector capacities, double horizon, double rate, Vector mean_energy, bool adaptive = false);

    /// Energy observed at `time` (nondecreasing, below the horizon); returns the powers now held.
    const Vector& observe(double time, const Vector& energy);
    /// Transmits until `time` and returns the average powers over the span; a
    /// battery that runs dry stops its user.
    Vector advance(double time);

    const Vector& battery() const { return battery_; }
    const Vector& powers() const { return powers_; }
    double time() const { return now_; }

private:
    Vector capacities_;
    double horizon_;
    double rate_;
    Vector mean_;
    bool adaptive_;
    double now_ = 0.0;
    Vector battery_, powers_;
    Vector observed_count_, observed_energy_;
};

/// Batch run of OnlineScheduler over a scenario's arrivals, one row per epoch.
PowerSchedule online_schedule(const Scenario& scenario, double rate, const Vector& mean_energy,
                              bool adaptive = false);

/// Each user empties its battery by its next own arrival: constant power
/// (arrived - consumed) / (time to the next nonzero arrival), exhausting after the last.
PowerSchedule causality_satisfied(const Scenario& scenario);

/// Each user spends only what its next own arrival would overflow, then spreads
/// the remainder uniformly after its last nonzero arrival.
PowerSchedule non_overflow(const Scenario& scenario);

}  // namespace ehmac
