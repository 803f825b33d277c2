#pragma once

#include <algorithm>
#include <limits>
#include <map>
#include <vector>

#include "ehmac/error.hpp"
#include "ehmac/model.hpp"
#include "ehmac/rate_oracle.hpp"

namespace ehmac {

enum class ChangeKind { Causality, Overflow };

/// A maximal run of epochs [first, last] held at one level. `kind` names the
/// constraint that is tight at the end of `last`.
struct Phase {
    int first = 0;
    int last = 0;
    double level = 0.0;
    double energy = 0.0;  // consumed during the phase
    ChangeKind kind = ChangeKind::Causality;
};

struct TauteningStats {
    long candidate_evaluations = 0;  // constraint indices visited by first-change scans
    long level_solves = 0;
    long phases = 0;
};

struct WaterLevelSolution {
    Vector levels;  // per-epoch level: water-level for MAC users, power for decoupled links
    Vector powers;
    std::vector<Phase> phases;
    TauteningStats stats;
};

/// Constant-power levels of a decoupled, time-invariant link.
class ConstantPowerLevels {
public:
    explicit ConstantPowerLevels(const EpochGrid& grid) : grid_(grid) {}
    double power(int, double level) const { return level; }
    double solve(int first, int last, double energy, double) const
    {
        return energy > 0.0 ? energy / (grid_.end(last) - grid_.start(first)) : 0.0;
    }

private:
    const EpochGrid& grid_;
};

/// Water-levels of one MAC user with every other user's powers held fixed:
/// power(i, w) = g_i^{-1}(1/w), the best response to the price 1/w in epoch i.
///
/// Epochs that see identical interference powers share one response curve; each
/// curve memoizes its evaluations and warm-starts the covariance solver.
class WaterLevels {
public:
    WaterLevels(const MacModel& mac, const PowerSchedule& powers, int user, const EpochGrid& grid);

    double power(int epoch, double level);
    /// Level w with sum_{i=first..last} L_i power(i, w) = energy: bisection on w,
    /// relative width 1e-13 or residual below `tolerance`.
    double solve(int first, int last, double energy, double tolerance);
    /// g_i(0): prices at or above this give zero power in epoch i.
    double marginal_at_zero(int epoch) const { return curves_[curve_of_[epoch]].zero_marginal; }
    long responses() const { return responses_; }

private:
    struct Curve {
        Vector powers;  // interference powers, own entry zeroed
        double zero_marginal = 0.0;
        std::map<double, double> memo;
        std::vector<ComplexMatrix> warm;
    };
    double energy(int first, int last, double level);

    const MacModel& mac_;
    const EpochGrid& grid_;
    int user_;
    std::vector<Curve> curves_;
    std::vector<int> curve_of_;
    long responses_ = 0;
};

/// String tautening over an energy profile: repeatedly find the first level change
/// and fix the powers up to it.
template <class Levels>
class StringTautener {
public:
    StringTautener(const EnergyProfile& profile, const EpochGrid& grid, Levels& levels)
        : profile_(profile), grid_(grid), levels_(levels), tolerance_(profile.tolerance())
    {
        if (profile.epochs() != grid.epochs()) throw InvalidInput("profile and grid lengths differ");
    }

    /// First phase of the remaining problem that starts at epoch `start` with
    /// `consumed` Joules already spent. Tracks the lowest causality level and the
    /// highest positive overflow level; ties go to the causality branch.
    Phase first_change(int start, double consumed)
    {
        const int last = grid_.epochs() - 1;
        constexpr double inf = std::numeric_limits<double>::infinity();
        double plus = inf, minus = 0.0;
        int tau_plus = -1, tau_minus = -1;
        double plus_energy = 0.0, minus_energy = 0.0;
        double sum_plus = 0.0, sum_minus = 0.0;  // phase energy at the current candidate levels

        for (int n = start; n <= last; ++n) {
            ++stats_.candidate_evaluations;
            const double causal = profile_.arrived()[n] - consumed;
            const double overflow = profile_.must_consume()[n] - consumed;
            const double length = grid_.length(n);

            bool solved_causal = false;
            double causal_level = 0.0;
            if (plus == inf) {
                causal_level = solve(start, n, causal);
                solved_causal = true;
            } else {
                sum_plus += length * levels_.power(n, plus);
                if (sum_plus >= causal) {
                    causal_level = solve(start, n, causal);
                    solved_causal = true;
                }
            }
            if (solved_causal && causal_level <= plus) {
                plus = causal_level;
                tau_plus = n;
                plus_energy = causal;
                sum_plus = energy(start, n, plus);
            }

            if (overflow > 0.0) {
                sum_minus += length * (minus > 0.0 ? levels_.power(n, minus) : 0.0);
                if (sum_minus <= overflow) {
                    const double level = (solved_causal && overflow == causal) ? causal_level
                                                                               : solve(start, n, overflow);
                    if (level > 0.0 && level >= minus) {
                        minus = level;
                        tau_minus = n;
                        minus_energy = overflow;
                        sum_minus = energy(start, n, minus);
                    }
                }
            }

            if (minus > plus && tau_minus < tau_plus)
                return finish(start, tau_minus, minus, minus_energy, ChangeKind::Overflow);
            if ((minus >= plus && tau_minus >= tau_plus) || tau_plus == last)
                return finish(start, tau_plus, plus, plus_energy, ChangeKind::Causality);
        }
        return finish(start, tau_plus, plus, plus_energy, ChangeKind::Causality);
    }

    WaterLevelSolution run()
    {
        const int n = grid_.epochs();
        WaterLevelSolution out;
        out.levels = Vector::Zero(n);
        out.powers = Vector::Zero(n);
        if (profile_.empty()) {
            out.phases.push_back({0, n - 1, 0.0, 0.0, ChangeKind::Causality});
            out.stats = stats_;
            return out;
        }
        int start = 0;
        double consumed = 0.0;
        while (start < n) {
            Phase phase = first_change(start, consumed);
            if (absorb_idle(out, phase)) {
                start = phase.last + 1;
                continue;
            }
            double sum = 0.0;
            for (int i = phase.first; i <= phase.last; ++i) {
                out.levels[i] = phase.level;
                out.powers[i] = levels_.power(i, phase.level);
                sum += out.powers[i] * grid_.length(i);
            }
            // Pin the phase energy to its tight constraint exactly.
            if (sum > 0.0) {
                const double scale = phase.energy / sum;
                for (int i = phase.first; i <= phase.last; ++i) out.powers[i] *= scale;
            } else if (phase.energy > tolerance_) {
                throw SolverError("phase level yields no power for a positive energy target", phase.energy);
            }
            out.phases.push_back(phase);
            ++stats_.phases;
            consumed += phase.energy;
            start = phase.last + 1;
        }
        snap_to_bounds(out.powers);
        out.stats = stats_;
        return out;
    }

    const TauteningStats& stats() const { return stats_; }

private:
    // An empty battery with no own arrival gives a zero-energy phase. If the previous
    // phase's level already spends nothing there, the idle epochs join that phase instead
    // of carrying a zero level (an infinite price).
    bool absorb_idle(WaterLevelSolution& out, const Phase& phase)
    {
        if (phase.energy != 0.0 || out.phases.empty()) return false;
        Phase& back = out.phases.back();
        if (back.kind != ChangeKind::Causality || !(back.level > 0.0)) return false;
        for (int i = phase.first; i <= phase.last; ++i)
            if (levels_.power(i, back.level) != 0.0) return false;
        for (int i = phase.first; i <= phase.last; ++i) out.levels[i] = back.level;
        back.last = phase.last;
        back.kind = phase.kind;
        return true;
    }

    // Level solves and covariance ascent leave powers accurate to ~1e-8 relative, which can
    // overdraw a constraint that is nearly tight inside a phase. Clamping the cumulative
    // consumption keeps it nondecreasing because both bounds are.
    void snap_to_bounds(Vector& powers) const
    {
        double raw = 0.0, previous = 0.0, moved = 0.0;
        for (int i = 0; i < grid_.epochs(); ++i) {
            raw += powers[i] * grid_.length(i);
            const double c = std::clamp(raw, profile_.must_consume()[i], profile_.arrived()[i]);
            moved = std::max(moved, std::abs(c - raw));
            powers[i] = std::max(c - previous, 0.0) / grid_.length(i);
            previous = std::max(c, previous);
        }
        if (moved > 1e-6 * std::max(1.0, profile_.total()))
            throw SolverError("water-level schedule missed its energy bounds", moved);
    }

    double solve(int first, int last, double target)
    {
        ++stats_.level_solves;
        return target > 0.0 ? levels_.solve(first, last, target, tolerance_) : 0.0;
    }

    double energy(int first, int last, double level)
    {
        double s = 0.0;
        if (level <= 0.0) return s;
        for (int i = first; i <= last; ++i) s += grid_.length(i) * levels_.power(i, level);
        return s;
    }

    Phase finish(int start, int tau, double level, double energy, ChangeKind kind) const
    {
        if (tau < start) throw SolverError("first-change scan found no feasible level");
        return {start, tau, level, std::max(energy, 0.0), kind};
    }

    const EnergyProfile& profile_;
    const EpochGrid& grid_;
    Levels& levels_;
    double tolerance_;
    TauteningStats stats_;
};

/// Decoupled point-to-point schedule: the taut string between the user's own
/// arrival and minimum-departure curves with constant-power phases.
WaterLevelSolution power_tautening(const EnergyProfile& profile, const EpochGrid& grid);

/// Optimal powers of `user` with every other column of `powers` held fixed.
WaterLevelSolution schedule_user(const MacModel& mac, const EnergyProfile& profile, const EpochGrid& grid,
                                 const PowerSchedule& powers, int user);

/// lambda_j - mu_j = 1/w_j - 1/w_{j+1} at phase ends; lambda at the horizon is 1/w.
struct PhaseMultipliers {
    Vector lambda;
    Vector mu;
    double worst_slackness = 0.0;  // largest slack / max(1, total) on a constraint with a positive multiplier
    double worst_direction = 0.0;  // largest relative level move against the tight constraint's kind
};

/// Multipliers of a water-level solution with its complementary-slackness and
/// change-direction residuals. A zero level is an infinite price.
PhaseMultipliers phase_multipliers(const WaterLevelSolution& solution, const EnergyProfile& profile,
                                   const EpochGrid& grid);

}  // namespace ehmac
