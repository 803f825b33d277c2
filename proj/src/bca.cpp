#include "ehmac/bca.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ehmac/error.hpp"

namespace ehmac {

PowerSchedule initialize(const Scenario& scenario)
{
    PowerSchedule p = PowerSchedule::Zero(scenario.epochs(), scenario.users());
    for (int k = 0; k < scenario.users(); ++k)
        p.col(k) = power_tautening(scenario.profile(k), scenario.grid()).powers;
    return p;
}

namespace {

template <class Visit>
void for_each_epoch_rate(const Scenario& scenario, const PowerSchedule& powers, Visit&& visit)
{
    if (powers.rows() != scenario.epochs() || powers.cols() != scenario.users())
        throw InvalidInput("power schedule shape does not match the scenario");
    const MacModel mac(scenario);
    std::vector<ComplexMatrix> warm;
    for (int i = 0; i < scenario.epochs(); ++i) {
        const Vector row = powers.row(i).transpose();
        auto r = weighted_sum_rate(mac, row, precise_rate_options(), warm.empty() ? nullptr : &warm);
        warm = r.covariances;
        visit(i, r);
    }
}

}  // namespace

double throughput(const Scenario& scenario, const PowerSchedule& powers)
{
    double w = 0.0;
    for_each_epoch_rate(scenario, powers,
                        [&](int i, const RateEvaluation& r) { w += scenario.grid().length(i) * r.value; });
    return w;
}

CovarianceSchedule covariances(const Scenario& scenario, const PowerSchedule& powers)
{
    CovarianceSchedule out(scenario.epochs());
    for_each_epoch_rate(scenario, powers,
                        [&](int i, RateEvaluation& r) { out[i] = std::move(r.covariances); });
    return out;
}

BcaResult solve(const Scenario& scenario, const BcaOptions& options)
{
    if (!(options.tolerance > 0.0)) throw InvalidInput("BCA tolerance must be positive");
    if (options.max_sweeps < 1) throw InvalidInput("BCA needs at least one sweep");

    const MacModel mac(scenario);
    BcaResult out;
    out.tolerance = options.tolerance;
    out.powers = options.initial ? *options.initial : initialize(scenario);
    const auto report = check_feasible(scenario, out.powers);
    if (!report.feasible()) throw InvalidInput("initial schedule is infeasible");
    out.trace.push_back(throughput(scenario, out.powers));

    std::vector<int> order(scenario.users());
    std::iota(order.begin(), order.end(), 0);
    if (options.reverse_order) std::reverse(order.begin(), order.end());

    for (int q = 1; q <= options.max_sweeps; ++q) {
        for (int k : order) {
            const auto& profile = scenario.profile(k);
            if (profile.empty()) {
                out.powers.col(k).setZero();
                continue;
            }
            // A zero-weight user is decoded first and never affects the objective.
            if (scenario.weights()[k] == 0.0) {
                out.powers.col(k) = power_tautening(profile, scenario.grid()).powers;
                continue;
            }
            const auto sol = schedule_user(mac, profile, scenario.grid(), out.powers, k);
            out.powers.col(k) = sol.powers;
            out.stats.candidate_evaluations += sol.stats.candidate_evaluations;
            out.stats.level_solves += sol.stats.level_solves;
            out.stats.phases += sol.stats.phases;
        }
        const double w = throughput(scenario, out.powers);
        const double previous = out.trace.back();
        out.trace.push_back(w);
        out.sweeps = q;
        if (w - previous <= options.tolerance * std::abs(previous)) {
            out.covariances = covariances(scenario, out.powers);
            return out;
        }
    }
    throw ConvergenceError("block coordinate ascent hit the sweep cap", out.trace);
}

namespace {

struct Interval {
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
};

}  // namespace

KktReport verify_kkt(const Scenario& scenario, const PowerSchedule& powers, KktLevel level)
{
    KktReport report;
    report.level = level;
    report.feasibility = check_feasible(scenario, powers);
    const MacModel mac(scenario);
    const auto& grid = scenario.grid();
    const int n = scenario.epochs();

    for (int k = 0; k < scenario.users(); ++k) {
        const auto& profile = scenario.profile(k);
        if (profile.empty() || scenario.weights()[k] == 0.0) continue;

        const MacModel single({scenario.channels()[k]}, Vector(Vector::Constant(1, scenario.weights()[k])));
        auto marginal = [&](int i, double p) {
            if (level == KktLevel::Decoupled) return marginal_rate(single, Vector::Constant(1, p), 0);
            Vector row = powers.row(i).transpose();
            row[k] = p;
            return marginal_rate(mac, row, k);
        };

        const Vector used = cumulative_consumption(grid, powers, k);
        const double tight = 1e-7 * std::max(1.0, profile.total());

        int first = 0;
        bool have_previous = false;
        Interval previous;
        bool previous_causal = false, previous_overflow = false;
        for (int j = 0; j < n; ++j) {
            const bool causal = j + 1 < n && profile.arrived()[j] - used[j] <= tight;
            const bool overflow = j + 1 < n && used[j] - profile.must_consume()[j] <= tight;
            if (j + 1 < n && !causal && !overflow) continue;

            // Epochs [first, j] share one price: no multiplier acts inside.
            double low = std::numeric_limits<double>::infinity(), high = 0.0, idle = 0.0;
            bool active = false;
            for (int i = first; i <= j; ++i) {
                if (powers(i, k) > 0.0) {
                    const double g = marginal(i, powers(i, k));
                    low = std::min(low, g);
                    high = std::max(high, g);
                    active = true;
                } else {
                    idle = std::max(idle, marginal(i, 0.0));
                }
            }
            Interval block;
            if (active) {
                const double price = 0.5 * (low + high);
                report.worst_spread = std::max(report.worst_spread, (high - low) / price);
                report.worst_idle = std::max(report.worst_idle, idle / price - 1.0);
                block = {low, high};
            } else {
                block.lo = idle;
            }

            // Causality-only ends need a falling price, overflow-only ends a rising one.
            if (have_previous) {
                Interval allowed = block;
                if (previous_causal && !previous_overflow) allowed.hi = std::min(allowed.hi, previous.hi);
                if (previous_overflow && !previous_causal) allowed.lo = std::max(allowed.lo, previous.lo);
                if (allowed.lo > allowed.hi) {
                    const double gap = (allowed.lo - allowed.hi) / std::max(allowed.hi, 1e-300);
                    report.worst_chain = std::max(report.worst_chain, gap);
                    allowed = block;
                }
                block = allowed;
            }
            previous = block;
            previous_causal = causal;
            previous_overflow = overflow;
            have_previous = true;
            first = j + 1;
        }
    }
    return report;
}

}  // namespace ehmac
