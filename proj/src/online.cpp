#include "ehmac/online.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ehmac/error.hpp"

namespace ehmac {

double online_power(double battery, double capacity, double rate, double mean_energy, double remaining)
{
    if (!(remaining > 0.0) || !(battery > 0.0)) return 0.0;
    const int n_max = static_cast<int>(std::ceil(rate * remaining)) + 1;
    double plus = std::numeric_limits<double>::infinity(), minus = 0.0;
    int tau_plus = 0, tau_minus = 0;
    for (int n = 1; n <= n_max; ++n) {
        const double p_plus = rate * (battery + (n - 1) * mean_energy) / n;
        const double p_minus = rate * std::max(battery + n * mean_energy - capacity, 0.0) / n;
        if (p_plus <= plus) {
            plus = p_plus;
            tau_plus = n;
        }
        if (p_minus > 0.0 && p_minus >= minus) {
            minus = p_minus;
            tau_minus = n;
        }
        if (minus > plus && tau_minus < tau_plus) return minus;
        if ((minus >= plus && tau_minus >= tau_plus) || tau_plus == n_max) return plus;
    }
    return plus;
}

OnlineScheduler::OnlineScheduler(Vector capacities, double horizon, double rate, Vector mean_energy,
                                 bool adaptive)
    : capacities_(std::move(capacities)),
      horizon_(horizon),
      rate_(rate),
      mean_(std::move(mean_energy)),
      adaptive_(adaptive)
{
    const auto k = capacities_.size();
    if (k == 0 || mean_.size() != k) throw InvalidInput("one capacity and one mean energy per user required");
    if (!(horizon_ > 0.0)) throw InvalidInput("horizon must be positive");
    if (!(rate_ > 0.0) || !std::isfinite(rate_)) throw InvalidInput("arrival rate estimate must be positive");
    if (!(mean_.array() > 0.0).all() || !mean_.allFinite())
        throw InvalidInput("mean energy estimates must be positive");
    if (!(capacities_.array() > 0.0).all()) throw InvalidInput("battery capacities must be positive");
    battery_ = Vector::Zero(k);
    powers_ = Vector::Zero(k);
    observed_count_ = Vector::Zero(k);
    observed_energy_ = Vector::Zero(k);
}

const Vector& OnlineScheduler::observe(double time, const Vector& energy)
{
    if (time < now_ || time >= horizon_) throw InvalidInput("arrival times must be nondecreasing and before T");
    if (energy.size() != battery_.size()) throw InvalidInput("one energy amount per user required");
    if (time > now_) advance(time);
    for (Eigen::Index k = 0; k < battery_.size(); ++k) {
        if (!(energy[k] >= 0.0)) throw InvalidInput("arrival energy must be nonnegative");
        battery_[k] = std::min(battery_[k] + energy[k], capacities_[k]);
        if (time > 0.0 && energy[k] > 0.0) {
            observed_count_[k] += 1.0;
            observed_energy_[k] += energy[k];
        }
        double rate = rate_, mean = mean_[k];
        if (adaptive_ && observed_count_[k] > 0.0) {
            rate = observed_count_[k] / time;
            mean = observed_energy_[k] / observed_count_[k];
        }
        powers_[k] = online_power(battery_[k], capacities_[k], rate, mean, horizon_ - time);
    }
    return powers_;
}

Vector OnlineScheduler::advance(double time)
{
    if (time < now_ || time > horizon_) throw InvalidInput("cannot advance backwards or past the horizon");
    const double span = time - now_;
    Vector average = Vector::Zero(battery_.size());
    if (span <= 0.0) return average;
    for (Eigen::Index k = 0; k < battery_.size(); ++k) {
        const double spent = std::min(powers_[k] * span, battery_[k]);
        average[k] = spent / span;
        battery_[k] -= spent;
        if (battery_[k] <= 0.0) {
            battery_[k] = 0.0;
            powers_[k] = 0.0;
        }
    }
    now_ = time;
    return average;
}

PowerSchedule online_schedule(const Scenario& scenario, double rate, const Vector& mean_energy, bool adaptive)
{
    OnlineScheduler scheduler(scenario.capacities(), scenario.horizon(), rate, mean_energy, adaptive);
    PowerSchedule out(scenario.epochs(), scenario.users());
    const auto& grid = scenario.grid();
    for (int i = 0; i < scenario.epochs(); ++i) {
        Vector e(scenario.users());
        for (int k = 0; k < scenario.users(); ++k) e[k] = scenario.profile(k).arrivals()[i];
        scheduler.observe(grid.start(i), e);
        out.row(i) = scheduler.advance(grid.end(i)).transpose();
    }
    return out;
}

namespace {

/// Constant power between consecutive own nonzero arrivals: at each, spend
/// `target(j) - consumed` by the next one, where j is the constraint just before it.
template <class Target>
PowerSchedule between_own_arrivals(const Scenario& scenario, Target&& target)
{
    const auto& grid = scenario.grid();
    const int n = scenario.epochs();
    PowerSchedule out = PowerSchedule::Zero(n, scenario.users());
    for (int k = 0; k < scenario.users(); ++k) {
        const auto& profile = scenario.profile(k);
        double consumed = 0.0;
        int start = 0;
        while (start < n) {
            int next = start + 1;  // epoch index of the next own nonzero arrival
            while (next < n && profile.arrivals()[next] == 0.0) ++next;
            const int j = next - 1;
            const double goal = next == n ? profile.total() : target(profile, j);
            const double energy = std::max(goal - consumed, 0.0);
            const double p = energy / (grid.end(j) - grid.start(start));
            for (int i = start; i <= j; ++i) out(i, k) = p;
            consumed += energy;
            start = next;
        }
    }
    return out;
}

}  // namespace

PowerSchedule causality_satisfied(const Scenario& scenario)
{
    return between_own_arrivals(scenario, [](const EnergyProfile& p, int j) { return p.arrived()[j]; });
}

PowerSchedule non_overflow(const Scenario& scenario)
{
    return between_own_arrivals(scenario, [](const EnergyProfile& p, int j) { return p.must_consume()[j]; });
}

}  // namespace ehmac
