#include "ehmac/tautening.hpp"

#include <algorithm>
#include <cmath>

namespace ehmac {

WaterLevels::WaterLevels(const MacModel& mac, const PowerSchedule& powers, int user, const EpochGrid& grid)
    : mac_(mac), grid_(grid), user_(user)
{
    if (user < 0 || user >= mac.users()) throw InvalidInput("user index out of range");
    if (powers.rows() != grid.epochs() || powers.cols() != mac.users())
        throw InvalidInput("power schedule shape does not match the model");
    curve_of_.resize(grid.epochs());
    for (int i = 0; i < grid.epochs(); ++i) {
        Vector others = powers.row(i).transpose();
        others[user] = 0.0;
        auto it = std::find_if(curves_.begin(), curves_.end(),
                               [&](const Curve& c) { return c.powers == others; });
        if (it == curves_.end()) {
            Curve c;
            c.powers = others;
            const auto base = weighted_sum_rate(mac, others, precise_rate_options());
            c.zero_marginal = base.marginals[user];
            c.warm = base.covariances;
            curves_.push_back(std::move(c));
            it = curves_.end() - 1;
        }
        curve_of_[i] = static_cast<int>(it - curves_.begin());
    }
}

double WaterLevels::power(int epoch, double level)
{
    if (!(level > 0.0)) return 0.0;
    Curve& c = curves_[curve_of_[epoch]];
    const double price = 1.0 / level;
    if (price >= c.zero_marginal) return 0.0;
    if (auto it = c.memo.find(level); it != c.memo.end()) return it->second;
    auto r = power_at_price(mac_, c.powers, user_, price, precise_rate_options(), &c.warm);
    ++responses_;
    c.warm = std::move(r.covariances);
    c.memo.emplace(level, r.power);
    return r.power;
}

double WaterLevels::energy(int first, int last, double level)
{
    double s = 0.0;
    for (int i = first; i <= last; ++i) s += grid_.length(i) * power(i, level);
    return s;
}

double WaterLevels::solve(int first, int last, double target, double tolerance)
{
    if (!(target > 0.0)) return 0.0;
    constexpr double power_cap = 1e9;
    double threshold = 0.0;  // largest g_i(0) in range: below 1/threshold every power is zero
    for (int i = first; i <= last; ++i) threshold = std::max(threshold, marginal_at_zero(i));
    if (!(threshold > 0.0)) throw SolverError("user has no positive marginal rate in this range");

    const double duration = grid_.end(last) - grid_.start(first);
    if (target > power_cap * duration) throw SolverError("water-level bracket exceeded the power cap", target);
    double lo = 1.0 / threshold;
    double hi = 2.0 * lo;
    while (energy(first, last, hi) < target) {
        lo = hi;
        hi *= 2.0;
        if (!(hi < 1e300)) throw SolverError("water-level bracket did not close", target);
    }
    while (hi - lo > 1e-13 * hi) {
        const double mid = 0.5 * (lo + hi);
        const double e = energy(first, last, mid);
        if (e > 0.0 && std::abs(e - target) <= tolerance) return mid;
        if (e < target)
            lo = mid;
        else
            hi = mid;
    }
    return hi;  // energy(hi) >= target > 0
}

WaterLevelSolution power_tautening(const EnergyProfile& profile, const EpochGrid& grid)
{
    ConstantPowerLevels levels(grid);
    return StringTautener<ConstantPowerLevels>(profile, grid, levels).run();
}

WaterLevelSolution schedule_user(const MacModel& mac, const EnergyProfile& profile, const EpochGrid& grid,
                                 const PowerSchedule& powers, int user)
{
    WaterLevels levels(mac, powers, user, grid);
    return StringTautener<WaterLevels>(profile, grid, levels).run();
}

PhaseMultipliers phase_multipliers(const WaterLevelSolution& solution, const EnergyProfile& profile,
                                   const EpochGrid& grid)
{
    const int n = grid.epochs();
    PhaseMultipliers out;
    out.lambda = Vector::Zero(n);
    out.mu = Vector::Zero(n);
    if (solution.phases.empty()) return out;

    constexpr double inf = std::numeric_limits<double>::infinity();
    auto price = [&](const Phase& p) { return p.level > 0.0 ? 1.0 / p.level : inf; };

    Vector used(n);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        sum += solution.powers[i] * grid.length(i);
        used[i] = sum;
    }
    const double scale = std::max(1.0, profile.total());

    const auto& phases = solution.phases;
    for (std::size_t p = 0; p < phases.size(); ++p) {
        const Phase& cur = phases[p];
        const int j = cur.last;
        if (p + 1 == phases.size()) {
            out.lambda[j] = price(cur);
            continue;
        }
        const Phase& next = phases[p + 1];
        const double a = price(cur), b = price(next);
        double diff;
        if (a == inf && b == inf)
            diff = 0.0;
        else
            diff = a == inf ? inf : a - b;
        if (diff > 0.0)
            out.lambda[j] = diff;
        else if (diff < 0.0)
            out.mu[j] = -diff;

        const double causal_slack = std::abs(profile.arrived()[j] - used[j]) / scale;
        const double overflow_slack = std::abs(used[j] - profile.must_consume()[j]) / scale;
        if (out.lambda[j] > 0.0) out.worst_slackness = std::max(out.worst_slackness, causal_slack);
        if (out.mu[j] > 0.0) out.worst_slackness = std::max(out.worst_slackness, overflow_slack);

        // Levels rise after a causality-tight end and fall after an overflow-tight end.
        // An arrival that exactly fills the battery makes both tight and allows either.
        if (cur.level > 0.0) {
            const double rel = (next.level - cur.level) / cur.level;
            const bool causality = cur.kind == ChangeKind::Causality;
            const double other_slack = causality ? overflow_slack : causal_slack;
            const double against = causality ? -rel : rel;
            if (other_slack > 1e-9) out.worst_direction = std::max(out.worst_direction, against);
        }
    }
    return out;
}

}  // namespace ehmac
