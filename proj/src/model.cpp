#include "ehmac/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "ehmac/error.hpp"

namespace ehmac {

EpochGrid::EpochGrid(Vector instants) : instants_(std::move(instants))
{
    if (instants_.size() < 2) throw InvalidInput("epoch grid needs at least one epoch");
    if (instants_[0] != 0.0) throw InvalidInput("epoch grid must start at t = 0");
    for (Eigen::Index i = 1; i < instants_.size(); ++i) {
        if (!std::isfinite(instants_[i]) || !(instants_[i] > instants_[i - 1]))
            throw InvalidInput("epoch grid instants must be finite and strictly increasing");
    }
}

Vector EpochGrid::lengths() const
{
    const int n = epochs();
    return instants_.tail(n) - instants_.head(n);
}

EnergyProfile::EnergyProfile(Vector arrivals, double capacity)
    : arrivals_(std::move(arrivals)), capacity_(capacity)
{
    if (!(capacity_ > 0.0) || !std::isfinite(capacity_))
        throw InvalidInput("battery capacity must be positive and finite");
    if (arrivals_.size() == 0) throw InvalidInput("energy profile needs at least one epoch");
    for (double& e : arrivals_) {
        if (!(e >= 0.0) || !std::isfinite(e))
            throw InvalidInput("energy arrivals must be finite and nonnegative");
        e = std::min(e, capacity_);
    }

    const Eigen::Index n = arrivals_.size();
    arrived_.resize(n);
    must_consume_.resize(n);
    double sum = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        sum += arrivals_[j];
        arrived_[j] = sum;
    }
    for (Eigen::Index j = 0; j + 1 < n; ++j)
        must_consume_[j] = std::clamp(arrived_[j + 1] - capacity_, 0.0, arrived_[j]);
    must_consume_[n - 1] = arrived_[n - 1];
}

double EnergyProfile::tolerance() const { return 1e-9 * std::max(1.0, total()); }

Scenario::Scenario(std::vector<ComplexMatrix> channels, Vector weights, EpochGrid grid,
                   std::vector<EnergyProfile> profiles)
    : channels_(std::move(channels)),
      weights_(std::move(weights)),
      grid_(std::move(grid)),
      profiles_(std::move(profiles))
{
    if (channels_.empty()) throw InvalidInput("scenario needs at least one user");
    const auto rows = channels_.front().rows();
    const auto cols = channels_.front().cols();
    if (rows == 0 || cols == 0) throw InvalidInput("channel matrices must be nonempty");
    for (const auto& h : channels_) {
        if (h.rows() != rows || h.cols() != cols)
            throw InvalidInput("channel dimension mismatch among users");
        if (!h.allFinite()) throw InvalidInput("channel entries must be finite");
    }
    const auto k = static_cast<Eigen::Index>(channels_.size());
    if (weights_.size() != k) throw InvalidInput("weight vector length differs from user count");
    if (!weights_.allFinite() || (weights_.array() < 0.0).any())
        throw InvalidInput("weights must be finite and nonnegative");
    if (!(weights_.maxCoeff() > 0.0)) throw InvalidInput("at least one weight must be positive");
    if (grid_.epochs() < 1) throw InvalidInput("scenario needs an epoch grid");
    if (static_cast<Eigen::Index>(profiles_.size()) != k)
        throw InvalidInput("one energy profile per user required");
    for (const auto& p : profiles_) {
        if (p.epochs() != grid_.epochs())
            throw InvalidInput("energy profile length differs from the epoch grid");
    }
    for (int i = 1; i < grid_.epochs(); ++i) {
        const bool any = std::any_of(profiles_.begin(), profiles_.end(),
                                     [i](const EnergyProfile& p) { return p.arrivals()[i] > 0.0; });
        if (!any) throw InvalidInput("interior arrival instant without any positive arrival");
    }
}

Vector Scenario::capacities() const
{
    Vector c(users());
    for (int k = 0; k < users(); ++k) c[k] = profiles_[k].capacity();
    return c;
}

Scenario build_scenario(const std::vector<ArrivalList>& arrivals,
                        std::vector<ComplexMatrix> channels, Vector weights,
                        const Vector& capacities, double horizon)
{
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw InvalidInput("horizon must be positive");
    const auto k = channels.size();
    if (arrivals.size() != k) throw InvalidInput("one arrival list per user required");
    if (static_cast<std::size_t>(capacities.size()) != k)
        throw InvalidInput("one battery capacity per user required");

    std::set<double> instants;
    for (std::size_t u = 0; u < k; ++u) {
        std::set<double> seen;
        bool has_initial = false;
        for (const auto& a : arrivals[u]) {
            if (!std::isfinite(a.time) || a.time < 0.0 || a.time >= horizon)
                throw InvalidInput("arrival time outside [0, horizon) for user " + std::to_string(u + 1));
            if (!std::isfinite(a.energy) || a.energy < 0.0)
                throw InvalidInput("arrival energy must be finite and nonnegative");
            if (a.time > 0.0 && !(a.energy > 0.0))
                throw InvalidInput("interior arrivals must carry positive energy");
            if (!seen.insert(a.time).second)
                throw InvalidInput("duplicate arrival time for user " + std::to_string(u + 1));
            has_initial = has_initial || a.time == 0.0;
            instants.insert(a.time);
        }
        if (!has_initial)
            throw InvalidInput("user " + std::to_string(u + 1) + " has no initial arrival at t = 0");
    }

    Vector grid(static_cast<Eigen::Index>(instants.size()) + 1);
    Eigen::Index idx = 0;
    for (double t : instants) grid[idx++] = t;
    grid[idx] = horizon;
    const auto n = static_cast<Eigen::Index>(instants.size());

    std::vector<EnergyProfile> profiles;
    profiles.reserve(k);
    for (std::size_t u = 0; u < k; ++u) {
        Vector e = Vector::Zero(n);
        for (const auto& a : arrivals[u]) {
            const auto pos = std::lower_bound(grid.data(), grid.data() + n, a.time) - grid.data();
            e[pos] = a.energy;
        }
        profiles.emplace_back(std::move(e), capacities[static_cast<Eigen::Index>(u)]);
    }
    return Scenario(std::move(channels), std::move(weights), EpochGrid(std::move(grid)),
                    std::move(profiles));
}

std::vector<ArrivalList> arrival_lists(const Scenario& scenario)
{
    std::vector<ArrivalList> out(scenario.users());
    for (int u = 0; u < scenario.users(); ++u) {
        const auto& e = scenario.profile(u).arrivals();
        out[u].push_back({0.0, e[0]});
        for (int i = 1; i < scenario.epochs(); ++i)
            if (e[i] > 0.0) out[u].push_back({scenario.grid().start(i), e[i]});
    }
    return out;
}

std::string_view to_string(ConstraintKind kind)
{
    switch (kind) {
    case ConstraintKind::Negative: return "negative";
    case ConstraintKind::Causality: return "causality";
    case ConstraintKind::NonOverflow: return "non-overflow";
    case ConstraintKind::Exhaustion: return "exhaustion";
    }
    return "unknown";
}

Vector cumulative_consumption(const EpochGrid& grid, const PowerSchedule& powers, int user)
{
    Vector c(grid.epochs());
    double sum = 0.0;
    for (int i = 0; i < grid.epochs(); ++i) {
        sum += powers(i, user) * grid.length(i);
        c[i] = sum;
    }
    return c;
}

namespace {

void require_shape(const Scenario& s, const PowerSchedule& p)
{
    if (p.rows() != s.epochs() || p.cols() != s.users())
        throw InvalidInput("power schedule shape does not match the scenario");
}

}  // namespace

FeasibilityReport check_feasible(const EnergyProfile& profile, const EpochGrid& grid, const Vector& powers,
                                 int user, double tol_scale)
{
    const int n = grid.epochs();
    if (powers.size() != n || profile.epochs() != n)
        throw InvalidInput("power vector length does not match the epoch grid");
    FeasibilityReport report;
    const double tol = tol_scale * std::max(1.0, profile.total());
    double used = 0.0;
    for (int i = 0; i < n; ++i) {
        if (!(powers[i] >= 0.0)) report.violations.push_back({i, user, ConstraintKind::Negative, powers[i]});
        used += powers[i] * grid.length(i);
        if (i + 1 == n) break;
        const double causal = profile.arrived()[i] - used;
        if (causal < -tol) report.violations.push_back({i, user, ConstraintKind::Causality, causal});
        const double overflow = used - profile.must_consume()[i];
        if (overflow < -tol) report.violations.push_back({i, user, ConstraintKind::NonOverflow, overflow});
    }
    const double gap = -std::abs(used - profile.total());
    if (!(gap >= -tol)) report.violations.push_back({n - 1, user, ConstraintKind::Exhaustion, gap});
    return report;
}

FeasibilityReport check_feasible(const Scenario& scenario, const PowerSchedule& powers,
                                 double tol_scale)
{
    require_shape(scenario, powers);
    FeasibilityReport report;
    for (int k = 0; k < scenario.users(); ++k) {
        auto r = check_feasible(scenario.profile(k), scenario.grid(), powers.col(k), k, tol_scale);
        report.violations.insert(report.violations.end(), r.violations.begin(), r.violations.end());
    }
    return report;
}

FeasibilityReport check_causal(const Scenario& scenario, const PowerSchedule& powers,
                               double tol_scale)
{
    require_shape(scenario, powers);
    FeasibilityReport report;
    for (int k = 0; k < scenario.users(); ++k) {
        const auto& prof = scenario.profile(k);
        const double tol = tol_scale * std::max(1.0, prof.total());
        double battery = 0.0;
        for (int i = 0; i < scenario.epochs(); ++i) {
            battery = std::min(battery + prof.arrivals()[i], prof.capacity());
            if (!(powers(i, k) >= 0.0)) {
                report.violations.push_back({i, k, ConstraintKind::Negative, powers(i, k)});
                continue;
            }
            battery -= powers(i, k) * scenario.grid().length(i);
            if (battery < -tol) report.violations.push_back({i, k, ConstraintKind::Causality, battery});
            battery = std::max(battery, 0.0);
        }
    }
    return report;
}

}  // namespace ehmac
