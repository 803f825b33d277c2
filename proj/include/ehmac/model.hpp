#pragma once

#include <string_view>
#include <vector>

#include "ehmac/linalg.hpp"

namespace ehmac {

/// Per-epoch, per-user transmit power in Watts; rows are epochs, columns users.
using PowerSchedule = Eigen::MatrixXd;

/// Transmit covariances indexed [epoch][user].
using CovarianceSchedule = std::vector<std::vector<ComplexMatrix>>;

struct Arrival {
    double time = 0.0;    // seconds
    double energy = 0.0;  // Joules
};
using ArrivalList = std::vector<Arrival>;

/// Arrival instants t_0 = 0 < t_1 < ... < t_N = T.
class EpochGrid {
public:
    EpochGrid() = default;
    explicit EpochGrid(Vector instants);

    int epochs() const { return static_cast<int>(instants_.size()) - 1; }
    double horizon() const { return instants_[instants_.size() - 1]; }
    double start(int epoch) const { return instants_[epoch]; }
    double end(int epoch) const { return instants_[epoch + 1]; }
    double length(int epoch) const { return instants_[epoch + 1] - instants_[epoch]; }
    const Vector& instants() const { return instants_; }
    Vector lengths() const;

    friend bool operator==(const EpochGrid&, const EpochGrid&) = default;

private:
    Vector instants_;
};

/// One user's arrivals on the shared grid. Entry i is harvested at the start of epoch i.
///
/// Cumulative bounds are indexed by the epoch whose end they constrain:
/// arrived(j) = E_0 + ... + E_j bounds consumption through epoch j from above,
/// must_consume(j) = (E_0 + ... + E_{j+1} - E_max)^+ from below, and the last
/// entry of both equals the total so that every Joule is spent by T.
class EnergyProfile {
public:
    EnergyProfile() = default;
    /// Arrivals above the capacity are clipped to it; negative arrivals are rejected.
    EnergyProfile(Vector arrivals, double capacity);

    int epochs() const { return static_cast<int>(arrivals_.size()); }
    const Vector& arrivals() const { return arrivals_; }
    double capacity() const { return capacity_; }
    const Vector& arrived() const { return arrived_; }
    const Vector& must_consume() const { return must_consume_; }
    double total() const { return arrived_.size() ? arrived_[arrived_.size() - 1] : 0.0; }
    /// Feasibility tolerance 1e-9 * max(1, total).
    double tolerance() const;
    bool empty() const { return total() <= 0.0; }

    friend bool operator==(const EnergyProfile& a, const EnergyProfile& b)
    {
        return a.capacity_ == b.capacity_ && a.arrivals_ == b.arrivals_;
    }

private:
    Vector arrivals_;
    double capacity_ = 0.0;
    Vector arrived_;
    Vector must_consume_;
};

class Scenario {
public:
    Scenario() = default;
    Scenario(std::vector<ComplexMatrix> channels, Vector weights, EpochGrid grid,
             std::vector<EnergyProfile> profiles);

    int users() const { return static_cast<int>(channels_.size()); }
    int epochs() const { return grid_.epochs(); }
    int tx_antennas() const { return static_cast<int>(channels_.front().cols()); }
    int rx_antennas() const { return static_cast<int>(channels_.front().rows()); }
    double horizon() const { return grid_.horizon(); }

    const std::vector<ComplexMatrix>& channels() const { return channels_; }
    const Vector& weights() const { return weights_; }
    const EpochGrid& grid() const { return grid_; }
    const EnergyProfile& profile(int user) const { return profiles_[user]; }
    const std::vector<EnergyProfile>& profiles() const { return profiles_; }

    Vector capacities() const;

private:
    std::vector<ComplexMatrix> channels_;
    Vector weights_;
    EpochGrid grid_;
    std::vector<EnergyProfile> profiles_;
};

/// Merge per-user arrival lists onto the union grid, zero-pad and clip to capacity.
///
/// Every list must contain an entry at t = 0 (energy may be 0); interior entries
/// must have positive energy and lie in (0, horizon).
Scenario build_scenario(const std::vector<ArrivalList>& arrivals,
                        std::vector<ComplexMatrix> channels, Vector weights,
                        const Vector& capacities, double horizon);

/// The initial entry plus every nonzero interior arrival of each user.
std::vector<ArrivalList> arrival_lists(const Scenario& scenario);

enum class ConstraintKind { Negative, Causality, NonOverflow, Exhaustion };
std::string_view to_string(ConstraintKind kind);

struct Violation {
    int epoch = 0;  // constraint at the end of this epoch
    int user = 0;
    ConstraintKind kind = ConstraintKind::Causality;
    double slack = 0.0;  // negative
};

struct FeasibilityReport {
    std::vector<Violation> violations;
    bool feasible() const { return violations.empty(); }
};

/// Cumulative consumption through the end of each epoch.
Vector cumulative_consumption(const EpochGrid& grid, const PowerSchedule& powers, int user);

/// Causality, non-overflow and exhaustion constraints with tolerance tol_scale * max(1, total).
FeasibilityReport check_feasible(const Scenario& scenario, const PowerSchedule& powers,
                                 double tol_scale = 1e-9);

/// The same constraints for one user's powers; violations carry `user`.
FeasibilityReport check_feasible(const EnergyProfile& profile, const EpochGrid& grid, const Vector& powers,
                                 int user = 0, double tol_scale = 1e-9);

/// Physical check for causal schedulers: battery never overdrawn, overflow is lost
/// rather than forbidden and leftover energy at T is allowed.
FeasibilityReport check_causal(const Scenario& scenario, const PowerSchedule& powers,
                               double tol_scale = 1e-9);

}  // namespace ehmac
