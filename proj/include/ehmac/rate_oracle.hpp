#pragma once

#include <vector>

#include "ehmac/linalg.hpp"
#include "ehmac/model.hpp"

namespace ehmac {

/// Users sorted by descending weight (stable, ties by index) and the weight gaps
/// gaps[k] = w[order[k]] - w[order[k+1]] with a trailing zero weight.
struct WeightOrder {
    std::vector<int> order;
    Vector gaps;
};

WeightOrder weight_order(const Vector& weights);

/// Projected gradient ascent settings for the per-epoch log-det program.
struct RateOptions {
    int max_iterations = 5000;
    double armijo = 1e-4;
    double shrink = 0.5;
    double relative_tolerance = 1e-9;
    double gradient_tolerance = 1e-8;
};

/// Tighter settings for finite differences, price responses and throughput accounting.
RateOptions precise_rate_options();

struct RateEvaluation {
    double value = 0.0;                     // weighted sum rate, bits/s
    Vector rates;                           // per-user successive-decoding rates, bits/s
    Vector marginals;                       // dual estimate of dR/dP_k, bits/s/W
    std::vector<ComplexMatrix> covariances;
    int iterations = 0;
    double residual = 0.0;                  // final gradient-mapping norm
};

/// Channels, weights and decoding order of a time-invariant MIMO MAC.
class MacModel {
public:
    MacModel(std::vector<ComplexMatrix> channels, Vector weights);
    explicit MacModel(const Scenario& scenario);

    int users() const { return static_cast<int>(channels_.size()); }
    int tx_antennas() const { return static_cast<int>(channels_.front().cols()); }
    int rx_antennas() const { return static_cast<int>(channels_.front().rows()); }
    const ComplexMatrix& channel(int user) const { return channels_[user]; }
    const Vector& weights() const { return weights_; }
    const WeightOrder& order() const { return order_; }

private:
    std::vector<ComplexMatrix> channels_;
    Vector weights_;
    WeightOrder order_;
};

/// R(P): maximum of sum_k gaps[k] log2|I + sum_{u<=k} H Q H^H| over PSD Q with tr Q_k = P_k.
/// `start` optionally warm-starts the covariances; it is rescaled to the requested traces.
RateEvaluation weighted_sum_rate(const MacModel& mac, const Vector& powers,
                                 const RateOptions& options = {},
                                 const std::vector<ComplexMatrix>* start = nullptr);

/// dR/dP_k by finite differences of the optimal value (second-order one-sided near 0).
double marginal_rate(const MacModel& mac, const Vector& powers, int user,
                     const RateOptions& options = precise_rate_options());

/// The P_k >= 0 with marginal_rate(P_k) = target, or 0 when target >= marginal_rate(0).
/// Bisection on P_k; throws SolverError when the bracket passes 1e9 W.
double inverse_marginal(const MacModel& mac, const Vector& powers, int user, double target,
                        const RateOptions& options = precise_rate_options());

/// Best response of one user to a power price: argmax_{P_k >= 0} R(P_k, P_-k) - price * P_k,
/// solved directly over the user's unconstrained PSD covariance.
struct PriceResponse {
    double power = 0.0;
    std::vector<ComplexMatrix> covariances;
    int iterations = 0;
};

PriceResponse power_at_price(const MacModel& mac, const Vector& powers, int user, double price,
                             const RateOptions& options = precise_rate_options(),
                             const std::vector<ComplexMatrix>* start = nullptr);

}  // namespace ehmac
