#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "ehmac/model.hpp"

namespace ehmac::test {

inline ComplexMatrix random_channel(std::mt19937_64& rng, int rows, int cols)
{
    std::normal_distribution<double> n(0.0, std::sqrt(0.5));
    ComplexMatrix h(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) h(r, c) = {n(rng), n(rng)};
    return h;
}

inline std::vector<ComplexMatrix> random_channels(std::mt19937_64& rng, int users, int rows, int cols)
{
    std::vector<ComplexMatrix> out;
    for (int k = 0; k < users; ++k) out.push_back(random_channel(rng, rows, cols));
    return out;
}

inline ComplexMatrix scalar_channel(double gain)
{
    ComplexMatrix h(1, 1);
    h(0, 0) = gain;
    return h;
}

/// Single-arrival-per-instant scenario with given per-user arrivals on a fixed grid.
inline Scenario grid_scenario(std::vector<ComplexMatrix> channels, Vector weights,
                              const Vector& instants, const std::vector<Vector>& arrivals,
                              const std::vector<double>& capacities)
{
    std::vector<EnergyProfile> profiles;
    for (std::size_t k = 0; k < arrivals.size(); ++k) profiles.emplace_back(arrivals[k], capacities[k]);
    return Scenario(std::move(channels), std::move(weights), EpochGrid(instants), std::move(profiles));
}

/// Random arrivals on a random grid: initial energy always drawn, each interior
/// amount zero with probability `zero_probability`.
struct RandomProfile {
    Vector instants;
    Vector arrivals;
};

inline RandomProfile random_profile(std::mt19937_64& rng, int epochs, double capacity,
                                    double zero_probability = 0.0)
{
    std::uniform_real_distribution<double> len(0.2, 3.0);
    std::uniform_real_distribution<double> amount(0.0, 1.2 * capacity);
    std::bernoulli_distribution zero(zero_probability);
    RandomProfile out;
    out.instants.resize(epochs + 1);
    out.arrivals.resize(epochs);
    out.instants[0] = 0.0;
    for (int i = 0; i < epochs; ++i) {
        out.instants[i + 1] = out.instants[i] + len(rng);
        out.arrivals[i] = (i > 0 && zero(rng)) ? 0.0 : amount(rng);
    }
    return out;
}

/// K users on one random grid; user 0 arrives at every instant, the others at random.
inline Scenario random_scenario(std::mt19937_64& rng, int users, int rx, int tx, int epochs,
                                double capacity = 10.0, Vector weights = Vector())
{
    const auto base = random_profile(rng, epochs, capacity);
    std::vector<Vector> arrivals{base.arrivals};
    for (int k = 1; k < users; ++k) arrivals.push_back(random_profile(rng, epochs, capacity, 0.5).arrivals);
    if (weights.size() == 0) weights = Vector::Ones(users);
    return grid_scenario(random_channels(rng, users, rx, tx), weights, base.instants, arrivals,
                         std::vector<double>(users, capacity));
}

inline Vector vec(std::initializer_list<double> v)
{
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

}  // namespace ehmac::test
