#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ehmac/model.hpp"

namespace ehmac {

enum class Scheme { Bca, PTautening, Online, CausalitySatisfied, NonOverflow };

std::string_view to_string(Scheme scheme);
Scheme parse_scheme(std::string_view name);  // throws InvalidInput
std::vector<Scheme> all_schemes();

/// Energy in the battery at t = 0: drawn like any other arrival, or none.
enum class InitialEnergy { Random, Zero };

struct ExperimentConfig {
    int users = 2;
    int tx_antennas = 2;
    int rx_antennas = 2;
    Vector weights;  // empty: all ones
    std::vector<double> horizons{10.0};
    std::vector<double> rates{0.1};  // arrivals per second
    double mean_energy = 5.0;        // J
    double capacity = 10.0;          // J
    int trials = 40;
    std::uint64_t seed = 1;
    std::vector<Scheme> schemes = all_schemes();
    double tolerance = 1e-4;
    InitialEnergy initial = InitialEnergy::Random;
    bool adaptive_online = false;
    int threads = 0;  // 0: EHMAC_THREADS or the hardware concurrency
};

void validate(const ExperimentConfig& config);

/// Independent stream per trial; identical across cells so cells share channels.
std::mt19937_64 trial_rng(std::uint64_t seed, int trial);

/// Compound-Poisson arrivals of rate `rate` on (0, horizon) with Uniform(0, 2 mean)
/// amounts clipped to the capacity, plus the t = 0 arrival; CN(0, 1) channel entries.
Scenario generate_scenario(const ExperimentConfig& config, double horizon, double rate, std::mt19937_64& rng);

struct TrialOutcome {
    std::vector<double> throughput;  // bits/s per scheme, NaN when the scheme failed
    std::vector<int> violations;     // per scheme; online schedules are checked with check_causal
    std::vector<double> trace;       // bca W^(q) in bits
    int sweeps = 0;
};

/// Runs every configured scheme on one scenario. Failures are recorded as NaN.
TrialOutcome run_trial(const ExperimentConfig& config, const Scenario& scenario, double rate);

struct SchemeSummary {
    Scheme scheme = Scheme::Bca;
    double mean = 0.0;
    double stderr_ = 0.0;
    int trials = 0;
    int failures = 0;
};

struct CellResult {
    double horizon = 0.0;
    double rate = 0.0;
    std::vector<SchemeSummary> schemes;
    std::vector<TrialOutcome> outcomes;
    const SchemeSummary& summary(Scheme scheme) const;
};

/// Monte-Carlo over trials of one (T, rate) cell, parallel over trials. Throws
/// SolverError when more than 5% of a scheme's trials fail.
CellResult run_cell(const ExperimentConfig& config, double horizon, double rate);

std::vector<CellResult> run_experiment(const ExperimentConfig& config);

/// Header `scheme,T,lambda,mean,stderr,trials,failures`, 6 significant digits.
void write_csv(std::ostream& out, const std::vector<CellResult>& cells);

int thread_count(int requested);

// Scenario files: JSON with K, Nt, Nr, T, weights, Emax, arrivals (per user a list
// of [t, E] pairs) and channels (per user Nr x Nt row-major interleaved re, im).
Scenario read_scenario(std::istream& in);
Scenario read_scenario(const std::filesystem::path& path);
void write_scenario(std::ostream& out, const Scenario& scenario);

/// Piecewise-linear curves as (t, J) breakpoints; steps repeat t.
using Curve = std::vector<std::pair<double, double>>;

struct UserCurves {
    Curve arrival;  // A_k
    Curve minimum;  // D_min,k
    Curve initial;  // D0_k, decoupled schedule
    Curve optimal;  // D*_k
};

struct CurveSet {
    std::vector<UserCurves> users;
};

Curve departure_curve(const EpochGrid& grid, const PowerSchedule& powers, int user);

/// Rejects schedules that fail check_feasible.
CurveSet emit_curves(const Scenario& scenario, const PowerSchedule& initial, const PowerSchedule& optimal);

/// Largest violation of D_min <= D <= A at the departure breakpoints (0 when sandwiched).
double sandwich_violation(const Scenario& scenario, const Curve& departure, int user);

/// Times at which the departure curve changes slope (relative tolerance on the slopes).
std::vector<double> slope_changes(const Curve& departure, double tolerance = 1e-9);

/// Writes user<k>_<curve>.csv files with header `t,energy`; returns the paths written.
std::vector<std::filesystem::path> write_curves(const std::filesystem::path& dir, const CurveSet& curves);

}  // namespace ehmac
