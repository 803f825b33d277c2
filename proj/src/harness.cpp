#include "ehmac/harness.hpp"

#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <limits>
#include <ostream>
#include <thread>

#include <json.hpp>

#include "ehmac/bca.hpp"
#include "ehmac/error.hpp"
#include "ehmac/online.hpp"

namespace ehmac {

namespace {

constexpr std::pair<Scheme, std::string_view> scheme_names[] = {
    {Scheme::Bca, "bca"},
    {Scheme::PTautening, "p-tautening"},
    {Scheme::Online, "online"},
    {Scheme::CausalitySatisfied, "causality-satisfied"},
    {Scheme::NonOverflow, "non-overflow"},
};

}  // namespace

std::string_view to_string(Scheme scheme)
{
    for (const auto& [s, name] : scheme_names)
        if (s == scheme) return name;
    return "unknown";
}

Scheme parse_scheme(std::string_view name)
{
    for (const auto& [s, n] : scheme_names)
        if (n == name) return s;
    throw InvalidInput("unknown scheme '" + std::string(name) + "'");
}

std::vector<Scheme> all_schemes()
{
    std::vector<Scheme> out;
    for (const auto& entry : scheme_names) out.push_back(entry.first);
    return out;
}

void validate(const ExperimentConfig& c)
{
    if (c.users < 1 || c.tx_antennas < 1 || c.rx_antennas < 1)
        throw InvalidInput("users and antenna counts must be positive");
    if (c.weights.size() != 0 && c.weights.size() != c.users)
        throw InvalidInput("weight vector length differs from user count");
    if (c.horizons.empty() || c.rates.empty()) throw InvalidInput("need at least one horizon and one rate");
    for (double t : c.horizons)
        if (!(t > 0.0) || !std::isfinite(t)) throw InvalidInput("horizons must be positive");
    for (double r : c.rates)
        if (!(r > 0.0) || !std::isfinite(r)) throw InvalidInput("arrival rates must be positive");
    if (!(c.mean_energy > 0.0)) throw InvalidInput("mean arrival energy must be positive");
    if (!(c.capacity > 0.0)) throw InvalidInput("battery capacity must be positive");
    if (c.trials < 1) throw InvalidInput("need at least one trial");
    if (c.schemes.empty()) throw InvalidInput("need at least one scheme");
    if (!(c.tolerance > 0.0)) throw InvalidInput("BCA tolerance must be positive");
}

std::mt19937_64 trial_rng(std::uint64_t seed, int trial)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(trial)};
    return std::mt19937_64(seq);
}

Scenario generate_scenario(const ExperimentConfig& c, double horizon, double rate, std::mt19937_64& rng)
{
    // One arrival stream per user, seeded before the channels: arrivals on (0, T) are a
    // prefix of those on (0, T') and do not depend on the antenna counts.
    std::vector<std::uint64_t> streams(c.users);
    for (auto& s : streams) s = rng();

    std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
    std::vector<ComplexMatrix> channels;
    for (int k = 0; k < c.users; ++k) {
        ComplexMatrix h(c.rx_antennas, c.tx_antennas);
        for (int r = 0; r < c.rx_antennas; ++r)
            for (int t = 0; t < c.tx_antennas; ++t) {
                const double re = gauss(rng);
                h(r, t) = {re, gauss(rng)};
            }
        channels.push_back(std::move(h));
    }

    std::uniform_real_distribution<double> amount(0.0, 2.0 * c.mean_energy);
    std::exponential_distribution<double> gap(rate);
    std::vector<ArrivalList> arrivals(c.users);
    for (int k = 0; k < c.users; ++k) {
        std::mt19937_64 user_rng(streams[k]);
        const double e0 = amount(user_rng);
        arrivals[k].push_back({0.0, c.initial == InitialEnergy::Random ? std::min(e0, c.capacity) : 0.0});
        for (double t = gap(user_rng); t < horizon; t += gap(user_rng)) {
            const double e = std::min(amount(user_rng), c.capacity);
            if (e > 0.0) arrivals[k].push_back({t, e});
        }
    }
    const Vector weights = c.weights.size() ? c.weights : Vector::Ones(c.users);
    return build_scenario(arrivals, std::move(channels), weights, Vector::Constant(c.users, c.capacity), horizon);
}

TrialOutcome run_trial(const ExperimentConfig& c, const Scenario& s, double rate)
{
    TrialOutcome out;
    out.throughput.assign(c.schemes.size(), std::numeric_limits<double>::quiet_NaN());
    out.violations.assign(c.schemes.size(), 0);
    const double horizon = s.horizon();

    for (std::size_t i = 0; i < c.schemes.size(); ++i) {
        try {
            PowerSchedule p;
            switch (c.schemes[i]) {
            case Scheme::Bca: {
                BcaOptions options;
                options.tolerance = c.tolerance;
                auto r = solve(s, options);
                out.trace = r.trace;
                out.sweeps = r.sweeps;
                out.throughput[i] = r.throughput() / horizon;
                out.violations[i] = static_cast<int>(check_feasible(s, r.powers).violations.size());
                continue;
            }
            case Scheme::PTautening:
                p = initialize(s);
                break;
            case Scheme::Online:
                p = online_schedule(s, rate, Vector::Constant(s.users(), c.mean_energy), c.adaptive_online);
                break;
            case Scheme::CausalitySatisfied:
                p = causality_satisfied(s);
                break;
            case Scheme::NonOverflow:
                p = non_overflow(s);
                break;
            }
            const auto report = c.schemes[i] == Scheme::Online ? check_causal(s, p) : check_feasible(s, p);
            out.violations[i] = static_cast<int>(report.violations.size());
            out.throughput[i] = throughput(s, p) / horizon;
        } catch (const SolverError&) {
        }
    }
    return out;
}

const SchemeSummary& CellResult::summary(Scheme scheme) const
{
    for (const auto& s : schemes)
        if (s.scheme == scheme) return s;
    throw InvalidInput("scheme '" + std::string(to_string(scheme)) + "' was not run");
}

int thread_count(int requested)
{
    if (requested > 0) return requested;
    if (const char* env = std::getenv("EHMAC_THREADS")) {
        char* end = nullptr;
        const long n = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && n > 0) return static_cast<int>(n);
        throw InvalidInput("EHMAC_THREADS must be a positive integer");
    }
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

CellResult run_cell(const ExperimentConfig& c, double horizon, double rate)
{
    validate(c);
    CellResult cell;
    cell.horizon = horizon;
    cell.rate = rate;
    cell.outcomes.resize(c.trials);

    std::atomic<int> next{0};
    std::exception_ptr error;
    std::atomic<bool> failed{false};
    auto worker = [&] {
        for (int i = next++; i < c.trials && !failed; i = next++) {
            try {
                auto rng = trial_rng(c.seed, i);
                const auto s = generate_scenario(c, horizon, rate, rng);
                cell.outcomes[i] = run_trial(c, s, rate);
            } catch (...) {
                if (!failed.exchange(true)) error = std::current_exception();
            }
        }
    };
    const int threads = std::min(thread_count(c.threads), c.trials);
    std::vector<std::thread> pool;
    for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);

    for (std::size_t i = 0; i < c.schemes.size(); ++i) {
        SchemeSummary sum;
        sum.scheme = c.schemes[i];
        // Kahan sums in trial order.
        double total = 0.0, comp = 0.0;
        std::vector<double> values;
        for (const auto& o : cell.outcomes) {
            const double v = o.throughput[i];
            if (std::isnan(v)) {
                ++sum.failures;
                continue;
            }
            values.push_back(v);
            const double y = v - comp;
            const double t = total + y;
            comp = (t - total) - y;
            total = t;
        }
        sum.trials = static_cast<int>(values.size());
        if (sum.failures > 0.05 * c.trials)
            throw SolverError(std::string(to_string(sum.scheme)) + " failed on more than 5% of trials",
                              static_cast<double>(sum.failures));
        if (sum.trials > 0) sum.mean = total / sum.trials;
        if (sum.trials > 1) {
            double ss = 0.0;
            for (double v : values) ss += (v - sum.mean) * (v - sum.mean);
            sum.stderr_ = std::sqrt(ss / (sum.trials - 1) / sum.trials);
        }
        cell.schemes.push_back(sum);
    }
    return cell;
}

std::vector<CellResult> run_experiment(const ExperimentConfig& c)
{
    validate(c);
    std::vector<CellResult> out;
    for (double rate : c.rates)
        for (double horizon : c.horizons) out.push_back(run_cell(c, horizon, rate));
    return out;
}

void write_csv(std::ostream& out, const std::vector<CellResult>& cells)
{
    out << "scheme,T,lambda,mean,stderr,trials,failures\n";
    char line[256];
    for (const auto& cell : cells)
        for (const auto& s : cell.schemes) {
            std::snprintf(line, sizeof line, "%s,%.6g,%.6g,%.6g,%.6g,%d,%d\n", std::string(to_string(s.scheme)).c_str(),
                          cell.horizon, cell.rate, s.mean, s.stderr_, s.trials, s.failures);
            out << line;
        }
}

namespace {

using nlohmann::json;

template <typename T>
T field(const json& j, const char* key)
{
    if (!j.contains(key)) throw InvalidInput(std::string("scenario file lacks '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw InvalidInput(std::string("scenario field '") + key + "': " + e.what());
    }
}

Vector to_vector(const std::vector<double>& v)
{
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

Scenario read_scenario(std::istream& in)
{
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw InvalidInput(std::string("scenario file is not valid JSON: ") + e.what());
    }
    const int users = field<int>(j, "K"), tx = field<int>(j, "Nt"), rx = field<int>(j, "Nr");
    const double horizon = field<double>(j, "T");
    if (users < 1 || tx < 1 || rx < 1) throw InvalidInput("K, Nt and Nr must be positive");
    const auto weights = field<std::vector<double>>(j, "weights");
    const auto capacities = field<std::vector<double>>(j, "Emax");
    const auto arrivals = field<std::vector<std::vector<std::array<double, 2>>>>(j, "arrivals");
    const auto channels = field<std::vector<std::vector<double>>>(j, "channels");
    const auto k = static_cast<std::size_t>(users);
    if (weights.size() != k || capacities.size() != k || arrivals.size() != k || channels.size() != k)
        throw InvalidInput("weights, Emax, arrivals and channels need one entry per user");

    std::vector<ComplexMatrix> h;
    for (const auto& entries : channels) {
        if (entries.size() != static_cast<std::size_t>(2 * rx * tx))
            throw InvalidInput("each channel needs 2 Nr Nt numbers");
        ComplexMatrix m(rx, tx);
        for (int r = 0; r < rx; ++r)
            for (int t = 0; t < tx; ++t) {
                const std::size_t at = 2 * static_cast<std::size_t>(r * tx + t);
                m(r, t) = {entries[at], entries[at + 1]};
            }
        h.push_back(std::move(m));
    }
    std::vector<ArrivalList> lists(k);
    for (std::size_t u = 0; u < k; ++u)
        for (const auto& [t, e] : arrivals[u]) lists[u].push_back({t, e});
    return build_scenario(lists, std::move(h), to_vector(weights), to_vector(capacities), horizon);
}

Scenario read_scenario(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open " + path.string());
    return read_scenario(in);
}

void write_scenario(std::ostream& out, const Scenario& s)
{
    json j;
    j["K"] = s.users();
    j["Nt"] = s.tx_antennas();
    j["Nr"] = s.rx_antennas();
    j["T"] = s.horizon();
    j["weights"] = std::vector<double>(s.weights().begin(), s.weights().end());
    const Vector caps = s.capacities();
    j["Emax"] = std::vector<double>(caps.begin(), caps.end());
    json arrivals = json::array();
    for (const auto& list : arrival_lists(s)) {
        json user = json::array();
        for (const auto& a : list) user.push_back({a.time, a.energy});
        arrivals.push_back(std::move(user));
    }
    j["arrivals"] = std::move(arrivals);
    json channels = json::array();
    for (const auto& h : s.channels()) {
        std::vector<double> entries;
        for (int r = 0; r < h.rows(); ++r)
            for (int t = 0; t < h.cols(); ++t) {
                entries.push_back(h(r, t).real());
                entries.push_back(h(r, t).imag());
            }
        channels.push_back(std::move(entries));
    }
    j["channels"] = std::move(channels);
    out << j.dump(1) << '\n';
}

Curve departure_curve(const EpochGrid& grid, const PowerSchedule& powers, int user)
{
    const Vector used = cumulative_consumption(grid, powers, user);
    Curve out{{0.0, 0.0}};
    for (int i = 0; i < grid.epochs(); ++i) out.emplace_back(grid.end(i), used[i]);
    return out;
}

namespace {

// Step curve through (t_i, before) and (t_i, after) at every instant where it jumps.
Curve staircase(const EpochGrid& grid, const Vector& level_after)
{
    Curve out{{0.0, 0.0}};
    double current = 0.0;
    for (int i = 0; i <= grid.epochs(); ++i) {
        const double t = grid.instants()[i];
        if (level_after[i] != current) {
            if (out.back().first != t) out.emplace_back(t, current);
            current = level_after[i];
            out.emplace_back(t, current);
        }
    }
    if (out.back().first != grid.horizon()) out.emplace_back(grid.horizon(), current);
    return out;
}

}  // namespace

CurveSet emit_curves(const Scenario& s, const PowerSchedule& initial, const PowerSchedule& optimal)
{
    for (const auto* p : {&initial, &optimal})
        if (p->rows() != s.epochs() || p->cols() != s.users() || !check_feasible(s, *p).feasible())
            throw InvalidInput("curves need a feasible schedule");

    CurveSet out;
    const int n = s.epochs();
    for (int k = 0; k < s.users(); ++k) {
        const auto& prof = s.profile(k);
        // Levels just after each instant t_0 .. t_N.
        Vector arrived(n + 1), minimum(n + 1);
        arrived.head(n) = prof.arrived();
        arrived[n] = prof.total();
        minimum[0] = 0.0;
        minimum.tail(n) = prof.must_consume();
        out.users.push_back({staircase(s.grid(), arrived), staircase(s.grid(), minimum),
                             departure_curve(s.grid(), initial, k), departure_curve(s.grid(), optimal, k)});
    }
    return out;
}

double sandwich_violation(const Scenario& s, const Curve& departure, int user)
{
    const auto& prof = s.profile(user);
    const int n = s.epochs();
    if (static_cast<int>(departure.size()) != n + 1) throw InvalidInput("departure curve does not match the grid");
    double worst = std::max(0.0, std::abs(departure.front().second));
    for (int i = 0; i < n; ++i) {
        const double d = departure[i + 1].second;
        // A(t_{i+1}-) and D_min(t_{i+1}); the final constraint is equality with the total.
        worst = std::max({worst, d - prof.arrived()[i], prof.must_consume()[i] - d});
        worst = std::max(worst, departure[i].second - d);
    }
    return worst;
}

std::vector<double> slope_changes(const Curve& departure, double tolerance)
{
    std::vector<double> out;
    for (std::size_t i = 1; i + 1 < departure.size(); ++i) {
        const auto [t0, d0] = departure[i - 1];
        const auto [t1, d1] = departure[i];
        const auto [t2, d2] = departure[i + 1];
        const double before = (d1 - d0) / (t1 - t0), after = (d2 - d1) / (t2 - t1);
        if (std::abs(after - before) > tolerance * std::max({std::abs(before), std::abs(after), 1e-300}))
            out.push_back(t1);
    }
    return out;
}

std::vector<std::filesystem::path> write_curves(const std::filesystem::path& dir, const CurveSet& curves)
{
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> written;
    char line[128];
    for (std::size_t k = 0; k < curves.users.size(); ++k) {
        const auto& u = curves.users[k];
        const std::pair<const char*, const Curve*> named[] = {
            {"arrival", &u.arrival}, {"minimum", &u.minimum}, {"initial", &u.initial}, {"optimal", &u.optimal}};
        for (const auto& [name, curve] : named) {
            const auto path = dir / ("user" + std::to_string(k + 1) + "_" + name + ".csv");
            std::ofstream out(path);
            if (!out) throw InvalidInput("cannot write " + path.string());
            out << "t,energy\n";
            for (const auto& [t, e] : *curve) {
                std::snprintf(line, sizeof line, "%.17g,%.17g\n", t, e);
                out << line;
            }
            written.push_back(path);
        }
    }
    return written;
}

}  // namespace ehmac
