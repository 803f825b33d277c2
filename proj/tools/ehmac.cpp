// ehmac: offline and online schedules for energy-harvesting MIMO multiple access.
//
// Exit status: 0 ok, 1 bad input, 2 solver failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ehmac/bca.hpp"
#include "ehmac/error.hpp"
#include "ehmac/harness.hpp"

namespace fs = std::filesystem;
using namespace ehmac;

namespace {

std::ofstream open_output(const fs::path& path)
{
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot write " + path.string());
    return out;
}

void write_schedule(const fs::path& path, const Scenario& s, const PowerSchedule& p)
{
    auto out = open_output(path);
    out << "epoch,start,end";
    for (int k = 0; k < s.users(); ++k) out << ",p" << k + 1;
    out << '\n';
    char buf[64];
    for (int i = 0; i < s.epochs(); ++i) {
        out << i;
        std::snprintf(buf, sizeof buf, ",%.17g,%.17g", s.grid().start(i), s.grid().end(i));
        out << buf;
        for (int k = 0; k < s.users(); ++k) {
            std::snprintf(buf, sizeof buf, ",%.17g", p(i, k));
            out << buf;
        }
        out << '\n';
    }
}

// Per epoch, per user: {"re": rows, "im": rows}.
void write_covariances(const fs::path& path, const Scenario& s, const CovarianceSchedule& q)
{
    nlohmann::json epochs = nlohmann::json::array();
    for (int i = 0; i < s.epochs(); ++i) {
        nlohmann::json users = nlohmann::json::array();
        for (const auto& m : q[i]) {
            nlohmann::json re = nlohmann::json::array(), im = nlohmann::json::array();
            for (int r = 0; r < m.rows(); ++r) {
                std::vector<double> a, b;
                for (int c = 0; c < m.cols(); ++c) {
                    a.push_back(m(r, c).real());
                    b.push_back(m(r, c).imag());
                }
                re.push_back(a);
                im.push_back(b);
            }
            users.push_back({{"re", re}, {"im", im}});
        }
        epochs.push_back({{"start", s.grid().start(i)}, {"end", s.grid().end(i)}, {"users", users}});
    }
    open_output(path) << nlohmann::json{{"epochs", epochs}}.dump(1) << '\n';
}

std::string kkt_text(const KktReport& r, double tolerance)
{
    std::ostringstream out;
    out << "feasible " << (r.feasibility.feasible() ? "yes" : "no") << '\n'
        << "worst_spread " << r.worst_spread << '\n'
        << "worst_idle " << r.worst_idle << '\n'
        << "worst_chain " << r.worst_chain << '\n'
        << "passes_at " << tolerance << ' ' << (r.passes(tolerance) ? "yes" : "no") << '\n';
    return out.str();
}

struct SolveArgs {
    std::string file;
    std::string out_dir = ".";
    double eps = 1e-4;
    int max_sweeps = 200;
};

int run_solve(const SolveArgs& a)
{
    const auto s = read_scenario(fs::path(a.file));
    BcaOptions options;
    options.tolerance = a.eps;
    options.max_sweeps = a.max_sweeps;
    const auto r = solve(s, options);
    const auto kkt = verify_kkt(s, r.powers);
    const fs::path dir(a.out_dir);
    write_schedule(dir / "schedule.csv", s, r.powers);
    write_covariances(dir / "covariances.json", s, r.covariances);
    open_output(dir / "kkt.txt") << kkt_text(kkt, 1e-2);
    {
        auto out = open_output(dir / "trace.csv");
        out << "sweep,W\n";
        for (std::size_t q = 0; q < r.trace.size(); ++q) out << q << ',' << std::setprecision(17) << r.trace[q] << '\n';
    }
    std::printf("sweeps %d\nthroughput_bits %.10g\nthroughput_bps %.10g\n", r.sweeps, r.throughput(),
                r.throughput() / s.horizon());
    std::cout << kkt_text(kkt, 1e-2);
    return 0;
}

struct SimulateArgs {
    ExperimentConfig config;
    std::vector<std::string> schemes;
    std::string initial = "random";
    double capacity = 10.0;
    std::string out;
    std::string traces;
};

void write_traces(std::ostream& out, const std::vector<CellResult>& cells)
{
    out << "T,lambda,trial,sweep,W\n";
    char line[128];
    for (const auto& cell : cells)
        for (std::size_t t = 0; t < cell.outcomes.size(); ++t)
            for (std::size_t q = 0; q < cell.outcomes[t].trace.size(); ++q) {
                std::snprintf(line, sizeof line, "%.6g,%.6g,%zu,%zu,%.10g\n", cell.horizon, cell.rate, t, q,
                              cell.outcomes[t].trace[q]);
                out << line;
            }
}

int run_simulate(SimulateArgs a)
{
    auto& c = a.config;
    if (!a.schemes.empty()) {
        c.schemes.clear();
        for (const auto& name : a.schemes) c.schemes.push_back(parse_scheme(name));
    }
    if (a.initial == "zero") c.initial = InitialEnergy::Zero;
    else if (a.initial != "random") throw InvalidInput("--initial must be random or zero");
    c.capacity = a.capacity;
    const auto cells = run_experiment(c);
    if (a.out.empty()) write_csv(std::cout, cells);
    else {
        auto out = open_output(a.out);
        write_csv(out, cells);
    }
    if (!a.traces.empty()) {
        auto out = open_output(a.traces);
        write_traces(out, cells);
    }
    return 0;
}

struct CurvesArgs {
    std::string file;
    std::string out_dir = ".";
    double eps = 1e-4;
};

int run_curves(const CurvesArgs& a)
{
    const auto s = read_scenario(fs::path(a.file));
    BcaOptions options;
    options.tolerance = a.eps;
    const auto r = solve(s, options);
    for (const auto& path : write_curves(a.out_dir, emit_curves(s, initialize(s), r.powers)))
        std::cout << path.string() << '\n';
    return 0;
}

struct ConvergenceArgs {
    ExperimentConfig config;
    std::string out;
};

int run_convergence(ConvergenceArgs a)
{
    auto& c = a.config;
    c.schemes = {Scheme::Bca};
    validate(c);
    std::ostringstream text;
    text << "lambda,trial,sweep,W\n";
    char line[128];
    for (double rate : c.rates)
        for (int t = 0; t < c.trials; ++t) {
            auto rng = trial_rng(c.seed, t);
            const auto s = generate_scenario(c, c.horizons.front(), rate, rng);
            BcaOptions options;
            options.tolerance = c.tolerance;
            const auto r = solve(s, options);
            for (std::size_t q = 0; q < r.trace.size(); ++q) {
                std::snprintf(line, sizeof line, "%.6g,%d,%zu,%.10g\n", rate, t, q, r.trace[q]);
                text << line;
            }
        }
    if (a.out.empty()) std::cout << text.str();
    else open_output(a.out) << text.str();
    return 0;
}

void add_model_flags(CLI::App* cmd, ExperimentConfig& c)
{
    cmd->add_option("--K", c.users, "users")->check(CLI::PositiveNumber);
    cmd->add_option("--nt", c.tx_antennas, "transmit antennas per user")->check(CLI::PositiveNumber);
    cmd->add_option("--nr", c.rx_antennas, "receive antennas")->check(CLI::PositiveNumber);
    cmd->add_option("--mean-energy", c.mean_energy, "mean arrival energy, J")->check(CLI::PositiveNumber);
    cmd->add_option("--eps", c.tolerance, "BCA relative stopping tolerance")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", c.seed, "RNG seed");
    cmd->add_option("--trials", c.trials, "trials per cell")->check(CLI::PositiveNumber);
    cmd->add_option("--threads", c.threads, "worker threads (default: EHMAC_THREADS or all cores)");
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Energy-harvesting MIMO multiple-access scheduling"};
    app.require_subcommand(1);

    SolveArgs solve_args;
    auto* solve_cmd = app.add_subcommand("solve", "optimal offline schedule, covariances and KKT report");
    solve_cmd->add_option("file", solve_args.file, "scenario JSON")->required();
    solve_cmd->add_option("--out-dir", solve_args.out_dir, "output directory");
    solve_cmd->add_option("--eps", solve_args.eps, "BCA relative stopping tolerance")->check(CLI::PositiveNumber);
    solve_cmd->add_option("--max-sweeps", solve_args.max_sweeps, "BCA sweep cap")->check(CLI::PositiveNumber);

    SimulateArgs sim;
    sim.config.trials = 40;
    auto* sim_cmd = app.add_subcommand("simulate", "Monte-Carlo throughput per scheme");
    sim_cmd->add_option("--lambda", sim.config.rates, "arrival rates, 1/s")->delimiter(',');
    sim_cmd->add_option("--T", sim.config.horizons, "horizons, s")->delimiter(',');
    sim_cmd->add_option("--schemes", sim.schemes, "comma-separated schemes")->delimiter(',');
    sim_cmd->add_option("--emax", sim.capacity, "battery capacity, J")->check(CLI::PositiveNumber);
    sim_cmd->add_option("--initial", sim.initial, "initial battery energy: random or zero");
    sim_cmd->add_flag("--adaptive", sim.config.adaptive_online, "online scheduler estimates rate and mean");
    sim_cmd->add_option("--out", sim.out, "CSV path (default stdout)");
    sim_cmd->add_option("--traces", sim.traces, "CSV path for per-trial BCA traces");
    add_model_flags(sim_cmd, sim.config);

    CurvesArgs curves_args;
    auto* curves_cmd = app.add_subcommand("curves", "arrival, minimum and departure curves per user");
    curves_cmd->add_option("file", curves_args.file, "scenario JSON")->required();
    curves_cmd->add_option("--out-dir", curves_args.out_dir, "output directory");
    curves_cmd->add_option("--eps", curves_args.eps, "BCA relative stopping tolerance")->check(CLI::PositiveNumber);

    ConvergenceArgs conv;
    conv.config.trials = 1;
    conv.config.horizons = {30.0};
    conv.config.rates = {0.1, 0.2, 0.3, 0.4};
    auto* conv_cmd = app.add_subcommand("convergence", "per-sweep BCA throughput traces");
    conv_cmd->add_option("--lambda-list", conv.config.rates, "arrival rates, 1/s")->delimiter(',');
    conv_cmd->add_option("--T", conv.config.horizons.front(), "horizon, s")->check(CLI::PositiveNumber);
    conv_cmd->add_option("--out", conv.out, "CSV path (default stdout)");
    add_model_flags(conv_cmd, conv.config);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*solve_cmd) return run_solve(solve_args);
        if (*sim_cmd) return run_simulate(sim);
        if (*curves_cmd) return run_curves(curves_args);
        return run_convergence(conv);
    } catch (const InvalidInput& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const SolverError& e) {
        std::cerr << "solver failure: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
