// dwellsim: command-line front end (simulate, dwell, trajectory, metrics).

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "dwellsim/dwellsim.hpp"

namespace fs = std::filesystem;
using namespace dwellsim;

namespace {

enum Exit : int { kOk = 0, kUsage = 1, kConfig = 2, kNumeric = 3, kMonitor = 4 };

struct ScenarioArgs {
    std::optional<std::string> preset;
    std::optional<std::string> config;

    void attach(CLI::App& cmd) {
        cmd.add_option("--preset", preset, "Built-in scenario")->check(CLI::IsMember(presets::names()));
        cmd.add_option("--config", config, "Scenario JSON; merged over --preset if both are given");
    }

    [[nodiscard]] Scenario load() const {
        std::optional<nlohmann::json> doc;
        if (config) doc = config::read_file(*config);
        return config::load(preset, doc);
    }
};

std::pair<std::uint64_t, std::uint64_t> parse_range(const std::string& s) {
    const auto dots = s.find("..");
    if (dots == std::string::npos) throw CLI::ValidationError("--seeds", "expected a..b");
    const auto a = std::stoull(s.substr(0, dots));
    const auto b = std::stoull(s.substr(dots + 2));
    if (b < a) throw CLI::ValidationError("--seeds", "empty range");
    return {a, b};
}

void echo(const Scenario& sc, const std::vector<std::string>& warnings) {
    std::cout << "derived " << config::derived(sc).dump() << "\n";
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

int simulate_one(const Scenario& sc, std::uint64_t seed, const fs::path& out, std::size_t decimate, std::mutex& io_lock) {
    Scenario s = sc;
    s.seed = seed;
    const RunResult r = run(s, seed, RunOptions{decimate});
    fs::create_directories(out);
    io::write_text(out / "log.csv", io::log_csv(r.log));
    io::write_text(out / "events.csv", io::events_csv(r.log.events));
    io::write_text(out / "metrics.json", io::run_summary(r, seed).dump(2) + "\n");
    nlohmann::json echo_doc = config::to_json(s);
    echo_doc["derived"] = config::derived(s);
    io::write_text(out / "scenario.json", echo_doc.dump(2) + "\n");

    const Metrics m = compute_metrics(r.log);
    std::lock_guard lock(io_lock);
    std::cout << "seed " << seed << ": " << (m.empty ? 0 : m.cycles.size()) << " cycles, max |z| " << r.max_z
              << ", mean max/min dwell " << m.mean_dt_u << "/" << m.mean_dt_a << " s, monitor "
              << (r.monitor_passed() ? "pass" : "FAIL (" + std::to_string(r.violations.size()) + " violations)")
              << " -> " << out.string() << "\n";
    if (r.fault) {
        std::cerr << "seed " << seed << ": aborted at step " << r.fault->step << " (t=" << r.fault->t
                  << "): " << r.fault->message << "\n";
        return r.fault->kind == FaultInfo::Kind::Numeric ? kNumeric : kMonitor;
    }
    return r.monitor_passed() ? kOk : kMonitor;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Closed-loop simulator for path following with intermittent state feedback"};
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "Run the closed loop and write log.csv, events.csv, metrics.json");
    ScenarioArgs sim_args;
    sim_args.attach(*sim);
    std::optional<std::uint64_t> seed;
    std::string seeds;
    std::string out_dir;
    std::size_t decimate = 1;
    sim->add_option("--seed", seed, "Disturbance seed (default: the scenario's)");
    sim->add_option("--seeds", seeds, "Seed range a..b, one output directory per seed")->excludes("--seed");
    sim->add_option("--out", out_dir, "Output directory")->required();
    sim->add_option("--decimate", decimate, "Log every K-th step")->check(CLI::PositiveNumber);

    // dwell
    auto* dwell = app.add_subcommand("dwell", "Dwell-time calculator");
    std::optional<double> V_entry, V_T, lambda_s, V_exit, V_M, lambda_u, e2_exit, k1, k2, c;
    double alpha = 0.0;
    double d_bar = 0.0;
    dwell->add_option("--V-entry", V_entry, "V at entry to F (m^2)");
    dwell->add_option("--V-T", V_T, "Exit threshold (m^2)");
    dwell->add_option("--lambda-s", lambda_s, "Decay rate in F (1/s)");
    dwell->add_option("--alpha", alpha, "Floor on the minimum dwell (s)")->check(CLI::NonNegativeNumber);
    dwell->add_option("--V-exit", V_exit, "V at exit from F (m^2)");
    dwell->add_option("--V-M", V_M, "Bound (m^2)");
    dwell->add_option("--lambda-u", lambda_u, "Growth rate outside F (1/s)");
    dwell->add_option("--d-bar", d_bar, "Disturbance bound (m/s)")->check(CLI::NonNegativeNumber);
    dwell->add_option("--e2-exit", e2_exit, "|e2| at exit; selects the single-integrator formula");
    dwell->add_option("--k1", k1, "Scalar controller gain (k1·I)");
    dwell->add_option("--k2", k2, "Scalar observer gain (k2·I)");
    dwell->add_option("--c", c, "Lipschitz constant");

    // trajectory
    auto* tr = app.add_subcommand("trajectory", "Sample the switching trajectory for fixed dwell times (CSV)");
    ScenarioArgs tr_args;
    tr_args.attach(*tr);
    double tr_dt_a = 0.5;
    double tr_dt_u = 2.0;
    std::size_t tr_cycles = 2;
    double tr_step = 0.01;
    std::string tr_out;
    tr->add_option("--dt-a", tr_dt_a, "Feedback dwell per cycle (s)")->check(CLI::PositiveNumber);
    tr->add_option("--dt-u", tr_dt_u, "Excursion dwell per cycle (s)")->check(CLI::PositiveNumber);
    tr->add_option("--cycles", tr_cycles, "Number of cycles")->check(CLI::PositiveNumber);
    tr->add_option("--step", tr_step, "Sample spacing (s)")->check(CLI::PositiveNumber);
    tr->add_option("--out", tr_out, "Output file (default: stdout)");

    // metrics
    auto* met = app.add_subcommand("metrics", "Recompute dwell tables from a run directory");
    std::string met_dir;
    met->add_option("dir", met_dir, "Directory written by simulate")->required()->check(CLI::ExistingDirectory);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (*sim) {
            const Scenario sc = sim_args.load();
            echo(sc, sc.validate());
            std::mutex io_lock;
            if (seeds.empty()) return simulate_one(sc, seed.value_or(sc.seed), out_dir, decimate, io_lock);
            const auto [a, b] = parse_range(seeds);
            std::atomic<std::uint64_t> next{a};
            std::atomic<int> worst{kOk};
            const unsigned workers =
                std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(), static_cast<unsigned>(b - a + 1)));
            std::vector<std::thread> pool;
            for (unsigned w = 0; w < workers; ++w) {
                pool.emplace_back([&] {
                    for (std::uint64_t s = next++; s <= b; s = next++) {
                        const int rc = simulate_one(sc, s, fs::path(out_dir) / ("seed_" + std::to_string(s)),
                                                    decimate, io_lock);
                        int prev = worst.load();
                        while (rc > prev && !worst.compare_exchange_weak(prev, rc)) {}
                    }
                });
            }
            for (auto& t : pool) t.join();
            return worst.load();
        }

        if (*dwell) {
            nlohmann::json outj;
            if (k1 && k2 && c) {
                const Rates r = compute_rates(*k1 * Matrix::Identity(1, 1), *k2 * Matrix::Identity(1, 1), *c);
                outj["lambda_s"] = r.lambda_s;
                outj["lambda_u"] = r.lambda_u;
                if (!lambda_s) lambda_s = r.lambda_s;
                if (!lambda_u) lambda_u = r.lambda_u;
            }
            if (V_entry && V_T && lambda_s) {
                const double f = min_dwell_formula(*V_entry, *V_T, *lambda_s);
                outj["min_dwell"] = std::max(alpha, f);
            }
            if (V_exit && V_M) {
                if (e2_exit) {
                    outj["max_dwell_integrator"] = max_dwell_single_integrator(*V_exit, *e2_exit, *V_M, d_bar);
                } else if (lambda_u) {
                    LyapunovBudget b{*V_M, 0.0, 0.0, 0.0};
                    Rates r;
                    r.lambda_u = *lambda_u;
                    outj["max_dwell"] = max_dwell(*V_exit, b, r, d_bar);
                }
            }
            if (outj.empty()) {
                std::cerr << "dwell: nothing to compute; give --V-entry/--V-T/--lambda-s and/or "
                             "--V-exit/--V-M with --lambda-u or --e2-exit\n"
                          << dwell->help();
                return kUsage;
            }
            for (const auto& [k, v] : outj.items()) std::cout << k << " " << v.dump() << "\n";
            return kOk;
        }

        if (*tr) {
            const Scenario sc = tr_args.load();
            (void)sc.validate();
            const SwitchingTrajectory traj = sc.trajectory();
            const DwellPolicy policy = sc.policy();
            std::string text = "t";
            for (Index i = 1; i <= sc.n; ++i) text += ",xbar" + std::to_string(i);
            for (Index i = 1; i <= sc.n; ++i) text += ",xbardot" + std::to_string(i);
            text += "\n";
            double t0 = 0.0;
            for (std::size_t i = 0; i < tr_cycles; ++i) {
                CyclePlan plan = traj.plan(i, t0, 0.0, policy, sc.intermediate_scale);
                plan.dt_a = tr_dt_a;
                plan.t_u = t0 + tr_dt_a;
                plan_exit(plan, 0.0, tr_dt_u, traj.weights());
                const bool last = i + 1 == tr_cycles;
                const auto count = static_cast<std::size_t>(std::floor((plan.t_u3 - t0) / tr_step + 1e-9));
                for (std::size_t k = 0; k <= count; ++k) {
                    const double t = t0 + static_cast<double>(k) * tr_step;
                    if (t >= plan.t_u3 && !last) break;
                    const Timed p = traj.eval(plan, std::min(t, plan.t_u3));
                    io::put_number(text, t);
                    for (double v : p.x) (text += ','), io::put_number(text, v);
                    for (double v : p.dx) (text += ','), io::put_number(text, v);
                    text += '\n';
                }
                t0 = plan.t_u3;
            }
            if (tr_out.empty()) {
                std::cout << text;
            } else {
                io::write_text(tr_out, text);
            }
            return kOk;
        }

        if (*met) {
            std::ifstream in(fs::path(met_dir) / "events.csv");
            if (!in) throw ConfigError("no events.csv in " + met_dir, "dir");
            const auto events = io::parse_events_csv(in);
            std::cout << io::metrics_json(compute_metrics(events, io::run_duration(events))).dump(2) << "\n";
            return kOk;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error" << (e.path().empty() ? "" : " at " + e.path()) << ": " << e.what() << "\n";
        return kConfig;
    } catch (const InfeasibleError& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return kConfig;
    } catch (const NumericFault& e) {
        std::cerr << "numeric fault at t=" << e.time() << ": " << e.what() << "\n";
        return kNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    }
    return kUsage;
}
