// Command-line front end: workload validation, lower-bound solving, fluid
// ODE analysis and simulation sweeps, all driven by a JSON config.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "malsched/config.hpp"
#include "malsched/csv.hpp"
#include "malsched/meanfield.hpp"
#include "malsched/relaxed.hpp"
#include "malsched/simulator.hpp"
#include "malsched/sweep.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitUnstable = 3;
constexpr int kExitInternal = 4;

struct CommonArgs {
    std::string config_path;
    std::string out_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> threads;
    bool no_timestamp = false;
};

std::size_t env_threads() {
    const char* v = std::getenv("MALSCHED_THREADS");
    if (!v) return 0;
    return static_cast<std::size_t>(std::strtoul(v, nullptr, 10));
}

malsched::ExperimentConfig load(const CommonArgs& args) {
    auto cfg = malsched::load_config(args.config_path);
    if (args.seed) cfg.sweep.base_seed = *args.seed;
    cfg.sweep.threads = args.threads ? *args.threads : env_threads();
    if (!args.out_path.empty()) cfg.out_path = args.out_path;
    return cfg;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    return out;
}

int cmd_validate(const CommonArgs& args) {
    auto cfg = load(args);
    auto sol = malsched::solve_relaxed(cfg.workload);
    std::cout << "config ok: " << cfg.workload.classes.size() << " classes, n = "
              << cfg.workload.n_cores << ", rho = " << cfg.workload.system_load()
              << ", V* = " << sol.value << "\n";
    if (sol.price_extreme)
        std::cout << "warning: multiplier " << sol.price
                  << " exceeds 1e6; the program is poorly conditioned near saturation\n";
    return kExitOk;
}

int cmd_lowerbound(const CommonArgs& args) {
    auto cfg = load(args);
    auto sol = malsched::solve_relaxed(cfg.workload);
    std::ostream& os = std::cout;
    for (std::size_t i = 0; i < sol.k.size(); ++i) os << "k_" << i << ",";
    os << "ell,value,sum_effective_load\n";
    double sum_r = 0.0;
    for (double r : sol.effective_load) sum_r += r;
    for (double k : sol.k) os << malsched::detail::fmt_num(k) << ",";
    os << malsched::detail::fmt_num(sol.price) << "," << malsched::detail::fmt_num(sol.value)
       << "," << malsched::detail::fmt_num(sum_r) << "\n";
    if (sol.price_extreme)
        std::cerr << "warning: multiplier exceeds 1e6; results may be poorly conditioned\n";
    return kExitOk;
}

int cmd_ode(const CommonArgs& args, std::size_t probes, double t_end) {
    auto cfg = load(args);
    const auto& classes = cfg.workload.classes;
    double n = cfg.workload.n_cores;
    auto st = malsched::fluid_stationary(classes, n);
    std::cout << "stationary price ell* = " << st.price << "\n";
    std::cout << "stationary cost      = " << st.cost << "\n";
    std::cout << "lower bound V*       = " << malsched::value_lower_bound(cfg.workload) << "\n";
    for (std::size_t i = 0; i < classes.size(); ++i)
        std::cout << "class " << i << ": g = " << st.allocation[i]
                  << ", z_total = " << st.z.class_total(i) << "\n";

    if (probes > 0) {
        malsched::RngStream rng(malsched::derive_seed({cfg.sweep.base_seed, 0x0DE}));
        std::size_t converged = 0;
        for (std::size_t p = 0; p < probes; ++p) {
            malsched::FluidState z0 = malsched::FluidState::zero(classes);
            for (auto& v : z0.z)
                for (Eigen::Index j = 0; j < v.size(); ++j) v(j) = rng.u01();
            for (std::size_t i = 0; i < classes.size(); ++i)
                z0.z[i] *= 2.0 * st.z.class_total(i) / std::max(z0.z[i].sum(), 1e-12);
            auto traj = malsched::fluid_integrate(z0, classes, n, t_end);
            double dist = traj.states.back().max_abs_diff(st.z);
            bool ok = dist < 1e-4;
            converged += ok;
            std::cout << "probe " << p << ": end distance " << dist
                      << (ok ? " (converged)" : " (NOT converged)") << "\n";
        }
        std::cout << converged << "/" << probes << " probes converged to z*\n";
        if (converged != probes) return kExitUnstable;
    }

    if (!cfg.out_path.empty()) {
        auto out = open_out(cfg.out_path);
        if (!args.no_timestamp) malsched::write_csv_timestamp(out);
        out << "t,class,phase,z\n";
        auto traj = malsched::fluid_integrate(malsched::FluidState::zero(classes), classes, n,
                                              t_end);
        for (std::size_t s = 0; s < traj.times.size(); ++s)
            for (std::size_t i = 0; i < classes.size(); ++i)
                for (Eigen::Index ph = 0; ph < traj.states[s].z[i].size(); ++ph)
                    out << malsched::detail::fmt_num(traj.times[s]) << "," << i << "," << ph << ","
                        << malsched::detail::fmt_num(traj.states[s].z[i](ph)) << "\n";
        std::cout << "trajectory written to " << cfg.out_path << "\n";
    }
    return kExitOk;
}

int run_and_emit(const malsched::ExperimentConfig& cfg, const CommonArgs& args) {
    auto cells = malsched::sweep(cfg.workload, cfg.sweep);
    auto rows = malsched::summarize(cfg.workload, cfg.sweep, cells);
    std::string out_path = cfg.out_path.empty() ? "results.csv" : cfg.out_path;
    {
        auto out = open_out(out_path);
        malsched::write_csv(out, rows, cfg.sweep.base_seed, !args.no_timestamp);
    }
    malsched::write_summary(std::cout, rows);
    std::cout << "rows written to " << out_path << "\n";
    for (const auto& c : cells)
        if (!c.ok()) std::cerr << "cell " << c.policy << " d=" << c.scale << " r=" << c.replica
                               << " failed: " << c.error << "\n";
    for (const auto& row : rows)
        if (row.flags != "ok") return kExitUnstable;
    return kExitOk;
}

int cmd_sweep(const CommonArgs& args) {
    auto cfg = load(args);
    return run_and_emit(cfg, args);
}

int cmd_simulate(const CommonArgs& args, const std::string& policy, double scale) {
    auto cfg = load(args);
    if (!policy.empty()) cfg.sweep.policies = {policy};
    cfg.sweep.scales = {scale > 0.0 ? scale : cfg.sweep.scales.front()};
    cfg.sweep.replicas = 1;
    return run_and_emit(cfg, args);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"core allocation policies for malleable jobs: simulation and analysis"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string policy;
    double scale = 0.0;
    std::size_t probes = 0;
    double t_end = 200.0;

    auto add_common = [&](CLI::App* sub, bool needs_out = false) {
        sub->add_option("--config", args.config_path, "JSON experiment config")->required();
        sub->add_option("--out", args.out_path, needs_out ? "output CSV path" : "output path");
        sub->add_option("--seed", args.seed, "override the config base seed");
        sub->add_option("--threads", args.threads, "worker threads (default: env/all cores)");
        sub->add_flag("--no-header-timestamp", args.no_timestamp,
                      "omit the timestamp comment from CSV output");
    };

    auto* validate = app.add_subcommand("validate", "check a config and report rho and V*");
    add_common(validate);
    auto* lowerbound =
        app.add_subcommand("lowerbound", "solve the relaxed program and print k*, ell*, V*");
    add_common(lowerbound);
    auto* ode = app.add_subcommand("ode", "fluid ODE stationary point and trajectories");
    add_common(ode);
    ode->add_option("--probe-attractor", probes, "integrate N random starts and test convergence");
    ode->add_option("--t-end", t_end, "integration end time");
    auto* simulate = app.add_subcommand("simulate", "run a single simulation cell");
    add_common(simulate, true);
    simulate->add_option("--policy", policy, "policy to run (default: first in config)");
    simulate->add_option("--scale", scale, "scale factor d (default: first in config)");
    auto* sweep = app.add_subcommand("sweep", "run the full experiment grid");
    add_common(sweep, true);

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(validate)) return cmd_validate(args);
        if (app.got_subcommand(lowerbound)) return cmd_lowerbound(args);
        if (app.got_subcommand(ode)) return cmd_ode(args, probes, t_end);
        if (app.got_subcommand(simulate)) return cmd_simulate(args, policy, scale);
        if (app.got_subcommand(sweep)) return cmd_sweep(args);
    } catch (const malsched::ConfigError& e) {
        std::cerr << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInternal;
    }
    return kExitOk;
}
