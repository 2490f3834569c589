// Command-line front end: simulate / certify / solve.

#include <chrono>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "sppc/harness.hpp"

namespace {

struct Common {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<int> runs;
    std::optional<int> horizon;
    std::optional<int> parallel;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config_path, "JSON configuration file (default: reference experiment)");
    cmd->add_option("--seed", c.seed, "Master seed");
    cmd->add_option("--out", c.out_dir, "Output directory");
    cmd->add_option("--runs", c.runs, "Number of Monte Carlo runs")->check(CLI::PositiveNumber);
    cmd->add_option("--horizon", c.horizon, "Simulation length in steps")->check(CLI::PositiveNumber);
    cmd->add_option("--parallel", c.parallel, "Worker threads")->check(CLI::PositiveNumber);
}

sppc::SimConfig resolve(const Common& c) {
    sppc::SimConfig cfg =
        c.config_path.empty() ? sppc::SimConfig::reference_defaults() : sppc::load_config(c.config_path);
    if (c.seed) cfg.master_seed = *c.seed;
    if (c.out_dir) cfg.output_dir = *c.out_dir;
    if (c.runs) cfg.runs = *c.runs;
    if (c.horizon) cfg.horizon = *c.horizon;
    if (c.parallel) cfg.threads = *c.parallel;
    cfg.validate();
    return cfg;
}

sppc::Vector parse_state(const std::string& text) {
    std::vector<double> vals;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            vals.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw sppc::ConfigError("--x: cannot parse '" + item + "'");
        }
    }
    sppc::Vector x(static_cast<Eigen::Index>(vals.size()));
    for (size_t i = 0; i < vals.size(); ++i) x(static_cast<Eigen::Index>(i)) = vals[i];
    return x;
}

void print_packet(const sppc::ControlPacket& p, const sppc::SolverReport& r) {
    std::cout << "U =";
    for (Eigen::Index i = 0; i < p.U.size(); ++i) std::cout << ' ' << sppc::format_double(p.U(i));
    std::cout << "\nsupport_size = " << r.support_size << "\niterations = " << r.iterations
              << "\nfinal_objective_or_residual = " << sppc::format_double(r.final_objective_or_residual)
              << "\nconverged = " << (r.converged ? "true" : "false") << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sparse packetized predictive control simulator"};
    app.require_subcommand(1);

    Common sim_opts, cert_opts, solve_opts;
    auto* simulate = app.add_subcommand("simulate", "Run the Monte Carlo experiment and write outputs");
    add_common(simulate, sim_opts);

    auto* certify = app.add_subcommand("certify", "Print stability certificates for a configuration");
    add_common(certify, cert_opts);

    auto* solve = app.add_subcommand("solve", "Compute one control packet for a given state");
    add_common(solve, solve_opts);
    std::string state_text;
    std::string controller = "both";
    solve->add_option("--x", state_text, "State as comma-separated values")->required();
    solve->add_option("--controller", controller, "l0_omp, l1l2_fista or both")
        ->check(CLI::IsMember({"l0_omp", "l1l2_fista", "both"}));

    CLI11_PARSE(app, argc, argv);

    try {
        if (simulate->parsed()) {
            const auto cfg = resolve(sim_opts);
            const auto start = std::chrono::steady_clock::now();
            const auto exp = sppc::prepare_experiment(cfg);
            sppc::MonteCarloOptions mc;
            mc.threads = cfg.threads;
            const auto results = sppc::run_monte_carlo(exp, mc);
            const auto files = sppc::emit_outputs(results, exp);
            const double secs =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            for (const auto& res : results) {
                std::cout << sppc::to_string(res.scenario.controller)
                          << " W_m=" << sppc::format_double(res.scenario.W_m)
                          << " steady_state_mean_state_norm="
                          << sppc::steady_state_mean(res.mean_state_norm, cfg.steady_state_window)
                          << " mean_packet_l0="
                          << sppc::steady_state_mean(res.mean_packet_l0, cfg.horizon) << '\n';
            }
            std::cout << "wrote " << files.size() << " files to " << cfg.output_dir.string() << " in "
                      << secs << " s\n";
        } else if (certify->parsed()) {
            const auto exp = sppc::prepare_experiment(resolve(cert_opts));
            std::cout << sppc::certificate_report(exp);
        } else if (solve->parsed()) {
            auto cfg = resolve(solve_opts);
            if (controller == "l0_omp") {
                cfg.controllers = {sppc::ControllerKind::l0_omp};
            } else if (controller == "l1l2_fista") {
                cfg.controllers = {sppc::ControllerKind::l1l2_fista};
            }
            const auto exp = sppc::prepare_experiment(cfg);
            const sppc::Vector x = parse_state(state_text);
            if (exp.l0) {
                std::cout << "[l0_omp]\n";
                const auto [p, r] = sppc::solve_l0_omp(*exp.l0, x);
                print_packet(p, r);
            }
            if (exp.l1l2) {
                std::cout << "[l1l2_fista]\n";
                const auto [p, r] = sppc::solve_l1l2_fista(*exp.l1l2, x, cfg.fista);
                print_packet(p, r);
            }
        }
    } catch (const sppc::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
