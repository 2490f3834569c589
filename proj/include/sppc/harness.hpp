#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sppc/analysis.hpp"
#include "sppc/controllers.hpp"
#include "sppc/network.hpp"

namespace sppc {

struct ConfigError : Error { using Error::Error; };

enum class ControllerKind { l0_omp, l1l2_fista };

std::string_view to_string(ControllerKind kind);

/// Everything needed to reproduce a Monte Carlo experiment. Loaded from a
/// JSON document whose keys mirror these fields (unknown keys are rejected).
struct SimConfig {
    // Plant. When builtin_plant is set, A and B hold the embedded example.
    bool builtin_plant = true;
    Matrix A;
    Vector B;

    int N = 10;
    std::optional<SymMatrix> Q;  // identity when unset
    std::vector<ControllerKind> controllers{ControllerKind::l0_omp, ControllerKind::l1l2_fista};

    double nu = 200.0;
    double r = 2.0;
    std::optional<double> zeta;
    std::optional<double> xi_scale;
    FistaOptions fista;

    DisturbanceMode disturbance_mode = DisturbanceMode::per_component_uniform;
    std::vector<double> W_m_values{1.0, 5.0, 10.0};

    DropoutMode dropout_mode = DropoutMode::uniform_burst;
    double drop_probability = 0.5;       // bernoulli_capped
    std::vector<bool> dropout_trace;     // trace

    int runs = 200;
    int horizon = 300;
    std::uint64_t master_seed = 1;
    std::optional<Vector> initial_state;  // i.i.d. standard normal when unset

    std::filesystem::path output_dir = "out";
    int threads = 1;
    bool allow_aborted_runs = false;
    bool plots = true;
    bool emit_traces = false;
    int steady_state_window = 100;

    /// The reference experiment: example plant, N = 10, Q = I, nu = 200,
    /// r = 2, W_m in {1, 5, 10}, uniform bursts, 200 runs of 300 steps.
    static SimConfig reference_defaults();

    PlantModel plant(double W_m) const;
    SymMatrix weight_Q() const;
    void validate() const;
};

SimConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir = {});
SimConfig load_config(const std::filesystem::path& path);

/// Designs are synthesized once per experiment and shared read-only by
/// every run.
struct Experiment {
    SimConfig config;
    std::optional<L0Design> l0;
    std::optional<L1L2Design> l1l2;
};

Experiment prepare_experiment(const SimConfig& config);

struct Scenario {
    ControllerKind controller;
    double W_m;
};

std::vector<Scenario> scenarios(const SimConfig& config);

struct TrajectoryRecord {
    std::vector<double> state_norm;   // ||x(k)||_2
    std::vector<double> applied_u;
    std::vector<int> buffer_age;
    std::vector<int> packet_l0;       // of the packet computed at k
    std::vector<bool> arrived;
    Vector x0;
    bool aborted = false;
    std::string diagnostic;

    size_t size() const { return state_norm.size(); }
};

/// RNG streams for x(0), dropouts and disturbances derived from
/// (master_seed, run_index). Identical across controllers and W_m.
enum class Stream : std::uint64_t { initial_state = 1, dropout = 2, disturbance = 3 };
std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t run_index, Stream stream);

DropoutProcess make_dropout_process(const SimConfig& config, int run_index);

TrajectoryRecord run_closed_loop(const Experiment& exp, const Scenario& scenario, int run_index);

struct ScenarioResult {
    Scenario scenario;
    std::vector<double> mean_state_norm;
    std::vector<double> mean_packet_l0;
    double max_state_norm = 0.0;
    int runs_used = 0;
    std::vector<int> aborted_runs;
    std::vector<TrajectoryRecord> records;  // filled only when requested
};

struct MonteCarloOptions {
    int threads = 1;
    bool keep_records = false;
    /// Optional run permutation (for order-independence checks); default is 0..runs-1.
    std::vector<int> run_order;
};

/// Elementwise means over runs. Reduction is a fixed-order sum over run
/// index, so the output does not depend on scheduling or thread count.
std::vector<ScenarioResult> run_monte_carlo(const Experiment& exp, const MonteCarloOptions& opts);

double steady_state_mean(const std::vector<double>& series, int window);

/// Per-W_m certificates for each configured controller.
std::string certificate_report(const Experiment& exp);

/// Writes <controller>_Wm<W>.csv for every scenario, report.txt and,
/// when config.plots is set, per-controller plot-data CSV and SVG files.
/// Returns the list of files written.
std::vector<std::filesystem::path> emit_outputs(const std::vector<ScenarioResult>& results,
                                                const Experiment& exp);

std::string csv_file_name(const Scenario& sc);
std::string format_double(double v);

struct SeriesCsv {
    std::vector<long> k;
    std::vector<double> mean_state_norm;
    std::vector<double> mean_packet_l0;
};

void write_series_csv(const std::filesystem::path& path, const ScenarioResult& result);
SeriesCsv read_series_csv(const std::filesystem::path& path);

}  // namespace sppc
