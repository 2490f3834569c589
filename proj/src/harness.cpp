#include "sppc/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace sppc {

using nlohmann::json;

std::string_view to_string(ControllerKind kind) {
    switch (kind) {
        case ControllerKind::l0_omp: return "l0_omp";
        case ControllerKind::l1l2_fista: return "l1l2_fista";
    }
    return "unknown";
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------
// Configuration

SimConfig SimConfig::reference_defaults() {
    SimConfig c;
    const PlantModel p = PlantModel::example_plant();
    c.builtin_plant = true;
    c.A = p.A();
    c.B = p.B();
    return c;
}

PlantModel SimConfig::plant(double W_m) const {
    if (builtin_plant) {
        return PlantModel::example_plant(W_m, disturbance_mode);
    }
    return PlantModel(A, B, W_m, disturbance_mode);
}

SymMatrix SimConfig::weight_Q() const {
    if (Q) return *Q;
    const Eigen::Index n = builtin_plant ? 4 : A.rows();
    return SymMatrix::identity(n);
}

void SimConfig::validate() const {
    if (!builtin_plant && (A.rows() == 0 || A.rows() != A.cols() || B.size() != A.rows())) {
        throw ConfigError("config: plant A must be n x n and B an n-vector");
    }
    if (N < 1) throw ConfigError("config: N must be >= 1");
    if (runs < 1) throw ConfigError("config: runs must be >= 1");
    if (horizon < 1) throw ConfigError("config: horizon must be >= 1");
    if (threads < 1) throw ConfigError("config: threads must be >= 1");
    if (steady_state_window < 1) throw ConfigError("config: steady_state_window must be >= 1");
    if (controllers.empty()) throw ConfigError("config: no controller selected");
    if (W_m_values.empty()) throw ConfigError("config: W_m list is empty");
    for (double w : W_m_values) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("config: W_m values must be >= 0");
        if (disturbance_mode == DisturbanceMode::none && w != 0.0) {
            throw ConfigError("config: disturbance mode 'none' requires W_m = 0");
        }
    }
    const Eigen::Index n = builtin_plant ? 4 : A.rows();
    if (Q && Q->dim() != n) throw ConfigError("config: Q dimension mismatch");
    if (initial_state && initial_state->size() != n) {
        throw ConfigError("config: initial_state dimension mismatch");
    }
    if (dropout_mode == DropoutMode::bernoulli_capped &&
        !(drop_probability >= 0.0 && drop_probability <= 1.0)) {
        throw ConfigError("config: dropout probability must lie in [0, 1]");
    }
    if (dropout_mode == DropoutMode::trace) {
        if (dropout_trace.size() < static_cast<size_t>(horizon)) {
            throw ConfigError("config: dropout trace is shorter than the horizon");
        }
        try {
            (void)DropoutProcess::trace(N, dropout_trace);
        } catch (const ContractError& e) {
            throw ConfigError(std::string("config: ") + e.what());
        }
    }
    if (!(nu > 0.0)) throw ConfigError("config: nu must be positive");
    if (!(r >= 0.0)) throw ConfigError("config: r must be nonnegative");
}

namespace {

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& where) {
    for (const auto& item : obj.items()) {
        if (!allowed.count(item.key())) {
            throw ConfigError("config: unknown key '" + item.key() + "' in " + where);
        }
    }
}

Matrix parse_matrix(const json& j, const std::string& what) {
    if (!j.is_array() || j.empty()) throw ConfigError("config: " + what + " must be a 2-D array");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j[0].size());
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const json& row = j[static_cast<size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
            throw ConfigError("config: " + what + " rows must have equal length");
        }
        for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = row[static_cast<size_t>(c)].get<double>();
    }
    return m;
}

Vector parse_vector(const json& j, const std::string& what) {
    if (!j.is_array() || j.empty()) throw ConfigError("config: " + what + " must be an array");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    return v;
}

std::vector<bool> parse_bool_trace(const json& j) {
    std::vector<bool> out;
    for (const auto& e : j) {
        if (e.is_boolean()) {
            out.push_back(e.get<bool>());
        } else {
            const int v = e.get<int>();
            if (v != 0 && v != 1) throw ConfigError("config: trace entries must be 0 or 1");
            out.push_back(v == 1);
        }
    }
    return out;
}

SimConfig parse_config_json(const json& j, const std::filesystem::path& base_dir) {
    if (!j.is_object()) throw ConfigError("config: top level must be an object");
    reject_unknown_keys(j,
                        {"plant", "N", "Q", "controller", "nu", "r", "zeta", "xi_scale", "fista",
                         "disturbance", "dropout", "runs", "horizon", "master_seed",
                         "initial_state", "output_dir", "threads", "allow_aborted_runs", "plots",
                         "emit_traces", "steady_state_window"},
                        "top level");
    SimConfig c = SimConfig::reference_defaults();

    if (j.contains("plant")) {
        const json& p = j["plant"];
        if (p.is_string()) {
            if (p.get<std::string>() != "paper_example") {
                throw ConfigError("config: plant must be \"paper_example\" or {A, B}");
            }
        } else {
            reject_unknown_keys(p, {"A", "B"}, "plant");
            if (!p.contains("A") || !p.contains("B")) throw ConfigError("config: plant needs A and B");
            c.builtin_plant = false;
            c.A = parse_matrix(p["A"], "plant.A");
            c.B = parse_vector(p["B"], "plant.B");
        }
    }
    if (j.contains("N")) c.N = j["N"].get<int>();
    if (j.contains("Q")) {
        const json& q = j["Q"];
        const Eigen::Index n = c.builtin_plant ? 4 : c.A.rows();
        if (q.is_string()) {
            if (q.get<std::string>() != "identity") throw ConfigError("config: unknown Q shorthand");
            c.Q.reset();
        } else if (q.is_number()) {
            c.Q = q.get<double>() * SymMatrix::identity(n);
        } else {
            try {
                c.Q = SymMatrix(parse_matrix(q, "Q"));
            } catch (const ContractError& e) {
                throw ConfigError(std::string("config: Q: ") + e.what());
            }
        }
    }
    if (j.contains("controller")) {
        const auto name = j["controller"].get<std::string>();
        if (name == "both") {
            c.controllers = {ControllerKind::l0_omp, ControllerKind::l1l2_fista};
        } else if (name == "l0_omp") {
            c.controllers = {ControllerKind::l0_omp};
        } else if (name == "l1l2_fista") {
            c.controllers = {ControllerKind::l1l2_fista};
        } else {
            throw ConfigError("config: unknown controller '" + name + "'");
        }
    }
    if (j.contains("nu")) c.nu = j["nu"].get<double>();
    if (j.contains("r")) c.r = j["r"].get<double>();
    if (j.contains("zeta") && !j["zeta"].is_null()) c.zeta = j["zeta"].get<double>();
    if (j.contains("xi_scale") && !j["xi_scale"].is_null()) c.xi_scale = j["xi_scale"].get<double>();
    if (j.contains("fista")) {
        const json& f = j["fista"];
        reject_unknown_keys(f, {"tol", "max_iter"}, "fista");
        if (f.contains("tol")) c.fista.tol = f["tol"].get<double>();
        if (f.contains("max_iter")) c.fista.max_iter = f["max_iter"].get<long>();
    }
    if (j.contains("disturbance")) {
        const json& d = j["disturbance"];
        reject_unknown_keys(d, {"mode", "W_m"}, "disturbance");
        if (d.contains("mode")) {
            try {
                c.disturbance_mode = parse_disturbance_mode(d["mode"].get<std::string>());
            } catch (const ContractError& e) {
                throw ConfigError(std::string("config: ") + e.what());
            }
        }
        if (d.contains("W_m")) {
            const json& w = d["W_m"];
            c.W_m_values = w.is_array() ? w.get<std::vector<double>>()
                                        : std::vector<double>{w.get<double>()};
        }
    }
    if (j.contains("dropout")) {
        const json& d = j["dropout"];
        reject_unknown_keys(d, {"mode", "p", "trace", "file"}, "dropout");
        if (d.contains("mode")) {
            try {
                c.dropout_mode = parse_dropout_mode(d["mode"].get<std::string>());
            } catch (const ContractError& e) {
                throw ConfigError(std::string("config: ") + e.what());
            }
        }
        if (d.contains("p")) c.drop_probability = d["p"].get<double>();
        if (d.contains("trace")) c.dropout_trace = parse_bool_trace(d["trace"]);
        if (d.contains("file")) {
            std::filesystem::path p = d["file"].get<std::string>();
            if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
            try {
                c.dropout_trace = read_trace(p);
            } catch (const Error& e) {
                throw ConfigError(std::string("config: ") + e.what());
            }
        }
    }
    if (j.contains("runs")) c.runs = j["runs"].get<int>();
    if (j.contains("horizon")) c.horizon = j["horizon"].get<int>();
    if (j.contains("master_seed")) c.master_seed = j["master_seed"].get<std::uint64_t>();
    if (j.contains("initial_state")) {
        const json& s = j["initial_state"];
        if (s.is_string()) {
            if (s.get<std::string>() != "standard_normal") {
                throw ConfigError("config: initial_state must be \"standard_normal\" or an array");
            }
            c.initial_state.reset();
        } else {
            c.initial_state = parse_vector(s, "initial_state");
        }
    }
    if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();
    if (j.contains("threads")) c.threads = j["threads"].get<int>();
    if (j.contains("allow_aborted_runs")) c.allow_aborted_runs = j["allow_aborted_runs"].get<bool>();
    if (j.contains("plots")) c.plots = j["plots"].get<bool>();
    if (j.contains("emit_traces")) c.emit_traces = j["emit_traces"].get<bool>();
    if (j.contains("steady_state_window")) c.steady_state_window = j["steady_state_window"].get<int>();

    c.validate();
    return c;
}

}  // namespace

SimConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir) {
    try {
        return parse_config_json(json::parse(json_text), base_dir);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

SimConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.parent_path());
}

// ---------------------------------------------------------------------------
// Simulation

Experiment prepare_experiment(const SimConfig& config) {
    config.validate();
    Experiment exp{config, std::nullopt, std::nullopt};
    const PlantModel nominal = config.plant(0.0);
    const SymMatrix Q = config.weight_Q();
    for (ControllerKind kind : config.controllers) {
        if (kind == ControllerKind::l0_omp) {
            exp.l0 = synthesize_l0(nominal, config.N, Q, config.xi_scale);
        } else {
            exp.l1l2 = synthesize_l1l2(nominal, config.N, Q, config.nu, config.r, config.zeta);
        }
    }
    return exp;
}

std::vector<Scenario> scenarios(const SimConfig& config) {
    std::vector<Scenario> out;
    for (ControllerKind kind : config.controllers) {
        for (double w : config.W_m_values) out.push_back({kind, w});
    }
    return out;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t run_index, Stream stream) {
    std::uint64_t h = splitmix64(master_seed);
    h = splitmix64(h ^ run_index);
    return splitmix64(h ^ static_cast<std::uint64_t>(stream));
}

DropoutProcess make_dropout_process(const SimConfig& config, int run_index) {
    const std::uint64_t seed = derive_seed(config.master_seed, static_cast<std::uint64_t>(run_index),
                                           Stream::dropout);
    switch (config.dropout_mode) {
        case DropoutMode::uniform_burst: return DropoutProcess::uniform_burst(config.N, seed);
        case DropoutMode::bernoulli_capped:
            return DropoutProcess::bernoulli_capped(config.N, config.drop_probability, seed);
        case DropoutMode::trace: return DropoutProcess::trace(config.N, config.dropout_trace);
    }
    throw ConfigError("unknown dropout mode");
}

TrajectoryRecord run_closed_loop(const Experiment& exp, const Scenario& scenario, int run_index) {
    const SimConfig& cfg = exp.config;
    const auto run = static_cast<std::uint64_t>(run_index);
    TrajectoryRecord rec;
    rec.state_norm.reserve(cfg.horizon);
    rec.applied_u.reserve(cfg.horizon);
    rec.buffer_age.reserve(cfg.horizon);
    rec.packet_l0.reserve(cfg.horizon);
    rec.arrived.reserve(cfg.horizon);

    const PlantModel plant = cfg.plant(scenario.W_m);
    Rng x0_rng(derive_seed(cfg.master_seed, run, Stream::initial_state));
    Rng w_rng(derive_seed(cfg.master_seed, run, Stream::disturbance));
    DropoutProcess channel = make_dropout_process(cfg, run_index);

    Vector x(plant.n());
    if (cfg.initial_state) {
        x = *cfg.initial_state;
    } else {
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = gauss(x0_rng);
    }
    rec.x0 = x;

    ActuatorBuffer buffer;
    try {
        for (long k = 0; k < cfg.horizon; ++k) {
            if (!x.allFinite()) {
                throw NumericalFailure("state became non-finite at step " + std::to_string(k));
            }
            std::optional<ControlPacket> packet;
            if (scenario.controller == ControllerKind::l0_omp) {
                if (!exp.l0) throw ConfigError("experiment has no l0 design");
                packet = solve_l0_omp(*exp.l0, x, k).first;
            } else {
                if (!exp.l1l2) throw ConfigError("experiment has no l1-l2 design");
                packet = solve_l1l2_fista(*exp.l1l2, x, cfg.fista, k).first;
            }
            const int l0 = packet->l0_norm();
            const bool arrived = channel.next_arrival(k);
            buffer = buffer_update(buffer, arrived ? std::move(packet) : std::nullopt);
            const double u = applied_input(buffer);

            rec.state_norm.push_back(x.norm());
            rec.applied_u.push_back(u);
            rec.buffer_age.push_back(buffer.age);
            rec.packet_l0.push_back(l0);
            rec.arrived.push_back(arrived);

            const Vector w = sample_disturbance(plant, w_rng);
            x = step_plant(plant, x, u, w);
        }
    } catch (const Error& e) {
        rec.aborted = true;
        std::ostringstream os;
        os << to_string(scenario.controller) << " W_m=" << format_double(scenario.W_m) << " run "
           << run_index << " aborted at step " << rec.size() << ": " << e.what();
        rec.diagnostic = os.str();
    }
    return rec;
}

std::vector<ScenarioResult> run_monte_carlo(const Experiment& exp, const MonteCarloOptions& opts) {
    const SimConfig& cfg = exp.config;
    const std::vector<Scenario> scens = scenarios(cfg);
    const int runs = cfg.runs;

    std::vector<int> order = opts.run_order;
    if (order.empty()) {
        order.resize(runs);
        std::iota(order.begin(), order.end(), 0);
    } else {
        std::vector<int> sorted = order;
        std::sort(sorted.begin(), sorted.end());
        for (int i = 0; i < runs; ++i) {
            if (static_cast<int>(sorted.size()) != runs || sorted[i] != i) {
                throw ContractError("run_monte_carlo: run_order must be a permutation of 0..runs-1");
            }
        }
    }

    // records[s][run], written by exactly one task each.
    std::vector<std::vector<TrajectoryRecord>> records(scens.size(),
                                                       std::vector<TrajectoryRecord>(runs));
    const size_t total = scens.size() * static_cast<size_t>(runs);
    std::atomic<size_t> next{0};
    auto worker = [&]() {
        for (size_t task = next.fetch_add(1); task < total; task = next.fetch_add(1)) {
            const size_t s = task / runs;
            const int run = order[task % runs];
            records[s][run] = run_closed_loop(exp, scens[s], run);
        }
    };
    const int nthreads = std::max(1, std::min<int>(opts.threads, static_cast<int>(total)));
    if (nthreads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(nthreads);
        for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    std::vector<ScenarioResult> results;
    results.reserve(scens.size());
    for (size_t s = 0; s < scens.size(); ++s) {
        ScenarioResult res;
        res.scenario = scens[s];
        res.mean_state_norm.assign(cfg.horizon, 0.0);
        res.mean_packet_l0.assign(cfg.horizon, 0.0);
        std::string first_failure;
        for (int run = 0; run < runs; ++run) {
            const TrajectoryRecord& rec = records[s][run];
            if (rec.aborted) {
                res.aborted_runs.push_back(run);
                if (first_failure.empty()) first_failure = rec.diagnostic;
                continue;
            }
            for (int k = 0; k < cfg.horizon; ++k) {
                res.mean_state_norm[k] += rec.state_norm[k];
                res.mean_packet_l0[k] += rec.packet_l0[k];
                res.max_state_norm = std::max(res.max_state_norm, rec.state_norm[k]);
            }
            ++res.runs_used;
        }
        if (!res.aborted_runs.empty() && !cfg.allow_aborted_runs) {
            throw Error("run_monte_carlo: " + std::to_string(res.aborted_runs.size()) +
                        " run(s) aborted; first: " + first_failure);
        }
        if (res.runs_used == 0) {
            throw Error("run_monte_carlo: every run aborted; first: " + first_failure);
        }
        for (int k = 0; k < cfg.horizon; ++k) {
            res.mean_state_norm[k] /= res.runs_used;
            res.mean_packet_l0[k] /= res.runs_used;
        }
        if (opts.keep_records) res.records = std::move(records[s]);
        results.push_back(std::move(res));
    }
    return results;
}

double steady_state_mean(const std::vector<double>& series, int window) {
    if (series.empty()) return 0.0;
    const size_t w = std::min(series.size(), static_cast<size_t>(std::max(window, 1)));
    double sum = 0.0;
    for (size_t k = series.size() - w; k < series.size(); ++k) sum += series[k];
    return sum / static_cast<double>(w);
}

// ---------------------------------------------------------------------------
// Outputs

std::string certificate_report(const Experiment& exp) {
    const SimConfig& cfg = exp.config;
    std::ostringstream os;
    for (double w : cfg.W_m_values) {
        const PlantModel plant = cfg.plant(w);
        const double w_eff = plant.effective_l2_bound();
        const std::string tag = "W_m=" + format_double(w) + ".";
        if (exp.l0) {
            try {
                os << to_report(l0_certificate(*exp.l0, plant, w_eff), tag + "l0.");
            } catch (const Error& e) {
                os << tag << "l0.error = " << e.what() << '\n';
            }
        }
        if (exp.l1l2) {
            try {
                os << to_report(l1l2_certificate(*exp.l1l2, plant, w_eff), tag + "l1l2.");
            } catch (const Error& e) {
                os << tag << "l1l2.error = " << e.what() << '\n';
            }
        }
    }
    return os.str();
}

std::string csv_file_name(const Scenario& sc) {
    return std::string(to_string(sc.controller)) + "_Wm" + format_double(sc.W_m) + ".csv";
}

namespace {

void check_stream(const std::ofstream& out, const std::filesystem::path& path) {
    if (!out) throw Error("I/O error writing " + path.string());
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    return out;
}

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

void write_svg(const std::filesystem::path& path, const std::string& title, const std::string& ylabel,
               const std::vector<std::pair<std::string, const std::vector<double>*>>& series) {
    const double width = 720, height = 400, left = 70, right = 150, top = 40, bottom = 50;
    size_t len = 0;
    double ymax = 0.0;
    for (const auto& [_, s] : series) {
        len = std::max(len, s->size());
        for (double v : *s) {
            if (std::isfinite(v)) ymax = std::max(ymax, v);
        }
    }
    if (ymax <= 0.0) ymax = 1.0;
    const double xspan = len > 1 ? static_cast<double>(len - 1) : 1.0;
    const double pw = width - left - right, ph = height - top - bottom;
    auto px = [&](double k) { return left + pw * k / xspan; };
    auto py = [&](double v) { return top + ph * (1.0 - v / ymax); };

    auto out = open_out(path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << left << "\" y=\"24\" font-size=\"14\">" << title << "</text>\n";
    out << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\""
        << top + ph << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph
        << "\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 4; ++t) {
        const double v = ymax * t / 4.0;
        out << "<text x=\"" << left - 8 << "\" y=\"" << py(v) + 4 << "\" text-anchor=\"end\">"
            << format_double(std::round(v * 1000.0) / 1000.0) << "</text>\n";
        const double k = xspan * t / 4.0;
        out << "<text x=\"" << px(k) << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">"
            << static_cast<long>(std::round(k)) << "</text>\n";
    }
    out << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 10
        << "\" text-anchor=\"middle\">k</text>\n";
    out << "<text x=\"16\" y=\"" << top + ph / 2 << "\" transform=\"rotate(-90 16 " << top + ph / 2
        << ")\" text-anchor=\"middle\">" << ylabel << "</text>\n";
    for (size_t i = 0; i < series.size(); ++i) {
        const auto& [label, s] = series[i];
        const char* color = kPalette[i % (sizeof(kPalette) / sizeof(kPalette[0]))];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.2\" points=\"";
        for (size_t k = 0; k < s->size(); ++k) {
            const double v = std::isfinite((*s)[k]) ? (*s)[k] : ymax;
            out << px(static_cast<double>(k)) << ',' << py(v) << ' ';
        }
        out << "\"/>\n";
        const double ly = top + 16.0 * static_cast<double>(i) + 8.0;
        out << "<line x1=\"" << left + pw + 12 << "\" y1=\"" << ly << "\" x2=\"" << left + pw + 36
            << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << left + pw + 42 << "\" y=\"" << ly + 4 << "\">" << label << "</text>\n";
    }
    out << "</svg>\n";
    check_stream(out, path);
}

}  // namespace

void write_series_csv(const std::filesystem::path& path, const ScenarioResult& result) {
    auto out = open_out(path);
    out << "k,mean_state_norm,mean_packet_l0\r\n";
    for (size_t k = 0; k < result.mean_state_norm.size(); ++k) {
        out << k << ',' << format_double(result.mean_state_norm[k]) << ','
            << format_double(result.mean_packet_l0[k]) << "\r\n";
    }
    check_stream(out, path);
}

SeriesCsv read_series_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    SeriesCsv out;
    std::string line;
    bool header = true;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (header) {
            if (line != "k,mean_state_norm,mean_packet_l0") {
                throw Error(path.string() + ": unexpected header '" + line + "'");
            }
            header = false;
            continue;
        }
        if (line.empty()) continue;
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos) {
            throw Error(path.string() + ":" + std::to_string(lineno) + ": malformed row");
        }
        long k = 0;
        double a = 0.0, b = 0.0;
        const char* s = line.data();
        auto r1 = std::from_chars(s, s + c1, k);
        auto r2 = std::from_chars(s + c1 + 1, s + c2, a);
        auto r3 = std::from_chars(s + c2 + 1, s + line.size(), b);
        if (r1.ec != std::errc() || r2.ec != std::errc() || r3.ec != std::errc()) {
            throw Error(path.string() + ":" + std::to_string(lineno) + ": malformed number");
        }
        out.k.push_back(k);
        out.mean_state_norm.push_back(a);
        out.mean_packet_l0.push_back(b);
    }
    if (header) throw Error(path.string() + ": missing header");
    return out;
}

std::vector<std::filesystem::path> emit_outputs(const std::vector<ScenarioResult>& results,
                                                const Experiment& exp) {
    const SimConfig& cfg = exp.config;
    std::error_code ec;
    std::filesystem::create_directories(cfg.output_dir, ec);
    if (ec) throw Error("cannot create " + cfg.output_dir.string() + ": " + ec.message());

    std::vector<std::filesystem::path> written;
    for (const auto& res : results) {
        const auto path = cfg.output_dir / csv_file_name(res.scenario);
        write_series_csv(path, res);
        written.push_back(path);
    }

    // Summary report
    {
        const auto path = cfg.output_dir / "report.txt";
        auto out = open_out(path);
        out << "# sparse packetized predictive control: simulation report\n";
        out << "config.plant = " << (cfg.builtin_plant ? "paper_example" : "custom") << '\n';
        out << "config.N = " << cfg.N << '\n';
        out << "config.nu = " << format_double(cfg.nu) << '\n';
        out << "config.r = " << format_double(cfg.r) << '\n';
        if (exp.l1l2) out << "config.zeta = " << format_double(exp.l1l2->zeta) << '\n';
        if (exp.l0) {
            out << "config.xi_scale = " << format_double(exp.l0->xi(0, 0)) << '\n';
            out << "config.xi_condition = " << (exp.l0->condition_ok ? "true" : "false") << '\n';
        }
        out << "config.disturbance_mode = " << to_string(cfg.disturbance_mode) << '\n';
        out << "config.dropout_mode = " << to_string(cfg.dropout_mode) << '\n';
        out << "config.runs = " << cfg.runs << '\n';
        out << "config.horizon = " << cfg.horizon << '\n';
        out << "config.master_seed = " << cfg.master_seed << '\n';
        out << certificate_report(exp);
        const int window = std::min(cfg.steady_state_window, cfg.horizon);
        for (const auto& res : results) {
            const std::string tag = std::string(to_string(res.scenario.controller)) + ".W_m=" +
                                    format_double(res.scenario.W_m) + ".";
            const size_t len = res.mean_state_norm.size();
            out << tag << "steady_state_window = [" << (len >= static_cast<size_t>(window) ? len - window : 0)
                << ", " << len << ")\n";
            out << tag << "steady_state_mean_state_norm = "
                << format_double(steady_state_mean(res.mean_state_norm, window)) << '\n';
            out << tag << "steady_state_mean_packet_l0 = "
                << format_double(steady_state_mean(res.mean_packet_l0, window)) << '\n';
            out << tag << "max_state_norm = " << format_double(res.max_state_norm) << '\n';
            out << tag << "runs_used = " << res.runs_used << '\n';
            out << tag << "aborted_runs = " << res.aborted_runs.size() << '\n';
        }
        check_stream(out, path);
        written.push_back(path);
    }

    if (cfg.plots) {
        for (ControllerKind kind : cfg.controllers) {
            std::vector<const ScenarioResult*> group;
            for (const auto& res : results) {
                if (res.scenario.controller == kind) group.push_back(&res);
            }
            if (group.empty()) continue;
            const std::string name(to_string(kind));
            const auto data_path = cfg.output_dir / ("plot_" + name + ".csv");
            {
                auto out = open_out(data_path);
                out << 'k';
                for (const auto* g : group) out << ",state_norm_Wm" << format_double(g->scenario.W_m);
                for (const auto* g : group) out << ",packet_l0_Wm" << format_double(g->scenario.W_m);
                out << "\r\n";
                const size_t len = group.front()->mean_state_norm.size();
                for (size_t k = 0; k < len; ++k) {
                    out << k;
                    for (const auto* g : group) out << ',' << format_double(g->mean_state_norm[k]);
                    for (const auto* g : group) out << ',' << format_double(g->mean_packet_l0[k]);
                    out << "\r\n";
                }
                check_stream(out, data_path);
            }
            written.push_back(data_path);

            std::vector<std::pair<std::string, const std::vector<double>*>> states, packets;
            for (const auto* g : group) {
                const std::string label = "W_m = " + format_double(g->scenario.W_m);
                states.emplace_back(label, &g->mean_state_norm);
                packets.emplace_back(label, &g->mean_packet_l0);
            }
            const auto s_path = cfg.output_dir / ("state_norm_" + name + ".svg");
            write_svg(s_path, "Average l2 norm of x(k), " + name, "mean ||x(k)||", states);
            written.push_back(s_path);
            const auto p_path = cfg.output_dir / ("packet_l0_" + name + ".svg");
            write_svg(p_path, "Average l0 norm of U(x(k)), " + name, "mean ||U||_0", packets);
            written.push_back(p_path);
        }
    }

    if (cfg.emit_traces) {
        const auto dir = cfg.output_dir / "traces";
        std::filesystem::create_directories(dir, ec);
        if (ec) throw Error("cannot create " + dir.string() + ": " + ec.message());
        for (int run = 0; run < cfg.runs; ++run) {
            DropoutProcess dp = make_dropout_process(cfg, run);
            std::vector<bool> arrivals(cfg.horizon);
            for (int k = 0; k < cfg.horizon; ++k) arrivals[k] = dp.next_arrival(k);
            const auto path = dir / ("run_" + std::to_string(run) + ".txt");
            write_trace(path, arrivals);
            written.push_back(path);
        }
    }
    return written;
}

}  // namespace sppc
