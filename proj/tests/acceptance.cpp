// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "oracles.hpp"
#include "sppc/harness.hpp"

using namespace sppc;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

PlantModel random_reachable_plant(std::mt19937_64& rng, Eigen::Index n, double scale,
                                  double W = 0.0,
                                  DisturbanceMode mode = DisturbanceMode::none) {
    for (;;) {
        const Matrix a = oracle::random_matrix(rng, n, n, scale / std::sqrt(static_cast<double>(n)));
        const Vector b = oracle::random_vector(rng, n);
        if (is_reachable(a, b)) return PlantModel(a, b, W, mode);
    }
}

// 1. Riccati solutions on random instances.
Outcome dare_correctness() {
    std::mt19937_64 rng(101);
    std::uniform_int_distribution<int> dim(1, 6);
    std::uniform_real_distribution<double> rw(0.1, 5.0);
    double worst_res = 0.0, worst_psd = std::numeric_limits<double>::infinity();
    double elapsed = 0.0;
    for (int i = 0; i < 50; ++i) {
        const Eigen::Index n = dim(rng);
        const PlantModel p = random_reachable_plant(rng, n, 1.0);
        const SymMatrix Q = SymMatrix::symmetrized(oracle::random_spd(rng, n));
        const DareProblem prob{p.A(), p.B(), Q, rw(rng)};
        const auto t0 = Clock::now();
        const SymMatrix P = solve_dare(prob);
        elapsed += seconds_since(t0);
        const Matrix res = oracle::riccati_residual(p.A(), p.B(), Q.matrix(), prob.r, P.matrix());
        worst_res = std::max(worst_res, res.norm());
        worst_psd = std::min(worst_psd, oracle::jacobi_eigenvalues(P.matrix() - Q.matrix())(0));
    }
    std::ostringstream os;
    os << "max residual " << worst_res << ", min eig(P - Q) " << worst_psd << ", solve time "
       << elapsed << " s";
    return {worst_res <= 1e-10 && worst_psd >= -1e-10 && elapsed < 1.0, os.str()};
}

// 2. Projector form of the minimal tracking cost against P - Q.
Outcome projector_crosscheck() {
    std::mt19937_64 rng(202);
    std::uniform_int_distribution<int> dim(1, 5);
    std::uniform_int_distribution<int> horizon(2, 10);
    double worst = 0.0;
    for (int i = 0; i < 25; ++i) {
        const Eigen::Index n = dim(rng);
        const PlantModel p = random_reachable_plant(rng, n, 1.0);
        const int N = std::max<int>(horizon(rng), static_cast<int>(n));
        const L0Design d = synthesize_l0(p, N, SymMatrix::identity(n));
        const Vector a = oracle::jacobi_eigenvalues(pi_star_projector(d.lifted).matrix());
        const Vector b = oracle::jacobi_eigenvalues(d.P.matrix() - d.Q.matrix());
        const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
        worst = std::max(worst, (a - b).cwiseAbs().maxCoeff() / scale);
    }
    std::ostringstream os;
    os << "max relative spectral gap " << worst;
    return {worst <= 1e-8, os.str()};
}

// 3. Greedy support against exhaustive enumeration.
Outcome omp_vs_exhaustive() {
    std::mt19937_64 rng(303);
    std::uniform_int_distribution<int> dim(1, 3);
    std::uniform_int_distribution<int> horizon(1, 4);
    const auto t0 = Clock::now();
    int infeasible = 0, below_optimum = 0, done = 0;
    long gap_sum = 0;
    while (done < 100) {
        const Eigen::Index n = dim(rng);
        const int N = std::max<int>(horizon(rng), static_cast<int>(n));
        const PlantModel p = random_reachable_plant(rng, n, 1.0);
        const L0Design d = synthesize_l0(p, N, SymMatrix::identity(n));
        const Vector x = oracle::random_vector(rng, n);
        const auto [pk, rep] = solve_l0_omp(d, x);
        const Vector y = d.lifted.K * x;
        const double bound = x.dot(d.Pi.matrix() * x);
        if ((d.lifted.M * pk.U - y).squaredNorm() > bound + kOmpFeasibilitySlack * (1.0 + bound)) {
            ++infeasible;
        }
        const int best = oracle::min_feasible_support(d.lifted.M, y, bound, kOmpFeasibilitySlack);
        if (best < 0 || pk.l0_norm() < best) ++below_optimum;
        gap_sum += pk.l0_norm() - std::max(best, 0);
        ++done;
    }
    const double elapsed = seconds_since(t0);
    std::ostringstream os;
    os << "infeasible " << infeasible << ", below optimum " << below_optimum << ", mean gap "
       << static_cast<double>(gap_sum) / done << ", time " << elapsed << " s";
    return {infeasible == 0 && below_optimum == 0 && elapsed < 10.0, os.str()};
}

// Long ISTA run on the normal-equation form, used as the optimal-value oracle.
double ista_objective(const Matrix& M, const Vector& y, double nu, long iters) {
    const Matrix H = M.transpose() * M;
    const Vector c = M.transpose() * y;
    const double L = 2.0 * oracle::jacobi_eigenvalues(H).maxCoeff();
    const double th = nu / L;
    Vector U = Vector::Zero(M.cols());
    for (long k = 0; k < iters; ++k) {
        const Vector v = U - (2.0 / L) * (H * U - c);
        for (Eigen::Index j = 0; j < U.size(); ++j) {
            const double a = v(j);
            U(j) = a > th ? a - th : (a < -th ? a + th : 0.0);
        }
    }
    return oracle::lasso_objective(M, y, nu, U);
}

// 4. FISTA optimality and agreement with the ISTA oracle.
Outcome fista_optimality() {
    std::mt19937_64 rng(404);
    std::uniform_real_distribution<double> lognu(0.0, std::log(300.0));
    std::uniform_real_distribution<double> rw(0.5, 5.0);
    double solve_time = 0.0, worst_violation_ratio = 0.0, worst_rel = 0.0;
    int failures = 0;
    for (int i = 0; i < 100; ++i) {
        const PlantModel p = random_reachable_plant(rng, 4, 1.0);
        const double nu = std::exp(lognu(rng));
        const L1L2Design d = synthesize_l1l2(p, 10, SymMatrix::identity(4), nu, rw(rng));
        const Vector x = oracle::random_vector(rng, 4, 5.0);
        const auto t0 = Clock::now();
        const auto [pk, rep] = solve_l1l2_fista(d, x);
        solve_time += seconds_since(t0);
        const double eps = 1e-6 * (1.0 + nu);
        const double viol = l1_optimality_violation(d, x, pk.U);
        worst_violation_ratio = std::max(worst_violation_ratio, viol / eps);
        const Vector y = d.lifted.K * x;
        const double f = oracle::lasso_objective(d.lifted.M, y, nu, pk.U);
        const double f_ref = ista_objective(d.lifted.M, y, nu, 1'000'000);
        const double rel = std::abs(f - f_ref) / std::max(std::abs(f_ref), 1e-300);
        worst_rel = std::max(worst_rel, rel);
        if (!rep.converged || viol > eps || rel > 1e-8) ++failures;
    }
    std::ostringstream os;
    os << "failures " << failures << ", max violation / eps " << worst_violation_ratio
       << ", max relative objective gap to ISTA " << worst_rel << ", FISTA time " << solve_time
       << " s";
    return {failures == 0 && solve_time < 60.0, os.str()};
}

// 5. Sampled disturbance accumulation against the analytic bounds.
Outcome accumulation_bounds() {
    std::mt19937_64 rng(505);
    std::vector<PlantModel> plants{PlantModel::example_plant(1.0, DisturbanceMode::l2_ball_uniform)};
    for (Eigen::Index n : {1, 2, 3}) {
        plants.push_back(random_reachable_plant(rng, n, 1.0, 1.0, DisturbanceMode::l2_ball_uniform));
    }
    const int N = 10;
    long violations = 0, checks = 0;
    double worst_g = 0.0, worst_e = 0.0;
    for (const auto& p : plants) {
        const SymMatrix P = solve_dare({p.A(), p.B(), SymMatrix::identity(p.n()), 0.0});
        const double W = p.effective_l2_bound();
        const double g_bound = gamma_N(p, N, W);
        const double e_bound = eps_N(p, P, N, W);
        Rng wr(rng());
        for (int s = 0; s < 10000; ++s) {
            std::vector<Vector> w;
            for (int i = 0; i < N; ++i) w.push_back(sample_disturbance(p, wr));
            for (int i = 1; i <= N; ++i) {
                const double g = oracle_g(p, i, w).norm();
                worst_g = std::max(worst_g, g / g_bound);
                violations += g > g_bound;
                ++checks;
            }
            for (int i = 0; i < N; ++i) {
                const double e = oracle_rho_i(p, P, i, w).norm();
                worst_e = std::max(worst_e, e / e_bound);
                violations += e > e_bound;
                ++checks;
            }
        }
    }
    std::ostringstream os;
    os << violations << " violations in " << checks << " checks, max ratio open-loop " << worst_g
       << ", closed-loop " << worst_e;
    return {violations == 0, os.str()};
}

// 6. Value function between its quadratic lower and upper bounds.
Outcome value_sandwich() {
    const PlantModel p = PlantModel::example_plant(1.0);
    const L1L2Design d = synthesize_l1l2(p, 10, SymMatrix::identity(4), 200.0, 2.0);
    const L1L2Certificate c = l1l2_certificate(d, p, p.effective_l2_bound());
    std::mt19937_64 rng(606);
    std::uniform_real_distribution<double> logscale(std::log(1e-2), std::log(1e2));
    int violations = 0;
    double min_lower_ratio = 1e300, max_upper_ratio = 0.0;
    for (int i = 0; i < 100; ++i) {
        const Vector x = oracle::random_vector(rng, 4, std::exp(logscale(rng)));
        const double V = value_function(d, x);
        const double lower = c.lambda_min_Q * x.squaredNorm();
        const double upper = c.tau(x.norm());
        violations += (lower > V * (1 + 1e-8)) + (V > upper * (1 + 1e-8));
        min_lower_ratio = std::min(min_lower_ratio, V / lower);
        max_upper_ratio = std::max(max_upper_ratio, V / upper);
    }
    std::ostringstream os;
    os << violations << " violations, min V/lower " << min_lower_ratio << ", max V/upper "
       << max_upper_ratio;
    return {violations == 0, os.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

constexpr double kStateNormCeiling = 1000.0;

struct ReferenceRun {
    std::vector<ScenarioResult> results;
    std::vector<fs::path> files;
    double seconds = 0.0;
};

ReferenceRun reference_run(const fs::path& out, int threads) {
    SimConfig c = SimConfig::reference_defaults();
    c.output_dir = out;
    c.threads = threads;
    fs::remove_all(out);
    const auto t0 = Clock::now();
    const Experiment exp = prepare_experiment(c);
    MonteCarloOptions mc;
    mc.threads = threads;
    ReferenceRun r;
    r.results = run_monte_carlo(exp, mc);
    r.files = emit_outputs(r.results, exp);
    r.seconds = seconds_since(t0);
    return r;
}

// 7. Trends of the reference experiment.
Outcome reference_trends(const ReferenceRun& run) {
    const SimConfig c = SimConfig::reference_defaults();
    bool bounded = true, increasing = true, sparse = true, denser = true;
    std::ostringstream os;
    for (ControllerKind kind : c.controllers) {
        std::vector<double> steady, l0;
        double worst = 0.0;
        for (const auto& res : run.results) {
            if (res.scenario.controller != kind) continue;
            for (double v : res.mean_state_norm) bounded = bounded && std::isfinite(v);
            bounded = bounded && std::isfinite(res.max_state_norm) &&
                      res.max_state_norm < kStateNormCeiling && res.aborted_runs.empty();
            worst = std::max(worst, res.max_state_norm);
            steady.push_back(steady_state_mean(res.mean_state_norm, c.steady_state_window));
            l0.push_back(steady_state_mean(res.mean_packet_l0, c.horizon));
        }
        for (size_t i = 1; i < steady.size(); ++i) increasing = increasing && steady[i] > steady[i - 1];
        if (kind == ControllerKind::l1l2_fista) {
            for (double v : l0) sparse = sparse && v < c.N;
            denser = l0.back() > l0.front();
        }
        os << to_string(kind) << ": steady norms";
        for (double v : steady) os << ' ' << v;
        os << ", mean l0";
        for (double v : l0) os << ' ' << v;
        os << ", max norm " << worst << "; ";
    }
    os << "bounded=" << bounded << " increasing=" << increasing << " sparse=" << sparse
       << " denser=" << denser << ", time " << run.seconds << " s";
    return {bounded && increasing && sparse && denser, os.str()};
}

// 8. Per-step state bound of the l0 controller along simulated trajectories.
Outcome l0_state_bound_check() {
    Matrix a2(2, 2);
    a2 << 1.1, 0.4, -0.3, 0.8;
    const std::vector<std::pair<Matrix, Vector>> plants{
        {Matrix::Constant(1, 1, 1.2), Vector::Ones(1)},
        {a2, Vector(Eigen::Vector2d(0.2, 1.0))},
    };
    long violations = 0, checks = 0;
    double worst_ratio = 0.0;
    bool condition = true;
    for (const auto& [A, B] : plants) {
        SimConfig c = SimConfig::reference_defaults();
        c.builtin_plant = false;
        c.A = A;
        c.B = B;
        c.N = 4;
        c.controllers = {ControllerKind::l0_omp};
        c.disturbance_mode = DisturbanceMode::l2_ball_uniform;
        c.W_m_values = {0.5};
        c.runs = 100;
        c.horizon = 500;
        c.master_seed = 808;
        const Experiment exp = prepare_experiment(c);
        const PlantModel plant = c.plant(0.5);
        const L0Certificate cert = l0_certificate(*exp.l0, plant, plant.effective_l2_bound());
        condition = condition && cert.xi_condition;
        MonteCarloOptions mc;
        mc.keep_records = true;
        const auto results = run_monte_carlo(exp, mc);
        for (const auto& rec : results.front().records) {
            int arrivals = 0;
            for (size_t k = 0; k < rec.size(); ++k) {
                const double bound = l0_state_bound(cert, exp.l0->P, rec.x0.norm(), arrivals);
                worst_ratio = std::max(worst_ratio, rec.state_norm[k] / bound);
                violations += rec.state_norm[k] > bound;
                ++checks;
                arrivals += rec.arrived[k];
            }
        }
    }
    std::ostringstream os;
    os << violations << " violations in " << checks << " steps, max norm / bound " << worst_ratio
       << ", condition holds " << condition;
    return {violations == 0 && condition, os.str()};
}

// 9. Byte-identical CSVs across repeated runs and thread counts.
Outcome determinism(const ReferenceRun& first, const ReferenceRun& second) {
    int compared = 0, differ = 0;
    for (const auto& f : first.files) {
        if (f.extension() != ".csv") continue;
        const fs::path other = second.files.front().parent_path() / f.filename();
        ++compared;
        differ += !fs::exists(other) || slurp(f) != slurp(other);
    }
    std::ostringstream os;
    os << compared << " CSV files compared, " << differ << " differ";
    return {compared > 0 && differ == 0, os.str()};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance checks"};
    std::string work_dir = "acceptance_out";
    int threads = 4;
    app.add_option("--work-dir", work_dir, "Directory for experiment outputs");
    app.add_option("--threads", threads, "Worker threads for the repeated reference run")
        ->check(CLI::PositiveNumber);
    CLI11_PARSE(app, argc, argv);

    int failed = 0;
    auto report = [&](int id, const std::string& name, const std::function<Outcome()>& check) {
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::cout << "criterion " << id << " [" << (o.pass ? "PASS" : "FAIL") << "] " << name
                  << ": " << o.detail << std::endl;
    };

    report(1, "Riccati solver correctness", dare_correctness);
    report(2, "minimal tracking cost equals P - Q", projector_crosscheck);
    report(3, "greedy l0 packets vs exhaustive search", omp_vs_exhaustive);
    report(4, "l1-l2 solver optimality", fista_optimality);
    report(5, "disturbance accumulation bounds", accumulation_bounds);
    report(6, "value function bounds", value_sandwich);

    std::optional<ReferenceRun> first, second;
    report(7, "reference experiment trends", [&] {
        first = reference_run(fs::path(work_dir) / "run_single_thread", 1);
        return reference_trends(*first);
    });
    report(8, "l0 per-step state bound", l0_state_bound_check);
    report(9, "reproducible outputs", [&] {
        if (!first) return Outcome{false, "reference run unavailable"};
        second = reference_run(fs::path(work_dir) / "run_multi_thread", threads);
        return determinism(*first, *second);
    });

    std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed")
              << std::endl;
    return failed == 0 ? 0 : 1;
}
