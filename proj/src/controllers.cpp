#include "sppc/controllers.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include "sppc/analysis.hpp"

namespace sppc {

L0Design synthesize_l0(const PlantModel& plant, int N, const SymMatrix& Q,
                       std::optional<double> xi_scale) {
    const Eigen::Index n = plant.n();
    if (Q.dim() != n || !is_positive_definite(Q)) {
        throw ContractError("synthesize_l0: Q must be an n x n positive definite matrix");
    }
    DareProblem dare{plant.A(), plant.B(), Q, 0.0};
    SymMatrix P = solve_dare(dare);

    SymMatrix pi_star = P - Q;
    if (lambda_min(pi_star) < -1e-10) {
        throw SynthesisError("synthesize_l0: Pi* = P - Q is not positive semidefinite");
    }
    LiftedSystem lifted = build_lifted(plant, N, Q, P);

    double rho = contraction_rho(Q, P);
    if (rho < 0.0 && rho > -1e-10) rho = 0.0;
    if (!(rho >= 0.0 && rho < 1.0)) {
        throw SynthesisError("synthesize_l0: contraction constant outside [0, 1)");
    }
    const double phi1 = std::sqrt(rho);
    const double c1 = constant_c1(lifted, P);

    double scale = 0.0;
    if (xi_scale) {
        if (!(*xi_scale > 0.0)) {
            throw ContractError("synthesize_l0: xi scale must be positive");
        }
        scale = *xi_scale;
    } else {
        scale = std::pow(1.0 - phi1, 4) * lambda_min(P) / (4.0 * c1);
    }
    SymMatrix xi = scale * SymMatrix::identity(n);

    L0Design d{Q, P, pi_star, xi, pi_star + xi, std::move(lifted), false};
    d.condition_ok = xi_condition_holds(d.xi, phi1, c1, d.P);
    return d;
}

std::pair<ControlPacket, SolverReport> solve_l0_omp(const L0Design& design, const Vector& x,
                                                    long origin_time) {
    const LiftedSystem& ls = design.lifted;
    const int N = ls.N;
    if (x.size() != ls.n()) {
        throw ContractError("solve_l0_omp: state dimension mismatch");
    }
    const Vector target = ls.K * x;
    const double bound = x.dot(design.Pi.matrix() * x);
    const double limit = bound + kOmpFeasibilitySlack * (1.0 + std::abs(bound));

    SolverReport report;
    Vector U = Vector::Zero(N);
    Vector residual = target;
    double res_sq = residual.squaredNorm();
    report.history.push_back(res_sq);

    std::vector<Eigen::Index> support;
    std::vector<bool> used(N, false);
    while (res_sq > limit && static_cast<int>(support.size()) < N) {
        const Vector corr = ls.M.transpose() * residual;
        Eigen::Index best = -1;
        double best_val = -1.0;
        for (Eigen::Index j = 0; j < N; ++j) {
            if (!used[j] && std::abs(corr(j)) > best_val) {
                best_val = std::abs(corr(j));
                best = j;
            }
        }
        used[best] = true;
        support.push_back(best);

        Matrix cols(ls.M.rows(), static_cast<Eigen::Index>(support.size()));
        for (size_t s = 0; s < support.size(); ++s) {
            cols.col(static_cast<Eigen::Index>(s)) = ls.M.col(support[s]);
        }
        const Vector coef = cols.householderQr().solve(target);
        U.setZero();
        for (size_t s = 0; s < support.size(); ++s) {
            U(support[s]) = coef(static_cast<Eigen::Index>(s));
        }
        residual = target - ls.M * U;
        res_sq = residual.squaredNorm();
        report.history.push_back(res_sq);
        ++report.iterations;
    }

    if (res_sq > limit) {
        std::ostringstream os;
        os << "solve_l0_omp: full-support least squares is infeasible (" << res_sq << " > "
           << bound << ")";
        throw InfeasibleError(os.str());
    }
    report.converged = true;
    report.final_objective_or_residual = res_sq;
    ControlPacket packet(std::move(U), origin_time);
    report.support_size = packet.l0_norm();
    return {std::move(packet), std::move(report)};
}

L1L2Design synthesize_l1l2(const PlantModel& plant, int N, const SymMatrix& Q, double nu, double r,
                           std::optional<double> zeta) {
    const Eigen::Index n = plant.n();
    if (Q.dim() != n || !is_positive_definite(Q)) {
        throw ContractError("synthesize_l1l2: Q must be an n x n positive definite matrix");
    }
    if (!(nu > 0.0) || !std::isfinite(nu)) {
        throw ParameterError("synthesize_l1l2: nu must be positive");
    }
    if (!(r >= 0.0) || !std::isfinite(r)) {
        throw ParameterError("synthesize_l1l2: r must be nonnegative");
    }
    double z = 0.0;
    if (zeta) {
        if (!(*zeta > 0.0)) throw ParameterError("synthesize_l1l2: zeta must be positive");
        z = *zeta;
    } else {
        if (r == 0.0) {
            throw ParameterError("synthesize_l1l2: zeta is undefined for r = 0; pass it explicitly");
        }
        z = nu * nu * static_cast<double>(N) / r;
    }
    DareProblem dare{plant.A(), plant.B(), Q, r};
    SymMatrix P = solve_dare(dare);
    LiftedSystem lifted = build_lifted(plant, N, Q, P);
    return L1L2Design{Q, nu, r, z, std::move(P), std::move(lifted)};
}

double L1L2Design::objective(const Vector& x, const Vector& U) const {
    return lifted.tracking_cost(x, U) + x.dot(Q.matrix() * x) + nu * U.lpNorm<1>();
}

namespace {

constexpr int kPolishEvery = 10;

double violation_from_gradient(const Vector& g, const Vector& U, double nu) {
    double worst = 0.0;
    for (Eigen::Index j = 0; j < U.size(); ++j) {
        double v;
        if (U(j) > 0.0) {
            v = std::abs(g(j) + nu);
        } else if (U(j) < 0.0) {
            v = std::abs(g(j) - nu);
        } else {
            v = std::max(0.0, std::abs(g(j)) - nu);
        }
        worst = std::max(worst, v);
    }
    return worst;
}

Vector soft_threshold(const Vector& v, double level) {
    return v.unaryExpr([level](double a) {
        if (a > level) return a - level;
        if (a < -level) return a + level;
        return 0.0;
    });
}

}  // namespace

double l1_optimality_violation(const L1L2Design& design, const Vector& x, const Vector& U) {
    const Vector g = 2.0 * design.lifted.M.transpose() * (design.lifted.M * U - design.lifted.K * x);
    return violation_from_gradient(g, U, design.nu);
}

std::pair<ControlPacket, SolverReport> solve_l1l2_fista(const L1L2Design& design, const Vector& x,
                                                        const FistaOptions& opts,
                                                        long origin_time) {
    const LiftedSystem& ls = design.lifted;
    const int N = ls.N;
    if (x.size() != ls.n()) {
        throw ContractError("solve_l1l2_fista: state dimension mismatch");
    }
    if (!(opts.tol > 0.0) || opts.max_iter < 0) {
        throw ContractError("solve_l1l2_fista: tol must be positive");
    }

    const Matrix& H = ls.MtM;
    const Vector Kx = ls.K * x;
    const Vector c = ls.M.transpose() * Kx;
    const double constant = Kx.squaredNorm() + x.dot(design.Q.matrix() * x);
    const double L = ls.lipschitz;
    const double nu = design.nu;
    const double eps_target = opts.tol * (1.0 + nu);
    const Matrix H_abs = H.cwiseAbs();
    const Vector c_abs = c.cwiseAbs();

    // f(U) = U^T H U - 2 c^T U + ||Kx||^2 avoids forming M U - K x each step.
    auto objective = [&](const Vector& U) {
        return U.dot(H * U) - 2.0 * c.dot(U) + constant + nu * U.lpNorm<1>();
    };
    // Converged when the optimality violation is within the target, or
    // within the round-off floor of the gradient evaluation itself.
    auto is_optimal = [&](const Vector& U) {
        const Vector g = 2.0 * (H * U - c);
        const double floor =
            64.0 * std::numeric_limits<double>::epsilon() *
            2.0 * (H_abs * U.cwiseAbs() + c_abs).maxCoeff();
        return violation_from_gradient(g, U, nu) <= std::max(eps_target, floor);
    };

    // Objective change between two points, evaluated on the difference so the
    // sign stays reliable once the change drops below the resolution of F.
    auto objective_change = [&](const Vector& from, const Vector& to) {
        const Vector d = to - from;
        return d.dot(H * (to + from)) - 2.0 * c.dot(d) + nu * (to.lpNorm<1>() - from.lpNorm<1>());
    };

    auto polish = [&](const Vector& U) -> std::optional<Vector> {
        std::vector<Eigen::Index> support;
        for (Eigen::Index j = 0; j < N; ++j) {
            if (U(j) != 0.0) support.push_back(j);
        }
        if (support.empty()) return std::nullopt;
        const auto s = static_cast<Eigen::Index>(support.size());
        Matrix Hs(s, s);
        Vector rhs(s);
        for (Eigen::Index a = 0; a < s; ++a) {
            for (Eigen::Index b = 0; b < s; ++b) Hs(a, b) = H(support[a], support[b]);
            const double sign = U(support[a]) > 0.0 ? 1.0 : -1.0;
            rhs(a) = c(support[a]) - 0.5 * nu * sign;
        }
        const Eigen::LDLT<Matrix> ldlt(Hs);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return std::nullopt;
        const Vector us = ldlt.solve(rhs);
        Vector out = Vector::Zero(N);
        for (Eigen::Index a = 0; a < s; ++a) {
            if ((us(a) > 0.0) != (U(support[a]) > 0.0) || us(a) == 0.0) return std::nullopt;
            out(support[a]) = us(a);
        }
        return out;
    };

    SolverReport report;
    Vector U = Vector::Zero(N);
    Vector Y = U;
    double t = 1.0;
    double F = objective(U);
    report.history.push_back(F);
    report.converged = is_optimal(U);

    while (!report.converged && report.iterations < opts.max_iter) {
        ++report.iterations;
        const Vector grad = 2.0 * (H * Y - c);
        Vector Z = soft_threshold(Y - grad / L, nu / L);
        const double dF = objective_change(U, Z);
        if (dF <= 0.0) {
            const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
            Y = Z + ((t - 1.0) / t_next) * (Z - U);
            U = std::move(Z);
            F += dF;
            t = t_next;
        } else {
            // Momentum overshoot: restart from the current best iterate.
            Y = U;
            t = 1.0;
        }
        report.history.push_back(F);
        report.converged = is_optimal(U);
        if (!report.converged && report.iterations % kPolishEvery == 0) {
            // Solve the stationarity conditions on the current support and
            // sign pattern; accept the result only if it is exactly optimal.
            if (auto cand = polish(U); cand && is_optimal(*cand)) {
                const double dP = objective_change(U, *cand);
                if (dP <= 0.0) {
                    U = std::move(*cand);
                    F += dP;
                    report.history.push_back(F);
                    report.converged = true;
                }
            }
        }
    }

    report.final_objective_or_residual = objective(U);
    ControlPacket packet(std::move(U), origin_time);
    report.support_size = packet.l0_norm();
    return {std::move(packet), std::move(report)};
}

RowVector controller_gain_F(const SymMatrix& P, const PlantModel& plant) {
    if (P.dim() != plant.n()) {
        throw ContractError("controller_gain_F: dimension mismatch");
    }
    const Vector pb = P.matrix() * plant.B();
    const double btpb = plant.B().dot(pb);
    if (!(btpb > 0.0)) {
        throw SingularityError("controller_gain_F: B^T P B is not positive");
    }
    return -(pb.transpose() * plant.A()) / btpb;
}

}  // namespace sppc
