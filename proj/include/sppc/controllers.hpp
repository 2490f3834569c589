#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "sppc/model.hpp"

namespace sppc {

struct SynthesisError : Error { using Error::Error; };
struct InfeasibleError : Error { using Error::Error; };
struct ParameterError : Error { using Error::Error; };

/// Design of the l2-constrained l0 controller. P solves the Riccati
/// equation with r = 0 and the feasible set is
///   { U : ||M U - K x||^2 <= x^T Pi x },  Pi = Pi* + xi.
struct L0Design {
    SymMatrix Q;
    SymMatrix P;
    SymMatrix Pi_star;   // P - Q
    SymMatrix xi;
    SymMatrix Pi;
    LiftedSystem lifted;
    bool condition_ok = false;

    int N() const { return lifted.N; }
};

/// Design of the unconstrained l1-l2 controller with cost
///   J(x, U) = ||M U - K x||^2 + ||x||_Q^2 + nu ||U||_1.
struct L1L2Design {
    SymMatrix Q;
    double nu = 0.0;
    double r = 0.0;
    double zeta = 0.0;
    SymMatrix P;
    LiftedSystem lifted;

    int N() const { return lifted.N; }
    double objective(const Vector& x, const Vector& U) const;
};

struct SolverReport {
    long iterations = 0;
    double final_objective_or_residual = 0.0;
    bool converged = false;
    int support_size = 0;
    // OMP: squared residual after each greedy step (first entry is ||Kx||^2).
    // FISTA: objective after each iteration.
    std::vector<double> history;
};

/// Default xi is ((1 - phi1)^4 lambda_min(P) / (4 c1)) I.
L0Design synthesize_l0(const PlantModel& plant, int N, const SymMatrix& Q,
                       std::optional<double> xi_scale = std::nullopt);

/// Relative slack on the l0 feasibility test.
inline constexpr double kOmpFeasibilitySlack = 1e-9;

/// Orthogonal matching pursuit on the columns of M. Stops at the first
/// support whose least-squares packet satisfies the constraint.
std::pair<ControlPacket, SolverReport> solve_l0_omp(const L0Design& design, const Vector& x,
                                                    long origin_time = 0);

/// When zeta is omitted it is derived from r = mu^2 N / zeta with mu read
/// as nu, i.e. zeta = nu^2 N / r.
L1L2Design synthesize_l1l2(const PlantModel& plant, int N, const SymMatrix& Q, double nu, double r,
                           std::optional<double> zeta = std::nullopt);

struct FistaOptions {
    double tol = 1e-10;
    long max_iter = 5000;
};

/// Largest violation of the l1 optimality condition at U:
///   U_j > 0: |g_j + nu|,  U_j < 0: |g_j - nu|,  U_j = 0: max(0, |g_j| - nu)
/// with g = 2 M^T (M U - K x).
double l1_optimality_violation(const L1L2Design& design, const Vector& x, const Vector& U);

/// FISTA with monotone restart. Step 1/L with L = 2 lambda_max(M^T M).
std::pair<ControlPacket, SolverReport> solve_l1l2_fista(const L1L2Design& design, const Vector& x,
                                                        const FistaOptions& opts = {},
                                                        long origin_time = 0);

/// F = -(B^T P B)^{-1} B^T P A
RowVector controller_gain_F(const SymMatrix& P, const PlantModel& plant);

}  // namespace sppc
