#pragma once

#include <string>
#include <vector>

#include "sppc/controllers.hpp"

namespace sppc {

struct CertificateError : Error { using Error::Error; };

// ---------------------------------------------------------------------------
// Disturbance accumulation bounds

/// sum_{l=0}^{N-1} sigma_max(A^{N-1-l}) W_m
double gamma_N(const PlantModel& plant, int N, double W_m);

/// [1 + sum_{l=0}^{N-1} sigma_max(B (B^T P B)^{-1} B^T P A^{N-l})] W_m
double eps_N(const PlantModel& plant, const SymMatrix& P, int N, double W_m);

/// Open-loop disturbance accumulation sum_{l=0}^{i-1} A^{i-1-l} w_l,
/// 1 <= i <= w_seq.size().
Vector oracle_g(const PlantModel& plant, int i, const std::vector<Vector>& w_seq);

/// Closed-loop disturbance term w_i - sum_{l=0}^{i-1} B F A^{i-1-l} w_l,
/// 0 <= i < w_seq.size().
Vector oracle_rho_i(const PlantModel& plant, const SymMatrix& P, int i,
                    const std::vector<Vector>& w_seq);

// ---------------------------------------------------------------------------
// l0 controller constants

/// 1 - lambda_min(Q P^{-1})
double contraction_rho(const SymMatrix& Q, const SymMatrix& P);

/// max_i lambda_max(Gamma_i^T P Gamma_i (M^T M)^{-1}) over the N row blocks.
double constant_c1(const LiftedSystem& lifted, const SymMatrix& P);

/// Strict inequality sqrt(lambda_max(xi)) < (1 - phi1)^2 sqrt(lambda_min(P)) / sqrt(c1).
bool xi_condition_holds(const SymMatrix& xi, double phi1, double c1, const SymMatrix& P);

struct L0Certificate {
    double rho = 0.0;
    double phi1 = 0.0;
    double c1 = 0.0;
    double phi2 = 0.0;
    double Theta1 = 0.0;
    double eps_N = 0.0;
    double Psi1 = 0.0;   // +inf when the xi condition fails
    bool xi_condition = false;
    double W_m_effective = 0.0;
};

L0Certificate l0_certificate(const L0Design& design, const PlantModel& plant, double W_m_effective);

/// Right-hand side of the per-step state bound
///   ||x(k)|| <= phi2^m sqrt(lambda_max(P) / lambda_min(P)) ||x(0)|| + Psi1
/// where m is the number of packet arrivals at times strictly before k.
double l0_state_bound(const L0Certificate& cert, const SymMatrix& P, double x0_norm,
                      int arrivals_before_k);

// ---------------------------------------------------------------------------
// l1-l2 controller constants

struct L1L2Certificate {
    double alpha = 0.0;
    double beta = 0.0;
    double chi = 0.0;
    double gamma_N = 0.0;
    double varphi = 0.0;
    double Theta = 0.0;
    double Psi = 0.0;
    double lambda_min_Q = 0.0;
    double lambda_max_Q = 0.0;
    double W_m_effective = 0.0;

    /// tau(y) = alpha y + (beta + lambda_max(Q)) y^2
    double tau(double y) const;
};

/// K^T (I - M M^+) K, the minimum of ||M U - K x||^2 as a quadratic form in x.
SymMatrix pi_star_projector(const LiftedSystem& lifted);

L1L2Certificate l1l2_certificate(const L1L2Design& design, const PlantModel& plant,
                                 double W_m_effective);

/// Optimal value of the l1-l2 cost, solved at tolerance 1e-12.
/// Throws NoConvergenceError if the solver does not converge.
double value_function(const L1L2Design& design, const Vector& x);

// ---------------------------------------------------------------------------
// Report serialization (key = value lines)

std::string to_report(const L0Certificate& cert, const std::string& prefix = "l0.");
std::string to_report(const L1L2Certificate& cert, const std::string& prefix = "l1l2.");

}  // namespace sppc
