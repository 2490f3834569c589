#pragma once

#include <random>
#include <string_view>
#include <vector>

#include "sppc/numerics.hpp"

namespace sppc {

/// Random engine used for every stochastic stream in the library.
using Rng = std::mt19937_64;

enum class DisturbanceMode { l2_ball_uniform, per_component_uniform, none };

DisturbanceMode parse_disturbance_mode(std::string_view name);
std::string_view to_string(DisturbanceMode mode);

/// Disturbed single-input LTI plant x(k+1) = A x(k) + B u(k) + w(k).
class PlantModel {
public:
    PlantModel(Matrix A, Vector B, double W_m, DisturbanceMode mode);

    /// The 4-state example plant used in the reference experiment.
    static PlantModel example_plant(double W_m = 0.0,
                                    DisturbanceMode mode = DisturbanceMode::per_component_uniform);

    const Matrix& A() const { return A_; }
    const Vector& B() const { return B_; }
    double W_m() const { return W_m_; }
    DisturbanceMode mode() const { return mode_; }
    Eigen::Index n() const { return A_.rows(); }

    /// Largest Euclidean norm a sampled disturbance can have: W_m in
    /// l2-ball mode, sqrt(n) W_m per component, 0 for none.
    double effective_l2_bound() const;

    PlantModel with_disturbance(double W_m, DisturbanceMode mode) const;

private:
    Matrix A_;
    Vector B_;
    double W_m_;
    DisturbanceMode mode_;
};

/// A x + B u + w. Throws ContractError if ||w||_2 exceeds the
/// effective bound by more than 1e-12.
Vector step_plant(const PlantModel& plant, const Vector& x, double u, const Vector& w);

Vector sample_disturbance(const PlantModel& plant, Rng& rng);

/// Horizon-N stacked prediction matrices.
///   Gamma  (N n x N): block (i, j) = A^{i-j} B for j <= i
///   Lambda (N n x n): block i = A^{i+1}
///   Qhat = diag{Q, ..., Q, P}, M = Qhat^{1/2} Gamma, K = -Qhat^{1/2} Lambda
struct LiftedSystem {
    int N = 0;
    Matrix Gamma;
    Matrix Lambda;
    Matrix Qhat;
    Matrix M;
    Matrix K;
    Matrix MtM;       // M^T M
    Matrix M_pinv;    // (M^T M)^{-1} M^T
    double lipschitz = 0.0;  // 2 lambda_max(M^T M)

    Eigen::Index n() const { return Lambda.cols(); }
    /// Row block i (0-based) of Gamma, an n x N matrix.
    Matrix gamma_block(int i) const;
    /// ||M U - K x||_2^2
    double tracking_cost(const Vector& x, const Vector& U) const;
};

LiftedSystem build_lifted(const PlantModel& plant, int N, const SymMatrix& Q, const SymMatrix& P);

/// Nominal predictions x~_1 .. x~_N from x~_0 = x.
std::vector<Vector> predict_states(const LiftedSystem& lifted, const PlantModel& plant,
                                   const Vector& x, const Vector& U);

/// A control packet [u_0 ... u_{N-1}] computed from x(origin_time).
struct ControlPacket {
    Vector U;
    long origin_time = 0;

    ControlPacket() = default;
    ControlPacket(Vector u, long origin);

    int horizon() const { return static_cast<int>(U.size()); }
    int l0_norm() const;
};

}  // namespace sppc
