#include "sppc/model.hpp"

#include <cmath>
#include <sstream>
#include <string>

namespace sppc {

DisturbanceMode parse_disturbance_mode(std::string_view name) {
    if (name == "l2_ball_uniform") return DisturbanceMode::l2_ball_uniform;
    if (name == "per_component_uniform") return DisturbanceMode::per_component_uniform;
    if (name == "none") return DisturbanceMode::none;
    throw ContractError("unknown disturbance mode '" + std::string(name) + "'");
}

std::string_view to_string(DisturbanceMode mode) {
    switch (mode) {
        case DisturbanceMode::l2_ball_uniform: return "l2_ball_uniform";
        case DisturbanceMode::per_component_uniform: return "per_component_uniform";
        case DisturbanceMode::none: return "none";
    }
    return "unknown";
}

PlantModel::PlantModel(Matrix A, Vector B, double W_m, DisturbanceMode mode)
    : A_(std::move(A)), B_(std::move(B)), W_m_(W_m), mode_(mode) {
    if (A_.rows() == 0 || A_.rows() != A_.cols() || B_.size() != A_.rows()) {
        throw ContractError("PlantModel: A must be n x n and B an n-vector");
    }
    if (!A_.allFinite() || !B_.allFinite()) {
        throw ContractError("PlantModel: non-finite entries");
    }
    if (!(W_m_ >= 0.0) || !std::isfinite(W_m_)) {
        throw ContractError("PlantModel: W_m must be finite and nonnegative");
    }
    if (mode_ == DisturbanceMode::none && W_m_ != 0.0) {
        throw ContractError("PlantModel: disturbance mode 'none' requires W_m = 0");
    }
    if (!is_reachable(A_, B_)) {
        throw ContractError("PlantModel: (A, B) is not reachable");
    }
}

PlantModel PlantModel::example_plant(double W_m, DisturbanceMode mode) {
    Matrix A(4, 4);
    A << 0.3966, -0.4586, -0.0250, -0.7958,
         0.7459, 0.8061, -0.0983, 0.7943,
         -0.9451, -0.3111, -0.8236, 0.2473,
         0.1551, -1.3821, -1.9151, 0.0369;
    Vector B(4);
    B << 1.0617, -0.1986, -0.3184, 0.5562;
    return PlantModel(std::move(A), std::move(B), W_m, mode);
}

double PlantModel::effective_l2_bound() const {
    switch (mode_) {
        case DisturbanceMode::l2_ball_uniform: return W_m_;
        case DisturbanceMode::per_component_uniform:
            return std::sqrt(static_cast<double>(n())) * W_m_;
        case DisturbanceMode::none: return 0.0;
    }
    return W_m_;
}

PlantModel PlantModel::with_disturbance(double W_m, DisturbanceMode mode) const {
    return PlantModel(A_, B_, W_m, mode);
}

Vector step_plant(const PlantModel& plant, const Vector& x, double u, const Vector& w) {
    if (x.size() != plant.n() || w.size() != plant.n()) {
        throw ContractError("step_plant: dimension mismatch");
    }
    const double bound = plant.effective_l2_bound();
    if (w.norm() > bound + 1e-12) {
        std::ostringstream os;
        os << "step_plant: disturbance norm " << w.norm() << " exceeds bound " << bound;
        throw ContractError(os.str());
    }
    return plant.A() * x + plant.B() * u + w;
}

Vector sample_disturbance(const PlantModel& plant, Rng& rng) {
    const Eigen::Index n = plant.n();
    Vector w = Vector::Zero(n);
    // The number of draws does not depend on W_m, so runs that differ only
    // in W_m see proportional disturbance sequences.
    switch (plant.mode()) {
        case DisturbanceMode::none:
            break;
        case DisturbanceMode::per_component_uniform: {
            std::uniform_real_distribution<double> unit(0.0, 1.0);
            for (Eigen::Index i = 0; i < n; ++i) {
                w(i) = plant.W_m() * (2.0 * unit(rng) - 1.0);
            }
            break;
        }
        case DisturbanceMode::l2_ball_uniform: {
            std::normal_distribution<double> gauss(0.0, 1.0);
            std::uniform_real_distribution<double> unit(0.0, 1.0);
            Vector dir(n);
            double norm = 0.0;
            do {
                for (Eigen::Index i = 0; i < n; ++i) dir(i) = gauss(rng);
                norm = dir.norm();
            } while (norm == 0.0);
            const double radius =
                plant.W_m() * std::pow(unit(rng), 1.0 / static_cast<double>(n));
            w = (radius / norm) * dir;
            const double wn = w.norm();
            if (wn > plant.W_m()) {
                w *= plant.W_m() / wn;
            }
            break;
        }
    }
    return w;
}

Matrix LiftedSystem::gamma_block(int i) const {
    return Gamma.middleRows(static_cast<Eigen::Index>(i) * n(), n());
}

double LiftedSystem::tracking_cost(const Vector& x, const Vector& U) const {
    return (M * U - K * x).squaredNorm();
}

LiftedSystem build_lifted(const PlantModel& plant, int N, const SymMatrix& Q, const SymMatrix& P) {
    const Eigen::Index n = plant.n();
    if (N < 1) {
        throw ContractError("build_lifted: horizon N must be >= 1");
    }
    if (Q.dim() != n || P.dim() != n) {
        throw ContractError("build_lifted: weighting matrix dimension mismatch");
    }
    if (!is_positive_definite(Q) || !is_positive_definite(P)) {
        throw ContractError("build_lifted: Q and P must be positive definite");
    }

    LiftedSystem ls;
    ls.N = N;
    ls.Gamma = Matrix::Zero(N * n, N);
    ls.Lambda = Matrix::Zero(N * n, n);

    // powers[k] = A^k B
    std::vector<Vector> powers(N);
    powers[0] = plant.B();
    for (int k = 1; k < N; ++k) powers[k] = plant.A() * powers[k - 1];

    Matrix apow = plant.A();
    for (int i = 0; i < N; ++i) {
        ls.Lambda.middleRows(i * n, n) = apow;
        apow = plant.A() * apow;
        for (int j = 0; j <= i; ++j) {
            ls.Gamma.block(i * n, j, n, 1) = powers[i - j];
        }
    }

    const Matrix q_half = sqrt_psd(Q).matrix();
    const Matrix p_half = sqrt_psd(P).matrix();
    ls.Qhat = Matrix::Zero(N * n, N * n);
    Matrix qhat_half = Matrix::Zero(N * n, N * n);
    for (int i = 0; i < N; ++i) {
        const bool terminal = (i == N - 1);
        ls.Qhat.block(i * n, i * n, n, n) = terminal ? P.matrix() : Q.matrix();
        qhat_half.block(i * n, i * n, n, n) = terminal ? p_half : q_half;
    }
    ls.M = qhat_half * ls.Gamma;
    ls.K = -qhat_half * ls.Lambda;
    ls.MtM = ls.M.transpose() * ls.M;
    ls.MtM = 0.5 * (ls.MtM + ls.MtM.transpose());
    try {
        ls.M_pinv = pinv_tall(ls.M);
    } catch (const RankError&) {
        throw ContractError("build_lifted: M does not have full column rank");
    }
    ls.lipschitz = 2.0 * lambda_max(SymMatrix(ls.MtM));
    return ls;
}

std::vector<Vector> predict_states(const LiftedSystem& lifted, const PlantModel& plant,
                                   const Vector& x, const Vector& U) {
    if (x.size() != plant.n() || U.size() != lifted.N) {
        throw ContractError("predict_states: dimension mismatch");
    }
    std::vector<Vector> out;
    out.reserve(lifted.N);
    Vector state = x;
    for (int i = 0; i < lifted.N; ++i) {
        state = plant.A() * state + plant.B() * U(i);
        out.push_back(state);
    }
    return out;
}

ControlPacket::ControlPacket(Vector u, long origin) : U(std::move(u)), origin_time(origin) {
    if (U.size() == 0 || !U.allFinite()) {
        throw ContractError("ControlPacket: packet must be non-empty and finite");
    }
    if (origin < 0) {
        throw ContractError("ControlPacket: origin time must be nonnegative");
    }
}

int ControlPacket::l0_norm() const {
    return static_cast<int>((U.array() != 0.0).count());
}

}  // namespace sppc
