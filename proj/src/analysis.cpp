#include "sppc/analysis.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

namespace sppc {

double gamma_N(const PlantModel& plant, int N, double W_m) {
    if (N < 1) throw ContractError("gamma_N: N must be >= 1");
    if (!(W_m >= 0.0)) throw ContractError("gamma_N: W_m must be nonnegative");
    double sum = 0.0;
    Matrix apow = Matrix::Identity(plant.n(), plant.n());
    // sum over l of sigma_max(A^{N-1-l}) visits the powers 0 .. N-1
    for (int k = 0; k < N; ++k) {
        sum += sigma_max(apow);
        apow = plant.A() * apow;
    }
    return sum * W_m;
}

double eps_N(const PlantModel& plant, const SymMatrix& P, int N, double W_m) {
    if (N < 1) throw ContractError("eps_N: N must be >= 1");
    if (!(W_m >= 0.0)) throw ContractError("eps_N: W_m must be nonnegative");
    const Vector pb = P.matrix() * plant.B();
    const double btpb = plant.B().dot(pb);
    if (!(btpb > 0.0)) throw SingularityError("eps_N: B^T P B is not positive");
    const Matrix proj = plant.B() * pb.transpose() / btpb;  // B (B^T P B)^{-1} B^T P
    double sum = 0.0;
    Matrix apow = plant.A();
    // powers A^{N-l} for l = 0 .. N-1 are A^1 .. A^N
    for (int k = 1; k <= N; ++k) {
        sum += sigma_max(proj * apow);
        apow = plant.A() * apow;
    }
    return (1.0 + sum) * W_m;
}

Vector oracle_g(const PlantModel& plant, int i, const std::vector<Vector>& w_seq) {
    if (i < 1 || static_cast<size_t>(i) > w_seq.size()) {
        throw ContractError("oracle_g: index out of range");
    }
    Vector acc = Vector::Zero(plant.n());
    for (int l = 0; l < i; ++l) {
        acc += matrix_power(plant.A(), i - 1 - l) * w_seq[l];
    }
    return acc;
}

Vector oracle_rho_i(const PlantModel& plant, const SymMatrix& P, int i,
                    const std::vector<Vector>& w_seq) {
    if (i < 0 || static_cast<size_t>(i) >= w_seq.size()) {
        throw ContractError("oracle_rho_i: index out of range");
    }
    const RowVector F = controller_gain_F(P, plant);
    const Matrix BF = plant.B() * F;
    Vector acc = w_seq[i];
    for (int l = 0; l < i; ++l) {
        acc -= BF * matrix_power(plant.A(), i - 1 - l) * w_seq[l];
    }
    return acc;
}

double contraction_rho(const SymMatrix& Q, const SymMatrix& P) {
    return 1.0 - lambda_min_similar(Q, P);
}

double constant_c1(const LiftedSystem& lifted, const SymMatrix& P) {
    const SymMatrix mtm(lifted.MtM);
    const Matrix w = inv_sqrt_pd(mtm).matrix();
    double c1 = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < lifted.N; ++i) {
        const Matrix g = lifted.gamma_block(i);
        const Matrix s = w * (g.transpose() * P.matrix() * g) * w;
        c1 = std::max(c1, lambda_max(SymMatrix::symmetrized(s)));
    }
    return c1;
}

bool xi_condition_holds(const SymMatrix& xi, double phi1, double c1, const SymMatrix& P) {
    const double lhs = std::sqrt(std::max(lambda_max(xi), 0.0));
    const double rhs = (1.0 - phi1) * (1.0 - phi1) * std::sqrt(lambda_min(P)) / std::sqrt(c1);
    return lhs < rhs;
}

L0Certificate l0_certificate(const L0Design& design, const PlantModel& plant, double W_m_effective) {
    L0Certificate c;
    c.W_m_effective = W_m_effective;
    c.rho = contraction_rho(design.Q, design.P);
    // P >= Q up to round-off; clamp tiny negative values to 0.
    if (c.rho < 0.0 && c.rho > -1e-10) c.rho = 0.0;
    if (!(c.rho >= 0.0 && c.rho < 1.0)) {
        std::ostringstream os;
        os << "l0_certificate: rho = " << c.rho << " is outside [0, 1)";
        throw CertificateError(os.str());
    }
    c.phi1 = std::sqrt(c.rho);
    c.c1 = constant_c1(design.lifted, design.P);

    const double lmin_p = lambda_min(design.P);
    const double lmax_p = lambda_max(design.P);
    const double lmax_xi = std::max(lambda_max(design.xi), 0.0);
    const double one_minus = 1.0 - c.phi1;

    c.phi2 = c.phi1 + std::sqrt(c.c1 * lmax_xi) / (one_minus * std::sqrt(lmin_p));
    c.Theta1 = std::sqrt(lmax_p) / one_minus;
    c.eps_N = eps_N(plant, design.P, design.N(), W_m_effective);
    c.xi_condition = xi_condition_holds(design.xi, c.phi1, c.c1, design.P);

    const double denom = one_minus * one_minus * std::sqrt(lmin_p) - std::sqrt(c.c1 * lmax_xi);
    if (c.xi_condition && denom > 0.0) {
        c.Psi1 = std::sqrt(lmax_p) * c.eps_N / denom;
    } else {
        c.Psi1 = std::numeric_limits<double>::infinity();
    }
    return c;
}

double l0_state_bound(const L0Certificate& cert, const SymMatrix& P, double x0_norm,
                      int arrivals_before_k) {
    const double cond = std::sqrt(lambda_max(P) / lambda_min(P));
    return std::pow(cert.phi2, arrivals_before_k) * cond * x0_norm + cert.Psi1;
}

double L1L2Certificate::tau(double y) const {
    return alpha * y + (beta + lambda_max_Q) * y * y;
}

SymMatrix pi_star_projector(const LiftedSystem& lifted) {
    const Eigen::Index rows = lifted.M.rows();
    const Matrix proj = Matrix::Identity(rows, rows) - lifted.M * lifted.M_pinv;
    return SymMatrix::symmetrized(lifted.K.transpose() * proj * lifted.K);
}

L1L2Certificate l1l2_certificate(const L1L2Design& design, const PlantModel& plant,
                                 double W_m_effective) {
    if (!(design.zeta > 0.0)) {
        throw CertificateError("l1l2_certificate: zeta must be positive");
    }
    const LiftedSystem& ls = design.lifted;
    L1L2Certificate c;
    c.W_m_effective = W_m_effective;
    c.lambda_min_Q = lambda_min(design.Q);
    c.lambda_max_Q = lambda_max(design.Q);
    c.alpha = design.nu * std::sqrt(static_cast<double>(plant.n())) * sigma_max(ls.M_pinv * ls.K);
    c.beta = lambda_max(pi_star_projector(ls));
    c.chi = c.lambda_max_Q + lambda_max(SymMatrix::symmetrized(ls.K.transpose() * ls.K));
    c.gamma_N = gamma_N(plant, design.N(), W_m_effective);
    c.varphi = 1.0 - c.lambda_min_Q / (c.alpha + c.beta + c.lambda_max_Q);
    if (!(c.varphi > 0.0 && c.varphi < 1.0)) {
        std::ostringstream os;
        os << "l1l2_certificate: varphi = " << c.varphi << " is outside (0, 1)";
        throw CertificateError(os.str());
    }
    const double sqrt_chi = std::sqrt(c.chi);
    const double sqrt_lmin = std::sqrt(c.lambda_min_Q);
    c.Theta = sqrt_lmin / 2.0 + sqrt_chi * c.gamma_N + std::sqrt(design.zeta);
    c.Psi = (0.5 + std::sqrt(design.zeta / c.lambda_min_Q) + sqrt_chi * c.gamma_N / sqrt_lmin) /
            (1.0 - std::sqrt(c.varphi));
    return c;
}

double value_function(const L1L2Design& design, const Vector& x) {
    FistaOptions opts;
    opts.tol = 1e-12;
    opts.max_iter = 200000;
    const auto [packet, report] = solve_l1l2_fista(design, x, opts);
    if (!report.converged) {
        throw NoConvergenceError("value_function: FISTA did not converge");
    }
    return design.objective(x, packet.U);
}

namespace {

std::string fmt(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace

std::string to_report(const L0Certificate& c, const std::string& p) {
    std::ostringstream os;
    os << p << "W_m_effective = " << fmt(c.W_m_effective) << '\n'
       << p << "rho = " << fmt(c.rho) << '\n'
       << p << "phi1 = " << fmt(c.phi1) << '\n'
       << p << "c1 = " << fmt(c.c1) << '\n'
       << p << "phi2 = " << fmt(c.phi2) << '\n'
       << p << "Theta1 = " << fmt(c.Theta1) << '\n'
       << p << "eps_N = " << fmt(c.eps_N) << '\n'
       << p << "Psi1 = " << fmt(c.Psi1) << '\n'
       << p << "xi_condition = " << (c.xi_condition ? "true" : "false") << '\n';
    return os.str();
}

std::string to_report(const L1L2Certificate& c, const std::string& p) {
    std::ostringstream os;
    os << p << "W_m_effective = " << fmt(c.W_m_effective) << '\n'
       << p << "alpha = " << fmt(c.alpha) << '\n'
       << p << "beta = " << fmt(c.beta) << '\n'
       << p << "chi = " << fmt(c.chi) << '\n'
       << p << "gamma_N = " << fmt(c.gamma_N) << '\n'
       << p << "varphi = " << fmt(c.varphi) << '\n'
       << p << "Theta = " << fmt(c.Theta) << '\n'
       << p << "Psi = " << fmt(c.Psi) << '\n';
    return os.str();
}

}  // namespace sppc
