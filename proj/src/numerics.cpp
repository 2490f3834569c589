#include "sppc/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sppc {

SymMatrix::SymMatrix(const Matrix& m) {
    if (m.rows() != m.cols()) {
        throw ContractError("SymMatrix: matrix is not square");
    }
    if (!m.allFinite()) {
        throw ContractError("SymMatrix: non-finite entries");
    }
    const double scale = m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
    const double asym = m.size() == 0 ? 0.0 : (m - m.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12 * scale) {
        std::ostringstream os;
        os << "SymMatrix: asymmetry " << asym << " exceeds 1e-12 * " << scale;
        throw ContractError(os.str());
    }
    m_ = 0.5 * (m + m.transpose());
}

SymMatrix SymMatrix::identity(Eigen::Index n) {
    return SymMatrix(Matrix::Identity(n, n));
}

SymMatrix SymMatrix::symmetrized(const Matrix& m) {
    if (m.rows() != m.cols()) {
        throw ContractError("SymMatrix: matrix is not square");
    }
    return SymMatrix(Matrix(0.5 * (m + m.transpose())));
}

SymMatrix operator+(const SymMatrix& a, const SymMatrix& b) {
    return SymMatrix::symmetrized(a.matrix() + b.matrix());
}

SymMatrix operator-(const SymMatrix& a, const SymMatrix& b) {
    return SymMatrix::symmetrized(a.matrix() - b.matrix());
}

SymMatrix operator*(double s, const SymMatrix& a) {
    return SymMatrix::symmetrized(s * a.matrix());
}

EigenDecomposition eig_sym(const SymMatrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(m.matrix());
    if (solver.info() != Eigen::Success) {
        throw NumericalFailure("eig_sym: eigensolver did not converge");
    }
    // Eigen returns eigenvalues in increasing order.
    return {solver.eigenvalues(), solver.eigenvectors()};
}

double lambda_min(const SymMatrix& m) { return eig_sym(m).values(0); }

double lambda_max(const SymMatrix& m) {
    const auto d = eig_sym(m);
    return d.values(d.values.size() - 1);
}

bool is_positive_definite(const SymMatrix& m, double tol) {
    return m.dim() > 0 && lambda_min(m) > tol;
}

double sigma_max(const Matrix& m) {
    if (m.size() == 0) {
        return 0.0;
    }
    if (!m.allFinite()) {
        throw NumericalFailure("sigma_max: non-finite entries");
    }
    Eigen::JacobiSVD<Matrix> svd(m);
    return svd.singularValues()(0);
}

namespace {

SymMatrix spectral_map(const SymMatrix& m, double (*f)(double)) {
    const auto d = eig_sym(m);
    Vector mapped = d.values.unaryExpr(f);
    return SymMatrix::symmetrized(d.vectors * mapped.asDiagonal() * d.vectors.transpose());
}

}  // namespace

SymMatrix sqrt_psd(const SymMatrix& m) {
    return spectral_map(m, [](double v) { return std::sqrt(std::max(v, 0.0)); });
}

SymMatrix inv_sqrt_pd(const SymMatrix& m) {
    const auto d = eig_sym(m);
    if (d.values(0) <= 0.0) {
        throw SingularityError("inv_sqrt_pd: matrix is not positive definite");
    }
    Vector mapped = d.values.unaryExpr([](double v) { return 1.0 / std::sqrt(v); });
    return SymMatrix::symmetrized(d.vectors * mapped.asDiagonal() * d.vectors.transpose());
}

double lambda_max_similar(const SymMatrix& s, const SymMatrix& t) {
    const Matrix w = inv_sqrt_pd(t).matrix();
    return lambda_max(SymMatrix::symmetrized(w * s.matrix() * w));
}

double lambda_min_similar(const SymMatrix& s, const SymMatrix& t) {
    const Matrix w = inv_sqrt_pd(t).matrix();
    return lambda_min(SymMatrix::symmetrized(w * s.matrix() * w));
}

Matrix matrix_power(const Matrix& a, int k) {
    if (a.rows() != a.cols()) {
        throw ContractError("matrix_power: matrix is not square");
    }
    if (k < 0) {
        throw ContractError("matrix_power: negative exponent");
    }
    Matrix result = Matrix::Identity(a.rows(), a.cols());
    Matrix base = a;
    while (k > 0) {
        if (k & 1) {
            result = result * base;
        }
        k >>= 1;
        if (k > 0) {
            base = base * base;
        }
    }
    return result;
}

Matrix pinv_tall(const Matrix& m) {
    if (m.rows() < m.cols() || m.cols() == 0) {
        throw RankError("pinv_tall: matrix is not tall");
    }
    Eigen::JacobiSVD<Matrix> svd(m);
    const auto& s = svd.singularValues();
    if (!(s(s.size() - 1) > 1e-10 * s(0))) {
        throw RankError("pinv_tall: matrix does not have full column rank");
    }
    // M^+ = R^{-1} Q^T from a Householder QR of M.
    Eigen::HouseholderQR<Matrix> qr(m);
    const Eigen::Index n = m.cols();
    const Matrix r = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
    const Matrix q = qr.householderQ() * Matrix::Identity(m.rows(), n);
    return r.triangularView<Eigen::Upper>().solve(q.transpose());
}

bool is_reachable(const Matrix& a, const Matrix& b) {
    const Eigen::Index n = a.rows();
    if (a.cols() != n || b.rows() != n || b.cols() == 0) {
        throw ContractError("is_reachable: dimension mismatch");
    }
    Matrix ctrb(n, n * b.cols());
    Matrix block = b;
    for (Eigen::Index i = 0; i < n; ++i) {
        ctrb.middleCols(i * b.cols(), b.cols()) = block;
        block = a * block;
    }
    Eigen::JacobiSVD<Matrix> svd(ctrb);
    const auto& s = svd.singularValues();
    if (s(0) == 0.0) {
        return false;
    }
    return s(n - 1) > 1e-10 * s(0);
}

void DareProblem::validate() const {
    const Eigen::Index n = A.rows();
    if (A.cols() != n || B.size() != n || Q.dim() != n) {
        throw ContractError("DareProblem: dimension mismatch");
    }
    if (!(r >= 0.0) || !std::isfinite(r)) {
        throw ContractError("DareProblem: r must be a finite nonnegative scalar");
    }
    if (!is_positive_definite(Q)) {
        throw ContractError("DareProblem: Q must be positive definite");
    }
    if (B.isZero(0.0)) {
        throw ContractError("DareProblem: B must be nonzero");
    }
    if (!is_reachable(A, B)) {
        throw ContractError("DareProblem: (A, B) is not reachable");
    }
}

namespace {

Matrix riccati_map(const DareProblem& p, const Matrix& P) {
    const Vector pb = P * p.B;
    const double denom = p.B.dot(pb) + p.r;
    if (!(denom > 0.0) || !std::isfinite(denom)) {
        throw SingularityError("solve_dare: B^T P B + r is singular");
    }
    const RowVector gain = pb.transpose() * p.A;  // B^T P A
    Matrix next = p.A.transpose() * P * p.A - gain.transpose() * gain / denom + p.Q.matrix();
    return 0.5 * (next + next.transpose());
}

}  // namespace

double dare_residual(const DareProblem& p, const SymMatrix& P) {
    return (P.matrix() - riccati_map(p, P.matrix())).norm();
}

SymMatrix solve_dare(const DareProblem& p, const DareOptions& opts) {
    p.validate();
    if (!(opts.tol > 0.0)) {
        throw ContractError("solve_dare: tol must be positive");
    }
    Matrix P = p.Q.matrix();
    for (long it = 0; it < opts.max_iter; ++it) {
        Matrix next = riccati_map(p, P);
        if (!next.allFinite()) {
            throw NumericalFailure("solve_dare: iterate diverged");
        }
        if ((next - P).norm() <= opts.tol) {
            SymMatrix out(P);
            if (!is_positive_definite(out)) {
                throw NumericalFailure("solve_dare: fixed point is not positive definite");
            }
            return out;
        }
        P = std::move(next);
    }
    std::ostringstream os;
    os << "solve_dare: no convergence after " << opts.max_iter << " iterations";
    throw NoConvergenceError(os.str());
}

}  // namespace sppc
