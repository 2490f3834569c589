#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace sppc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

// Error hierarchy shared by every module. Callers that only care about
// "something went wrong" catch sppc::Error.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ContractError : Error { using Error::Error; };
struct NumericalFailure : Error { using Error::Error; };
struct NoConvergenceError : NumericalFailure { using NumericalFailure::NumericalFailure; };
struct SingularityError : NumericalFailure { using NumericalFailure::NumericalFailure; };
struct RankError : NumericalFailure { using NumericalFailure::NumericalFailure; };

/// Real symmetric matrix. Symmetry is validated on construction
/// (max |a_ij - a_ji| <= 1e-12 * max |a_ij|) and the stored matrix is the
/// exact symmetric part of the input.
class SymMatrix {
public:
    SymMatrix() = default;
    explicit SymMatrix(const Matrix& m);

    static SymMatrix identity(Eigen::Index n);
    /// Symmetrizes a matrix that is symmetric in exact arithmetic but may
    /// carry round-off asymmetry (e.g. products such as A^T P A).
    static SymMatrix symmetrized(const Matrix& m);

    const Matrix& matrix() const { return m_; }
    Eigen::Index dim() const { return m_.rows(); }
    double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

private:
    Matrix m_;
};

SymMatrix operator+(const SymMatrix& a, const SymMatrix& b);
SymMatrix operator-(const SymMatrix& a, const SymMatrix& b);
SymMatrix operator*(double s, const SymMatrix& a);

struct EigenDecomposition {
    Vector values;   // ascending
    Matrix vectors;  // column i is the unit eigenvector for values(i)
};

/// Symmetric eigendecomposition with ascending eigenvalues.
EigenDecomposition eig_sym(const SymMatrix& m);

double lambda_min(const SymMatrix& m);
double lambda_max(const SymMatrix& m);
bool is_positive_definite(const SymMatrix& m, double tol = 0.0);

/// Largest singular value, sqrt(lambda_max(m^T m)).
double sigma_max(const Matrix& m);

/// Principal square root and inverse square root via eigendecomposition.
/// Eigenvalues are clamped at zero before the root is taken.
SymMatrix sqrt_psd(const SymMatrix& m);
SymMatrix inv_sqrt_pd(const SymMatrix& m);

/// lambda_max(S T^{-1}) for symmetric S and T > 0, evaluated on the
/// similar symmetric matrix T^{-1/2} S T^{-1/2}. Same for lambda_min.
double lambda_max_similar(const SymMatrix& s, const SymMatrix& t);
double lambda_min_similar(const SymMatrix& s, const SymMatrix& t);

Matrix matrix_power(const Matrix& a, int k);

/// (M^T M)^{-1} M^T for a tall matrix with full column rank.
/// Throws RankError when sigma_min <= 1e-10 * sigma_max.
Matrix pinv_tall(const Matrix& m);

/// Rank of [B, AB, ..., A^{n-1}B] equals n, using a singular-value
/// threshold of 1e-10 * sigma_max.
bool is_reachable(const Matrix& a, const Matrix& b);

/// Discrete algebraic Riccati equation
///   P = A^T P A - A^T P B (B^T P B + r)^{-1} B^T P A + Q
/// for a single-input pair (A, B).
struct DareProblem {
    Matrix A;
    Vector B;
    SymMatrix Q;
    double r = 0.0;

    void validate() const;
};

struct DareOptions {
    double tol = 1e-10;
    long max_iter = 1'000'000;
};

/// Frobenius norm of the Riccati residual at P.
double dare_residual(const DareProblem& p, const SymMatrix& P);

/// Fixed-point (value) iteration of the Riccati map started at P0 = Q.
/// Returns the first iterate whose residual is <= tol.
SymMatrix solve_dare(const DareProblem& p, const DareOptions& opts = {});

}  // namespace sppc
