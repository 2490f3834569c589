#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "sppc/analysis.hpp"
#include "sppc/controllers.hpp"

using namespace sppc;

namespace {

PlantModel scalar_plant(double a) {
    return PlantModel(Matrix::Constant(1, 1, a), Vector::Ones(1), 0.0, DisturbanceMode::none);
}

// Random reachable plant with eigenvalues kept moderate.
PlantModel random_plant(std::mt19937_64& rng, Eigen::Index n) {
    for (;;) {
        const Matrix a = oracle::random_matrix(rng, n, n, 0.7);
        const Vector b = oracle::random_vector(rng, n);
        if (is_reachable(a, b)) return PlantModel(a, b, 0.0, DisturbanceMode::none);
    }
}

}  // namespace

TEST_CASE("l0 design for a scalar plant") {
    const L0Design d = synthesize_l0(scalar_plant(0.5), 3, SymMatrix::identity(1));
    CHECK(d.P(0, 0) == doctest::Approx(1.0));
    CHECK(std::abs(d.Pi_star(0, 0)) <= 1e-12);
    CHECK(d.xi(0, 0) == doctest::Approx(0.25));
    CHECK(d.Pi(0, 0) == doctest::Approx(0.25));
    CHECK(d.condition_ok);
    CHECK(contraction_rho(d.Q, d.P) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(constant_c1(d.lifted, d.P) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("l0 design rejects bad weights") {
    CHECK_THROWS_AS(synthesize_l0(scalar_plant(0.5), 3, SymMatrix(Matrix::Constant(1, 1, -1.0))),
                    ContractError);
    CHECK_THROWS_AS(synthesize_l0(scalar_plant(0.5), 3, SymMatrix::identity(1), -1.0), ContractError);
}

TEST_CASE("OMP at the origin sends an all-zero packet") {
    const L0Design d = synthesize_l0(PlantModel::example_plant(), 10, SymMatrix::identity(4));
    const auto [pk, rep] = solve_l0_omp(d, Vector::Zero(4), 7);
    CHECK(pk.U.isZero());
    CHECK(pk.origin_time == 7);
    CHECK(rep.iterations == 0);
    CHECK(rep.support_size == 0);
    CHECK(rep.converged);
}

TEST_CASE("OMP is feasible and never beats exhaustive search") {
    std::mt19937_64 rng(2024);
    int checked = 0;
    for (int trial = 0; trial < 60; ++trial) {
        const PlantModel p = random_plant(rng, 2 + trial % 2);
        const int N = 3 + trial % 2;
        L0Design d;
        try {
            d = synthesize_l0(p, N, SymMatrix::identity(p.n()));
        } catch (const SynthesisError&) {
            continue;
        }
        const Vector x = oracle::random_vector(rng, p.n());
        const auto [pk, rep] = solve_l0_omp(d, x);
        const Vector y = d.lifted.K * x;
        const double bound = x.dot(d.Pi.matrix() * x);
        CHECK((d.lifted.M * pk.U - y).squaredNorm() <= bound + kOmpFeasibilitySlack * (1.0 + bound));
        const int best = oracle::min_feasible_support(d.lifted.M, y, bound, kOmpFeasibilitySlack);
        REQUIRE(best >= 0);
        CHECK(pk.l0_norm() >= best);
        ++checked;
    }
    CHECK(checked >= 40);
}

TEST_CASE("OMP residual history is nonincreasing and ends feasible") {
    const L0Design d = synthesize_l0(PlantModel::example_plant(), 10, SymMatrix::identity(4));
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 50; ++trial) {
        const Vector x = oracle::random_vector(rng, 4, 10.0);
        const auto [pk, rep] = solve_l0_omp(d, x);
        REQUIRE(rep.history.size() == static_cast<size_t>(rep.iterations) + 1);
        CHECK(rep.history.front() == doctest::Approx((d.lifted.K * x).squaredNorm()));
        for (size_t i = 1; i < rep.history.size(); ++i) {
            CHECK(rep.history[i] <= rep.history[i - 1] * (1.0 + 1e-12));
        }
        CHECK(rep.support_size == pk.l0_norm());
        CHECK(rep.support_size == rep.iterations);
    }
}

TEST_CASE("OMP packets scale linearly with the state") {
    const L0Design d = synthesize_l0(PlantModel::example_plant(), 10, SymMatrix::identity(4));
    const Vector x(Eigen::Vector4d(0.3, -1.2, 2.0, 0.7));
    const Vector u1 = solve_l0_omp(d, x).first.U;
    const Vector u5 = solve_l0_omp(d, 5.0 * x).first.U;
    CHECK((u5 - 5.0 * u1).norm() <= 1e-10 * u5.norm());
}

TEST_CASE("l1-l2 design parameters") {
    const L1L2Design d = synthesize_l1l2(PlantModel::example_plant(), 10, SymMatrix::identity(4), 200.0, 2.0);
    CHECK(d.zeta == doctest::Approx(200000.0));
    CHECK_THROWS_AS(synthesize_l1l2(PlantModel::example_plant(), 10, SymMatrix::identity(4), 200.0, 0.0),
                    ParameterError);
    CHECK_NOTHROW(synthesize_l1l2(PlantModel::example_plant(), 10, SymMatrix::identity(4), 200.0, 0.0, 5.0));
    CHECK_THROWS_AS(synthesize_l1l2(PlantModel::example_plant(), 10, SymMatrix::identity(4), 0.0, 2.0),
                    ParameterError);
}

TEST_CASE("FISTA at the origin") {
    const L1L2Design d = synthesize_l1l2(PlantModel::example_plant(), 10, SymMatrix::identity(4), 200.0, 2.0);
    const auto [pk, rep] = solve_l1l2_fista(d, Vector::Zero(4));
    CHECK(pk.U.isZero());
    CHECK(rep.converged);
    CHECK(rep.iterations == 0);
}

TEST_CASE("FISTA with a vanishing penalty returns the least-squares packet") {
    const L1L2Design d = synthesize_l1l2(PlantModel::example_plant(), 10, SymMatrix::identity(4), 1e-12, 2.0);
    const Vector x(Eigen::Vector4d(1.0, -0.5, 0.25, 2.0));
    const auto [pk, rep] = solve_l1l2_fista(d, x);
    REQUIRE(rep.converged);
    // least squares through normal equations, not the library pseudoinverse
    const Matrix& M = d.lifted.M;
    const Vector ls = (M.transpose() * M).ldlt().solve(M.transpose() * (d.lifted.K * x));
    CHECK((pk.U - ls).norm() <= 1e-6 * ls.norm());
}

TEST_CASE("FISTA matches a long ISTA run") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 5; ++trial) {
        const PlantModel p = random_plant(rng, 2);
        const double nu = 0.5 + trial;
        const L1L2Design d = synthesize_l1l2(p, 4, SymMatrix::identity(2), nu, 1.0);
        const Vector x = oracle::random_vector(rng, 2, 3.0);
        const auto [pk, rep] = solve_l1l2_fista(d, x);
        REQUIRE(rep.converged);
        const Vector y = d.lifted.K * x;
        const Vector ref = oracle::ista(d.lifted.M, y, nu, 200000);
        const double f_ref = oracle::lasso_objective(d.lifted.M, y, nu, ref);
        const double f = oracle::lasso_objective(d.lifted.M, y, nu, pk.U);
        CHECK(f <= f_ref * (1.0 + 1e-8) + 1e-12);
        CHECK(l1_optimality_violation(d, x, pk.U) <= 1e-10 * (1.0 + nu) + 1e-9);
    }
}

TEST_CASE("FISTA output dominates nearby packets and its history is monotone") {
    const L1L2Design d = synthesize_l1l2(PlantModel::example_plant(), 10, SymMatrix::identity(4), 200.0, 2.0);
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 20; ++trial) {
        const Vector x = oracle::random_vector(rng, 4, 5.0);
        const auto [pk, rep] = solve_l1l2_fista(d, x);
        REQUIRE(rep.converged);
        const double J = d.objective(x, pk.U);
        CHECK(rep.final_objective_or_residual == doctest::Approx(J));
        for (int k = 0; k < 20; ++k) {
            const Vector other = pk.U + oracle::random_vector(rng, 10, 1e-3);
            CHECK(J <= d.objective(x, other) + 1e-9 * J);
        }
        for (size_t i = 1; i < rep.history.size(); ++i) {
            CHECK(rep.history[i] <= rep.history[i - 1]);
        }
    }
}

TEST_CASE("optimality violation of a known point") {
    const L1L2Design d = synthesize_l1l2(scalar_plant(0.5), 1, SymMatrix::identity(1), 1.0, 1.0);
    // N = 1: M = sqrt(P), K x = -sqrt(P) a x; gradient at U = 0 is 2 P a x
    const double P = d.P(0, 0);
    const Vector x = Vector::Constant(1, 4.0);
    CHECK(l1_optimality_violation(d, x, Vector::Zero(1)) ==
          doctest::Approx(std::max(0.0, 2.0 * P * 0.5 * 4.0 - 1.0)));
}

TEST_CASE("feedback gain") {
    const PlantModel p = scalar_plant(0.5);
    const RowVector F = controller_gain_F(SymMatrix::identity(1), p);
    CHECK(F(0) == doctest::Approx(-0.5));

    const L0Design d = synthesize_l0(PlantModel::example_plant(), 10, SymMatrix::identity(4));
    const PlantModel ex = PlantModel::example_plant();
    const Matrix closed = ex.A() + ex.B() * controller_gain_F(d.P, ex);
    const auto ev = closed.eigenvalues();
    CHECK(ev.cwiseAbs().maxCoeff() < 1.0);
}
