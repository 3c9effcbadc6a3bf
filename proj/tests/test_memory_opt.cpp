#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "core/error.hpp"
#include "core/memory_opt.hpp"
#include "core/synth.hpp"
#include "test_helpers.hpp"

#include <cmath>
#include <limits>
#include <random>

using namespace romforge;
using namespace test_helpers;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TEST_CASE("projected jacobian: constant state with nu = tiny is numerically zero") {
    const Grid g = make_grid_2d(8, 8, 0.1, 0.1);
    const std::int64_t n = g.value_count();
    CoarseBasis cb;
    cb.grid = g;
    cb.mean = VelocityField(g);
    for (std::int64_t p = 0; p < g.point_count(); ++p) cb.mean(p, 0) = 1.0;
    cb.modes = Eigen::MatrixXd::Zero(n, 1);
    for (std::int64_t p = 0; p < g.point_count(); ++p) cb.modes(p * 2 + 1, 0) = 1.0;
    cb.modes.col(0).normalize();
    // constant mode and mean: all derivative terms vanish; nu keeps the
    // validation happy but multiplies an exactly-zero laplacian
    const Eigen::MatrixXd jac = projected_jacobian(cb, 1e-12, Eigen::VectorXd::Zero(1));
    CHECK(jac.cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("projected jacobian of pure diffusion is symmetric for interior modes") {
    const Grid g = make_grid_2d(18, 18, 1.0 / 17, 1.0 / 17);
    const std::int64_t n = g.value_count();
    // smooth modes pinned to zero at the boundary so the diffusion operator
    // acts self-adjointly up to discretization error
    Eigen::MatrixXd modes(n, 2);
    std::int64_t p = 0;
    Eigen::VectorXd m1(n), m2(n);
    m1.setZero();
    m2.setZero();
    for (int iy = 0; iy < g.cells[1]; ++iy)
        for (int ix = 0; ix < g.cells[0]; ++ix, ++p) {
            const double x = ix * g.spacing[0], y = iy * g.spacing[1];
            const double bump = std::sin(M_PI * x) * std::sin(M_PI * y);
            m1(p * 2) = bump;
            m2(p * 2 + 1) = std::sin(2 * M_PI * x) * std::sin(M_PI * y);
        }
    modes.col(0) = m1 / m1.norm();
    Eigen::VectorXd w = m2 - modes.col(0) * modes.col(0).dot(m2);
    modes.col(1) = w / w.norm();

    CoarseBasis cb;
    cb.grid = g;
    cb.mean = VelocityField(g);
    cb.modes = modes;

    const Eigen::MatrixXd jac = projected_jacobian(cb, 0.7, Eigen::VectorXd::Zero(2));
    CHECK(std::abs(jac(0, 1) - jac(1, 0)) <=
          1e-10 * std::max(1.0, jac.cwiseAbs().maxCoeff()) + 2e-3);
    // dominant diagonal is negative (diffusion decays)
    CHECK(jac(0, 0) < 0.0);
    CHECK(jac(1, 1) < 0.0);
}

TEST_CASE("projected jacobian matches finite differences of the projected rhs") {
    std::mt19937_64 rng(167);
    const Grid g = make_grid_2d(10, 9, 0.08, 0.09);
    const int r = 3;
    const CoarseBasis cb = random_basis(g, r, rng);
    const double nu = 0.05;
    const Eigen::VectorXd a0 = 0.3 * random_vector(rng, r);
    const Eigen::MatrixXd jac = projected_jacobian(cb, nu, a0);

    // directional finite differences of Phi^T R(u' + Phi a) at a0.
    // J(u0)[phi_i] differs from d/da_i of the full rhs by nothing: the rhs is
    // quadratic so central differences are exact up to roundoff.
    auto projected_rhs = [&](const Eigen::VectorXd& a) {
        VelocityField u(g);
        Eigen::Map<Eigen::VectorXd>(u.data(), u.size()) =
            Eigen::Map<const Eigen::VectorXd>(cb.mean.data(), cb.mean.size()) + cb.modes * a;
        const VelocityField rhs = direct_rhs(u, nu);
        return (cb.modes.transpose() *
                Eigen::Map<const Eigen::VectorXd>(rhs.data(), rhs.size()))
            .eval();
    };
    const double h = 1e-6;
    for (int i = 0; i < r; ++i) {
        Eigen::VectorXd da = Eigen::VectorXd::Zero(r);
        da(i) = h;
        const Eigen::VectorXd fd = (projected_rhs(a0 + da) - projected_rhs(a0 - da)) / (2 * h);
        CHECK(rel_err(fd, Eigen::VectorXd(jac.col(i))) <= 1e-4);
    }
}

TEST_CASE("spectral radius") {
    Eigen::MatrixXd d = Eigen::Vector3d(1.0, -3.0, 2.0).asDiagonal();
    CHECK(spectral_radius(d) == doctest::Approx(3.0));

    Eigen::MatrixXd rot(2, 2);
    rot << 0.0, -1.0, 1.0, 0.0;
    CHECK(spectral_radius(rot) == doctest::Approx(1.0));

    // random 8x8 against a power-iteration oracle
    std::mt19937_64 rng(173);
    Eigen::MatrixXd m = Eigen::MatrixXd::Random(8, 8);
    m = m + 8.0 * Eigen::MatrixXd::Identity(8, 8); // dominant positive eigenvalue
    Eigen::VectorXd v = random_vector(rng, 8).cwiseAbs();
    double lambda = 0.0;
    for (int it = 0; it < 2000; ++it) {
        const Eigen::VectorXd mv = m * v;
        lambda = mv.norm() / v.norm();
        v = mv / mv.norm();
    }
    CHECK(rel_err(spectral_radius(m), lambda) <= 1e-8);

    CHECK_THROWS_AS(spectral_radius(Eigen::MatrixXd::Zero(2, 3)), ValidationError);
}

TEST_CASE("memory length construction") {
    const MemoryLength tau = MemoryLength::scalar(1.0, 4.0);
    CHECK(tau.tau() == doctest::Approx(0.25));

    const MemoryLength t = MemoryLength::matrix(Eigen::MatrixXd::Identity(3, 3), 2.0);
    CHECK((t.tau_matrix(3) - 0.5 * Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() ==
          0.0);

    // eigenvalues of T are those of W scaled by 1/rho
    std::mt19937_64 rng(179);
    Eigen::MatrixXd m = Eigen::MatrixXd::Random(4, 4);
    const Eigen::MatrixXd w = m * m.transpose() + 0.2 * Eigen::MatrixXd::Identity(4, 4);
    const double rho = 3.7;
    const MemoryLength big = MemoryLength::matrix(w, rho);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ew(w), et(big.tau_matrix(4));
    CHECK(rel_err(Eigen::VectorXd(et.eigenvalues()),
                  Eigen::VectorXd(ew.eigenvalues() / rho)) <= 1e-12);
    CHECK(et.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("tracking objective oracle") {
    std::mt19937_64 rng(181);
    const Eigen::MatrixXd a = Eigen::MatrixXd::Random(3, 7);
    const Eigen::MatrixXd b = Eigen::MatrixXd::Random(3, 7);

    CHECK(tracking_objective_value(a, a) == 0.0);

    // constant offset c over M samples gives M |c|^2
    Eigen::VectorXd c = random_vector(rng, 3);
    Eigen::MatrixXd shifted = a;
    shifted.colwise() += c;
    CHECK(rel_err(tracking_objective_value(shifted, a), 7.0 * c.squaredNorm()) <= 1e-13);

    double brute = 0.0;
    for (int m = 0; m < 7; ++m)
        for (int k = 0; k < 3; ++k) {
            const double d = a(k, m) - b(k, m);
            brute += d * d;
        }
    CHECK(rel_err(tracking_objective_value(a, b), brute) <= 1e-13);
}

TEST_CASE("scalar optimizer recovers a quadratic minimum") {
    int evals = 0;
    const auto objective = [&](double w) {
        ++evals;
        return (w - 0.7) * (w - 0.7) + 0.1;
    };
    const OptimizationReport rep = optimize_scalar_weight(objective);
    CHECK(rep.converged);
    CHECK(std::abs(rep.best_weight - 0.7) <= 1e-3);
    CHECK(rep.best_objective <= 0.1 + 1e-6);
    CHECK(evals == rep.evaluations);
    // final <= initial and monotone best-so-far
    CHECK(rep.best_objective <= (1.0 - 0.7) * (1.0 - 0.7) + 0.1 + 1e-15);
    for (std::size_t i = 1; i < rep.objective_trace.size(); ++i)
        CHECK(rep.objective_trace[i] <= rep.objective_trace[i - 1]);
}

TEST_CASE("scalar optimizer stalls immediately on a flat objective") {
    const OptimizationReport rep = optimize_scalar_weight([](double) { return 42.0; });
    CHECK(rep.converged);
    CHECK(rep.best_weight == doctest::Approx(1.0)); // w0
    CHECK(rep.best_objective == 42.0);
}

TEST_CASE("scalar optimizer clamps against the blow-up boundary") {
    // decreasing toward w = 2 where the model explodes
    const auto objective = [](double w) { return w < 2.0 ? 1.0 / (1.0 + w) : kInf; };
    const OptimizationReport rep = optimize_scalar_weight(objective);
    CHECK(rep.boundary_hit);
    CHECK(std::isfinite(rep.best_objective));
    CHECK(rep.best_weight < 2.0);
    CHECK(rep.best_weight > 1.0); // walked downhill from w0 = 1
}

TEST_CASE("scalar optimizer reports non-convergence when everything blows up") {
    const OptimizationReport rep = optimize_scalar_weight([](double) { return kInf; });
    CHECK(!rep.converged);
    CHECK(rep.boundary_hit);
    CHECK(!std::isfinite(rep.best_objective));
}

TEST_CASE("matrix optimizer recovers a target weight in Frobenius norm") {
    std::mt19937_64 rng(191);
    Eigen::MatrixXd m = Eigen::MatrixXd::Random(2, 2);
    const Eigen::MatrixXd target = m * m.transpose() + 0.5 * Eigen::MatrixXd::Identity(2, 2);
    const auto objective = [&](const Eigen::MatrixXd& w) {
        return (w - target).squaredNorm();
    };
    OptimizeOptions opts;
    opts.max_iterations = 2000;
    opts.step_tol = 1e-10;
    std::vector<Eigen::MatrixXd> accepted;
    const OptimizationReport rep =
        optimize_matrix_weight(objective, 2, opts, Eigen::MatrixXd(), &accepted);
    CHECK((rep.best_weight_matrix - target).norm() <= 1e-3);

    // every accepted iterate is symmetric positive definite
    for (const Eigen::MatrixXd& w : accepted) {
        CHECK((w - w.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * w.cwiseAbs().maxCoeff());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(w);
        CHECK(eig.eigenvalues().minCoeff() > 0.0);
    }
}

TEST_CASE("matrix optimizer started at the optimum converges immediately") {
    const Eigen::MatrixXd target = 2.0 * Eigen::MatrixXd::Identity(2, 2);
    const auto objective = [&](const Eigen::MatrixXd& w) {
        return (w - target).squaredNorm();
    };
    const OptimizationReport rep = optimize_matrix_weight(objective, 2, {}, target);
    CHECK(rep.converged);
    CHECK(rep.best_objective <= 1e-10);
}

TEST_CASE("matrix path constrained to r = 1 matches the scalar optimum") {
    const auto scalar_obj = [](double w) { return (w - 0.7) * (w - 0.7) + 0.1; };
    const auto matrix_obj = [&](const Eigen::MatrixXd& w) { return scalar_obj(w(0, 0)); };
    OptimizeOptions opts;
    opts.step_tol = 1e-12;
    opts.objective_tol = 1e-14;
    opts.max_iterations = 2000;
    const OptimizationReport scalar_rep = optimize_scalar_weight(scalar_obj, opts);
    const OptimizationReport matrix_rep = optimize_matrix_weight(matrix_obj, 1, opts);
    CHECK(std::abs(matrix_rep.best_weight_matrix(0, 0) - scalar_rep.best_weight) <= 1e-6);
}

TEST_CASE("monotone best-so-far trace on the matrix path") {
    std::mt19937_64 rng(193);
    const auto objective = [&](const Eigen::MatrixXd& w) {
        return std::sin(w(0, 0)) + w.squaredNorm();
    };
    const OptimizationReport rep = optimize_matrix_weight(objective, 2);
    for (std::size_t i = 1; i < rep.objective_trace.size(); ++i)
        CHECK(rep.objective_trace[i] <= rep.objective_trace[i - 1]);
}

TEST_CASE("end-to-end tracking objective: reference fed back scores zero-ish") {
    // Build a tiny eAPG system, integrate it for a fixed weight, then use
    // that trajectory as the reference: the same weight must be a global
    // minimum with objective ~ 0, and the optimizers must find weights at
    // least as good as the truth.
    std::mt19937_64 rng(197);
    const Grid g = make_grid_2d(8, 7, 0.09, 0.1);
    const int r = 2;
    const CoarseBasis cb = random_basis(g, r, rng, 0.5);
    const double nu = 0.08;
    const EapgTensorParts parts = build_eapg_parts(cb, nu);

    const Eigen::VectorXd a0 = 0.2 * random_vector(rng, r);
    const double rho = spectral_radius(projected_jacobian(cb, nu, a0));
    const double w_true = 0.8;

    TrackingConfig tracking;
    tracking.n_periods = 1;
    std::vector<double> times;
    for (int m = 0; m < 12; ++m) times.push_back(0.02 * m);

    const EapgCoefficients truth = parts.with_memory(MemoryLength::scalar(w_true, rho));
    const IntegrationResult run = integrate(make_rhs(truth), a0, times, {});
    REQUIRE(run.completed);
    CoefficientSeries reference;
    reference.times = times;
    reference.coefficients = run.series.coefficients;

    const auto objective = scalar_tracking_objective(parts, rho, a0, reference, tracking);
    CHECK(objective(w_true) <= 1e-14);
    CHECK(objective(w_true + 0.3) > objective(w_true));

    const OptimizationReport rep = optimize_scalar_weight(objective);
    CHECK(rep.best_objective <= objective(1.0));
    CHECK(std::abs(rep.best_weight - w_true) <= 5e-2);

    // matrix path with the scalar warm start must do at least as well
    const auto matrix_obj = matrix_tracking_objective(parts, rho, a0, reference, tracking);
    const OptimizationReport matrix_rep = optimize_matrix_weight(
        matrix_obj, r, {}, rep.best_weight * Eigen::MatrixXd::Identity(r, r));
    CHECK(matrix_rep.best_objective <= rep.best_objective + 1e-12);
}
