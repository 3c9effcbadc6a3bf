#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "core/error.hpp"
#include "core/rom_online.hpp"
#include "core/synth.hpp"
#include "test_helpers.hpp"

#include <cmath>
#include <random>

using namespace romforge;
using namespace test_helpers;

namespace {

GromCoefficients random_grom(std::mt19937_64& rng, int r) {
    GromCoefficients g;
    g.r = r;
    g.nu = 0.1;
    g.quadratic = Eigen::MatrixXd::Random(r, r * r);
    g.linear = Eigen::MatrixXd::Random(r, r);
    g.constant = Eigen::VectorXd::Random(r);
    return g;
}

EapgCoefficients random_eapg(std::mt19937_64& rng, int r) {
    EapgCoefficients e;
    e.r = r;
    e.nu = 0.1;
    e.memory = MemoryLength::scalar(0.5, 1.0);
    e.cubic = Eigen::MatrixXd::Random(r, r * r * r);
    e.quadratic = Eigen::MatrixXd::Random(r, r * r);
    e.linear = Eigen::MatrixXd::Random(r, r);
    e.constant = Eigen::VectorXd::Random(r);
    return e;
}

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> out;
    for (int i = 0; i < n; ++i) out.push_back(a + (b - a) * i / (n - 1));
    return out;
}

} // namespace

TEST_CASE("grom rhs basics and brute-force oracle") {
    std::mt19937_64 rng(139);
    const int r = 3;
    GromCoefficients g = random_grom(rng, r);

    CHECK(rel_err(grom_rhs(g, Eigen::VectorXd::Zero(r)), Eigen::VectorXd(g.constant)) == 0.0);

    GromCoefficients identity = g;
    identity.quadratic.setZero();
    identity.linear = Eigen::MatrixXd::Identity(r, r);
    identity.constant.setZero();
    const Eigen::VectorXd a = random_vector(rng, r);
    CHECK(rel_err(grom_rhs(identity, a), a) == 0.0);

    // triple-loop oracle
    Eigen::VectorXd expect = g.constant;
    for (int row = 0; row < r; ++row) {
        for (int i = 0; i < r; ++i) {
            expect(row) += g.linear(row, i) * a(i);
            for (int k = 0; k < r; ++k)
                expect(row) += g.quadratic(row, i * r + k) * a(i) * a(k);
        }
    }
    CHECK(rel_err(grom_rhs(g, a), expect) <= 1e-13);

    CHECK_THROWS_AS(grom_rhs(g, Eigen::VectorXd::Zero(r + 1)), ValidationError);
}

TEST_CASE("eapg rhs basics and quadruple-loop oracle") {
    std::mt19937_64 rng(149);
    const int r = 2;
    EapgCoefficients e = random_eapg(rng, r);

    CHECK(rel_err(eapg_rhs(e, Eigen::VectorXd::Zero(r)), Eigen::VectorXd(e.constant)) == 0.0);

    // cubic-only with a = e1 picks out column (1,1,1)
    EapgCoefficients cubic_only = e;
    cubic_only.quadratic.setZero();
    cubic_only.linear.setZero();
    cubic_only.constant.setZero();
    Eigen::VectorXd e1 = Eigen::VectorXd::Zero(r);
    e1(0) = 1.0;
    CHECK(rel_err(eapg_rhs(cubic_only, e1), Eigen::VectorXd(cubic_only.cubic.col(0))) <=
          1e-15);

    const Eigen::VectorXd a = random_vector(rng, r);
    Eigen::VectorXd expect = e.constant + e.linear * a;
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j) {
            expect += e.quadratic.col(i * r + j) * (a(i) * a(j));
            for (int k = 0; k < r; ++k)
                expect += e.cubic.col((i * r + j) * r + k) * (a(i) * a(j) * a(k));
        }
    CHECK(rel_err(eapg_rhs(e, a), expect) <= 1e-13);
}

TEST_CASE("eapg rhs with zeroed memory tensors equals grom rhs exactly") {
    std::mt19937_64 rng(151);
    const int r = 3;
    const GromCoefficients g = random_grom(rng, r);
    EapgCoefficients e;
    e.r = r;
    e.nu = g.nu;
    e.memory = MemoryLength::scalar(0.0, 1.0);
    e.cubic = Eigen::MatrixXd::Zero(r, r * r * r);
    e.quadratic = g.quadratic;
    e.linear = g.linear;
    e.constant = g.constant;
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::VectorXd a = random_vector(rng, r);
        CHECK((eapg_rhs(e, a) - grom_rhs(g, a)).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("integration: zero rhs stays constant") {
    const RhsFunction rhs = [](double, const Eigen::VectorXd& a) {
        return Eigen::VectorXd::Zero(a.size()).eval();
    };
    Eigen::VectorXd a0(2);
    a0 << 1.5, -0.5;
    IntegratorConfig cfg;
    const IntegrationResult res = integrate(rhs, a0, linspace(0, 1, 11), cfg);
    CHECK(res.completed);
    CHECK(res.series.samples() == 11);
    for (int m = 0; m < 11; ++m) CHECK((res.series.coefficients.col(m) - a0).norm() == 0.0);
}

TEST_CASE("explicit Euler reproduces its closed form on decay") {
    const RhsFunction rhs = [](double, const Eigen::VectorXd& a) {
        return (-a).eval();
    };
    Eigen::VectorXd a0(1);
    a0 << 1.0;
    IntegratorConfig cfg;
    cfg.scheme = IntegratorConfig::Scheme::ExplicitEuler;
    cfg.dt = 0.1;
    const IntegrationResult res = integrate(rhs, a0, {0.0, 1.0}, cfg);
    CHECK(res.completed);
    CHECK(res.steps_taken == 10);

    // closed form of the scheme: ten applications of y += h * (-y)
    double expect = 1.0;
    for (int k = 0; k < 10; ++k) expect += 0.1 * (-expect);
    CHECK(res.series.coefficients(0, 1) == expect);
    CHECK(res.series.coefficients(0, 1) == doctest::Approx(0.3486784401).epsilon(1e-12));
}

TEST_CASE("dormand-prince solves exponential decay within tolerance") {
    const RhsFunction rhs = [](double, const Eigen::VectorXd& a) {
        return (-a).eval();
    };
    Eigen::VectorXd a0(1);
    a0 << 1.0;
    IntegratorConfig cfg;
    cfg.rel_tol = 1e-8;
    cfg.abs_tol = 1e-12;
    const IntegrationResult res = integrate(rhs, a0, linspace(0, 1, 5), cfg);
    CHECK(res.completed);
    CHECK(std::abs(res.series.coefficients(0, 4) - std::exp(-1.0)) < 1e-7);
    // dense output samples are accurate too, not just step endpoints
    for (int m = 1; m < 5; ++m)
        CHECK(std::abs(res.series.coefficients(0, m) -
                       std::exp(-res.series.times[static_cast<std::size_t>(m)])) < 1e-6);
}

TEST_CASE("fixed-step dormand-prince shows fifth-order error decay") {
    // halving h must cut the endpoint error by >= 24x
    const RhsFunction rhs = [](double, const Eigen::VectorXd& a) {
        return (-a).eval();
    };
    Eigen::VectorXd a0(1);
    a0 << 1.0;
    auto endpoint_error = [&](double h) {
        IntegratorConfig cfg;
        cfg.adaptive = false;
        cfg.dt = h;
        const IntegrationResult res = integrate(rhs, a0, {0.0, 1.0}, cfg);
        REQUIRE(res.completed);
        return std::abs(res.series.coefficients(0, 1) - std::exp(-1.0));
    };
    const double e1 = endpoint_error(0.1);
    const double e2 = endpoint_error(0.05);
    CHECK(e1 / e2 >= 24.0);
}

TEST_CASE("integration is deterministic") {
    std::mt19937_64 rng(157);
    const EapgCoefficients e = random_eapg(rng, 3);
    const Eigen::VectorXd a0 = 0.1 * random_vector(rng, 3);
    IntegratorConfig cfg;
    const IntegrationResult r1 = integrate(make_rhs(e), a0, linspace(0, 2, 40), cfg);
    const IntegrationResult r2 = integrate(make_rhs(e), a0, linspace(0, 2, 40), cfg);
    REQUIRE(r1.completed == r2.completed);
    CHECK(r1.steps_taken == r2.steps_taken);
    CHECK((r1.series.coefficients - r2.series.coefficients).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("blow-up terminates gracefully with the failure time") {
    const RhsFunction rhs = [](double, const Eigen::VectorXd& a) {
        return (a.array() * a.array().abs()).matrix().eval(); // finite-time blow-up
    };
    Eigen::VectorXd a0(1);
    a0 << 1.0;
    IntegratorConfig cfg;
    cfg.blowup_factor = 1e4;
    const IntegrationResult res = integrate(rhs, a0, linspace(0, 5, 20), cfg);
    CHECK(!res.completed);
    CHECK(res.blew_up);
    CHECK(res.failure_time > 0.0);
    CHECK(res.failure_time < 1.5); // the pole sits at t = 1
    CHECK(res.series.samples() < 20);
    const std::string report = res.report();
    CHECK(report.find("blew_up = 1") != std::string::npos);
}

TEST_CASE("output time validation") {
    const RhsFunction rhs = [](double, const Eigen::VectorXd& a) { return a; };
    const Eigen::VectorXd a0 = Eigen::VectorXd::Ones(1);
    IntegratorConfig cfg;
    CHECK_THROWS_AS(integrate(rhs, a0, {0.0, 0.0}, cfg), ValidationError);
    CHECK_THROWS_AS(integrate(rhs, a0, {}, cfg), ValidationError);
    cfg.dt = -1;
    CHECK_THROWS_AS(integrate(rhs, a0, {0.0, 1.0}, cfg), ValidationError);
}

TEST_CASE("initial condition and reconstruction round trip") {
    std::mt19937_64 rng(163);
    const Grid g = make_grid_2d(8, 8, 0.1, 0.1);
    const int r = 3;
    const CoarseBasis cb = random_basis(g, r, rng);

    SUBCASE("in-span fluctuation recovers exact coefficients") {
        const Eigen::VectorXd c = random_vector(rng, r);
        VelocityField u0(g);
        Eigen::Map<Eigen::VectorXd>(u0.data(), u0.size()) = cb.modes * c;
        CHECK(rel_err(initial_condition(cb, u0), c) <= 1e-13);
    }
    SUBCASE("orthogonal fluctuation projects to zero") {
        Eigen::VectorXd v = random_vector(rng, static_cast<int>(g.value_count()));
        v -= cb.modes * (cb.modes.transpose() * v);
        VelocityField u0(g);
        Eigen::Map<Eigen::VectorXd>(u0.data(), u0.size()) = v;
        CHECK(initial_condition(cb, u0).cwiseAbs().maxCoeff() <= 1e-12 * v.norm());
    }
    SUBCASE("reconstruct(0) = mean, reconstruct(e1) = mean + mode") {
        const VelocityField at_zero = reconstruct(cb, Eigen::VectorXd::Zero(r));
        CHECK(max_abs_diff(at_zero, cb.mean) == 0.0);
        Eigen::VectorXd e1 = Eigen::VectorXd::Zero(r);
        e1(0) = 1.0;
        const VelocityField shifted = reconstruct(cb, e1);
        for (std::int64_t i = 0; i < shifted.size(); ++i)
            CHECK(shifted.data()[i] ==
                  doctest::Approx(cb.mean.data()[i] + cb.modes(i, 0)).epsilon(1e-14));
    }
    SUBCASE("project-reconstruct round trip on a series") {
        CoefficientSeries series;
        series.times = {0.0, 0.5, 1.0};
        series.coefficients = Eigen::MatrixXd::Random(r, 3);
        const auto fields = reconstruct_series(cb, series);
        for (int m = 0; m < 3; ++m) {
            VelocityField fluct(g);
            for (std::int64_t i = 0; i < fluct.size(); ++i)
                fluct.data()[i] = fields[static_cast<std::size_t>(m)].data()[i] -
                                  cb.mean.data()[i];
            CHECK(rel_err(initial_condition(cb, fluct),
                          Eigen::VectorXd(series.coefficients.col(m))) <= 1e-11);
        }
    }
}
