#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "core/error.hpp"
#include "core/galerkin.hpp"
#include "core/rom_online.hpp"
#include "core/synth.hpp"
#include "test_helpers.hpp"

#include <filesystem>
#include <random>

using namespace romforge;
using namespace test_helpers;

TEST_CASE("all tensors vanish for constant modes and zero mean") {
    const Grid g = make_grid_2d(6, 6, 0.1, 0.1);
    CoarseBasis cb;
    cb.grid = g;
    cb.mean = VelocityField(g);
    // two constant orthonormal fields
    const std::int64_t n = g.value_count();
    cb.modes = Eigen::MatrixXd::Zero(n, 2);
    for (std::int64_t p = 0; p < g.point_count(); ++p) {
        cb.modes(p * 2 + 0, 0) = 1.0;
        cb.modes(p * 2 + 1, 1) = 1.0;
    }
    cb.modes.col(0).normalize();
    cb.modes.col(1).normalize();

    const SpatialGromCoefficients sc = assemble_grom_spatial(cb, 0.1);
    CHECK(sc.quadratic.cwiseAbs().maxCoeff() < 1e-12);
    CHECK(sc.linear.cwiseAbs().maxCoeff() < 1e-12);
    CHECK(sc.constant.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("linear mean with a constant mode: exact convection, zero linear block") {
    const Grid g = make_grid_2d(8, 8, 0.05, 0.05);
    const std::int64_t n = g.value_count();
    CoarseBasis cb;
    cb.grid = g;
    // mean = (2x, 0); (u'.grad)u' = (4x, 0); lap u' = 0
    VelocityField mean(g);
    std::int64_t p = 0;
    for (int iy = 0; iy < g.cells[1]; ++iy)
        for (int ix = 0; ix < g.cells[0]; ++ix, ++p) mean(p, 0) = 2.0 * ix * g.spacing[0];
    cb.mean = mean;
    cb.modes = Eigen::MatrixXd::Zero(n, 1);
    for (std::int64_t q = 0; q < g.point_count(); ++q) cb.modes(q * 2, 0) = 1.0;
    cb.modes.col(0).normalize();

    const double nu = 0.3;
    const SpatialGromCoefficients sc = assemble_grom_spatial(cb, nu);
    p = 0;
    for (int iy = 0; iy < g.cells[1]; ++iy)
        for (int ix = 0; ix < g.cells[0]; ++ix, ++p) {
            CHECK(std::abs(sc.constant(p * 2 + 0) + 4.0 * ix * g.spacing[0]) < 1e-11);
            CHECK(std::abs(sc.constant(p * 2 + 1)) < 1e-11);
        }
    // L column: -(phi.grad)u' - (u'.grad)phi + nu lap phi
    //          = -(c, 0).grad (2x, 0) + 0 + 0 = (-2c, 0) with c the normalized entry
    const double c = cb.modes(0, 0);
    for (std::int64_t q = 0; q < g.point_count(); ++q) {
        CHECK(std::abs(sc.linear(q * 2 + 0, 0) + 2.0 * c) < 1e-11);
        CHECK(std::abs(sc.linear(q * 2 + 1, 0)) < 1e-11);
    }
}

TEST_CASE("rhs consistency: projected tensors reproduce the direct full-space rhs") {
    // The module's master property: for random coefficients the quadratic
    // expansion must match -((u'+Phi a).grad)(u'+Phi a) + nu lap (u'+Phi a)
    // projected onto the modes.
    std::mt19937_64 rng(61);
    for (const Grid& g : {make_grid_2d(10, 9, 0.07, 0.08), make_grid_3d(6, 5, 4, 0.1, 0.1, 0.1)}) {
        const int r = 3;
        const CoarseBasis cb = random_basis(g, r, rng);
        const double nu = 0.05;
        const SpatialGromCoefficients sc = assemble_grom_spatial(cb, nu);
        const GromCoefficients gc = project_grom(sc, cb, nu);

        for (int trial = 0; trial < 20; ++trial) {
            const Eigen::VectorXd a = random_vector(rng, r);
            VelocityField u(g);
            Eigen::Map<Eigen::VectorXd>(u.data(), u.size()) =
                Eigen::Map<const Eigen::VectorXd>(cb.mean.data(), cb.mean.size()) +
                cb.modes * a;
            const VelocityField rhs_field = direct_rhs(u, nu);
            const Eigen::VectorXd expected =
                cb.modes.transpose() *
                Eigen::Map<const Eigen::VectorXd>(rhs_field.data(), rhs_field.size());

            const Eigen::VectorXd actual = grom_rhs(gc, a);
            CHECK(rel_err(actual, expected) <= 1e-10);

            // the full-space tensors agree with the direct field too
            const Eigen::VectorXd spatial =
                sc.quadratic * kron_pair(a) + sc.linear * a + sc.constant;
            const Eigen::VectorXd direct =
                Eigen::Map<const Eigen::VectorXd>(rhs_field.data(), rhs_field.size());
            CHECK(rel_err(spatial, direct) <= 1e-11);
        }
    }
}

TEST_CASE("kronecker ordering: quadratic column (i,k) multiplies a_i a_k") {
    std::mt19937_64 rng(67);
    const Grid g = make_grid_2d(8, 8, 0.1, 0.1);
    const int r = 3;
    const CoarseBasis cb = random_basis(g, r, rng);
    const SpatialGromCoefficients sc = assemble_grom_spatial(cb, 0.1);
    const GromCoefficients gc = project_grom(sc, cb, 0.1);

    const Eigen::VectorXd a = random_vector(rng, r);
    Eigen::VectorXd manual = gc.constant + gc.linear * a;
    for (int i = 0; i < r; ++i)
        for (int k = 0; k < r; ++k) manual += gc.quadratic.col(i * r + k) * (a(i) * a(k));
    CHECK(rel_err(manual, grom_rhs(gc, a)) <= 1e-13);
}

TEST_CASE("projection against a dense oracle and orthonormality shortcuts") {
    std::mt19937_64 rng(71);
    const Grid g = make_grid_2d(7, 6, 0.1, 0.1);
    const int r = 3;
    const CoarseBasis cb = random_basis(g, r, rng);
    const std::int64_t n = g.value_count();

    SUBCASE("spatial constant equal to a mode projects to a unit vector") {
        SpatialGromCoefficients sc;
        sc.r = r;
        sc.quadratic = Eigen::MatrixXd::Zero(n, r * r);
        sc.linear = Eigen::MatrixXd::Zero(n, r);
        sc.constant = cb.modes.col(0);
        const GromCoefficients gc = project_grom(sc, cb, 0.1);
        Eigen::VectorXd e1 = Eigen::VectorXd::Zero(r);
        e1(0) = 1.0;
        CHECK((gc.constant - e1).cwiseAbs().maxCoeff() < 1e-12);
    }
    SUBCASE("orthogonal constant projects to zero") {
        Eigen::VectorXd v = random_vector(rng, static_cast<int>(n));
        v -= cb.modes * (cb.modes.transpose() * v);
        SpatialGromCoefficients sc;
        sc.r = r;
        sc.quadratic = Eigen::MatrixXd::Zero(n, r * r);
        sc.linear = Eigen::MatrixXd::Zero(n, r);
        sc.constant = v;
        const GromCoefficients gc = project_grom(sc, cb, 0.1);
        CHECK(gc.constant.cwiseAbs().maxCoeff() <= 1e-12 * v.norm());
    }
    SUBCASE("random tensors match the dense product") {
        SpatialGromCoefficients sc;
        sc.r = r;
        sc.quadratic = Eigen::MatrixXd::Random(n, r * r);
        sc.linear = Eigen::MatrixXd::Random(n, r);
        sc.constant = Eigen::VectorXd::Random(n);
        const GromCoefficients gc = project_grom(sc, cb, 0.1);
        CHECK((gc.quadratic - cb.modes.transpose() * sc.quadratic).cwiseAbs().maxCoeff() <
              1e-13);
        CHECK((gc.linear - cb.modes.transpose() * sc.linear).cwiseAbs().maxCoeff() < 1e-13);
    }
}

TEST_CASE("grom coefficient save/load round trip") {
    std::mt19937_64 rng(73);
    const Grid g = make_grid_2d(7, 6, 0.1, 0.1);
    const CoarseBasis cb = random_basis(g, 2, rng);
    const GromCoefficients gc = project_grom(assemble_grom_spatial(cb, 0.04), cb, 0.04);

    const auto dir = std::filesystem::temp_directory_path() / "romforge_grom_test";
    std::filesystem::remove_all(dir);
    save_grom(gc, g.dims, grid_hash(g), dir);
    const GromCoefficients back = load_grom(dir);
    std::filesystem::remove_all(dir);

    CHECK(back.r == gc.r);
    CHECK(back.nu == gc.nu);
    CHECK((back.quadratic - gc.quadratic).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.linear - gc.linear).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.constant - gc.constant).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("assembly rejects bad arguments") {
    std::mt19937_64 rng(79);
    const Grid g = make_grid_2d(6, 6, 0.1, 0.1);
    const CoarseBasis cb = random_basis(g, 2, rng);
    CHECK_THROWS_AS(assemble_grom_spatial(cb, 0.0), ValidationError);
    CHECK_THROWS_AS(assemble_grom_spatial(cb, -1.0), ValidationError);

    const SpatialGromCoefficients sc = assemble_grom_spatial(cb, 0.1);
    const CoarseBasis other = random_basis(g, 3, rng);
    CHECK_THROWS_AS(project_grom(sc, other, 0.1), ValidationError);
}
