#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "sirsfit/errors.hpp"
#include "sirsfit/grid.hpp"

using namespace sirs;

namespace {

constexpr double pi = std::numbers::pi;

Field random_slice(const Grid& g, unsigned seed) {
    Field f = Field::slice(g);
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (double& v : f.data()) v = u(rng);
    return f;
}

double weighted_inner(const Grid& g, const Field& u, const Field& v) {
    double s = 0.0;
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j) s += node_weight(g, i, j) * u(0, i, j) * v(0, i, j);
    return s;
}

double cosine_mode_error(int n) {
    Grid g;
    g.nx = g.ny = n;
    Field u = Field::slice(g);
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j) u(0, i, j) = std::cos(pi * i * g.hx());
    Field lu = laplacian_apply(g, u);
    double err = 0.0;
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j)
            err = std::max(err, std::fabs(lu(0, i, j) + pi * pi * u(0, i, j)));
    return err;
}

} // namespace

TEST_SUITE("grid") {

TEST_CASE("spacings and node placement") {
    Grid g;
    g.nx = 5;
    g.ny = 9;
    g.a = 2.0;
    g.b = 1.0;
    g.nt = 10;
    g.T = 5.0;
    g.validate();
    CHECK(g.hx() == 0.5);
    CHECK(g.hy() == 0.125);
    CHECK(g.dt() == 0.5);
    CHECK(g.nodes() == 45);
}

TEST_CASE("degenerate grids are rejected") {
    Grid g;
    g.nx = 1;
    CHECK_THROWS_AS(g.validate(), InputError);
    g = Grid{};
    g.nt = 0;
    CHECK_THROWS_AS(g.validate(), InputError);
    g = Grid{};
    g.T = -1.0;
    CHECK_THROWS_AS(g.validate(), InputError);
    g = Grid{};
    g.a = 0.0;
    CHECK_THROWS_AS(g.validate(), InputError);
}

TEST_CASE("laplacian annihilates constants exactly") {
    Grid g;
    g.nx = 17;
    g.ny = 13;
    Field u = Field::slice(g, 3.75);
    Field lu = laplacian_apply(g, u);
    for (double v : lu.data()) CHECK(v == 0.0);
}

TEST_CASE("laplacian reproduces the cosine eigenmode at second order") {
    double e1 = cosine_mode_error(17);
    double e2 = cosine_mode_error(33);
    CHECK(e1 <= 0.05);
    // halving h should quarter the error
    CHECK(e2 <= 0.30 * e1);
}

TEST_CASE("discrete divergence theorem") {
    Grid g;
    g.nx = 21;
    g.ny = 21;
    Field u = random_slice(g, 21u);
    Field lu = laplacian_apply(g, u);
    double flux = 0.0, norm = 0.0;
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j) {
            flux += node_weight(g, i, j) * lu(0, i, j);
            norm += node_weight(g, i, j) * std::fabs(u(0, i, j));
        }
    CHECK(std::fabs(flux) <= 1e-10 * (1.0 + norm));
}

TEST_CASE("laplacian is symmetric under the trapezoidal inner product") {
    Grid g;
    g.nx = 15;
    g.ny = 11;
    g.a = 1.5;
    for (int trial = 0; trial < 5; ++trial) {
        Field u = random_slice(g, 100u + trial);
        Field v = random_slice(g, 200u + trial);
        double lhs = weighted_inner(g, laplacian_apply(g, u), v);
        double rhs = weighted_inner(g, u, laplacian_apply(g, v));
        CHECK(std::fabs(lhs - rhs) <= 1e-10 * (1.0 + std::fabs(lhs)));
    }
}

TEST_CASE("laplacian is negative semidefinite") {
    Grid g;
    g.nx = 15;
    g.ny = 15;
    for (int trial = 0; trial < 10; ++trial) {
        Field u = random_slice(g, 300u + trial);
        double quad = weighted_inner(g, laplacian_apply(g, u), u);
        double nn = weighted_inner(g, u, u);
        CHECK(quad <= 1e-12 * nn);
    }
}

TEST_CASE("neumann eigenpairs") {
    auto e00 = neumann_eigenpair(0, 0, 1.0, 1.0);
    CHECK(e00.lambda == 0.0);
    CHECK(e00(0.3, 0.9) == 1.0);

    auto e10 = neumann_eigenpair(1, 0, 1.0, 1.0);
    CHECK(e10.lambda == doctest::Approx(pi * pi).epsilon(1e-15));

    auto e11 = neumann_eigenpair(1, 1, 1.0, 2.0);
    CHECK(e11.lambda == doctest::Approx(pi * pi * 1.25).epsilon(1e-15));

    CHECK_THROWS_AS(neumann_eigenpair(-1, 0, 1.0, 1.0), InputError);
}

TEST_CASE("laplacian approximates -lambda times the eigenfunction on a fine grid") {
    Grid g;
    g.nx = g.ny = 65;
    auto mode = neumann_eigenpair(1, 0, g.a, g.b);
    Field u = Field::slice(g);
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j) u(0, i, j) = mode(i * g.hx(), j * g.hy());
    Field lu = laplacian_apply(g, u);
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j)
            CHECK(std::fabs(lu(0, i, j) + mode.lambda * u(0, i, j)) <= 5e-3);
}

TEST_CASE("trapezoidal quadrature") {
    Grid g;
    g.nx = g.ny = 33;
    Field one = Field::slice(g, 1.0);
    CHECK(integrate_slice(g, one.level(0)) == doctest::Approx(1.0).epsilon(1e-14));

    Field x = Field::slice(g);
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j) x(0, i, j) = i * g.hx();
    // exact for piecewise-linear integrands
    CHECK(integrate_slice(g, x.level(0)) == doctest::Approx(0.5).epsilon(1e-13));

    double total = 0.0;
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j) total += node_weight(g, i, j);
    CHECK(total == doctest::Approx(g.a * g.b).epsilon(1e-14));
}

TEST_CASE("field shapes and constructors") {
    Grid g;
    g.nx = 4;
    g.ny = 3;
    g.nt = 7;
    Field full = Field::space_time(g, 2.0);
    CHECK(full.steps() == 8);
    CHECK(full.nx() == 4);
    CHECK(full.ny() == 3);
    CHECK(full(7, 3, 2) == 2.0);

    Field series = Field::time_series(g, 1.5);
    CHECK(series.steps() == 8);
    CHECK(series.nx() == 1);
    CHECK(series.ny() == 1);

    Field s = Field::slice(g);
    CHECK(s.steps() == 1);
    CHECK(!s.same_shape(full));
    CHECK(s.level(0).size() == 12);
}

} // TEST_SUITE
