#include <cmath>
#include <limits>
#include <stdexcept>

#include "doctest.h"

#include "homog1d/homogenized.hpp"
#include "homog1d/initial_datum.hpp"

using namespace homog;

namespace {

// Central finite differences as an independent check on the hand-coded
// derivatives.
void check_derivatives(const InitialDatum& f, double x) {
    const double h = 1e-4;
    const double d1_fd = (f.value(x + h) - f.value(x - h)) / (2.0 * h);
    const double d2_fd =
        (f.value(x + h) - 2.0 * f.value(x) + f.value(x - h)) / (h * h);
    CHECK(f.d1(x) == doctest::Approx(d1_fd).epsilon(1e-5));
    CHECK(f.d2(x) == doctest::Approx(d2_fd).epsilon(2e-4));
}

}  // namespace

TEST_CASE("datum derivatives agree with finite differences") {
    const InitialDatum g = InitialDatum::gaussian(0.8);
    const InitialDatum b = InitialDatum::compact_bump(1.5, 2.0);
    const InitialDatum p = InitialDatum::plateau(1.0, 0.5);
    for (double x : {-1.3, -0.4, 0.2, 0.9, 1.27}) {
        check_derivatives(g, x);
        check_derivatives(b, x);
        check_derivatives(p, x);
    }
}

TEST_CASE("compact bump vanishes identically outside its support") {
    const InitialDatum b = InitialDatum::compact_bump(1.5, 2.0);
    CHECK(b.support_radius() == 1.5);
    for (double x : {1.5, 1.50001, 2.0, -1.6, -40.0}) {
        CHECK(b.value(x) == 0.0);
        CHECK(b.d1(x) == 0.0);
        CHECK(b.d2(x) == 0.0);
    }
    CHECK(b.value(0.0) == doctest::Approx(2.0 * std::exp(-1.0)).epsilon(1e-14));
}

TEST_CASE("plateau is exactly flat on its core and gone past the ramp") {
    const InitialDatum p = InitialDatum::plateau(1.0, 0.5);
    CHECK(p.support_radius() == 1.5);
    for (double x : {-0.99, -0.3, 0.0, 0.7, 1.0}) {
        CHECK(p.value(x) == 1.0);
        CHECK(p.d1(x) == 0.0);
    }
    CHECK(p.value(1.25) > 0.0);
    CHECK(p.value(1.25) < 1.0);
    CHECK(p.value(1.5) == 0.0);
    CHECK(p.value(-2.0) == 0.0);
}

TEST_CASE("gaussian datum is the normalized density of its width") {
    const InitialDatum g = InitialDatum::gaussian(2.0);
    CHECK(std::isinf(g.support_radius()));
    const double x = 0.7;
    const double expected =
        std::exp(-0.5 * x * x / 4.0) / (2.0 * std::sqrt(2.0 * M_PI));
    CHECK(g.value(x) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("datum factories reject nonpositive shape parameters") {
    CHECK_THROWS_AS(InitialDatum::gaussian(0.0), std::invalid_argument);
    CHECK_THROWS_AS(InitialDatum::compact_bump(-1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(InitialDatum::compact_bump(1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(InitialDatum::plateau(1.0, -0.5), std::invalid_argument);
}

TEST_CASE("heat kernel integrates to one and differentiates consistently") {
    const double t = 0.37;
    double mass = 0.0;
    const double h = 0.01;
    for (double x = -8.0; x <= 8.0; x += h) mass += heat_kernel(t, x) * h;
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));

    const double x0 = 0.43, dh = 1e-5;
    const double d1_fd = (heat_kernel(t, x0 + dh) - heat_kernel(t, x0 - dh)) / (2 * dh);
    CHECK(heat_kernel_dx(t, x0) == doctest::Approx(d1_fd).epsilon(1e-6));
    const double d2_fd = (heat_kernel_dx(t, x0 + dh) - heat_kernel_dx(t, x0 - dh)) / (2 * dh);
    CHECK(heat_kernel_dxx(t, x0) == doctest::Approx(d2_fd).epsilon(1e-6));
}

TEST_CASE("homogenized solution of a gaussian datum has a closed form") {
    // Convolving the density of variance w^2 with the heat kernel of
    // variance abar*t gives the density of variance w^2 + abar*t; this
    // oracle never touches the quadrature code under test.
    const double abar = 0.6127, w = 1.0;
    const HomogenizedModel model(abar, InitialDatum::gaussian(w));
    for (double t : {0.1, 0.5, 1.0}) {
        const double var = w * w + abar * t;
        for (double x : {-1.1, 0.0, 0.8, 2.3}) {
            const double q = std::exp(-0.5 * x * x / var) /
                             std::sqrt(2.0 * M_PI * var);
            CHECK(model.u(t, x) == doctest::Approx(q).epsilon(1e-7));
            CHECK(model.u_dx(t, x) == doctest::Approx(-x / var * q).epsilon(1e-6));
            const double dxx = (x * x / var - 1.0) / var * q;
            CHECK(model.u_dxx(t, x) == doctest::Approx(dxx).epsilon(1e-5));
        }
    }
}

TEST_CASE("homogenized solution at t = 0 returns the datum exactly") {
    const HomogenizedModel model(0.5, InitialDatum::plateau(1.0, 0.5));
    for (double x : {-1.2, 0.0, 0.5, 1.4}) {
        CHECK(model.u(0.0, x) == model.datum().value(x));
        CHECK(model.u_dx(0.0, x) == model.datum().d1(x));
        CHECK(model.u_dxx(0.0, x) == model.datum().d2(x));
    }
    CHECK_THROWS_AS(model.u(-0.1, 0.0), std::invalid_argument);
}

TEST_CASE("homogenized solution satisfies its own heat equation") {
    // The bump's edge features are ~0.1 wide, so the default 201-node
    // quadrature leaves a percent-level residual; the node count is a
    // constructor knob for exactly this kind of datum.
    const double abar = 0.7;
    const HomogenizedModel model(abar, InitialDatum::compact_bump(1.0, 1.0),
                                 1201);
    const double t = 0.4, h = 1e-4;
    for (double x : {-0.8, 0.1, 0.9}) {
        const double ut = (model.u(t + h, x) - model.u(t - h, x)) / (2.0 * h);
        CHECK(ut == doctest::Approx(0.5 * abar * model.u_dxx(t, x)).epsilon(1e-3));
    }
}
