#include "z2neck/error.hpp"
#include "z2neck/mode_solver.hpp"
#include "z2neck/radial_ode.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace z2neck;

TEST_CASE("edge solution matches the modified Bessel function where the profile is the identity")
{
    ModelGeometry g = build_geometry({});
    const std::vector<double> nodes{1e-6, 0.1, 0.3, 0.6, 0.9, 1.0};
    std::mt19937 rng(5);
    std::uniform_int_distribution<int> pick_n(0, 3), pick_m(1, 5);
    for (int trial = 0; trial < 12; ++trial) {
        int n = 2 * pick_n(rng) + 1, m = pick_m(rng);
        RadialSolution I = integrate_Inm(RadialOperator(g, {n, m}), nodes);
        double nu = 0.5 * n;
        for (std::size_t i = 1; i < nodes.size(); ++i) {
            double exact = std::tgamma(nu + 1.0) * std::pow(2.0 / m, nu) * std::cyl_bessel_i(nu, m * nodes[i]);
            CHECK(I.value(i).real() == doctest::Approx(exact).epsilon(1e-9));
        }
    }
}

TEST_CASE("I_n0 matches its closed form and grows like exp(n r / 4) on the neck")
{
    GeometryConfig c;
    c.s = {12.0, 12.0};
    ModelGeometry g = build_geometry(c);
    for (int n : {1, 3, 5}) {
        RadialSolution I = integrate_Inm(RadialOperator(g, {n, 0}), g.R0() + 10.0);
        for (double r : {0.5, 2.0, 3.5, g.R0() + 2.0, g.R0() + 9.0}) {
            std::size_t i = I.index_of(r);
            CHECK(I.log_abs(i) == doctest::Approx(closed_form_log_In0(g, n, I.r[i])).epsilon(1e-10));
        }
        double a = I.log_abs(I.index_of(g.R0() + 3.0)), b = I.log_abs(I.index_of(g.R0() + 8.0));
        double ra = I.r[I.index_of(g.R0() + 3.0)], rb = I.r[I.index_of(g.R0() + 8.0)];
        CHECK((b - a) / (rb - ra) == doctest::Approx(0.25 * n).epsilon(1e-10));
    }
}

TEST_CASE("ratio bound is 1 for m = 0 and at most 2 otherwise")
{
    ModelGeometry g = build_geometry({});
    for (int n : {1, 3})
        for (double s : {5.0, 25.0}) {
            CHECK(ratio_bound(g, n, 0, s) == doctest::Approx(1.0).epsilon(1e-9));
            for (int m : {1, -2, 4}) {
                double q = ratio_bound(g, n, m, s);
                CHECK(q > 0.0);
                CHECK(q <= 2.0);
            }
        }
}

TEST_CASE("mode index validation and exponent")
{
    CHECK(ModeIndex{3, 2}.alpha() == doctest::Approx(std::sqrt(9.0 / 16.0 + 4.0)));
    CHECK_THROWS(ModeIndex{2, 0}.validate());
    CHECK_NOTHROW(ModeIndex{-3, 1}.validate());
}

TEST_CASE("scaled values carry magnitudes beyond double range")
{
    ScaledValue v{{3.0, 4.0}, 1000.0};
    CHECK(v.log_abs() == doctest::Approx(1000.0 + std::log(5.0)));
    ScaledValue w = v.normalized();
    CHECK(w.log_abs() == doctest::Approx(v.log_abs()));
    CHECK(ScaledValue{{1.0, 0.0}, -2.0}.value().real() == doctest::Approx(std::exp(-2.0)));
}
