#include "z2neck/error.hpp"
#include "z2neck/geometry.hpp"
#include "z2neck/grid.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace z2neck;

TEST_CASE("edge profile is the identity near the edge, monotone and flat at 2")
{
    for (double r_a : {1.0, 1.3, 1.75}) {
        NeckProfile p{r_a, 4.0, 0.5};
        CHECK(profile_eval(p, 0.5 * r_a).value == doctest::Approx(0.5 * r_a));
        double prev = 0.0;
        for (double r = 0.0; r <= 4.0; r += 1e-3) {
            ProfileValue v = profile_eval(p, r);
            CHECK(v.value >= prev - 1e-15);  // one ulp where the ramp meets the flat part
            CHECK(v.value <= 2.0 + 1e-15);
            CHECK(v.d1 >= -1e-15);
            prev = v.value;
        }
        CHECK(profile_eval(p, p.flat_from()).value == doctest::Approx(2.0).epsilon(1e-14));
        CHECK(profile_eval(p, p.flat_from() + 0.1).d1 == 0.0);
    }
}

TEST_CASE("profile derivatives agree with centred differences")
{
    NeckProfile p{1.2, 4.0, 0.5};
    const double e = 1e-5;
    for (double r : {1.3, 1.8, 2.4, 2.9}) {
        ProfileValue v = profile_eval(p, r);
        CHECK(v.d1 == doctest::Approx((profile_eval(p, r + e).value - profile_eval(p, r - e).value) / (2 * e)).epsilon(1e-7));
        CHECK(v.d2 == doctest::Approx((profile_eval(p, r + e).d1 - profile_eval(p, r - e).d1) / (2 * e)).epsilon(1e-6));
    }
}

TEST_CASE("neck metric is the flat cylinder and the boundary metric uses the profile")
{
    GeometryConfig c;
    c.s = {10.0, 10.0};
    ModelGeometry g = build_geometry(c);
    MetricCoeffs m = g.metric(g.R0() + 5.0);
    CHECK(m.g_rr == 1.0);
    CHECK(m.g_pp == doctest::Approx(16.0));
    CHECK(m.g_tt == 1.0);
    MetricCoeffs e = g.metric(0.5);
    CHECK(e.g_pp == doctest::Approx(4.0 * 0.25));
}

TEST_CASE("regions tile [0, r_total] for both closures")
{
    for (int p : {1, 2}) {
        GeometryConfig c;
        c.p = p;
        c.s = {7.0, 9.0};
        ModelGeometry g = build_geometry(c);
        auto regs = g.regions();
        CHECK(regs.front().lo == 0.0);
        CHECK(regs.back().hi == doctest::Approx(g.r_total()));
        for (std::size_t i = 1; i < regs.size(); ++i) CHECK(regs[i].lo == doctest::Approx(regs[i - 1].hi));
        CHECK(g.neck_length(0) == doctest::Approx(7.0));
        if (p == 2) CHECK(g.neck_length(1) == doctest::Approx(9.0));
    }
}

TEST_CASE("local jet at an end matches the global jet and mirrors for two ends")
{
    GeometryConfig c;
    c.p = 2;
    c.s = {6.0, 6.0};
    ModelGeometry g = build_geometry(c);
    for (double r : {0.3, 1.5, 2.7, 3.9}) {
        MetricJet a = g.local_jet(0, r), b = g.jet(g.to_global(0, r));
        MetricJet c1 = g.local_jet(1, r);
        CHECK(a.value.g_pp == doctest::Approx(b.value.g_pp).epsilon(1e-14));
        CHECK(c1.value.g_pp == doctest::Approx(a.value.g_pp).epsilon(1e-12));
        CHECK(g.local_radius(1, g.to_global(1, r)) == doctest::Approx(r).epsilon(1e-12));
    }
}

TEST_CASE("perturbation by a bump changes the metric only inside its support")
{
    ModelGeometry g = build_geometry({});
    VariationTensor T;
    T.pp.add(Bump{g.R0() + 4.0, 1.0}, 2.0);
    ModelGeometry gp = g.perturbed(T, 0.1);
    CHECK(gp.is_perturbed());
    CHECK(gp.metric(g.R0() + 4.0).g_pp == doctest::Approx(g.metric(g.R0() + 4.0).g_pp + 0.2));
    CHECK(gp.metric(g.R0() + 1.0).g_pp == g.metric(g.R0() + 1.0).g_pp);
}

TEST_CASE("invalid geometry parameters are rejected")
{
    GeometryConfig c;
    c.r_a = 0.9;
    CHECK_THROWS_AS(build_geometry(c), ConfigError);
    c = {};
    c.p = 3;
    CHECK_THROWS(build_geometry(c));
    c = {};
    c.s = {-1.0, 1.0};
    CHECK_THROWS(build_geometry(c));
    CHECK(GeometryConfig::is_geometry_key("R0"));
    CHECK_FALSE(GeometryConfig::is_geometry_key("s_grid"));
}

TEST_CASE("grid nodes increase, contain the junctions and mirror exactly")
{
    GeometryConfig c;
    c.p = 2;
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> len(3.0, 50.0);
    for (int trial = 0; trial < 5; ++trial) {
        c.s = {len(rng), len(rng)};
        ModelGeometry g = build_geometry(c);
        GridOptions opt;
        auto x = build_grid(g, opt);
        for (std::size_t i = 1; i < x.size(); ++i) REQUIRE(x[i] > x[i - 1]);
        CHECK(std::abs(x.front()) <= opt.r_min);
        for (int end : {0, 1}) {
            double j = g.junction(end);
            auto it = std::lower_bound(x.begin(), x.end(), j - 1e-12);
            REQUIRE(it != x.end());
            CHECK(*it == doctest::Approx(j).epsilon(1e-14));
        }
        // the first few edge nodes at both ends are exact mirrors
        for (std::size_t i = 0; i < 20; ++i) CHECK(g.r_total() - x[x.size() - 1 - i] == x[i]);
    }
}
