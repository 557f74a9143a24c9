#include "z2neck/green_maps.hpp"
#include "z2neck/mode_solver.hpp"
#include "z2neck/variation.hpp"

#include <doctest.h>

#include <cmath>

using namespace z2neck;
using cd = std::complex<double>;

namespace {

ModelGeometry geometry(double s)
{
    GeometryConfig c;
    c.s = {s, s};
    return build_geometry(c);
}

}  // namespace

TEST_CASE("G_n reproduces the (n,0) coefficient of manufactured functions")
{
    ModelGeometry g = geometry(12.0);
    for (int n : {1, 3}) {
        GreenMap G = build_Gn(g, n);
        for (double c : {1.0, -2.5}) {
            TestFunction f;
            f.c = c;
            f.cut_lo = 1.0 + 0.3 * n;
            f.cut_hi = f.cut_lo + 1.5;
            cd v = poisson_identity_check(G, f);
            CHECK(std::abs(v - c) <= 1e-6 * std::abs(c));
        }
    }
}

TEST_CASE("G_n of a solved source returns its mode coefficient")
{
    ModelGeometry g = geometry(12.0);
    SourceSpec f = SourceSpec::random(8, g.interior().length(), {1}, 0);
    GreenMap G = build_Gn(g, 1);
    ModeSolver solver(g);
    RadialSource src = f.radial(g, {1, 0});
    cd u = mode_coefficient(solver, {1, 0}, src, 0).value();
    CHECK(std::abs(poisson_identity(G, src) - u) <= 1e-6 * std::abs(u));
}

TEST_CASE("G_n is discrete-harmonic on the neck off the chi transition")
{
    // near the edge chi J is large and the residual is the O(h^2) error of the plain stencil, so the check
    // stays on the neck and beyond
    ModelGeometry g = geometry(10.0);
    for (int n : {1, 3}) {
        GreenMap G = build_Gn(g, n);
        CHECK(harmonicity_residual(G, g.R0() + 0.5, G.transition().first) < 1e-7);
        CHECK(harmonicity_residual(G, G.transition().second, g.r_total() - 0.5) < 1e-9);
    }
}

TEST_CASE("C_n is multiplicative in n")
{
    for (double r_a : {1.0, 1.5}) {
        GeometryConfig c;
        c.r_a = r_a;
        ModelGeometry g = build_geometry(c);
        double c1 = Cn_constant(g, 1);
        CHECK(c1 > 0.0);
        CHECK(Cn_constant(g, 3) == doctest::Approx(c1 * c1 * c1).epsilon(1e-12));
        CHECK(Cn_constant(g, 5) == doctest::Approx(std::pow(c1, 5)).epsilon(1e-12));
    }
}

TEST_CASE("stretch identity holds and its stretch tensor matches a longer neck")
{
    ModelGeometry g = geometry(12.0);
    SourceSpec f = SourceSpec::random(11, g.interior().length(), {1, 3}, 0);
    RealBumpSum eta = normalized_bump(g.R0() + 3.0, 1.0);
    for (int n : {1, 3}) {
        StretchIdentity id = dun0_identity(g, n, f, eta);
        CHECK(id.residual < 1e-4);
    }
    // eta has unit integral, so the neck grows at unit rate
    double t = 1e-4;
    double rate = (stretched_length(g, eta, t) - stretched_length(g, eta, -t)) / (2 * t);
    CHECK(rate == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("trace formula matches finite differences for a mixed tensor")
{
    ModelGeometry g = geometry(12.0);
    SourceSpec f = SourceSpec::random(11, g.interior().length(), {1}, 0);
    VariationTensor T;
    T.tt.add(Bump{g.R0() + 2.5, 1.0}, 0.5);
    T.pp.add(Bump{g.R0() + 4.0, 1.5}, 3.0);
    cd pred = predicted_derivative(g, 1, f, T);
    cd fd = perturbation_derivative(g, {1, 0}, f, T).value;
    CHECK(std::abs(pred - fd) <= 1e-5 * std::abs(fd));
}
