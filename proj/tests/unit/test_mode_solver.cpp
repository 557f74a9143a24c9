#include "z2neck/mode_solver.hpp"
#include "z2neck/source.hpp"

#include <doctest.h>

#include <cmath>

using namespace z2neck;
using cd = std::complex<double>;

namespace {

ModelGeometry geometry(int p, double s)
{
    GeometryConfig c;
    c.p = p;
    c.s = {s, s};
    return build_geometry(c);
}

}  // namespace

TEST_CASE("interior values converge at second order under grid refinement")
{
    for (int p : {1, 2}) {
        ModelGeometry g = geometry(p, 8.0);
        SourceSpec f = SourceSpec::random(3, g.interior().length(), {1, 3}, 2);
        for (ModeIndex k : {ModeIndex{1, 0}, ModeIndex{3, 2}}) {
            std::vector<cd> v;
            for (double h : {4e-3, 2e-3, 1e-3}) {
                GridOptions o;
                o.h = h;
                o.h_edge = h / 4;
                RadialSolution u = ModeSolver(g, o).solve(k, f.radial(g, k));
                v.push_back(u.value_at(g.interior_start() + 2.0));
            }
            double q = std::log2(std::abs(v[1] - v[0]) / std::abs(v[2] - v[1]));
            CHECK(q == doctest::Approx(2.0).epsilon(0.1));
        }
    }
}

TEST_CASE("mode coefficients are linear in the source and conjugate symmetric")
{
    ModelGeometry g = geometry(2, 10.0);
    double L = g.interior().length();
    SourceSpec a = SourceSpec::random(21, L, {1, 3}, 1), b = SourceSpec::random(22, L, {1, 3}, 1);
    std::vector<ModeIndex> modes{{1, 0}, {1, 1}, {3, -1}};
    auto ca = compute_mode_coefficients(g, a, modes), cb = compute_mode_coefficients(g, b, modes);
    auto cab = compute_mode_coefficients(g, combine({a, b}, {2.0, -0.5}), modes);
    for (ModeIndex k : modes)
        for (int end : {0, 1}) {
            cd lhs = cab.value(k, end), rhs = 2.0 * ca.value(k, end) - 0.5 * cb.value(k, end);
            CHECK(std::abs(lhs - rhs) <= 1e-10 * std::abs(rhs));
            CHECK(std::abs(ca.value({-k.n, -k.m}, end) - std::conj(ca.value(k, end))) == 0.0);
        }
}

TEST_CASE("u_nm exp(alpha s) is independent of the neck length")
{
    ModelGeometry g = geometry(1, 10.0);
    SourceSpec f = SourceSpec::random(11, g.interior().length(), {1, 3}, 1);
    for (ModeIndex k : {ModeIndex{1, 0}, ModeIndex{3, 0}}) {
        double ref = 0.0;
        for (double s : {10.0, 17.0, 29.0}) {
            ScaledValue u = compute_mode_coefficients(g.with_neck_length(0, s), f, {k}).scaled(k, 0);
            double x = u.log_abs() + k.alpha() * s;
            if (ref == 0.0) ref = x;
            CHECK(x == doctest::Approx(ref).epsilon(1e-9));
        }
    }
}

TEST_CASE("the solution is regular at the edge")
{
    ModelGeometry g = geometry(1, 6.0);
    SourceSpec f = SourceSpec::random(4, g.interior().length(), {1}, 1);
    ModeSolver solver(g);
    RadialSolution u = solver.solve({1, 1}, f.radial(g, {1, 1}));
    // u ~ c r^(1/2) near the edge
    std::size_t i = u.index_of(1e-3), j = u.index_of(4e-3);
    double slope = (std::log(std::abs(u.value(j))) - std::log(std::abs(u.value(i)))) / std::log(u.r[j] / u.r[i]);
    CHECK(slope == doctest::Approx(0.5).epsilon(1e-3));
}
