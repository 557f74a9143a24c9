#include "z2neck/fd_oracle.hpp"
#include "z2neck/green_maps.hpp"
#include "z2neck/mode_matrix.hpp"

#include <doctest.h>

#include <cmath>

using namespace z2neck;

namespace {

std::vector<SourceSpec> basis_sources(const ModelGeometry& g, int p)
{
    std::vector<SourceSpec> out;
    for (int k = 0; k < 2 * p; ++k) out.push_back(SourceSpec::random(100 + k, g.interior().length(), {1, 3, 5}, 4));
    return out;
}

}  // namespace

TEST_CASE("normalized basis has identity responses")
{
    for (int p : {1, 2}) {
        GeometryConfig c;
        c.p = p;
        ModelGeometry g = build_geometry(c);
        auto src = basis_sources(g, p);
        ResponseMatrix V = assemble_V(g, src);
        REQUIRE(V.M.rows() == 2 * p);
        REQUIRE_FALSE(V.singular());
        NormalizedBasis B = normalize_basis(V, src);
        ResponseMatrix I = assemble_V(g, B.sources);
        CHECK((I.M - Eigen::MatrixXd::Identity(2 * p, 2 * p)).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("finite-s responses rescaled by exp(s/4) are C_1 times the cylinder responses")
{
    GeometryConfig c;
    c.s = {15.0, 15.0};
    ModelGeometry g = build_geometry(c);
    auto src = basis_sources(g, 1);
    ResponseMatrix a = assemble_V(g, src), b = assemble_V_finite(g, src);
    double c1 = Cn_constant(g, 1);
    CHECK((c1 * a.M - b.M).cwiseAbs().maxCoeff() <= 1e-7 * b.M.cwiseAbs().maxCoeff());
}

TEST_CASE("the extended solve kills v10 and fixes v30")
{
    GeometryConfig c;
    c.p = 2;
    ModelGeometry g = build_geometry(c);
    auto src = basis_sources(g, 2);
    SourceSpec extra = SourceSpec::random(500, g.interior().length(), {1, 3, 5}, 4);
    for (int k : {0, 1}) {
        TildeSolution t = solve_V_tilde(g, src, extra, k);
        for (auto v : t.v10) CHECK(std::abs(v) < 1e-8);
        CHECK(t.v30.real() == doctest::Approx(1.0).epsilon(1e-8));
    }
}

TEST_CASE("a singular response matrix is reported")
{
    ModelGeometry g = build_geometry({});
    auto src = basis_sources(g, 1);
    src[1] = src[0].scaled(3.0);
    ResponseMatrix V = assemble_V(g, src);
    CHECK(V.singular());
    CHECK_THROWS(normalize_basis(V, src));
}

TEST_CASE("2D oracle converges to the mode solver at second order")
{
    GeometryConfig c;
    c.s = {2.0, 2.0};
    ModelGeometry g = build_geometry(c);
    SourceSpec f = SourceSpec::random(11, g.interior().length(), {1, 3}, 1);
    OracleConvergence oc = oracle_convergence(g, f, 1, 64, 8, 2);
    REQUIRE(oc.order.size() == 2);
    for (double q : oc.order) CHECK(std::abs(q - 2.0) < 0.4);
    CHECK(oc.discrepancy.back() < oc.discrepancy.front());
}

TEST_CASE("2D oracle keeps a single phi-mode source in that mode")
{
    GeometryConfig c;
    c.s = {2.0, 2.0};
    ModelGeometry g = build_geometry(c);
    SourceSpec f = SourceSpec::random(11, g.interior().length(), {1}, 0);
    PhiSource src{{1, f.radial(g, {1, 0})}};
    const int nphi = 8;
    FdOracleSolution a = solve_fd_oracle(g, 0, src, 64, nphi);
    // exp(i phi) is an eigenvector of the antiperiodic second difference, so each row is u_i exp(i phi_j)
    std::complex<double> step = std::polar(1.0, M_PI / nphi);
    double scale = a.u.cwiseAbs().maxCoeff(), err = 0.0;
    for (int i = 0; i < a.u.rows(); ++i)
        for (int j = 0; j + 1 < nphi; ++j) err = std::max(err, std::abs(a.u(i, j + 1) - step * a.u(i, j)));
    CHECK(err < 1e-10 * scale);
}
