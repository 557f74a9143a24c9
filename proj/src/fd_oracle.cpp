#include "z2neck/fd_oracle.hpp"

#include "z2neck/error.hpp"
#include "z2neck/mode_solver.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <chrono>
#include <cmath>
#include <numbers>

namespace z2neck {

using cd = std::complex<double>;

PhiSource phi_source(const ModelGeometry& g, const SourceSpec& f, int m)
{
    PhiSource out;
    for (ModeIndex k : f.modes()) {
        if (k.m == m) out.emplace_back(k.n, f.radial(g, k));
        if (k.m == -m) out.emplace_back(-k.n, f.radial(g, {-k.n, m}));
    }
    return out;
}

namespace {

// q and the zeroth-order term q (k q')' of the transformed operator at x
struct EdgeTerms {
    double q = std::numbers::sqrt2;
    double z = 0.0;
};

EdgeTerms edge_terms(const ModelGeometry& g, double x)
{
    for (int end = 0; end < g.ends(); ++end) {
        double r = g.local_radius(end, x);
        if (r >= 0.0 && r <= g.R0()) {
            // boundary region: a = c = 1, b = 4 r~^2, so k = 2 r~ and k q' = sqrt(r~) r~'
            ProfileValue p = profile_eval(g.profile(), std::max(r, 0.0));
            return {std::sqrt(p.value), 0.5 * p.d1 * p.d1 + p.value * p.d2};
        }
    }
    return {};
}

double face_flux(const ModelGeometry& g, double x)
{
    MetricCoeffs c = g.metric(x);
    double rho = std::sqrt(c.g_rr * c.g_pp * c.g_tt);
    double q = edge_terms(g, x).q;
    return rho / c.g_rr * q * q;
}

}  // namespace

FdOracleSolution solve_fd_oracle(const ModelGeometry& g, int m, const PhiSource& f, int nr, int nphi)
{
    if (nr < 4 || nphi < 2) throw DomainError("solve_fd_oracle: grid too small");
    if (g.is_perturbed()) throw PreconditionError("solve_fd_oracle: the oracle takes the unperturbed model");
    for (const auto& term : f)
        if (term.first % 2 == 0) throw DomainError("solve_fd_oracle: phi-modes must be odd");

    double L = g.r_total();
    double dr = L / nr, dphi = std::numbers::pi / nphi;
    FdOracleSolution out;
    out.m = m;
    out.r.resize(nr);
    out.phi.resize(nphi);
    for (int i = 0; i < nr; ++i) out.r[i] = (i + 0.5) * dr;
    for (int j = 0; j < nphi; ++j) out.phi[j] = (j + 0.5) * dphi;

    std::vector<double> K(nr + 1, 0.0);
    for (int i = 1; i < nr; ++i) K[i] = face_flux(g, i * dr);
    // the far face is an edge (two ends) or the capped end, where q is constant and u' = 0

    const int N = nr * nphi;
    auto id = [nphi](int i, int j) { return i * nphi + j; };
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(5 * N);
    Eigen::VectorXd rhs_re(N), rhs_im(N);
    std::vector<double> qc(nr);
    for (int i = 0; i < nr; ++i) {
        double x = out.r[i];
        MetricCoeffs c = g.metric(x);
        double rho = std::sqrt(c.g_rr * c.g_pp * c.g_tt);
        EdgeTerms e = edge_terms(g, x);
        qc[i] = e.q;
        double P = rho * e.q * e.q / c.g_pp / (dphi * dphi);
        double M = rho * e.q * e.q * double(m) * m / c.g_tt;
        double S = rho * e.q;
        double kl = K[i] / (dr * dr), kr = K[i + 1] / (dr * dr);
        std::vector<cd> fn;
        for (const auto& term : f) fn.push_back(term.second(x));
        for (int j = 0; j < nphi; ++j) {
            int row = id(i, j);
            trip.emplace_back(row, row, kl + kr - e.z + 2.0 * P + M);
            if (i > 0) trip.emplace_back(row, id(i - 1, j), -kl);
            if (i + 1 < nr) trip.emplace_back(row, id(i + 1, j), -kr);
            // antiperiodic wrap: u(phi + pi) = -u(phi)
            if (j > 0) trip.emplace_back(row, id(i, j - 1), -P);
            else trip.emplace_back(row, id(i, nphi - 1), P);
            if (j + 1 < nphi) trip.emplace_back(row, id(i, j + 1), -P);
            else trip.emplace_back(row, id(i, 0), P);
            cd fx = 0.0;
            for (std::size_t k = 0; k < f.size(); ++k) fx += fn[k] * std::polar(1.0, f[k].first * out.phi[j]);
            rhs_re(row) = S * fx.real();
            rhs_im(row) = S * fx.imag();
        }
    }
    Eigen::SparseMatrix<double> A(N, N);
    A.setFromTriplets(trip.begin(), trip.end());
    A.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success) throw SolverError("solve_fd_oracle: sparse factorization failed: " + lu.lastErrorMessage());
    Eigen::VectorXd wr = lu.solve(rhs_re), wi = lu.solve(rhs_im);
    if (lu.info() != Eigen::Success || !wr.allFinite() || !wi.allFinite())
        throw SolverError("solve_fd_oracle: sparse solve failed");

    out.u.resize(nr, nphi);
    for (int i = 0; i < nr; ++i)
        for (int j = 0; j < nphi; ++j) out.u(i, j) = qc[i] * cd(wr(id(i, j)), wi(id(i, j)));
    return out;
}

double oracle_discrepancy(const ModelGeometry& g, const FdOracleSolution& fd, const PhiSource& f,
                          const GridOptions& opt)
{
    ModeSolver solver(g, opt);
    std::vector<RadialSolution> sols;
    for (const auto& term : f) sols.push_back(solver.solve({term.first, fd.m}, term.second));
    double err = 0.0, ref = 0.0;
    for (std::size_t i = 0; i < fd.r.size(); ++i) {
        std::vector<cd> un;
        for (const auto& s : sols) un.push_back(s.value_at(fd.r[i]));
        for (std::size_t j = 0; j < fd.phi.size(); ++j) {
            cd v = 0.0;
            for (std::size_t k = 0; k < f.size(); ++k) v += un[k] * std::polar(1.0, f[k].first * fd.phi[j]);
            ref = std::max(ref, std::abs(v));
            err = std::max(err, std::abs(fd.u(i, j) - v));
        }
    }
    return ref > 0.0 ? err / ref : err;
}

OracleConvergence oracle_convergence(const ModelGeometry& g, const SourceSpec& f, int m, int nr0, int nphi0,
                                     int doublings, const GridOptions& opt)
{
    PhiSource src = phi_source(g, f, m);
    if (src.empty()) throw DomainError("oracle_convergence: the source has no modes with m = " + std::to_string(m));
    OracleConvergence out;
    for (int k = 0; k <= doublings; ++k) {
        int nr = nr0 << k, nphi = nphi0 << k;
        auto t0 = std::chrono::steady_clock::now();
        FdOracleSolution fd = solve_fd_oracle(g, m, src, nr, nphi);
        double d = oracle_discrepancy(g, fd, src, opt);
        out.seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
        out.nr.push_back(nr);
        out.nphi.push_back(nphi);
        out.discrepancy.push_back(d);
        if (k > 0) out.order.push_back(std::log2(out.discrepancy[k - 1] / d));
    }
    return out;
}

}  // namespace z2neck
