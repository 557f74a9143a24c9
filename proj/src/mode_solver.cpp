#include "z2neck/mode_solver.hpp"

#include "z2neck/error.hpp"
#include "z2neck/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace z2neck {

namespace {

using cd = std::complex<double>;

bool same(double u, double v)
{
    return std::abs(u - v) <= 1e-13 * std::max(std::abs(u), std::abs(v));
}

void renormalize(cd& m, double& s)
{
    double a = std::abs(m);
    if (a == 0.0) return;
    if (a > 1e100 || a < 1e-100) {
        m /= a;
        s += std::log(a);
    }
}

cd to_linear(const cd& m, double s)
{
    if (m == 0.0) return 0.0;
    return m * std::exp(s);
}

// tridiagonal solve that meets in the middle: forward elimination from the left, backward from the right,
// joined at the row with the largest right-hand side; homogeneous stretches are propagated multiplicatively
// in (mantissa, log scale) form so decaying solutions never underflow
void twisted_solve(const std::vector<double>& lo, const std::vector<double>& ex, const std::vector<double>& up,
                   const std::vector<cd>& rhs, std::vector<cd>& m, std::vector<double>& s)
{
    std::size_t n = ex.size();
    m.assign(n, 0.0);
    s.assign(n, 0.0);
    std::size_t k = 0;
    double best = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double v = std::abs(rhs[i]);
        if (v > best) {
            best = v;
            k = i;
        }
    }
    if (best == 0.0) return;

    // eliminated rows keep their excess over the remaining off-diagonal: ef (forward), eb (backward)
    std::vector<double> cf(n, 0.0), ab(n, 0.0), ef(n, 0.0), eb(n, 0.0), df(n, 0.0), db(n, 0.0);
    std::vector<cd> bf(n, 0.0), bb(n, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        ef[i] = ex[i] - (i > 0 ? lo[i] * ef[i - 1] / df[i - 1] : 0.0);
        df[i] = ef[i] - up[i];
        if (df[i] == 0.0 || !std::isfinite(df[i])) throw SolverError("mode solve: singular tridiagonal system");
        cf[i] = up[i] / df[i];
        bf[i] = (rhs[i] - (i > 0 ? lo[i] * bf[i - 1] : 0.0)) / df[i];
    }
    for (std::size_t i = n - 1; i > k; --i) {
        eb[i] = ex[i] - (i + 1 < n ? up[i] * eb[i + 1] / db[i + 1] : 0.0);
        db[i] = eb[i] - lo[i];
        if (db[i] == 0.0 || !std::isfinite(db[i])) throw SolverError("mode solve: singular tridiagonal system");
        ab[i] = lo[i] / db[i];
        bb[i] = (rhs[i] - (i + 1 < n ? up[i] * bb[i + 1] : 0.0)) / db[i];
    }
    double den = ex[k];
    cd num = rhs[k];
    if (k > 0) {
        den -= lo[k] * ef[k - 1] / df[k - 1];
        num -= lo[k] * bf[k - 1];
    }
    if (k + 1 < n) {
        den -= up[k] * eb[k + 1] / db[k + 1];
        num -= up[k] * bb[k + 1];
    }
    if (den == 0.0 || !std::isfinite(den)) throw SolverError("mode solve: singular tridiagonal system");
    m[k] = num / den;
    s[k] = 0.0;
    renormalize(m[k], s[k]);
    for (std::size_t i = k; i-- > 0;) {
        if (bf[i] == 0.0) {
            m[i] = -cf[i] * m[i + 1];
            s[i] = s[i + 1];
        } else {
            m[i] = bf[i] - cf[i] * to_linear(m[i + 1], s[i + 1]);
            s[i] = 0.0;
        }
        renormalize(m[i], s[i]);
    }
    for (std::size_t i = k + 1; i < n; ++i) {
        if (bb[i] == 0.0) {
            m[i] = -ab[i] * m[i - 1];
            s[i] = s[i - 1];
        } else {
            m[i] = bb[i] - ab[i] * to_linear(m[i - 1], s[i - 1]);
            s[i] = 0.0;
        }
        renormalize(m[i], s[i]);
    }
}

double frobenius_ratio(ModeIndex mode, double r0, double r1)
{
    double nu = std::abs(mode.n) / 2.0;
    double a1 = double(mode.m) * mode.m / (4.0 * (nu + 1.0));
    return std::pow(r0 / r1, nu) * (1.0 + a1 * r0 * r0) / (1.0 + a1 * r1 * r1);
}

}  // namespace

RadialDiscretization::RadialDiscretization(std::vector<double> nodes,
                                           const std::function<MetricCoeffs(double)>& metric)
    : x_(std::move(nodes))
{
    std::size_t n = x_.size();
    if (n < 3) throw DomainError("RadialDiscretization: need at least three nodes");
    for (std::size_t i = 1; i < n; ++i)
        if (!(x_[i] > x_[i - 1])) throw DomainError("RadialDiscretization: nodes must increase");
    rho_.resize(n);
    a_.resize(n);
    b_.resize(n);
    c_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        MetricCoeffs g = metric(x_[i]);
        a_[i] = g.g_rr;
        b_[i] = g.g_pp;
        c_[i] = g.g_tt;
        rho_[i] = std::sqrt(g.g_rr * g.g_pp * g.g_tt);
    }
    k_half_.resize(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        MetricCoeffs g = metric(0.5 * (x_[i] + x_[i + 1]));
        k_half_[i] = std::sqrt(g.g_rr * g.g_pp * g.g_tt) / g.g_rr;
    }
    auto node_same = [&](std::size_t i, std::size_t j) {
        return same(a_[i], a_[j]) && same(b_[i], b_[j]) && same(c_[i], c_[j]);
    };
    flat_.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        bool ok = true;
        if (i > 0) ok = ok && node_same(i, i - 1) && same(k_half_[i - 1], rho_[i] / a_[i]);
        if (i + 1 < n) ok = ok && node_same(i, i + 1) && same(k_half_[i], rho_[i] / a_[i]);
        flat_[i] = ok ? 1 : 0;
    }
}

double RadialDiscretization::potential(ModeIndex mode, std::size_t i) const
{
    return double(mode.n) * mode.n / b_[i] + double(mode.m) * mode.m / c_[i];
}

void RadialDiscretization::row(ModeIndex mode, std::size_t i, double hl, double hr, double kl, double kr,
                               double& lo, double& ex, double& up) const
{
    double V = potential(mode, i);
    double alpha = std::sqrt(a_[i] * V);
    ex = 0.5 * (hl + hr) * rho_[i] * V;
    if (flat_[i] && alpha * std::max(hl, hr) > 1e-8) {
        // constant coefficients: the three-point relation satisfied exactly by exp(+-alpha r),
        // normalized so that a locally constant source is also reproduced exactly
        double sl = std::sinh(alpha * hl), sr = std::sinh(alpha * hr);
        double ql = std::sinh(0.5 * alpha * hl), qr = std::sinh(0.5 * alpha * hr);
        double W = 2.0 * (sr * ql * ql + sl * qr * qr) / (alpha * alpha);
        double K = 0.5 * (hl + hr) * rho_[i] / (a_[i] * W);
        lo = -K * sr;
        up = -K * sl;
        return;
    }
    lo = -kl / hl;
    up = -kr / hr;
}

RadialSolution RadialDiscretization::solve(ModeIndex mode, const RadialSource& f, BoundaryCondition left,
                                           BoundaryCondition right) const
{
    std::vector<cd> fv(x_.size());
    for (std::size_t i = 0; i < x_.size(); ++i) fv[i] = f(x_[i]);
    return solve(mode, fv, left, right);
}

RadialSolution RadialDiscretization::solve(ModeIndex mode, const std::vector<cd>& f, BoundaryCondition left,
                                           BoundaryCondition right) const
{
    mode.validate();
    std::size_t n = x_.size();
    if (f.size() != n) throw DomainError("mode solve: source size mismatch");
    using K = BoundaryCondition::Kind;
    // row i reads lo u[i-1] + (ex - lo - up) u[i] + up u[i+1]; the excess ex is kept apart so the
    // elimination never subtracts nearly equal numbers
    std::vector<double> lo(n, 0.0), ex(n, 0.0), up(n, 0.0);
    std::vector<cd> rhs(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        double hl = x_[i] - x_[i - 1], hr = x_[i + 1] - x_[i];
        row(mode, i, hl, hr, k_half_[i - 1], k_half_[i], lo[i], ex[i], up[i]);
        rhs[i] = 0.5 * (hl + hr) * rho_[i] * f[i];
    }
    // end rows; first/last active row index
    std::size_t first = 0, last = n - 1;
    auto end_row = [&](std::size_t i, std::size_t nb, std::size_t half, const BoundaryCondition& bc, bool is_left) {
        double h = std::abs(x_[nb] - x_[i]);
        double& off = is_left ? up[i] : lo[i];
        double g = 0.0, e = 0.0, gu = 0.0;
        if (bc.kind == K::neumann || bc.kind == K::transparent)
            row(mode, i, h, h, k_half_[half], k_half_[half], g, e, gu);
        switch (bc.kind) {
        case K::neumann:
            // mirrored ghost node, half cell
            off = g;
            ex[i] = 0.5 * e;
            rhs[i] = 0.5 * h * rho_[i] * f[i];
            break;
        case K::transparent: {
            // ghost node carrying the decaying exponential
            double alpha = std::sqrt(a_[i] * potential(mode, i));
            off = g;
            ex[i] = e - g * -std::expm1(-alpha * h);
            rhs[i] = h * rho_[i] * f[i];
            break;
        }
        case K::edge_regular: {
            double kappa = frobenius_ratio(mode, std::abs(x_[i] - bc.edge), std::abs(x_[nb] - bc.edge));
            if (is_left) {
                ex[nb] -= lo[nb] * (1.0 - kappa);
                lo[nb] = 0.0;
                first = nb;
            } else {
                ex[nb] -= up[nb] * (1.0 - kappa);
                up[nb] = 0.0;
                last = nb;
            }
            break;
        }
        case K::dirichlet:
            if (is_left) {
                rhs[nb] -= lo[nb] * bc.value;
                ex[nb] -= lo[nb];
                lo[nb] = 0.0;
                first = nb;
            } else {
                rhs[nb] -= up[nb] * bc.value;
                ex[nb] -= up[nb];
                up[nb] = 0.0;
                last = nb;
            }
            break;
        }
    };
    end_row(0, 1, 0, left, true);
    end_row(n - 1, n - 2, n - 2, right, false);

    std::vector<double> l2(lo.begin() + first, lo.begin() + last + 1);
    std::vector<double> e2(ex.begin() + first, ex.begin() + last + 1);
    std::vector<double> u2(up.begin() + first, up.begin() + last + 1);
    std::vector<cd> r2(rhs.begin() + first, rhs.begin() + last + 1);
    std::vector<cd> m;
    std::vector<double> s;
    twisted_solve(l2, e2, u2, r2, m, s);

    RadialSolution sol;
    sol.mode = mode;
    sol.alpha = mode.alpha();
    sol.r = x_;
    sol.mantissa.assign(n, 0.0);
    sol.log_scale.assign(n, 0.0);
    for (std::size_t i = first; i <= last; ++i) {
        sol.mantissa[i] = m[i - first];
        sol.log_scale[i] = s[i - first];
    }
    auto fill = [&](std::size_t i, std::size_t nb, const BoundaryCondition& bc) {
        if (bc.kind == K::edge_regular) {
            double kappa = frobenius_ratio(mode, std::abs(x_[i] - bc.edge), std::abs(x_[nb] - bc.edge));
            sol.mantissa[i] = kappa * sol.mantissa[nb];
            sol.log_scale[i] = sol.log_scale[nb];
        } else if (bc.kind == K::dirichlet) {
            sol.mantissa[i] = bc.value;
            sol.log_scale[i] = 0.0;
        }
    };
    if (first == 1) fill(0, 1, left);
    if (last == n - 2) fill(n - 1, n - 2, right);
    for (std::size_t i = 0; i < n; ++i)
        if (!std::isfinite(sol.mantissa[i].real()) || !std::isfinite(sol.mantissa[i].imag()))
            throw SolverError("mode solve: non-finite solution value");
    return sol;
}

std::vector<cd> RadialDiscretization::apply(ModeIndex mode, const std::vector<cd>& u) const
{
    std::size_t n = x_.size();
    if (u.size() != n) throw DomainError("apply: size mismatch");
    std::vector<cd> out(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        double hl = x_[i] - x_[i - 1], hr = x_[i + 1] - x_[i];
        double l, e, u2;
        row(mode, i, hl, hr, k_half_[i - 1], k_half_[i], l, e, u2);
        double cell = 0.5 * (hl + hr) * rho_[i];
        cd r = l * (u[i - 1] - u[i]) + u2 * (u[i + 1] - u[i]) + e * u[i];
        out[i] = r / cell;
    }
    return out;
}

ModeSolver::ModeSolver(const ModelGeometry& g, const GridOptions& opt)
    : g_(g), opt_(opt), disc_(build_grid(g, opt), [&g](double x) { return g.metric(x); })
{
}

RadialSolution ModeSolver::solve(ModeIndex mode, const RadialSource& f) const
{
    std::vector<cd> fv(disc_.nodes().size());
    for (std::size_t i = 0; i < fv.size(); ++i) fv[i] = f(disc_.nodes()[i]);
    return solve(mode, fv);
}

RadialSolution ModeSolver::solve(ModeIndex mode, const std::vector<cd>& f) const
{
    BoundaryCondition left = BoundaryCondition::edge_regular(0.0);
    BoundaryCondition right = g_.ends() == 2 ? BoundaryCondition::edge_regular(g_.r_total())
                                             : BoundaryCondition::neumann();
    return disc_.solve(mode, f, left, right);
}

RadialSolution solve_mode_finite(const ModelGeometry& g, ModeIndex mode, const RadialSource& f,
                                 const GridOptions& opt)
{
    ModeSolver solver(g, opt);
    const auto& x = solver.discretization().nodes();
    std::vector<cd> fv(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        fv[i] = f(x[i]);
        bool inside = x[i] >= g.interior_start() && x[i] <= g.interior_end();
        if (!inside && fv[i] != 0.0) throw PreconditionError("solve_mode_finite: source not supported in the interior");
    }
    return solver.solve(mode, fv);
}

Extraction extract_coefficient(const RadialSolution& sol, const RadialSolution& I, double lo, double hi, double tol)
{
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < sol.size(); ++i)
        if (sol.r[i] >= lo && sol.r[i] <= hi) idx.push_back(i);
    if (idx.size() < 3) throw PreconditionError("extract_coefficient: window holds fewer than three nodes");
    std::vector<std::size_t> jdx;
    for (std::size_t i : idx) {
        std::size_t j = I.index_of(sol.r[i]);
        if (std::abs(I.r[j] - sol.r[i]) > 1e-12 * std::max(1.0, sol.r[i]))
            throw PreconditionError("extract_coefficient: solution and I_nm do not share nodes");
        jdx.push_back(j);
    }
    std::size_t mid = idx.size() / 2;
    double e0 = sol.log_scale[idx[mid]] - I.log_scale[jdx[mid]];
    std::vector<cd> ratio(idx.size());
    bool all_zero = true;
    for (std::size_t k = 0; k < idx.size(); ++k) {
        std::size_t i = idx[k], j = jdx[k];
        if (sol.mantissa[i] != 0.0) all_zero = false;
        ratio[k] = sol.mantissa[i] / I.mantissa[j] * std::exp(sol.log_scale[i] - I.log_scale[j] - e0);
    }
    Extraction out;
    if (all_zero) return out;
    cd mean = 0.0;
    for (const cd& r : ratio) mean += r;
    mean /= double(ratio.size());
    double res = 0.0;
    for (const cd& r : ratio) res = std::max(res, std::abs(r - mean) / std::abs(mean));
    out.u = ScaledValue{mean, e0}.normalized();
    out.residual = res;
    if (!(res <= tol)) {
        std::ostringstream os;
        os << "extract_coefficient: ratio to I_nm varies by " << res << " (tolerance " << tol
           << "); source leaking into the boundary region or grid too coarse";
        throw ExtractionError(os.str());
    }
    return out;
}

RadialSolution local_view(const RadialSolution& sol, const ModelGeometry& g, int end, double r_max)
{
    RadialSolution out;
    out.mode = sol.mode;
    out.alpha = sol.alpha;
    std::size_t n = sol.size();
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t i = end == 0 ? k : n - 1 - k;
        double r = g.local_radius(end, sol.r[i]);
        if (r > r_max) break;
        out.r.push_back(r);
        out.mantissa.push_back(sol.mantissa[i]);
        out.log_scale.push_back(sol.log_scale[i]);
    }
    return out;
}

Extraction mode_coefficient(const ModeSolver& solver, ModeIndex mode, const RadialSolution& sol, int end, double tol)
{
    const ModelGeometry& g = solver.geometry();
    double R0 = g.R0();
    RadialSolution lv = local_view(sol, g, end, 0.75 * R0 + 4.0 * solver.options().h);
    RadialOperator op(g, mode, end);
    RadialSolution I = integrate_Inm(op, lv.r);
    try {
        return extract_coefficient(lv, I, 0.25 * R0, 0.75 * R0, tol);
    } catch (const ExtractionError& e) {
        throw ExtractionError("mode " + mode.label() + ", end " + std::to_string(end) + ", s = " +
                              std::to_string(g.neck_length(end)) + ": " + e.what());
    }
}

Extraction mode_coefficient(const ModeSolver& solver, ModeIndex mode, const RadialSource& f, int end, double tol)
{
    return mode_coefficient(solver, mode, solver.solve(mode, f), end, tol);
}

namespace {

int cells_for(double len, double h)
{
    return std::max(1, static_cast<int>(std::ceil(len / h - 1e-9)));
}

}  // namespace

CylinderSolver::CylinderSolver(const ModelGeometry& g, const GridOptions& opt)
    : g_(g),
      disc_(uniform_nodes(g.interior_start(), g.interior_end(), cells_for(g.interior().length(), opt.h)),
            [&g](double x) { return g.metric(x); })
{
}

CylinderSolution CylinderSolver::solve(ModeIndex mode, const RadialSource& f) const
{
    BoundaryCondition right = g_.ends() == 2 ? BoundaryCondition::transparent() : BoundaryCondition::neumann();
    CylinderSolution out;
    out.sol = disc_.solve(mode, f, BoundaryCondition::transparent(), right);
    out.v.push_back(out.sol.value(0));
    if (g_.ends() == 2) out.v.push_back(out.sol.value(out.sol.size() - 1));
    return out;
}

CylinderSolution solve_mode_cylinder(const ModelGeometry& g, ModeIndex mode, const RadialSource& f,
                                     const GridOptions& opt)
{
    return CylinderSolver(g, opt).solve(mode, f);
}

CylinderSolution solve_mode_cylinder_truncated(const ModelGeometry& g, ModeIndex mode, const RadialSource& f,
                                               double length, const GridOptions& opt)
{
    ModelGeometry gt = g.with_neck_lengths(length, length);
    double shift = gt.interior_start() - g.interior_start();
    std::vector<double> x = uniform_nodes(gt.neck_start(0), gt.junction(0), cells_for(length, opt.h));
    std::vector<double> mid = uniform_nodes(gt.interior_start(), gt.interior_end(), cells_for(g.interior().length(), opt.h));
    x.insert(x.end(), mid.begin() + 1, mid.end());
    if (g.ends() == 2) {
        std::vector<double> tail = uniform_nodes(gt.junction(1), gt.neck_start(1), cells_for(length, opt.h));
        x.insert(x.end(), tail.begin() + 1, tail.end());
    }
    RadialDiscretization disc(x, [&gt](double y) { return gt.metric(y); });
    auto fs = [&](double y) { return f(y - shift); };
    BoundaryCondition right = g.ends() == 2 ? BoundaryCondition::dirichlet(0.0) : BoundaryCondition::neumann();
    RadialSolution sol = disc.solve(mode, fs, BoundaryCondition::dirichlet(0.0), right);
    CylinderSolution out;
    out.v.push_back(sol.value(sol.index_of(gt.junction(0))));
    if (g.ends() == 2) out.v.push_back(sol.value(sol.index_of(gt.junction(1))));
    for (double& r : sol.r) r -= shift;
    out.sol = std::move(sol);
    return out;
}

std::complex<double> ModeCoefficients::value(ModeIndex mode, int end) const
{
    return scaled(mode, end).value();
}

ScaledValue ModeCoefficients::scaled(ModeIndex mode, int end) const
{
    bool conj = mode.n < 0;
    if (conj) mode = {-mode.n, -mode.m};
    auto it = coeffs.find(mode);
    if (it == coeffs.end() || end < 0 || end >= static_cast<int>(it->second.size()))
        throw DomainError("ModeCoefficients: missing mode " + mode.label());
    ScaledValue v = it->second[end].u;
    if (conj) v.mantissa = std::conj(v.mantissa);
    return v;
}

double ModeCoefficients::max_residual() const
{
    double r = 0.0;
    for (const auto& [mode, list] : coeffs)
        for (const auto& e : list) r = std::max(r, e.residual);
    return r;
}

ModeCoefficients compute_mode_coefficients(const ModelGeometry& g, const SourceSpec& src,
                                           const std::vector<ModeIndex>& modes, const GridOptions& opt)
{
    src.validate(g.interior().length());
    ModeSolver solver(g, opt);
    std::vector<std::vector<Extraction>> results(modes.size());
    parallel_for(modes.size(), [&](std::size_t k) {
        ModeIndex mode = modes[k];
        mode.validate();
        if (mode.n < 0) throw DomainError("compute_mode_coefficients: request modes with n > 0");
        RadialSolution sol = solver.solve(mode, src.radial(g, mode));
        for (int e = 0; e < g.ends(); ++e) results[k].push_back(mode_coefficient(solver, mode, sol, e));
    });
    ModeCoefficients out;
    out.s = g.neck_length(0);
    out.ends = g.ends();
    for (std::size_t k = 0; k < modes.size(); ++k) out.coeffs[modes[k]] = std::move(results[k]);
    return out;
}

ABSamples assemble_AB(const ModeCoefficients& coeffs, int m_max, int end, int samples, double log_factor)
{
    std::vector<std::string> missing;
    for (int n : {1, 3})
        for (int m = -m_max; m <= m_max; ++m)
            if (!coeffs.coeffs.count(ModeIndex{n, m})) missing.push_back(ModeIndex{n, m}.label());
    if (!missing.empty()) {
        std::string msg = "assemble_AB: missing modes";
        for (const auto& s : missing) msg += " " + s;
        throw DomainError(msg);
    }
    ABSamples out;
    out.theta.resize(samples);
    out.A.assign(samples, 0.0);
    out.B.assign(samples, 0.0);
    for (int j = 0; j < samples; ++j) out.theta[j] = 2.0 * std::numbers::pi * j / samples;
    for (int m = -m_max; m <= m_max; ++m) {
        ScaledValue a = coeffs.scaled({1, m}, end), b = coeffs.scaled({3, m}, end);
        cd av = ScaledValue{a.mantissa, a.log_scale + log_factor}.value();
        cd bv = ScaledValue{b.mantissa, b.log_scale + log_factor}.value();
        for (int j = 0; j < samples; ++j) {
            cd e = std::polar(1.0, m * out.theta[j]);
            out.A[j] += av * e;
            out.B[j] += bv * e;
        }
    }
    return out;
}

}  // namespace z2neck
