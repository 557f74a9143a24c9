#include "z2neck/variation.hpp"

#include "z2neck/error.hpp"
#include "z2neck/parallel.hpp"
#include "z2neck/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace z2neck {

namespace {

using cd = std::complex<double>;
constexpr double kPi = std::numbers::pi;

int cells_for(double len, double h)
{
    return std::max(1, static_cast<int>(std::ceil(len / h - 1e-9)));
}

std::pair<double, double> neck_span(const ModelGeometry& g, int end)
{
    double a = g.neck_start(end), b = g.junction(end);
    return {std::min(a, b), std::max(a, b)};
}

double eta_integral(const RealBumpSum& eta)
{
    double acc = 0.0;
    for (const auto& t : eta.terms()) acc += t.amplitude * t.shape.integral();
    return acc;
}

std::pair<double, double> global_support(const ModelGeometry& g, const SourceSpec& f)
{
    auto [lo, hi] = f.support();
    return {g.interior_start() + lo, g.interior_start() + hi};
}

bool overlaps(std::pair<double, double> a, std::pair<double, double> b)
{
    return a.first < b.second && b.first < a.second;
}

}  // namespace

RealBumpSum normalized_bump(double center, double half_width)
{
    Bump b{center, half_width};
    RealBumpSum out;
    out.add(b, 1.0 / b.integral());
    return out;
}

VariationTensor stretch_tensor(const ModelGeometry& g, const RealBumpSum& eta, int end)
{
    if (end < 0 || end >= g.ends()) throw DomainError("stretch_tensor: no such end");
    if (eta.empty()) throw PreconditionError("stretch_tensor: eta is empty");
    double I = eta_integral(eta);
    if (std::abs(I - 1.0) > 1e-10)
        throw PreconditionError("stretch_tensor: eta must integrate to 1 (got " + std::to_string(I) + ")");
    auto [lo, hi] = eta.support();
    auto [a, b] = neck_span(g, end);
    if (lo < a - 1e-12 || hi > b + 1e-12) throw PreconditionError("stretch_tensor: eta must be supported in the neck");
    VariationTensor T;
    T.rr = eta.scaled(2.0);
    return T;
}

double stretched_length(const ModelGeometry& g, const RealBumpSum& eta, double t, int end)
{
    auto [lo, hi] = eta.support();
    double extra = gauss_legendre([&](double x) { return std::sqrt(1.0 + 2.0 * t * eta.value(x)) - 1.0; }, lo, hi, 64);
    return g.neck_length(end) + extra;
}

cd extracted_coefficient(const ModelGeometry& g, ModeIndex mode, const SourceSpec& f, int end, const GridOptions& opt)
{
    ModeSolver solver(g, opt);
    return mode_coefficient(solver, mode, f.radial(g, mode), end).value();
}

DerivativeEstimate perturbation_derivative(const ModelGeometry& g, ModeIndex mode, const SourceSpec& f,
                                           const VariationTensor& T, int end, double step, const GridOptions& opt)
{
    if (!(step > 0.0)) throw DomainError("perturbation_derivative: step must be positive");
    const std::array<double, 4> ts{step, -step, 0.5 * step, -0.5 * step};
    std::array<cd, 4> u{};
    parallel_for(ts.size(), [&](std::size_t k) { u[k] = extracted_coefficient(g.perturbed(T, ts[k]), mode, f, end, opt); });
    DerivativeEstimate d;
    d.step = step;
    d.coarse = (u[0] - u[1]) / (2.0 * step);
    d.fine = (u[2] - u[3]) / step;
    d.value = (4.0 * d.fine - d.coarse) / 3.0;
    return d;
}

cd trace_variation(const GreenMap& G, const RadialSolution& U, const VariationTensor& T,
                   std::optional<std::pair<double, double>> source_support)
{
    if (T.empty()) return 0.0;
    const auto& x = G.nodes();
    if (U.size() != x.size() || U.r.front() != x.front() || U.r.back() != x.back())
        throw PreconditionError("trace_variation: solution and Green map must share their nodes");
    if (U.mode.n != G.n() || U.mode.m != 0) throw PreconditionError("trace_variation: solution must be the (n, 0) mode");
    auto supp = T.support();
    if (overlaps(supp, G.transition()))
        throw PreconditionError("trace_variation: tensor support meets the cutoff transition");
    if (source_support && overlaps(supp, *source_support))
        throw PreconditionError("trace_variation: tensor support meets the source support");

    const ModelGeometry& g = G.host();
    double n2 = double(G.n()) * G.n();
    std::vector<cd> y(x.size(), 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] < supp.first || x[i] > supp.second) continue;
        MetricCoeffs m = g.metric(x[i]);
        double trr = T.rr.value(x[i]), tpp = T.pp.value(x[i]), ttt = T.tt.value(x[i]);
        cd gv = G.profile(i), gd = G.profile_d1(i);
        cd uv = U.value(i), ud = U.derivative(i);
        cd TGU = trr / (m.g_rr * m.g_rr) * gd * ud + tpp / (m.g_pp * m.g_pp) * n2 * gv * uv;
        cd dd = gd * ud / m.g_rr + n2 * gv * uv / m.g_pp;
        double trT = trr / m.g_rr + tpp / m.g_pp + ttt / m.g_tt;
        y[i] = (TGU - 0.5 * trT * dd) * g.volume_density(x[i]);
    }
    return 4.0 * kPi * kPi * simpson(x, y);
}

cd predicted_derivative(const ModelGeometry& g, int n, const SourceSpec& f, const VariationTensor& T, int end,
                        const GridOptions& opt)
{
    GreenMap G = build_Gn(g, n, {}, end, opt);
    ModeSolver solver(g, opt);
    RadialSolution U = solver.solve({n, 0}, f.radial(g, {n, 0}));
    return trace_variation(G, U, T, global_support(g, f));
}

StretchIdentity dun0_identity(const ModelGeometry& g, int n, const SourceSpec& f, const RealBumpSum& eta, int end,
                              const GridOptions& opt, double step, double tol)
{
    ModeIndex mode{n, 0};
    mode.validate();
    if (n <= 0) throw DomainError("dun0_identity: n must be positive");
    stretch_tensor(g, eta, end);  // validates eta

    double s = g.neck_length(end);
    GridOptions o = opt;
    o.neck_cells[end] = cells_for(s, opt.h);

    GreenMap G = build_Gn(g, n, {}, end, o);
    if (overlaps(eta.support(), G.transition()))
        throw PreconditionError("dun0_identity: eta must sit where the cutoff is identically 1");

    StretchIdentity out;
    for (int attempt = 0; attempt < 4; ++attempt, step *= 0.25) {
        const std::array<double, 5> ds{0.0, step, -step, 0.5 * step, -0.5 * step};
        std::array<cd, 5> u{};
        parallel_for(ds.size(), [&](std::size_t k) {
            u[k] = extracted_coefficient(g.with_neck_length(end, s + ds[k]), mode, f, end, o);
        });
        cd coarse = (u[1] - u[2]) / (2.0 * step);
        cd fine = (u[3] - u[4]) / step;
        out.u = u[0];
        out.du_ds = (4.0 * fine - coarse) / 3.0;
        out.step = step;
        out.scale = std::abs(out.du_ds) + 0.25 * n * std::abs(out.u);
        if (std::abs(coarse - fine) <= tol * out.scale || out.scale == 0.0) break;
        if (attempt == 3) throw SolverError("dun0_identity: centered differences do not settle");
    }
    out.lhs = out.du_ds + 0.25 * n * out.u;

    ModeSolver solver(g, o);
    RadialSolution U = solver.solve(mode, f.radial(g, mode));
    const auto& x = G.nodes();
    auto [lo, hi] = eta.support();
    std::vector<cd> y(x.size(), 0.0);
    for (std::size_t i = 1; i + 1 < x.size(); ++i) {
        if (x[i] < lo || x[i] > hi) continue;
        cd w = 2.0 * eta.value(x[i]) * U.second_derivative(i) + eta.d1(x[i]) * U.derivative(i);
        y[i] = G.correction().value(i) * w * g.volume_density(x[i]);
    }
    out.rhs = -simpson(x, y) / (2.0 * n);
    out.residual = std::abs(out.lhs - out.rhs) / (std::abs(out.lhs) + std::abs(out.rhs) + out.scale);
    if (out.scale == 0.0 && out.lhs == 0.0 && out.rhs == 0.0) out.residual = 0.0;
    return out;
}

double dun0_identity_residual(const ModelGeometry& g, int n, const SourceSpec& f, const RealBumpSum& eta, int end,
                              const GridOptions& opt)
{
    return dun0_identity(g, n, f, eta, end, opt).residual;
}

double hn_log_sup(const GreenMap& G, double lo, double hi)
{
    const auto& x = G.nodes();
    double best = -INFINITY;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] >= lo && x[i] <= hi) best = std::max(best, G.correction().log_abs(i));
    if (best == -INFINITY) throw DomainError("hn_log_sup: no nodes in the window");
    return best + std::log(G.normalization());
}

StretchEquivalence stretch_equivalence(const ModelGeometry& g, ModeIndex mode, const SourceSpec& f,
                                       const RealBumpSum& eta, double t, int end, const GridOptions& opt)
{
    StretchEquivalence out;
    out.s_tilde = stretched_length(g, eta, t, end);
    std::array<cd, 2> u{};
    parallel_for(2, [&](std::size_t k) {
        if (k == 0) u[0] = extracted_coefficient(g.perturbed(stretch_tensor(g, eta, end), t), mode, f, end, opt);
        else u[1] = extracted_coefficient(g.with_neck_length(end, out.s_tilde), mode, f, end, opt);
    });
    out.stretched = u[0];
    out.lengthened = u[1];
    out.rel = std::abs(u[0] - u[1]) / std::abs(u[1]);
    return out;
}

ModalField ModalField::from_green(const GreenMap& G)
{
    ModalField F;
    F.x = G.nodes();
    Term t;
    t.n = -G.n();
    t.m = 0;
    t.value.resize(F.x.size());
    t.d1.resize(F.x.size());
    for (std::size_t i = 0; i < F.x.size(); ++i) {
        t.value[i] = G.profile(i);
        t.d1[i] = G.profile_d1(i);
    }
    F.terms.push_back(std::move(t));
    return F;
}

ModalField ModalField::from_solutions(const std::vector<RadialSolution>& sols)
{
    ModalField F;
    if (sols.empty()) return F;
    F.x = sols.front().r;
    for (const auto& s : sols) {
        if (s.r.size() != F.x.size() || s.r.front() != F.x.front() || s.r.back() != F.x.back())
            throw PreconditionError("ModalField: solutions must share their nodes");
        Term t;
        t.n = s.mode.n;
        t.m = s.mode.m;
        t.value.resize(F.x.size());
        t.d1.resize(F.x.size());
        for (std::size_t i = 0; i < F.x.size(); ++i) {
            t.value[i] = s.value(i);
            t.d1[i] = s.derivative(i);
        }
        F.terms.push_back(std::move(t));
    }
    return F;
}

ModalField ModalField::constant(std::vector<double> x, double c)
{
    ModalField F;
    Term t;
    t.value.assign(x.size(), c);
    t.d1.assign(x.size(), 0.0);
    F.x = std::move(x);
    F.terms.push_back(std::move(t));
    return F;
}

void ModalField::eval(double xq, double phi, double theta, double out[4]) const
{
    out[0] = out[1] = out[2] = out[3] = 0.0;
    if (x.empty()) return;
    if (xq < x.front() || xq > x.back()) throw DomainError("ModalField: point outside the sampled range");
    std::size_t j = std::upper_bound(x.begin(), x.end(), xq) - x.begin();
    j = std::clamp<std::size_t>(j, 1, x.size() - 1);
    double w = (xq - x[j - 1]) / (x[j] - x[j - 1]);
    for (const auto& t : terms) {
        cd c = (1.0 - w) * t.value[j - 1] + w * t.value[j];
        cd dc = (1.0 - w) * t.d1[j - 1] + w * t.d1[j];
        cd e = std::polar(1.0, t.n * phi + t.m * theta);
        cd ce = c * e;
        out[0] += ce.real();
        out[1] += (dc * e).real();
        out[2] += (cd(0.0, t.n) * ce).real();
        out[3] += (cd(0.0, t.m) * ce).real();
    }
}

VanishingReport vanishing_probe(const ModelGeometry& g, const ModalField& G, const ModalField& v, double lo, double hi,
                                int nx, int nphi, int ntheta)
{
    if (!(hi > lo)) throw DomainError("vanishing_probe: empty window");
    if (nx < 2 || nphi < 1 || ntheta < 1) throw DomainError("vanishing_probe: sample counts too small");
    Bump chi{0.5 * (lo + hi), 0.5 * (hi - lo)};
    VanishingReport rep;
    std::vector<double> xs(nx + 1), ys(nx + 1, 0.0);
    for (int k = 0; k <= nx; ++k) {
        double x = lo + (hi - lo) * k / nx;
        xs[k] = x;
        MetricCoeffs m = g.metric(x);
        double acc = 0.0;
        for (int p = 0; p < nphi; ++p) {
            double phi = 2.0 * kPi * p / nphi;
            for (int q = 0; q < ntheta; ++q) {
                double theta = 2.0 * kPi * q / ntheta;
                double a[4], b[4];
                G.eval(x, phi, theta, a);
                v.eval(x, phi, theta, b);
                double gg = a[1] * a[1] / m.g_rr + a[2] * a[2] / m.g_pp + a[3] * a[3] / m.g_tt;
                double vv = b[1] * b[1] / m.g_rr + b[2] * b[2] / m.g_pp + b[3] * b[3] / m.g_tt;
                double gv = a[1] * b[1] / m.g_rr + a[2] * b[2] / m.g_pp + a[3] * b[3] / m.g_tt;
                // Tr(S^2) - (Tr S)^2 / 4 for S = (dG dv + dv dG)/2 in three dimensions
                double dens = 0.5 * gg * vv + 0.25 * gv * gv;
                acc += dens;
                rep.max_density = std::max(rep.max_density, dens);
                rep.grad_G = std::max(rep.grad_G, std::sqrt(gg));
                rep.grad_v = std::max(rep.grad_v, std::sqrt(vv));
            }
        }
        double c = chi.value(x);
        ys[k] = c * c * g.volume_density(x) * acc * (4.0 * kPi * kPi) / (double(nphi) * ntheta);
    }
    rep.mass = simpson(xs, ys);
    rep.nonvanishing = rep.mass > 0.0;
    return rep;
}

}  // namespace z2neck
