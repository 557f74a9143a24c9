#include "z2neck/green_maps.hpp"

#include "z2neck/error.hpp"
#include "z2neck/quadrature.hpp"

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

double log_rho_d1(const ModelGeometry& g, double x)
{
    MetricJet j = g.jet(x);
    return 0.5 * (j.d1.g_rr / j.value.g_rr + j.d1.g_pp / j.value.g_pp + j.d1.g_tt / j.value.g_tt);
}

}  // namespace

double GreenMap::normalization() const
{
    return 1.0 / (8.0 * n_ * kPi * kPi);
}

double GreenMap::chi(double x) const
{
    double t = (x - t_lo_) / (t_hi_ - t_lo_);
    return end_ == 0 ? 1.0 - smooth::step(t) : smooth::step(t);
}

double GreenMap::chi_d1(double x) const
{
    double w = t_hi_ - t_lo_;
    double d = smooth::step_d1((x - t_lo_) / w) / w;
    return end_ == 0 ? -d : d;
}

double GreenMap::chi_d2(double x) const
{
    double w = t_hi_ - t_lo_;
    double d = smooth::step_d2((x - t_lo_) / w) / (w * w);
    return end_ == 0 ? -d : d;
}

double GreenMap::singular(std::size_t i) const
{
    double c = chi(h_.r[i]);
    if (c == 0.0) return 0.0;
    return c * std::exp(logJ_[i]);
}

cd GreenMap::profile(std::size_t i) const
{
    return (singular(i) + h_.value(i)) * normalization();
}

cd GreenMap::profile_d1(std::size_t i) const
{
    double x = h_.r[i];
    double c = chi(x), dc = chi_d1(x);
    double sing = 0.0;
    if (c != 0.0 || dc != 0.0) sing = std::exp(logJ_[i]) * (dc + c * dlogJ_[i]);
    return (sing + h_.derivative(i)) * normalization();
}

GreenMap make_green(ModelGeometry host, int n, ChiParams chi, int end, bool cyl, std::vector<double> nodes,
                    BoundaryCondition left, BoundaryCondition right)
{
    ModeIndex mode{n, 0};
    mode.validate();
    if (n <= 0) throw DomainError("Green map: n must be positive");
    if (!(chi.width > 0.0 && chi.gap >= 0.0)) throw PreconditionError("Green map: cutoff width must be positive");
    GreenMap G;
    G.n_ = n;
    G.end_ = end;
    G.cylinder_ = cyl;
    G.chi_ = chi;
    if (end == 0) {
        G.t_hi_ = host.junction(0) - chi.gap;
        G.t_lo_ = G.t_hi_ - chi.width;
        if (G.t_lo_ < host.neck_start(0))
            throw PreconditionError("Green map: cutoff transition overlaps the boundary region");
    } else {
        G.t_lo_ = host.junction(1) + chi.gap;
        G.t_hi_ = G.t_lo_ + chi.width;
        if (G.t_hi_ > host.neck_start(1))
            throw PreconditionError("Green map: cutoff transition overlaps the boundary region");
    }
    std::size_t N = nodes.size();
    G.logJ_.assign(N, -INFINITY);
    G.dlogJ_.assign(N, 0.0);
    double orient = host.orientation(end);
    if (cyl) {
        for (std::size_t i = 0; i < N; ++i) {
            double rp = orient * (nodes[i] - host.junction(end));
            G.logJ_[i] = -0.25 * n * rp;
            G.dlogJ_[i] = -0.25 * n * orient;
        }
    } else {
        // -log I_n0 = -(n/2) int_1^r 1/r~, accumulated cell by cell from the edge
        const NeckProfile& p = host.profile();
        double F = 0.0, prev = 0.0;
        bool started = false;
        for (std::size_t k = 0; k < N; ++k) {
            std::size_t i = end == 0 ? k : N - 1 - k;
            double r = host.local_radius(end, nodes[i]);
            if (r > host.R0() + host.neck_length(end) + 1e-9) break;
            if (!started) {
                F = inverse_profile_integral(p, 1.0, r);
                started = true;
            } else {
                F += inverse_profile_integral(p, prev, r, 1);
            }
            prev = r;
            G.logJ_[i] = -0.5 * n * F;
            G.dlogJ_[i] = -0.5 * n / profile_eval(p, r).value * orient;
        }
    }
    std::vector<cd> f(N, 0.0);
    for (std::size_t i = 0; i < N; ++i) {
        double x = nodes[i];
        if (x <= G.t_lo_ || x >= G.t_hi_) continue;
        double J = std::exp(G.logJ_[i]);
        double c1 = G.chi_d1(x), c2 = G.chi_d2(x);
        f[i] = J * (c2 + 2.0 * c1 * G.dlogJ_[i] + log_rho_d1(host, x) * c1);
    }
    auto disc = std::make_shared<RadialDiscretization>(nodes, [&host](double x) { return host.metric(x); });
    G.h_ = disc->solve(mode, f, left, right);
    G.disc_ = disc;
    G.host_ = std::move(host);
    return G;
}

GreenMap build_Gn(const ModelGeometry& g, int n, ChiParams chi, int end, const GridOptions& opt)
{
    if (end < 0 || end >= g.ends()) throw DomainError("build_Gn: no such end");
    std::vector<double> nodes = build_grid(g, opt);
    BoundaryCondition left = BoundaryCondition::edge_regular(0.0);
    BoundaryCondition right = g.ends() == 2 ? BoundaryCondition::edge_regular(g.r_total()) : BoundaryCondition::neumann();
    return make_green(g, n, chi, end, false, std::move(nodes), left, right);
}

GreenMap build_Gn_cyl(const ModelGeometry& g, int n, ChiParams chi, int end, const GridOptions& opt,
                      double cylinder_length)
{
    if (end < 0 || end >= g.ends()) throw DomainError("build_Gn_cyl: no such end");
    ModelGeometry host = g.with_neck_length(end, cylinder_length);
    double a = end == 0 ? host.neck_start(0) : host.junction(0);
    std::vector<double> nodes;
    if (end == 0) nodes = uniform_nodes(a, host.junction(0), cells_for(cylinder_length, opt.h));
    else nodes = {a};
    std::vector<double> mid = uniform_nodes(host.interior_start(), host.interior_end(),
                                            cells_for(host.interior().length(), opt.h));
    nodes.insert(nodes.end(), mid.begin() + 1, mid.end());
    if (end == 1) {
        std::vector<double> tail = uniform_nodes(host.junction(1), host.neck_start(1), cells_for(cylinder_length, opt.h));
        nodes.insert(nodes.end(), tail.begin() + 1, tail.end());
    }
    BoundaryCondition right = host.ends() == 2 ? BoundaryCondition::transparent() : BoundaryCondition::neumann();
    return make_green(std::move(host), n, chi, end, true, std::move(nodes), BoundaryCondition::transparent(), right);
}

double TestFunction::laplacian(const ModelGeometry& g, int n, double x) const
{
    double L = 0.0;
    double r = g.local_radius(end, x);
    if (r > cut_lo && r < cut_hi) {
        double w = cut_hi - cut_lo;
        double t = (r - cut_lo) / w;
        double c1 = -smooth::step_d1(t) / w, c2 = -smooth::step_d2(t) / (w * w);
        ProfileValue pv = profile_eval(g.profile(), r);
        double I = closed_form_In0(g, n, r);
        L += c * I * (c2 + c1 * (n + pv.d1) / pv.value);
    }
    if (!extra.empty()) {
        MetricCoeffs m = g.metric(x);
        double V = double(n) * n / m.g_pp;
        L += extra.d2(x) + log_rho_d1(g, x) * extra.d1(x) - V * extra.value(x);
    }
    return -L;
}

cd poisson_identity(const GreenMap& G, const std::function<cd(double)>& lap)
{
    const auto& x = G.nodes();
    std::vector<cd> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        cd l = lap(x[i]);
        y[i] = l == 0.0 ? cd(0.0) : G.profile(i) * l * G.host().volume_density(x[i]);
    }
    return 4.0 * kPi * kPi * simpson(x, y);
}

cd poisson_identity_check(const GreenMap& G, const TestFunction& f)
{
    if (f.end != G.end()) throw PreconditionError("poisson_identity_check: test function belongs to another end");
    if (f.cut_hi > G.host().R0() + G.host().neck_length(f.end))
        throw PreconditionError("poisson_identity_check: cut must end inside the neck");
    return poisson_identity(G, [&](double x) { return cd(f.laplacian(G.host(), G.n(), x)); });
}

double harmonicity_residual(const GreenMap& G, double lo, double hi)
{
    const auto& x = G.nodes();
    std::vector<cd> u(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) u[i] = G.singular(i) + G.correction().value(i);
    std::vector<cd> Lu = G.disc_->apply({G.n(), 0}, u);
    double forcing = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] <= G.t_lo_ || x[i] >= G.t_hi_) continue;
        double J = std::exp(G.logJ_[i]);
        double c1 = G.chi_d1(x[i]), c2 = G.chi_d2(x[i]);
        forcing = std::max(forcing, std::abs(J * (c2 + 2.0 * c1 * G.dlogJ_[i])));
    }
    if (forcing == 0.0) forcing = 1.0;
    double res = 0.0;
    for (std::size_t i = 1; i + 1 < x.size(); ++i) {
        if (x[i] < lo || x[i] > hi) continue;
        if (x[i] >= G.t_lo_ - 1e-12 && x[i] <= G.t_hi_ + 1e-12) continue;
        res = std::max(res, std::abs(Lu[i]));
    }
    return res / forcing;
}

double Cn_constant(const ModelGeometry& g, int n)
{
    ModeIndex{n, 0}.validate();
    return std::exp(-0.5 * std::abs(n) * inverse_profile_integral(g.profile(), 1.0, g.R0()));
}

}  // namespace z2neck
