#include "z2neck/radial_ode.hpp"

#include "z2neck/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

namespace z2neck {

void ModeIndex::validate() const
{
    if (n % 2 == 0) {
        std::ostringstream os;
        os << "mode (" << n << "," << m << "): n must be odd";
        throw DomainError(os.str());
    }
}

double ModeIndex::alpha() const
{
    return std::sqrt(double(n) * n / 16.0 + double(m) * m);
}

std::string ModeIndex::label() const
{
    std::ostringstream os;
    os << "(" << n << "," << m << ")";
    return os.str();
}

std::complex<double> ScaledValue::value() const
{
    if (mantissa == 0.0) return 0.0;
    return mantissa * std::exp(log_scale);
}

double ScaledValue::log_abs() const
{
    return std::log(std::abs(mantissa)) + log_scale;
}

ScaledValue ScaledValue::normalized() const
{
    double a = std::abs(mantissa);
    if (a == 0.0 || !std::isfinite(a)) return {mantissa, a == 0.0 ? 0.0 : log_scale};
    return {mantissa / a, log_scale + std::log(a)};
}

std::complex<double> RadialSolution::value(std::size_t i) const
{
    if (mantissa[i] == 0.0) return 0.0;
    return mantissa[i] * std::exp(log_scale[i]);
}

double RadialSolution::log_abs(std::size_t i) const
{
    return std::log(std::abs(mantissa[i])) + log_scale[i];
}

namespace {

std::complex<double> rescaled(const RadialSolution& s, std::size_t j, double ref)
{
    if (s.mantissa[j] == 0.0) return 0.0;
    return s.mantissa[j] * std::exp(s.log_scale[j] - ref);
}

}  // namespace

std::complex<double> RadialSolution::derivative(std::size_t i) const
{
    if (!slope.empty()) return slope[i] * value(i);
    std::size_t n = size();
    if (n < 3) throw DomainError("derivative: need three nodes");
    double ref = log_scale[i];
    std::size_t c = std::clamp<std::size_t>(i, 1, n - 2);
    double h0 = r[c] - r[c - 1], h1 = r[c + 1] - r[c];
    std::complex<double> u0 = rescaled(*this, c - 1, ref), u1 = rescaled(*this, c, ref),
                         u2 = rescaled(*this, c + 1, ref);
    double t = r[i] - r[c];
    // derivative of the quadratic through the three nodes, evaluated at r[i]
    std::complex<double> d01 = (u1 - u0) / h0, d12 = (u2 - u1) / h1;
    std::complex<double> dd = (d12 - d01) / (h0 + h1);
    std::complex<double> d = d01 + dd * (h0 + 2.0 * t);
    return d * std::exp(ref);
}

std::complex<double> RadialSolution::second_derivative(std::size_t i) const
{
    std::size_t n = size();
    if (n < 3) throw DomainError("second_derivative: need three nodes");
    double ref = log_scale[i];
    std::size_t c = std::clamp<std::size_t>(i, 1, n - 2);
    double h0 = r[c] - r[c - 1], h1 = r[c + 1] - r[c];
    std::complex<double> u0 = rescaled(*this, c - 1, ref), u1 = rescaled(*this, c, ref),
                         u2 = rescaled(*this, c + 1, ref);
    std::complex<double> dd = 2.0 * ((u2 - u1) / h1 - (u1 - u0) / h0) / (h0 + h1);
    return dd * std::exp(ref);
}

std::size_t RadialSolution::index_of(double x) const
{
    auto it = std::lower_bound(r.begin(), r.end(), x);
    if (it == r.end()) return r.size() - 1;
    std::size_t j = static_cast<std::size_t>(it - r.begin());
    if (j > 0 && std::abs(r[j - 1] - x) < std::abs(r[j] - x)) return j - 1;
    return j;
}

std::complex<double> RadialSolution::value_at(double x) const
{
    if (x <= r.front()) return value(0);
    if (x >= r.back()) return value(size() - 1);
    auto it = std::upper_bound(r.begin(), r.end(), x);
    std::size_t j = static_cast<std::size_t>(it - r.begin());
    double t = (x - r[j - 1]) / (r[j] - r[j - 1]);
    return (1.0 - t) * value(j - 1) + t * value(j);
}

RadialOperator::RadialOperator(ModelGeometry g, ModeIndex mode, int end)
    : g_(std::move(g)), mode_(mode), end_(end)
{
    mode_.validate();
    if (end < 0 || end >= g_.ends()) throw DomainError("RadialOperator: no such end");
}

double RadialOperator::potential(double r) const
{
    MetricCoeffs c = g_.local_jet(end_, r).value;
    return double(mode_.n) * mode_.n / c.g_pp + double(mode_.m) * mode_.m / c.g_tt;
}

double RadialOperator::density(double r) const
{
    MetricCoeffs c = g_.local_jet(end_, r).value;
    return std::sqrt(c.g_rr * c.g_pp * c.g_tt);
}

double RadialOperator::flux(double r) const
{
    MetricCoeffs c = g_.local_jet(end_, r).value;
    return std::sqrt(c.g_rr * c.g_pp * c.g_tt) / c.g_rr;
}

void RadialOperator::riccati_coeffs(double r, double& aV, double& dlogk) const
{
    MetricJet j = g_.local_jet(end_, r);
    const MetricCoeffs& v = j.value;
    double V = double(mode_.n) * mode_.n / v.g_pp + double(mode_.m) * mode_.m / v.g_tt;
    aV = v.g_rr * V;
    dlogk = g_.orientation(end_) * 0.5 * (j.d1.g_pp / v.g_pp + j.d1.g_tt / v.g_tt - j.d1.g_rr / v.g_rr);
}

namespace {

// Dormand-Prince 5(4) on y = (log I, I'/I)
struct Riccati {
    const RadialOperator& op;
    std::array<double, 2> operator()(double r, const std::array<double, 2>& y) const
    {
        double aV, dlogk;
        op.riccati_coeffs(r, aV, dlogk);
        return {y[1], aV - dlogk * y[1] - y[1] * y[1]};
    }
};

constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

using Y = std::array<double, 2>;

Y axpy(const Y& y, double h, std::initializer_list<std::pair<double, const Y*>> terms)
{
    Y out = y;
    for (auto [c, k] : terms)
        for (int j = 0; j < 2; ++j) out[j] += h * c * (*k)[j];
    return out;
}

void advance(const Riccati& f, double r0, double r1, Y& y, double& h)
{
    constexpr double rtol = 1e-10, atol = 1e-12;
    double r = r0;
    int steps = 0;
    while (r < r1) {
        if (++steps > 1000000) throw SolverError("integrate_Inm: step limit exceeded");
        bool last = r + h >= r1;
        double hs = last ? r1 - r : h;
        Y k1 = f(r, y);
        Y k2 = f(r + c2 * hs, axpy(y, hs, {{a21, &k1}}));
        Y k3 = f(r + c3 * hs, axpy(y, hs, {{a31, &k1}, {a32, &k2}}));
        Y k4 = f(r + c4 * hs, axpy(y, hs, {{a41, &k1}, {a42, &k2}, {a43, &k3}}));
        Y k5 = f(r + c5 * hs, axpy(y, hs, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
        Y k6 = f(r + hs, axpy(y, hs, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));
        Y yn = axpy(y, hs, {{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}});
        Y k7 = f(r + hs, yn);
        double err = 0.0;
        for (int j = 0; j < 2; ++j) {
            double e = hs * (e1 * k1[j] + e3 * k3[j] + e4 * k4[j] + e5 * k5[j] + e6 * k6[j] + e7 * k7[j]);
            // the log component is controlled in absolute terms so the neck stays accurate at large s
            double scale = j == 0 ? atol + rtol : atol + rtol * std::max({1.0, std::abs(y[j]), std::abs(yn[j])});
            err = std::max(err, std::abs(e) / scale);
        }
        if (!std::isfinite(err)) {
            h = 0.1 * hs;
            continue;
        }
        double factor = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
        if (err <= 1.0) {
            r = last ? r1 : r + hs;
            y = yn;
            if (!last) h = hs * factor;
        } else {
            h = hs * factor;
        }
    }
}

}  // namespace

RadialSolution integrate_Inm(const RadialOperator& op, const std::vector<double>& nodes)
{
    if (nodes.size() < 2) throw DomainError("integrate_Inm: need at least two nodes");
    double r0 = nodes.front();
    if (!(r0 > 0.0 && r0 < op.geometry().profile().r_a))
        throw DomainError("integrate_Inm: first node must lie inside the identity zone");
    double r_max = op.geometry().r_total();
    if (nodes.back() > r_max * (1 + 1e-12)) throw DomainError("integrate_Inm: r_end beyond r_total");

    ModeIndex mode = op.mode();
    double nu = std::abs(mode.n) / 2.0;
    double a1 = double(mode.m) * mode.m / (4.0 * (nu + 1.0));
    Y y{nu * std::log(r0) + std::log1p(a1 * r0 * r0), nu / r0 + 2.0 * a1 * r0 / (1.0 + a1 * r0 * r0)};

    RadialSolution sol;
    sol.mode = mode;
    sol.alpha = mode.alpha();
    sol.r = nodes;
    std::size_t n = nodes.size();
    sol.mantissa.assign(n, 1.0);
    sol.log_scale.resize(n);
    sol.slope.resize(n);
    sol.log_scale[0] = y[0];
    sol.slope[0] = y[1];
    Riccati f{op};
    double h = 1e-3 * r0;
    for (std::size_t i = 1; i < n; ++i) {
        if (!(nodes[i] > nodes[i - 1])) throw DomainError("integrate_Inm: nodes must increase");
        advance(f, nodes[i - 1], nodes[i], y, h);
        sol.log_scale[i] = y[0];
        sol.slope[i] = y[1];
    }
    return sol;
}

RadialSolution integrate_Inm(const RadialOperator& op, double r_end, const GridOptions& opt)
{
    const ModelGeometry& g = op.geometry();
    std::vector<double> breaks;
    if (r_end > g.R0()) breaks.push_back(g.R0());
    breaks.push_back(r_end);
    return integrate_Inm(op, edge_nodes(breaks, opt));
}

double closed_form_log_In0(const ModelGeometry& g, int n, double r)
{
    ModeIndex{n, 0}.validate();
    if (r < 0.0) throw DomainError("closed_form_In0: negative radius");
    if (r > g.R0() + g.neck_length(0) * (1 + 1e-12)) throw DomainError("closed_form_In0: r beyond R0 + s");
    if (r == 0.0) return -INFINITY;
    return 0.5 * std::abs(n) * inverse_profile_integral(g.profile(), 1.0, r);
}

double closed_form_In0(const ModelGeometry& g, int n, double r)
{
    if (r == 0.0) return 0.0;
    return std::exp(closed_form_log_In0(g, n, r));
}

NeckCoefficients neck_coefficients(const RadialSolution& I, double R0, double tol)
{
    if (I.slope.empty()) throw PreconditionError("neck_coefficients: expects an integrated I_nm");
    std::size_t k = I.index_of(R0);
    if (std::abs(I.r[k] - R0) > 1e-9) throw PreconditionError("neck_coefficients: R0 is not a grid node");
    NeckCoefficients out;
    out.alpha = I.alpha;
    double w = I.slope[k].real();
    double a = I.alpha;
    out.c_prime = (a - w) / (a + w);
    double lI = I.log_abs(k);
    out.log_c = lI - std::log1p(out.c_prime);
    out.c = std::exp(out.log_c);
    double res = 0.0;
    for (std::size_t i = k; i < I.size(); ++i) {
        double d = I.r[i] - R0;
        double model = out.log_c + a * d + std::log1p(out.c_prime * std::exp(-2.0 * a * d));
        res = std::max(res, std::abs(model - I.log_abs(i)));
    }
    out.residual = res;
    if (!(out.c > 0.0) || !(out.c_prime > -1.0 && out.c_prime <= 1.0)) {
        std::ostringstream os;
        os << "neck_coefficients: constraint violated (c = " << out.c << ", c' = " << out.c_prime << ")";
        throw FitError(os.str());
    }
    if (res > tol) {
        std::ostringstream os;
        os << "neck_coefficients: two-exponential match residual " << res << " above " << tol;
        throw FitError(os.str());
    }
    return out;
}

double ratio_bound(const ModelGeometry& g, int n, int m, double s, const GridOptions& opt)
{
    if (!(s > 0.0)) throw DomainError("ratio_bound: s must be positive");
    ModelGeometry gs = g.with_neck_length(0, s);
    RadialOperator op(gs, {n, m}, 0);
    RadialSolution I = integrate_Inm(op, gs.R0() + s, opt);
    std::size_t k = I.index_of(gs.R0());
    double lr = I.log_abs(k) - I.log_abs(I.size() - 1) + op.alpha() * s;
    return std::exp(lr);
}

}  // namespace z2neck
