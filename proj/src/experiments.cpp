#include "z2neck/experiments.hpp"

#include "z2neck/error.hpp"
#include "z2neck/fd_oracle.hpp"
#include "z2neck/green_maps.hpp"
#include "z2neck/mode_matrix.hpp"
#include "z2neck/mode_solver.hpp"
#include "z2neck/parallel.hpp"
#include "z2neck/rate_fit.hpp"
#include "z2neck/source.hpp"
#include "z2neck/variation.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>

namespace z2neck {

using cd = std::complex<double>;

namespace {

std::string trim(const std::string& s)
{
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double parse_double(const std::string& key, const std::string& text)
{
    double v = 0.0;
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || p != text.data() + text.size() || !std::isfinite(v))
        throw ConfigError("config key '" + key + "': '" + text + "' is not a finite number");
    return v;
}

long long parse_int(const std::string& key, const std::string& text)
{
    long long v = 0;
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || p != text.data() + text.size())
        throw ConfigError("config key '" + key + "': '" + text + "' is not an integer");
    return v;
}

// "a, b, c" or "lo:hi:step"
std::vector<double> parse_grid(const std::string& key, const std::string& text)
{
    if (text.find(':') != std::string::npos) {
        auto parts = split(text, ':');
        if (parts.size() != 3) throw ConfigError("config key '" + key + "': ranges are written lo:hi:step");
        double lo = parse_double(key, parts[0]), hi = parse_double(key, parts[1]), step = parse_double(key, parts[2]);
        if (!(step > 0.0) || hi < lo) throw ConfigError("config key '" + key + "': need lo <= hi and step > 0");
        std::vector<double> out;
        long count = std::lround(std::floor((hi - lo) / step + 1e-9));
        for (long i = 0; i <= count; ++i) out.push_back(lo + step * double(i));
        return out;
    }
    std::vector<double> out;
    for (const auto& item : split(text, ',')) out.push_back(parse_double(key, item));
    return out;
}

std::vector<int> parse_ints(const std::string& key, const std::string& text)
{
    std::vector<int> out;
    for (const auto& item : split(text, ',')) out.push_back(static_cast<int>(parse_int(key, item)));
    return out;
}

// "n:m, n:m"
std::vector<ModeIndex> parse_modes(const std::string& key, const std::string& text)
{
    std::vector<ModeIndex> out;
    for (const auto& item : split(text, ',')) {
        auto nm = split(item, ':');
        if (nm.size() != 2) throw ConfigError("config key '" + key + "': modes are written n:m, got '" + item + "'");
        out.push_back({static_cast<int>(parse_int(key, nm[0])), static_cast<int>(parse_int(key, nm[1]))});
    }
    return out;
}

const std::set<std::string>& own_keys()
{
    static const std::set<std::string> keys{"experiment", "output",      "s_grid",     "identity_s",       "modes",
                                            "n_values",   "p_values",    "source_seed", "basis_seed",      "sigma_seed",
                                            "extra_seed", "m",           "m_max",      "oracle_nr",        "oracle_nphi",
                                            "oracle_doublings", "h",     "h_edge",     "grade",            "r_min"};
    return keys;
}

ModelGeometry geometry_for(const ExperimentConfig& cfg)
{
    return build_geometry(cfg.geometry);
}

ModelGeometry at_length(const ModelGeometry& g, double s)
{
    return g.ends() == 2 ? g.with_neck_lengths(s, s) : g.with_neck_length(0, s);
}

template <class T>
std::string join(const std::vector<T>& v)
{
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        if constexpr (std::is_same_v<T, double>) out += format_number(v[i]);
        else out += std::to_string(v[i]);
    }
    return out;
}

RateFit fit_or_flag(ExperimentResult& r, const std::string& what, const std::vector<double>& s,
                    const std::vector<double>& logs)
{
    RateFit f = fit_log_rate(s, logs);
    if (f.sign_changed) r.warnings.push_back(what + ": values change sign, fitted on magnitudes");
    return f;
}

// the neck bump used by the stretch experiments: unit integral, 3 units into the neck of end 0
RealBumpSum default_bump(const ModelGeometry& g)
{
    return normalized_bump(g.R0() + 3.0, 1.0);
}

// ---------------------------------------------------------------------------------------------------------

ExperimentResult run_decay_scan(const ExperimentConfig& cfg)
{
    ExperimentResult r;
    r.header = {"s", "n", "m", "re_u", "im_u", "abs_u", "bound"};
    ModelGeometry g = geometry_for(cfg);
    int nmax = 1, mmax = 0;
    for (ModeIndex k : cfg.modes) nmax = std::max(nmax, std::abs(k.n)), mmax = std::max(mmax, std::abs(k.m));
    std::vector<int> ns;
    for (int n = 1; n <= nmax; n += 2) ns.push_back(n);
    SourceSpec f = SourceSpec::random(cfg.source_seed, g.interior().length(), ns, mmax);

    const auto& S = cfg.s_grid;
    std::vector<ScaledValue> u(cfg.modes.size() * S.size());
    parallel_for(u.size(), [&](std::size_t job) {
        ModeIndex mode = cfg.modes[job / S.size()];
        ModeIndex stored = mode.n < 0 ? ModeIndex{-mode.n, -mode.m} : mode;
        ModeCoefficients c = compute_mode_coefficients(at_length(g, S[job % S.size()]), f, {stored}, cfg.grid);
        ScaledValue v = c.scaled(stored, 0);
        if (mode.n < 0) v.mantissa = std::conj(v.mantissa);
        u[job] = v;
    });

    for (std::size_t k = 0; k < cfg.modes.size(); ++k) {
        ModeIndex mode = cfg.modes[k];
        double a = mode.alpha();
        std::vector<double> logs;
        // C fitted once at the smallest s; the bound is |u(s0)| exp(-alpha (s - s0))
        double log_c = u[k * S.size()].log_abs() + a * S.front();
        double worst = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < S.size(); ++i) {
            const ScaledValue& v = u[k * S.size() + i];
            cd val = v.value();
            double lb = log_c - a * S[i];
            logs.push_back(v.log_abs());
            worst = std::max(worst, v.log_abs() - lb);
            r.rows.push_back({format_number(S[i]), std::to_string(mode.n), std::to_string(mode.m),
                              format_number(val.real()), format_number(val.imag()), format_number(std::exp(v.log_abs())),
                              format_number(std::exp(lb))});
        }
        RateFit fit = fit_or_flag(r, mode.label(), S, logs);
        std::string tag = "(" + std::to_string(mode.n) + "," + std::to_string(mode.m) + ")";
        r.criteria.push_back(make_criterion("slope" + tag, fit.slope, -a, 0.03, Comparison::rel_within,
                                            "neck decay exponent -sqrt(n^2/16 + m^2) of the mode coefficients"));
        r.criteria.push_back(make_criterion("bound_excess" + tag, std::expm1(worst), 0.0, 1e-8, Comparison::at_most,
                                            "|u_nm| <= C exp(-alpha s) / I_nm(R0) with C fixed at the smallest s",
                                            "relative excess over the bound; the slack covers rounding only"));
        r.info["fit_residual" + tag] = fit.residual;
    }
    return r;
}

ExperimentResult run_ratio_bound(const ExperimentConfig& cfg)
{
    ExperimentResult r;
    r.header = {"s", "n", "m", "ratio"};
    ModelGeometry g = geometry_for(cfg);
    struct Job {
        double s;
        int n, m;
    };
    std::vector<Job> jobs;
    for (double s : cfg.s_grid)
        for (int n : cfg.n_values)
            for (int m = -cfg.m_max; m <= cfg.m_max; ++m) jobs.push_back({s, n, m});
    std::vector<double> ratio(jobs.size());
    parallel_for(jobs.size(), [&](std::size_t k) { ratio[k] = ratio_bound(g, jobs[k].n, jobs[k].m, jobs[k].s, cfg.grid); });
    double worst = 0.0, worst_m0 = 0.0;
    for (std::size_t k = 0; k < jobs.size(); ++k) {
        worst = std::max(worst, ratio[k]);
        if (jobs[k].m == 0) worst_m0 = std::max(worst_m0, std::abs(ratio[k] - 1.0));
        r.rows.push_back({format_number(jobs[k].s), std::to_string(jobs[k].n), std::to_string(jobs[k].m),
                          format_number(ratio[k])});
    }
    r.criteria.push_back(make_criterion("max_ratio", worst, 2.0, 1e-9, Comparison::at_most,
                                        "I_nm(R0) exp(alpha s) / I_nm(R0 + s) <= 2"));
    r.criteria.push_back(make_criterion("m0_deviation", worst_m0, 0.0, 1e-8, Comparison::abs_within,
                                        "pure exponential I_n0 on the neck: the ratio equals 1 for m = 0"));
    return r;
}

ExperimentResult run_vcyl_convergence(const ExperimentConfig& cfg)
{
    ExperimentResult r;
    r.header = {"s", "n", "re_v", "im_v", "re_vcyl", "im_vcyl", "abs_err"};
    ModelGeometry g = geometry_for(cfg);
    int nmax = *std::max_element(cfg.n_values.begin(), cfg.n_values.end());
    std::vector<int> ns;
    for (int n = 1; n <= nmax; n += 2) ns.push_back(n);
    SourceSpec f = SourceSpec::random(cfg.source_seed, g.interior().length(), ns, 0);
    const auto& S = cfg.s_grid;
    std::vector<cd> v(cfg.n_values.size() * S.size()), target(cfg.n_values.size());
    parallel_for(v.size() + target.size(), [&](std::size_t job) {
        if (job >= v.size()) {
            int n = cfg.n_values[job - v.size()];
            target[job - v.size()] = Cn_constant(g, n) * cylinder_responses(g, f, {{n, 0}}, cfg.grid)[0][0];
            return;
        }
        int n = cfg.n_values[job / S.size()];
        double s = S[job % S.size()];
        ModeCoefficients c = compute_mode_coefficients(at_length(g, s), f, {{n, 0}}, cfg.grid);
        ScaledValue u = c.scaled({n, 0}, 0);
        v[job] = ScaledValue{u.mantissa, u.log_scale + 0.25 * n * s}.value();
    });
    for (std::size_t k = 0; k < cfg.n_values.size(); ++k) {
        int n = cfg.n_values[k];
        std::vector<double> logs;
        for (std::size_t i = 0; i < S.size(); ++i) {
            cd val = v[k * S.size() + i];
            double err = std::abs(val - target[k]);
            logs.push_back(err > 0.0 ? std::log(err) : -745.0);
            r.rows.push_back({format_number(S[i]), std::to_string(n), format_number(val.real()), format_number(val.imag()),
                              format_number(target[k].real()), format_number(target[k].imag()), format_number(err)});
        }
        RateFit fit = fit_or_flag(r, "n=" + std::to_string(n), S, logs);
        r.criteria.push_back(make_criterion("rate_n" + std::to_string(n), fit.rate(), 0.25, 0.01, Comparison::at_least,
                                            "v_n0(s) -> C_n v^cyl_n0 with rate exp(-s/4)",
                                            "on this model the difference is s-independent; see README"));
        double maxerr = 0.0;
        for (std::size_t i = 0; i < S.size(); ++i) maxerr = std::max(maxerr, std::abs(v[k * S.size() + i] - target[k]) / std::abs(target[k]));
        r.info["max_rel_gap_n" + std::to_string(n)] = maxerr;
    }
    double c1 = Cn_constant(g, 1), c3 = Cn_constant(g, 3);
    r.criteria.push_back(make_criterion("C3_vs_C1_cubed", std::abs(c3 - c1 * c1 * c1) / std::abs(c3), 0.0, 1e-10,
                                        Comparison::abs_within, "C_n = C_1^n from the closed form of I_n0"));
    r.info["C1"] = c1;
    r.info["C3"] = c3;
    return r;
}

std::vector<std::pair<std::string, TestFunction>> test_functions(const ModelGeometry& g)
{
    // cutoffs stay clear of the chi transition, which ends one unit before the neck/interior junction
    std::vector<std::pair<std::string, TestFunction>> out;
    TestFunction a;
    a.c = 1.0, a.cut_lo = 1.5, a.cut_hi = 2.5;
    out.emplace_back("boundary_cut", a);
    TestFunction b;
    b.c = -0.7, b.cut_lo = 0.3, b.cut_hi = 0.8;
    out.emplace_back("near_edge_cut", b);
    TestFunction c;
    c.c = 2.0, c.cut_lo = g.R0() + 1.0, c.cut_hi = g.R0() + 3.0;
    c.extra.add(Bump{g.R0() + 5.0, 1.0}, 0.5);
    out.emplace_back("neck_cut_with_bump", c);
    TestFunction d;
    d.c = 0.4, d.cut_lo = 3.0, d.cut_hi = g.junction(0) - 2.2;
    out.emplace_back("long_ramp", d);
    TestFunction e;
    e.c = 1.3, e.cut_lo = 1.0, e.cut_hi = 2.0;
    e.extra.add(Bump{g.interior_start() + 3.0, 1.5}, -2.0);
    out.emplace_back("interior_bump", e);
    return out;
}

ExperimentResult run_green_identity(const ExperimentConfig& cfg)
{
    ExperimentResult r;
    r.header = {"n", "test", "re_expected", "im_expected", "re_value", "im_value", "rel_err"};
    ModelGeometry g = geometry_for(cfg);
    auto tests = test_functions(g);
    SourceSpec f = SourceSpec::random(cfg.source_seed, g.interior().length(), cfg.n_values, 0);
    struct Row {
        cd expected, value;
    };
    std::vector<std::vector<Row>> rows(cfg.n_values.size());
    parallel_for(cfg.n_values.size(), [&](std::size_t k) {
        int n = cfg.n_values[k];
        GreenMap G = build_Gn(g, n, {}, 0, cfg.grid);
        for (const auto& [name, t] : tests) rows[k].push_back({t.c, poisson_identity_check(G, t)});
        // the solved coefficient of a seeded interior source against the pairing with its source
        ModeSolver solver(g, cfg.grid);
        RadialSource src = f.radial(g, {n, 0});
        cd u = mode_coefficient(solver, {n, 0}, src, 0).value();
        rows[k].push_back({u, poisson_identity(G, src)});
    });
    for (std::size_t k = 0; k < cfg.n_values.size(); ++k) {
        int n = cfg.n_values[k];
        double worst = 0.0;
        for (std::size_t i = 0; i < rows[k].size(); ++i) {
            const Row& row = rows[k][i];
            double rel = std::abs(row.value - row.expected) / std::abs(row.expected);
            if (i < tests.size()) worst = std::max(worst, rel);
            else r.info["solved_source_rel_err_n" + std::to_string(n)] = rel;
            std::string name = i < tests.size() ? tests[i].first : "solved_source";
            r.rows.push_back({std::to_string(n), name, format_number(row.expected.real()),
                              format_number(row.expected.imag()),
                              format_number(row.value.real()), format_number(row.value.imag()), format_number(rel)});
        }
        r.criteria.push_back(make_criterion("max_rel_err_n" + std::to_string(n), worst, 0.0, 1e-6, Comparison::at_most,
                                            "integral of G_n against the Laplacian of f returns f_n0"));
    }
    return r;
}

ExperimentResult run_hn_decay(const ExperimentConfig& cfg)
{
    ExperimentResult r;
    r.header = {"s", "n", "log_sup_H", "log_sup_H_neck"};
    ModelGeometry g = geometry_for(cfg);
    const auto& S = cfg.s_grid;
    std::vector<double> win(cfg.n_values.size() * S.size()), neck(win.size());
    double lo = g.R0() + 2.0, hi = g.R0() + 4.0;  // support of the default stretch bump
    parallel_for(win.size(), [&](std::size_t job) {
        int n = cfg.n_values[job / S.size()];
        ModelGeometry gs = at_length(g, S[job % S.size()]);
        GreenMap G = build_Gn(gs, n, {}, 0, cfg.grid);
        win[job] = hn_log_sup(G, lo, hi);
        neck[job] = hn_log_sup(G, gs.R0(), G.transition().first);
    });
    for (std::size_t k = 0; k < cfg.n_values.size(); ++k) {
        int n = cfg.n_values[k];
        std::vector<double> logs(win.begin() + k * S.size(), win.begin() + (k + 1) * S.size());
        double bound = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < S.size(); ++i) {
            r.rows.push_back({format_number(S[i]), std::to_string(n), format_number(logs[i]),
                              format_number(neck[k * S.size() + i])});
            bound = std::max(bound, neck[k * S.size() + i]);
        }
        RateFit fit = fit_or_flag(r, "n=" + std::to_string(n), S, logs);
        double target = 0.25 * (n + 1);
        r.criteria.push_back(make_criterion("rate_n" + std::to_string(n), fit.rate(), target, 0.03 * target,
                                            Comparison::at_least,
                                            "H_n = O(exp(-(n+1) s / 4)) on the support of the stretch bump"));
        r.info["max_log_sup_H_neck_n" + std::to_string(n)] = bound;
    }
    return r;
}

ExperimentResult run_stretch_identity(const ExperimentConfig& cfg)
{
    ExperimentResult r;
    r.header = {"s", "n", "residual", "abs_u", "abs_lhs", "abs_rhs", "abs_dv_ds"};
    ModelGeometry g = geometry_for(cfg);
    std::vector<double> S = cfg.s_grid;
    for (double s : cfg.identity_s)
        if (std::find(S.begin(), S.end(), s) == S.end()) S.push_back(s);
    std::sort(S.begin(), S.end());
    int nmax = *std::max_element(cfg.n_values.begin(), cfg.n_values.end());
    std::vector<int> ns;
    for (int n = 1; n <= nmax; n += 2) ns.push_back(n);
    SourceSpec f = SourceSpec::random(cfg.source_seed, g.interior().length(), ns, 0);
    RealBumpSum eta = default_bump(g);
    std::vector<StretchIdentity> id(cfg.n_values.size() * S.size());
    parallel_for(id.size(), [&](std::size_t job) {
        int n = cfg.n_values[job / S.size()];
        id[job] = dun0_identity(at_length(g, S[job % S.size()]), n, f, eta, 0, cfg.grid);
    });
    for (std::size_t k = 0; k < cfg.n_values.size(); ++k) {
        int n = cfg.n_values[k];
        double worst = 0.0;
        std::vector<double> fit_s, logs;
        for (std::size_t i = 0; i < S.size(); ++i) {
            const StretchIdentity& x = id[k * S.size() + i];
            // d/ds of v_n0 = exp(n s / 4) u_n0 is exp(n s / 4) (du/ds + n/4 u)
            double dv = std::abs(x.lhs) * std::exp(0.25 * n * S[i]);
            r.rows.push_back({format_number(S[i]), std::to_string(n), format_number(x.residual),
                              format_number(std::abs(x.u)), format_number(std::abs(x.lhs)), format_number(std::abs(x.rhs)),
                              format_number(dv)});
            if (std::find(cfg.identity_s.begin(), cfg.identity_s.end(), S[i]) != cfg.identity_s.end())
                worst = std::max(worst, x.residual);
            if (std::find(cfg.s_grid.begin(), cfg.s_grid.end(), S[i]) != cfg.s_grid.end()) {
                fit_s.push_back(S[i]);
                logs.push_back(dv > 0.0 ? std::log(dv) : -745.0);
            }
        }
        std::string tag = "_n" + std::to_string(n);
        r.criteria.push_back(make_criterion("residual" + tag, worst, 0.0, 1e-4, Comparison::at_most,
                                            "d u_n0 / ds + n/4 u_n0 = -integral of H_n (2 eta U'' + eta' U')"));
        RateFit fit = fit_or_flag(r, "dv/ds n=" + std::to_string(n), fit_s, logs);
        r.criteria.push_back(make_criterion("dv_ds_rate" + tag, fit.rate(), 0.25, 0.01, Comparison::at_least,
                                            "|d v_n0 / ds| = O(exp(-s/4))",
                                            "d v_n0 / ds vanishes identically on this model; see README"));
    }
    return r;
}

ExperimentResult run_trace_variation(const ExperimentConfig& cfg)
{
    ExperimentResult r;
    r.header = {"n", "tensor", "re_pred", "im_pred", "re_fd", "im_fd", "rel_err", "remainder_order"};
    ModelGeometry g = geometry_for(cfg);
    int nmax = *std::max_element(cfg.n_values.begin(), cfg.n_values.end());
    std::vector<int> ns;
    for (int n = 1; n <= nmax; n += 2) ns.push_back(n);
    SourceSpec f = SourceSpec::random(cfg.source_seed, g.interior().length(), ns, 0);
    double x0 = g.R0();
    std::vector<std::pair<std::string, VariationTensor>> tensors;
    tensors.emplace_back("stretch", stretch_tensor(g, default_bump(g)));
    VariationTensor t2;
    t2.pp.add(Bump{x0 + 4.0, 1.5}, 3.0);
    tensors.emplace_back("phi_bump", t2);
    VariationTensor t3;
    t3.tt.add(Bump{x0 + 2.5, 1.0}, 0.5);
    t3.rr.add(Bump{x0 + 5.0, 1.0}, 0.3);
    t3.pp.add(Bump{x0 + 3.0, 2.0}, -2.0);
    tensors.emplace_back("mixed", t3);

    constexpr double t_rem = 2e-2;
    struct Out {
        cd pred, fd;
        double order = 0.0;
    };
    std::vector<Out> out(cfg.n_values.size() * tensors.size());
    parallel_for(out.size(), [&](std::size_t job) {
        int n = cfg.n_values[job / tensors.size()];
        const VariationTensor& T = tensors[job % tensors.size()].second;
        Out& o = out[job];
        o.pred = predicted_derivative(g, n, f, T, 0, cfg.grid);
        o.fd = perturbation_derivative(g, {n, 0}, f, T, 0, 1e-4, cfg.grid).value;
        // first-order remainder u(t) - u(0) - t u'(0) at t and t/2
        cd u0 = extracted_coefficient(g, {n, 0}, f, 0, cfg.grid);
        cd u1 = extracted_coefficient(g.perturbed(T, t_rem), {n, 0}, f, 0, cfg.grid);
        cd u2 = extracted_coefficient(g.perturbed(T, 0.5 * t_rem), {n, 0}, f, 0, cfg.grid);
        double r1 = std::abs(u1 - u0 - t_rem * o.pred), r2 = std::abs(u2 - u0 - 0.5 * t_rem * o.pred);
        o.order = std::log2(r1 / r2);
    });
    for (std::size_t job = 0; job < out.size(); ++job) {
        int n = cfg.n_values[job / tensors.size()];
        const std::string& name = tensors[job % tensors.size()].first;
        const Out& o = out[job];
        double rel = std::abs(o.pred - o.fd) / std::abs(o.fd);
        r.rows.push_back({std::to_string(n), name, format_number(o.pred.real()), format_number(o.pred.imag()),
                          format_number(o.fd.real()), format_number(o.fd.imag()), format_number(rel),
                          format_number(o.order)});
        std::string tag = "_n" + std::to_string(n) + "_" + name;
        r.criteria.push_back(make_criterion("rel_err" + tag, rel, 0.0, 1e-3, Comparison::at_most,
                                            "d u_n0 / dt = 4 pi^2 integral of T(grad G, grad u) - 1/2 tr T <dG, du>"));
        r.criteria.push_back(make_criterion("remainder_order" + tag, o.order, 2.0, 0.25, Comparison::abs_within,
                                            "u(t) - u(0) - t du/dt = O(t^2)",
                                            "log2 of the remainder ratio under halving t = 0.02"));
    }
    return r;
}

struct MatrixSetup {
    ModelGeometry g;
    std::vector<SourceSpec> sources;
    SourceSpec extra;
    SourceSpec sigma;
};

MatrixSetup matrix_setup(const ExperimentConfig& cfg, int p)
{
    GeometryConfig gc = cfg.geometry;
    gc.p = p;
    MatrixSetup m{build_geometry(gc), {}, {}, {}};
    double L = m.g.interior().length();
    std::vector<int> ns{1, 3, 5};
    for (int k = 0; k < 2 * p; ++k)
        m.sources.push_back(SourceSpec::random(cfg.basis_seed + k, L, ns, cfg.m_max, "basis" + std::to_string(k)));
    m.extra = SourceSpec::random(cfg.extra_seed, L, ns, cfg.m_max, "extra");
    m.sigma = SourceSpec::random(cfg.sigma_seed, L, ns, cfg.m_max, "sigma");
    return m;
}

ExperimentResult run_ab_rates(const ExperimentConfig& cfg)
{
    ExperimentResult r;
    r.header = {"s", "sup_A", "sup_B_minus_Binf"};
    MatrixSetup m = matrix_setup(cfg, cfg.geometry.p);
    GenericBasis gb = generic_basis(m.g, m.sources, 8, cfg.grid);
    ABSeries ab = ab_series(gb.g, m.sigma, gb.basis, cfg.s_grid, cfg.m_max, cfg.grid);
    std::vector<double> la, lb;
    for (std::size_t i = 0; i < ab.s.size(); ++i) {
        r.rows.push_back({format_number(ab.s[i]), format_number(ab.sup_A[i]), format_number(ab.sup_B_minus_Binf[i])});
        la.push_back(ab.sup_A[i] > 0.0 ? std::log(ab.sup_A[i]) : -745.0);
        lb.push_back(ab.sup_B_minus_Binf[i] > 0.0 ? std::log(ab.sup_B_minus_Binf[i]) : -745.0);
    }
    RateFit fa = fit_or_flag(r, "sup A", ab.s, la), fb = fit_or_flag(r, "sup B - B_inf", ab.s, lb);
    double target_a = std::sqrt(17.0) / 4.0 - 0.75;
    r.criteria.push_back(make_criterion("rate_A", fa.rate(), target_a, target_a - 0.27, Comparison::at_least,
                                        "sup |A| = O(exp(-(sqrt(17)/4 - 3/4) s)) after the exp(3s/4) rescaling"));
    r.criteria.push_back(make_criterion("rate_B", fb.rate(), 0.5, 0.02, Comparison::at_least,
                                        "sup |B - B_inf| = O(exp(-s/2)) after the exp(3s/4) rescaling"));
    r.criteria.push_back(make_criterion("abs_B_inf", std::abs(ab.B_inf), 1e-12, 0.0, Comparison::at_least,
                                        "the limit B_inf is nonzero", "nonzero means above 1e-12"));
    r.info["p"] = gb.g.ends();
    r.info["seed"] = double(gb.seed);
    r.info["re_B_inf"] = ab.B_inf.real();
    r.info["im_B_inf"] = ab.B_inf.imag();
    r.info["B_inf_vs_cylinder_rel"] = std::abs(ab.B_inf - ab.B_inf_cyl) / std::abs(ab.B_inf_cyl);
    r.info["s_inf"] = ab.s_inf;
    return r;
}

ExperimentResult run_v_matrix(const ExperimentConfig& cfg)
{
    ExperimentResult r;
    r.header = {"p", "seed", "det", "cond"};
    for (int p : cfg.p_values) {
        MatrixSetup m = matrix_setup(cfg, p);
        GenericBasis gb = generic_basis(m.g, m.sources, 8, cfg.grid);
        r.rows.push_back({std::to_string(p), std::to_string(gb.seed), format_number(gb.V.det()), format_number(gb.V.cond())});
        ResponseMatrix V2 = assemble_V(gb.g, gb.basis.sources, cfg.grid);
        double roundtrip = (V2.M - Eigen::MatrixXd::Identity(V2.M.rows(), V2.M.cols())).cwiseAbs().maxCoeff();
        TildeSolution ts = solve_V_tilde(gb.g, gb.basis.sources, m.extra, 0, cfg.grid);
        double v10 = 0.0;
        for (cd v : ts.v10) v10 = std::max(v10, std::abs(v));
        std::string tag = "_p" + std::to_string(p);
        r.criteria.push_back(make_criterion("cond" + tag, gb.V.cond(), 1e12, 0.0, Comparison::at_most,
                                            "det V != 0 for a generic metric", "regular means cond < 1e12"));
        r.criteria.push_back(make_criterion("roundtrip" + tag, roundtrip, 0.0, 1e-10, Comparison::at_most,
                                            "the normalized basis has identity v^cyl_10 responses"));
        r.criteria.push_back(make_criterion("tilde_v10" + tag, v10, 0.0, 1e-8, Comparison::at_most,
                                            "the extended solve kills v^cyl_10 at every end"));
        r.criteria.push_back(make_criterion("tilde_v30" + tag, ts.v30.real(), 1.0, 1e-8, Comparison::abs_within,
                                            "the extended solve has unit Re v^cyl_30 at the chosen end"));
        r.info["reseeds" + tag] = gb.reseeds;
        r.info["det_row_scaled" + tag] = gb.V.det_row_scaled();
        r.info["tilde_cond" + tag] = ts.cond;
    }
    return r;
}

ExperimentResult run_assumptions(const ExperimentConfig& cfg)
{
    ExperimentResult r;
    r.header = {"p", "s", "norm", "a2_residual", "a3_abs_u30"};
    for (int p : cfg.p_values) {
        MatrixSetup m = matrix_setup(cfg, p);
        GenericBasis gb = generic_basis(m.g, m.sources, 8, cfg.grid);
        OmegaReport rep = construct_omega_s(gb.g, m.sigma, gb.basis, cfg.s_grid, cfg.m_max, cfg.grid);
        double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
        for (const auto& smp : rep.samples) {
            r.rows.push_back({std::to_string(p), format_number(smp.s), format_number(smp.norm),
                              format_number(smp.a2_residual), format_number(std::exp(smp.a3_log))});
            lo = std::min(lo, smp.norm);
            hi = std::max(hi, smp.norm);
        }
        std::string tag = "_p" + std::to_string(p);
        r.criteria.push_back(make_criterion("a1_growth" + tag, hi / lo, 2.0, 0.0, Comparison::at_most,
                                            "A1: the corrected sources stay bounded in s",
                                            "ratio of the largest to the smallest sup-norm over the s-grid"));
        r.criteria.push_back(make_criterion("a2_residual" + tag, rep.a2_max, 0.0, 1e-10, Comparison::at_most,
                                            "A2: u_10 of the corrected source vanishes at every end"));
        r.criteria.push_back(make_criterion("a3_min" + tag, rep.a3_min, OmegaReport::a3_threshold, 0.0,
                                            Comparison::at_least, "A3: exp(3s/4) |u_30| stays away from zero"));
        r.info["sigma_norm" + tag] = rep.sigma_norm;
        r.info["degenerate" + tag] = rep.degenerate ? 1.0 : 0.0;
    }
    return r;
}

ExperimentResult run_oracle_convergence(const ExperimentConfig& cfg)
{
    ExperimentResult r;
    r.header = {"nr", "nphi", "discrepancy", "order"};
    ModelGeometry g = geometry_for(cfg);
    SourceSpec f = SourceSpec::random(cfg.source_seed, g.interior().length(), {1, 3}, std::abs(cfg.m));
    OracleConvergence oc = oracle_convergence(g, f, cfg.m, cfg.oracle_nr, cfg.oracle_nphi, cfg.oracle_doublings, cfg.grid);
    for (std::size_t k = 0; k < oc.nr.size(); ++k) {
        r.rows.push_back({std::to_string(oc.nr[k]), std::to_string(oc.nphi[k]), format_number(oc.discrepancy[k]),
                          k ? format_number(oc.order[k - 1]) : std::string()});
        r.info["seconds_" + std::to_string(oc.nr[k]) + "x" + std::to_string(oc.nphi[k])] = oc.seconds[k];
    }
    for (std::size_t k = 0; k < oc.order.size(); ++k)
        r.criteria.push_back(make_criterion("order_" + std::to_string(k + 1), oc.order[k], 2.0, 0.4, Comparison::abs_within,
                                            "second-order agreement of the 2D finite-difference oracle with the mode solver"));
    return r;
}

using Runner = std::function<ExperimentResult(const ExperimentConfig&)>;

const std::map<std::string, Runner>& runners()
{
    static const std::map<std::string, Runner> table{
        {"decay_scan", run_decay_scan},
        {"ratio_bound", run_ratio_bound},
        {"vcyl_convergence", run_vcyl_convergence},
        {"green_identity", run_green_identity},
        {"hn_decay", run_hn_decay},
        {"stretch_identity", run_stretch_identity},
        {"trace_variation", run_trace_variation},
        {"ab_rates", run_ab_rates},
        {"v_matrix", run_v_matrix},
        {"assumptions", run_assumptions},
        {"oracle_convergence", run_oracle_convergence},
    };
    return table;
}

bool needs_fit(const std::string& name)
{
    return name == "decay_scan" || name == "vcyl_convergence" || name == "hn_decay" || name == "stretch_identity" ||
           name == "ab_rates";
}

}  // namespace

// ---------------------------------------------------------------------------------------------------------

const std::vector<ExperimentInfo>& experiment_list()
{
    static const std::vector<ExperimentInfo> list{
        {"decay_scan", "fitted decay slope of log|u_nm(s)| against -sqrt(n^2/16 + m^2), and the fixed-C bound"},
        {"ratio_bound", "I_nm(R0) exp(alpha s) / I_nm(R0 + s) over n, |m| <= m_max and the s-grid"},
        {"vcyl_convergence", "|v_n0(s) - C_n v^cyl_n0| against s, and C_3 = C_1^3"},
        {"green_identity", "Poisson identity of G_n on manufactured test functions"},
        {"hn_decay", "decay of sup |H_n| on the stretch-bump support"},
        {"stretch_identity", "neck-length derivative of u_n0 against the H_n integral"},
        {"trace_variation", "trace formula against finite differences of perturbed solves"},
        {"ab_rates", "decay of sup|A| and sup|B - B_inf| for the rescaled corrected class"},
        {"v_matrix", "response matrix, normalized basis and the extended solve for p = 1, 2"},
        {"assumptions", "A1-A3 of the corrected sources across the s-grid"},
        {"oracle_convergence", "mode solver against the 2D finite-difference oracle under refinement"},
    };
    return list;
}

const char* to_string(Comparison c)
{
    switch (c) {
    case Comparison::at_least: return "at_least";
    case Comparison::at_most: return "at_most";
    case Comparison::abs_within: return "abs_within";
    case Comparison::rel_within: return "rel_within";
    }
    return "?";
}

Criterion make_criterion(std::string name, double value, double target, double tolerance, Comparison cmp,
                         std::string citation, std::string note)
{
    Criterion c{std::move(name), value, target, tolerance, cmp, std::move(citation), std::move(note), false};
    if (std::isfinite(value)) {
        switch (cmp) {
        case Comparison::at_least: c.pass = value >= target - tolerance; break;
        case Comparison::at_most: c.pass = value <= target + tolerance; break;
        case Comparison::abs_within: c.pass = std::abs(value - target) <= tolerance; break;
        case Comparison::rel_within: c.pass = std::abs(value - target) <= tolerance * std::abs(target); break;
        }
    }
    return c;
}

bool ExperimentResult::passed() const
{
    return std::all_of(criteria.begin(), criteria.end(), [](const Criterion& c) { return c.pass; });
}

const Criterion& ExperimentResult::criterion(const std::string& n) const
{
    for (const auto& c : criteria)
        if (c.name == n) return c;
    throw DomainError("experiment " + name + " has no criterion '" + n + "'");
}

std::map<std::string, std::string> read_key_values(std::istream& in, const std::string& origin)
{
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value', got '" + line + "'");
        std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(origin + ":" + std::to_string(lineno) + ": missing key");
        kv[key] = value;
    }
    return kv;
}

ExperimentConfig default_config(const std::string& experiment)
{
    if (!runners().count(experiment)) {
        std::string names;
        for (const auto& e : experiment_list()) names += " " + e.name;
        throw ConfigError("unknown experiment '" + experiment + "'; known:" + names);
    }
    ExperimentConfig c;
    c.experiment = experiment;
    c.s_grid = {10, 15, 20, 25, 30, 35, 40};
    c.n_values = {1, 3};
    c.p_values = {1, 2};
    c.output = "results/" + experiment;
    if (experiment == "decay_scan") c.modes = {{1, 0}, {3, 0}, {1, 1}};
    if (experiment == "ratio_bound") {
        c.n_values = {1, 3, 5};
        c.s_grid = {5, 10, 20, 40};
    }
    if (experiment == "stretch_identity") c.identity_s = {12, 20};
    if (experiment == "green_identity" || experiment == "trace_variation") c.geometry.s = {12, 12};
    if (experiment == "oracle_convergence") c.geometry.s = {2, 2};
    return c;
}

ExperimentConfig make_config(const std::map<std::string, std::string>& kv)
{
    auto it = kv.find("experiment");
    if (it == kv.end()) throw ConfigError("config: missing key 'experiment'");
    ExperimentConfig c = default_config(it->second);
    for (const auto& [key, value] : kv)
        if (!own_keys().count(key) && !GeometryConfig::is_geometry_key(key))
            throw ConfigError("config: unknown key '" + key + "'");

    std::map<std::string, std::string> geo;
    for (const auto& [key, value] : kv)
        if (GeometryConfig::is_geometry_key(key)) geo[key] = value;
    if (!geo.empty()) {
        // keys absent from the file keep the experiment's defaults
        GeometryConfig base = c.geometry;
        GeometryConfig parsed = GeometryConfig::from_map(geo);
        auto has = [&](const char* k) { return geo.count(k) > 0; };
        if (has("r_a")) base.r_a = parsed.r_a;
        if (has("R0")) base.R0 = parsed.R0;
        if (has("margin")) base.margin = parsed.margin;
        if (has("s")) base.s = parsed.s;
        if (has("s1")) base.s[0] = parsed.s[0];
        if (has("s2")) base.s[1] = parsed.s[1];
        if (has("p")) base.p = parsed.p;
        if (has("seed")) base.seed = parsed.seed;
        if (has("interior_length")) base.interior_length = parsed.interior_length;
        if (has("amp_phi")) base.amp_phi = parsed.amp_phi;
        if (has("amp_theta")) base.amp_theta = parsed.amp_theta;
        c.geometry = base;
    }
    auto get = [&](const char* key) -> const std::string* {
        auto f = kv.find(key);
        return f == kv.end() ? nullptr : &f->second;
    };
    auto seed = [&](const char* key, std::uint64_t& out) {
        if (auto v = get(key)) {
            long long x = parse_int(key, *v);
            if (x < 0) throw ConfigError(std::string("config key '") + key + "': must be nonnegative");
            out = static_cast<std::uint64_t>(x);
        }
    };
    if (auto v = get("output")) c.output = *v;
    if (auto v = get("s_grid")) c.s_grid = parse_grid("s_grid", *v);
    if (auto v = get("identity_s")) c.identity_s = parse_grid("identity_s", *v);
    if (auto v = get("modes")) c.modes = parse_modes("modes", *v);
    if (auto v = get("n_values")) c.n_values = parse_ints("n_values", *v);
    if (auto v = get("p_values")) c.p_values = parse_ints("p_values", *v);
    seed("source_seed", c.source_seed);
    seed("basis_seed", c.basis_seed);
    seed("sigma_seed", c.sigma_seed);
    seed("extra_seed", c.extra_seed);
    if (auto v = get("m")) c.m = static_cast<int>(parse_int("m", *v));
    if (auto v = get("m_max")) c.m_max = static_cast<int>(parse_int("m_max", *v));
    if (auto v = get("oracle_nr")) c.oracle_nr = static_cast<int>(parse_int("oracle_nr", *v));
    if (auto v = get("oracle_nphi")) c.oracle_nphi = static_cast<int>(parse_int("oracle_nphi", *v));
    if (auto v = get("oracle_doublings")) c.oracle_doublings = static_cast<int>(parse_int("oracle_doublings", *v));
    if (auto v = get("h")) c.grid.h = parse_double("h", *v);
    if (auto v = get("h_edge")) c.grid.h_edge = parse_double("h_edge", *v);
    if (auto v = get("grade")) c.grid.grade = parse_double("grade", *v);
    if (auto v = get("r_min")) c.grid.r_min = parse_double("r_min", *v);
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    return make_config(read_key_values(in, path));
}

void ExperimentConfig::validate() const
{
    if (!runners().count(experiment)) default_config(experiment);  // throws the listing error
    if (s_grid.empty()) throw ConfigError("config key 's_grid': empty");
    for (std::size_t i = 0; i < s_grid.size(); ++i) {
        if (!(s_grid[i] > 0.0)) throw ConfigError("config key 's_grid': neck lengths must be positive");
        if (i && !(s_grid[i] > s_grid[i - 1])) throw ConfigError("config key 's_grid': must be strictly increasing");
    }
    if (needs_fit(experiment) && s_grid.size() < 5)
        throw ConfigError("config key 's_grid': rate fits need at least 5 neck lengths, got " +
                          std::to_string(s_grid.size()));
    for (double s : identity_s)
        if (!(s > 0.0)) throw ConfigError("config key 'identity_s': neck lengths must be positive");
    for (ModeIndex k : modes) {
        if (k.n % 2 == 0) throw ConfigError("config key 'modes': n must be odd, got " + k.label());
    }
    if (experiment == "decay_scan" && modes.empty()) throw ConfigError("config key 'modes': empty");
    for (int n : n_values)
        if (n <= 0 || n % 2 == 0) throw ConfigError("config key 'n_values': entries must be odd and positive");
    if (n_values.empty()) throw ConfigError("config key 'n_values': empty");
    for (int p : p_values)
        if (p != 1 && p != 2) throw ConfigError("config key 'p_values': entries must be 1 or 2");
    if (m_max < 0) throw ConfigError("config key 'm_max': must be nonnegative");
    if (oracle_nr < 4 || oracle_nphi < 2 || oracle_doublings < 1)
        throw ConfigError("oracle grid: need oracle_nr >= 4, oracle_nphi >= 2 and oracle_doublings >= 1");
    if (static_cast<long long>(oracle_nr << oracle_doublings) * (oracle_nphi << oracle_doublings) > (1LL << 22))
        throw ConfigError("oracle grid: the finest level exceeds 4M cells");
    if (!(grid.h > 0.0 && grid.h_edge >= 0.0 && grid.grade > 0.0 && grid.r_min > 0.0))
        throw ConfigError("grid keys: h, grade and r_min must be positive, h_edge nonnegative");
    try {
        build_geometry(geometry);
    } catch (const DomainError& e) {
        throw ConfigError(std::string("geometry: ") + e.what());
    }
    if (output.empty()) throw ConfigError("config key 'output': empty");
}

ExperimentResult run_experiment(const ExperimentConfig& cfg)
{
    cfg.validate();
    ExperimentResult r = runners().at(cfg.experiment)(cfg);
    r.name = cfg.experiment;
    return r;
}

std::string format_number(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

std::string csv_text(const ExperimentResult& r)
{
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            out += cells[i];
        }
        out += '\n';
    };
    line(r.header);
    for (const auto& row : r.rows) line(row);
    return out;
}

std::string summary_json(const ExperimentResult& r, const ExperimentConfig& cfg)
{
    using nlohmann::json;
    auto num = [](double v) -> json { return std::isfinite(v) ? json(v) : json(format_number(v)); };
    json j;
    j["experiment"] = r.name;
    j["passed"] = r.passed();
    json c;
    c["s_grid"] = cfg.s_grid;
    c["n_values"] = cfg.n_values;
    c["p"] = cfg.geometry.p;
    c["s"] = cfg.geometry.s;
    c["geometry_seed"] = cfg.geometry.seed;
    c["source_seed"] = cfg.source_seed;
    c["h"] = cfg.grid.h;
    c["h_edge"] = cfg.grid.h_edge;
    j["config"] = c;
    j["criteria"] = json::array();
    for (const auto& k : r.criteria) {
        j["criteria"].push_back({{"name", k.name},
                                 {"value", num(k.value)},
                                 {"target", num(k.target)},
                                 {"tolerance", num(k.tolerance)},
                                 {"comparison", to_string(k.comparison)},
                                 {"pass", k.pass},
                                 {"citation", k.citation},
                                 {"note", k.note}});
    }
    json info = json::object();
    for (const auto& [k, v] : r.info) info[k] = num(v);
    j["info"] = info;
    j["warnings"] = r.warnings;
    return j.dump(2) + "\n";
}

void write_result(const ExperimentResult& r, const ExperimentConfig& cfg)
{
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(cfg.output, ec);
    if (ec) throw ConfigError("cannot create output directory '" + cfg.output + "': " + ec.message());
    auto put = [&](const std::string& file, const std::string& text) {
        fs::path path = fs::path(cfg.output) / file;
        std::ofstream out(path, std::ios::binary);
        if (!out) throw ConfigError("cannot write '" + path.string() + "'");
        out << text;
        if (!out) throw ConfigError("write failed for '" + path.string() + "'");
    };
    put(r.name + ".csv", csv_text(r));
    put(r.name + ".json", summary_json(r, cfg));
}

}  // namespace z2neck
