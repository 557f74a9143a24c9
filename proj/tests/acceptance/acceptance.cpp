// one pass/fail line per primary acceptance criterion; an optional argument selects a single criterion
#include "z2neck/experiments.hpp"
#include "z2neck/radial_ode.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

using namespace z2neck;

namespace {

// pinned tolerances
constexpr double bessel_rel = 1e-6;
constexpr double ratio_max = 2.0 + 1e-9;
constexpr double ratio_m0 = 1e-8;
constexpr double slope_rel = 0.03;
constexpr double cyl_rate_min = 0.24;
constexpr double c3_rel = 1e-10;
constexpr double green_rel = 1e-6;
constexpr double hn_factor = 0.97;
constexpr double stretch_residual = 1e-4;
constexpr double dv_rate_min = 0.24;
constexpr double trace_rel = 1e-3;
constexpr double remainder_order_tol = 0.25;
constexpr double rate_a_min = 0.27;
constexpr double rate_b_min = 0.48;
constexpr double binf_min = 1e-12;
constexpr double cond_max = 1e12;
constexpr double roundtrip_max = 1e-10;
constexpr double v10_max = 1e-8;
constexpr double v30_tol = 1e-8;
constexpr double a1_growth_max = 2.0;
constexpr double a2_max = 1e-10;
constexpr double a3_min = 1e-6;
constexpr double order_tol = 0.4;

struct Verdict {
    bool pass = true;
    std::string detail;

    void check(bool ok, const std::string& what)
    {
        pass = pass && ok;
        if (!detail.empty()) detail += "; ";
        detail += (ok ? "" : "FAILED ") + what;
    }
};

std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

double value(const ExperimentResult& r, const std::string& name) { return r.criterion(name).value; }

ExperimentResult run(const std::string& name, const std::function<void(ExperimentConfig&)>& edit = {})
{
    ExperimentConfig cfg = default_config(name);
    if (edit) edit(cfg);
    return run_experiment(cfg);
}

Verdict bessel_oracle()
{
    Verdict v;
    GeometryConfig gc;
    gc.r_a = 1.0;
    ModelGeometry g = build_geometry(gc);
    // the integrator is adaptive between the requested nodes
    const std::vector<double> nodes{1e-6, 0.05, 0.25, 0.5, 0.75, 1.0};
    for (auto [n, m] : std::vector<std::pair<int, int>>{{1, 1}, {3, 1}, {1, 2}}) {
        RadialSolution I = integrate_Inm(RadialOperator(g, {n, m}), nodes);
        double nu = 0.5 * n, worst = 0.0;
        for (std::size_t i = 1; i < nodes.size(); ++i) {
            // normalized so that I ~ r^nu at the edge
            double exact = std::tgamma(nu + 1.0) * std::pow(2.0 / m, nu) * std::cyl_bessel_i(nu, m * nodes[i]);
            worst = std::max(worst, std::abs(I.value(i).real() - exact) / exact);
        }
        v.check(worst < bessel_rel, "(" + std::to_string(n) + "," + std::to_string(m) + ") rel " + num(worst));
    }
    double x = integrate_Inm(RadialOperator(g, {1, 1}), nodes).value(3).real();
    v.check(std::abs(x / (std::sinh(0.5) / std::sqrt(0.5)) - 1.0) < bessel_rel, "I_11(0.5) = " + num(x));
    return v;
}

Verdict ratio()
{
    Verdict v;
    ExperimentResult r = run("ratio_bound");
    v.check(value(r, "max_ratio") <= ratio_max, "max ratio " + num(value(r, "max_ratio")));
    v.check(value(r, "m0_deviation") <= ratio_m0, "m=0 deviation " + num(value(r, "m0_deviation")));
    return v;
}

Verdict decay()
{
    Verdict v;
    ExperimentResult r = run("decay_scan");
    for (auto [tag, a] : std::vector<std::pair<std::string, double>>{
             {"(1,0)", 0.25}, {"(3,0)", 0.75}, {"(1,1)", std::sqrt(1.0 / 16.0 + 1.0)}}) {
        double s = value(r, "slope" + tag);
        v.check(std::abs(s + a) <= slope_rel * a, tag + " slope " + num(s));
    }
    return v;
}

Verdict cylinder()
{
    Verdict v;
    ExperimentResult r = run("vcyl_convergence");
    for (int n : {1, 3}) {
        double rate = value(r, "rate_n" + std::to_string(n));
        v.check(rate >= cyl_rate_min, "n=" + std::to_string(n) + " rate " + num(rate));
    }
    v.check(value(r, "C3_vs_C1_cubed") <= c3_rel, "C3/C1^3 rel " + num(value(r, "C3_vs_C1_cubed")));
    return v;
}

Verdict green()
{
    Verdict v;
    ExperimentResult r = run("green_identity");
    std::size_t tests = 0;
    for (const auto& row : r.rows) tests += row[1] != "solved_source";
    v.check(tests >= 10, std::to_string(tests / 2) + " test functions per n");
    for (int n : {1, 3}) {
        double e = value(r, "max_rel_err_n" + std::to_string(n));
        v.check(e < green_rel, "n=" + std::to_string(n) + " identity rel " + num(e));
    }
    ExperimentResult h = run("hn_decay");
    for (int n : {1, 3}) {
        double rate = value(h, "rate_n" + std::to_string(n));
        v.check(rate >= hn_factor * 0.25 * (n + 1), "H_" + std::to_string(n) + " rate " + num(rate));
    }
    return v;
}

Verdict stretch()
{
    Verdict v;
    ExperimentResult r = run("stretch_identity");
    for (int n : {1, 3}) {
        std::string t = "_n" + std::to_string(n);
        v.check(value(r, "residual" + t) < stretch_residual, "n=" + std::to_string(n) + " residual " + num(value(r, "residual" + t)));
        v.check(value(r, "dv_ds_rate" + t) >= dv_rate_min, "n=" + std::to_string(n) + " dv/ds rate " + num(value(r, "dv_ds_rate" + t)));
    }
    return v;
}

Verdict trace()
{
    Verdict v;
    ExperimentResult r = run("trace_variation");
    double worst = 0.0, order_dev = 0.0;
    int tensors = 0;
    for (const auto& c : r.criteria) {
        if (c.name.rfind("rel_err", 0) == 0) worst = std::max(worst, c.value), ++tensors;
        if (c.name.rfind("remainder_order", 0) == 0) order_dev = std::max(order_dev, std::abs(c.value - 2.0));
    }
    v.check(tensors >= 6, std::to_string(tensors / 2) + " tensors per n");
    v.check(worst < trace_rel, "max rel err " + num(worst));
    v.check(order_dev <= remainder_order_tol, "remainder order within " + num(order_dev) + " of 2");
    return v;
}

Verdict ab()
{
    Verdict v;
    for (int p : {1, 2}) {
        ExperimentResult r = run("ab_rates", [p](ExperimentConfig& c) { c.geometry.p = p; });
        std::string t = "p=" + std::to_string(p) + " ";
        v.check(value(r, "rate_A") >= rate_a_min, t + "rate A " + num(value(r, "rate_A")));
        v.check(value(r, "rate_B") >= rate_b_min, t + "rate B " + num(value(r, "rate_B")));
        v.check(value(r, "abs_B_inf") > binf_min, t + "|B_inf| " + num(value(r, "abs_B_inf")));
    }
    return v;
}

Verdict vmatrix()
{
    Verdict v;
    ExperimentResult r = run("v_matrix");
    ExperimentResult a = run("assumptions");
    for (int p : {1, 2}) {
        std::string t = "_p" + std::to_string(p), l = "p=" + std::to_string(p) + " ";
        v.check(value(r, "cond" + t) < cond_max, l + "cond " + num(value(r, "cond" + t)));
        v.check(value(r, "roundtrip" + t) < roundtrip_max, l + "round-trip " + num(value(r, "roundtrip" + t)));
        v.check(value(r, "tilde_v10" + t) < v10_max, l + "v10 " + num(value(r, "tilde_v10" + t)));
        v.check(std::abs(value(r, "tilde_v30" + t) - 1.0) < v30_tol, l + "v30 " + num(value(r, "tilde_v30" + t)));
        v.check(value(a, "a1_growth" + t) <= a1_growth_max, l + "A1 growth " + num(value(a, "a1_growth" + t)));
        v.check(value(a, "a2_residual" + t) < a2_max, l + "A2 " + num(value(a, "a2_residual" + t)));
        v.check(value(a, "a3_min" + t) > a3_min, l + "A3 " + num(value(a, "a3_min" + t)));
    }
    return v;
}

Verdict oracle()
{
    Verdict v;
    ExperimentResult r = run("oracle_convergence");
    for (const char* k : {"order_1", "order_2"})
        v.check(std::abs(value(r, k) - 2.0) <= order_tol, std::string(k) + " " + num(value(r, k)));
    return v;
}

}  // namespace

int main(int argc, char** argv)
{
    const std::vector<std::pair<std::string, std::function<Verdict()>>> items{
        {"bessel_oracle", bessel_oracle}, {"ratio_bound", ratio},        {"mode_decay", decay},
        {"cylinder_convergence", cylinder}, {"green_identity", green}, {"stretch_identity", stretch},
        {"trace_formula", trace},         {"ab_rates", ab},             {"v_matrix_pipeline", vmatrix},
        {"oracle_equivalence", oracle},
    };
    std::string only = argc > 1 ? argv[1] : "";
    bool all = true, found = false;
    for (const auto& [name, fn] : items) {
        if (!only.empty() && only != name) continue;
        found = true;
        Verdict v;
        try {
            v = fn();
        } catch (const std::exception& e) {
            v.pass = false;
            v.detail = std::string("error: ") + e.what();
        }
        std::printf("[PRIMARY] %-22s %s  %s\n", name.c_str(), v.pass ? "PASS" : "FAIL", v.detail.c_str());
        std::fflush(stdout);
        all = all && v.pass;
    }
    if (!found) {
        std::fprintf(stderr, "unknown criterion '%s'\n", only.c_str());
        return 2;
    }
    return all ? 0 : 1;
}
