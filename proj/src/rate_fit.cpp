#include "z2neck/rate_fit.hpp"

#include "z2neck/error.hpp"

#include <cmath>

namespace z2neck {

bool RateFit::within(double target_slope, double tol) const
{
    return std::abs(slope - target_slope) <= tol * std::abs(target_slope);
}

RateFit fit_log_rate(const std::vector<double>& s, const std::vector<double>& log_abs)
{
    if (s.size() != log_abs.size()) throw FitError("fit: sample size mismatch");
    if (s.size() < 5) throw FitError("fit: need at least 5 samples, got " + std::to_string(s.size()));
    for (double v : log_abs)
        if (!std::isfinite(v)) throw FitError("fit: zero or non-finite value");
    RateFit f;
    f.s = s;
    f.log_abs = log_abs;
    double n = double(s.size()), ms = 0.0, my = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        ms += s[i];
        my += log_abs[i];
    }
    ms /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        sxx += (s[i] - ms) * (s[i] - ms);
        sxy += (s[i] - ms) * (log_abs[i] - my);
    }
    if (sxx == 0.0) throw FitError("fit: all abscissae coincide");
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * ms;
    double r2 = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        double d = log_abs[i] - (f.intercept + f.slope * s[i]);
        r2 += d * d;
    }
    f.residual = std::sqrt(r2 / n);
    return f;
}

RateFit fit_rate(const std::vector<std::pair<double, double>>& samples)
{
    std::vector<double> s, y;
    bool pos = false, neg = false;
    for (auto [x, v] : samples) {
        if (v == 0.0 || !std::isfinite(v)) throw FitError("fit: zero or non-finite value at s = " + std::to_string(x));
        (v > 0 ? pos : neg) = true;
        s.push_back(x);
        y.push_back(std::log(std::abs(v)));
    }
    RateFit f = fit_log_rate(s, y);
    f.sign_changed = pos && neg;
    return f;
}

}  // namespace z2neck
