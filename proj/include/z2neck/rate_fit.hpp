#pragma once

#include <string>
#include <utility>
#include <vector>

namespace z2neck {

// least-squares line through (s, log|value|); rate = -slope
struct RateFit {
    std::vector<double> s;
    std::vector<double> log_abs;
    double slope = 0.0;
    double intercept = 0.0;
    double residual = 0.0;  // rms deviation in log space
    bool sign_changed = false;

    double rate() const { return -slope; }
    // |slope - target| <= tol |target|
    bool within(double target_slope, double tol) const;
};

RateFit fit_rate(const std::vector<std::pair<double, double>>& samples);
// samples already in log form, for magnitudes outside double range
RateFit fit_log_rate(const std::vector<double>& s, const std::vector<double>& log_abs);

}  // namespace z2neck
