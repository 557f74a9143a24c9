#pragma once

#include <complex>
#include <functional>
#include <vector>

namespace z2neck {

// composite Gauss-Legendre, 8 points per panel
double gauss_legendre(const std::function<double(double)>& f, double a, double b, int panels = 16);

// composite Simpson on a nonuniform grid (pairs of cells; trapezoid on a trailing odd cell)
double simpson(const std::vector<double>& x, const std::vector<double>& y);
std::complex<double> simpson(const std::vector<double>& x, const std::vector<std::complex<double>>& y);

// per-node weights of the rule above
std::vector<double> simpson_weights(const std::vector<double>& x);

}  // namespace z2neck
