#include "z2neck/smooth.hpp"

#include "z2neck/quadrature.hpp"

#include <array>
#include <cmath>

namespace z2neck {

namespace smooth {

namespace {

constexpr double kEdge = 1e-3;  // below this distance every derivative underflows

// sigma(1-sigma) for sigma = 1/(1+e^z)
double logistic_product(double z)
{
    double e = std::exp(-std::abs(z));
    return e / ((1.0 + e) * (1.0 + e));
}

constexpr int kTableSize = 1024;

const std::array<double, kTableSize + 1>& integral_table()
{
    static const std::array<double, kTableSize + 1> table = [] {
        std::array<double, kTableSize + 1> t{};
        t[0] = 0.0;
        for (int k = 0; k < kTableSize; ++k) {
            double a = double(k) / kTableSize, b = double(k + 1) / kTableSize;
            t[k + 1] = t[k] + gauss_legendre(step, a, b, 1);
        }
        return t;
    }();
    return table;
}

}  // namespace

double step(double t)
{
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    double z = 1.0 / t - 1.0 / (1.0 - t);
    if (z > 0.0) {
        double e = std::exp(-z);
        return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(z));
}

double step_d1(double t)
{
    if (t <= kEdge || t >= 1.0 - kEdge) return 0.0;
    double u = 1.0 - t;
    double z = 1.0 / t - 1.0 / u;
    double dz = -1.0 / (t * t) - 1.0 / (u * u);
    return -logistic_product(z) * dz;
}

double step_d2(double t)
{
    if (t <= kEdge || t >= 1.0 - kEdge) return 0.0;
    double u = 1.0 - t;
    double z = 1.0 / t - 1.0 / u;
    double dz = -1.0 / (t * t) - 1.0 / (u * u);
    double ddz = 2.0 / (t * t * t) - 2.0 / (u * u * u);
    double s = step(t);
    double p = logistic_product(z);
    double ds = -p * dz;
    return -(1.0 - 2.0 * s) * ds * dz - p * ddz;
}

double step_integral(double t)
{
    if (t <= 0.0) return 0.0;
    const auto& table = integral_table();
    if (t >= 1.0) return table[kTableSize] + (t - 1.0);
    int k = static_cast<int>(t * kTableSize);
    if (k >= kTableSize) k = kTableSize - 1;
    double a = double(k) / kTableSize;
    return table[k] + gauss_legendre(step, a, t, 1);
}

double bump(double t)
{
    double q = 1.0 - t * t;
    if (q <= kEdge) return 0.0;
    return std::exp(1.0 - 1.0 / q);
}

double bump_d1(double t)
{
    double q = 1.0 - t * t;
    if (q <= kEdge) return 0.0;
    return bump(t) * (-2.0 * t / (q * q));
}

double bump_d2(double t)
{
    double q = 1.0 - t * t;
    if (q <= kEdge) return 0.0;
    double q2 = q * q;
    return bump(t) * (4.0 * t * t / (q2 * q2) - 2.0 / q2 - 8.0 * t * t / (q2 * q));
}

double bump_integral()
{
    static const double value = gauss_legendre(bump, -1.0, 1.0, 256);
    return value;
}

}  // namespace smooth

double Bump::value(double x) const
{
    return smooth::bump((x - center) / half_width);
}

double Bump::d1(double x) const
{
    return smooth::bump_d1((x - center) / half_width) / half_width;
}

double Bump::d2(double x) const
{
    return smooth::bump_d2((x - center) / half_width) / (half_width * half_width);
}

double Bump::integral() const
{
    return smooth::bump_integral() * half_width;
}

}  // namespace z2neck
