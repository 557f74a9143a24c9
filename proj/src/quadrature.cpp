#include "z2neck/quadrature.hpp"

#include <array>
#include <stdexcept>

namespace z2neck {

namespace {

constexpr std::array<double, 8> kNodes = {
    -0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
    0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975363};
constexpr std::array<double, 8> kWeights = {
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873, 0.3626837833783620,
    0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};

template <class T>
T simpson_impl(const std::vector<double>& x, const std::vector<T>& y)
{
    if (x.size() != y.size()) throw std::invalid_argument("simpson: size mismatch");
    T acc{};
    std::size_t n = x.size();
    if (n < 2) return acc;
    std::size_t i = 0;
    for (; i + 2 < n; i += 2) {
        double h0 = x[i + 1] - x[i], h1 = x[i + 2] - x[i + 1];
        double hs = h0 + h1;
        acc += (hs / 6.0) * ((2.0 - h1 / h0) * y[i] + (hs * hs / (h0 * h1)) * y[i + 1] +
                             (2.0 - h0 / h1) * y[i + 2]);
    }
    if (i + 1 < n) acc += 0.5 * (x[i + 1] - x[i]) * (y[i] + y[i + 1]);
    return acc;
}

}  // namespace

double gauss_legendre(const std::function<double(double)>& f, double a, double b, int panels)
{
    double acc = 0.0;
    double h = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
        double lo = a + p * h;
        double mid = lo + 0.5 * h;
        double part = 0.0;
        for (std::size_t k = 0; k < kNodes.size(); ++k) part += kWeights[k] * f(mid + 0.5 * h * kNodes[k]);
        acc += 0.5 * h * part;
    }
    return acc;
}

double simpson(const std::vector<double>& x, const std::vector<double>& y)
{
    return simpson_impl(x, y);
}

std::complex<double> simpson(const std::vector<double>& x, const std::vector<std::complex<double>>& y)
{
    return simpson_impl(x, y);
}

std::vector<double> simpson_weights(const std::vector<double>& x)
{
    std::size_t n = x.size();
    std::vector<double> w(n, 0.0);
    if (n < 2) return w;
    std::size_t i = 0;
    for (; i + 2 < n; i += 2) {
        double h0 = x[i + 1] - x[i], h1 = x[i + 2] - x[i + 1];
        double hs = h0 + h1;
        w[i] += (hs / 6.0) * (2.0 - h1 / h0);
        w[i + 1] += (hs / 6.0) * (hs * hs / (h0 * h1));
        w[i + 2] += (hs / 6.0) * (2.0 - h0 / h1);
    }
    if (i + 1 < n) {
        w[i] += 0.5 * (x[i + 1] - x[i]);
        w[i + 1] += 0.5 * (x[i + 1] - x[i]);
    }
    return w;
}

}  // namespace z2neck
