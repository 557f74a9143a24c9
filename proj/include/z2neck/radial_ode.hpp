#pragma once

#include "z2neck/geometry.hpp"
#include "z2neck/grid.hpp"

#include <complex>
#include <compare>
#include <string>
#include <vector>

namespace z2neck {

struct ModeIndex {
    int n = 1;
    int m = 0;

    void validate() const;
    double alpha() const;  // sqrt(n^2/16 + m^2), the neck exponent
    std::string label() const;
    auto operator<=>(const ModeIndex&) const = default;
};

// mantissa * exp(log_scale); carries magnitudes beyond double range
struct ScaledValue {
    std::complex<double> mantissa{0.0, 0.0};
    double log_scale = 0.0;

    std::complex<double> value() const;
    double log_abs() const;
    ScaledValue normalized() const;
};

struct RadialSolution {
    ModeIndex mode;
    double alpha = 0.0;
    std::vector<double> r;
    std::vector<std::complex<double>> mantissa;
    std::vector<double> log_scale;
    std::vector<std::complex<double>> slope;  // u'/u when known analytically; empty otherwise

    std::size_t size() const { return r.size(); }
    std::complex<double> value(std::size_t i) const;
    ScaledValue scaled(std::size_t i) const { return {mantissa[i], log_scale[i]}; }
    double log_abs(std::size_t i) const;
    std::complex<double> derivative(std::size_t i) const;
    std::complex<double> second_derivative(std::size_t i) const;
    // linear interpolation of the value
    std::complex<double> value_at(double x) const;
    std::size_t index_of(double x) const;  // node nearest to x
};

// coefficients of L u = (1/rho)(k u')' - V u along one end, in the local coordinate r from that edge
class RadialOperator {
public:
    RadialOperator(ModelGeometry g, ModeIndex mode, int end = 0);

    const ModelGeometry& geometry() const { return g_; }
    ModeIndex mode() const { return mode_; }
    int end() const { return end_; }
    double alpha() const { return mode_.alpha(); }

    double potential(double r) const;
    double density(double r) const;
    double flux(double r) const;
    // a V and k'/k, the coefficients of the Riccati form
    void riccati_coeffs(double r, double& aV, double& dlogk) const;

private:
    ModelGeometry g_;
    ModeIndex mode_;
    int end_;
};

RadialSolution integrate_Inm(const RadialOperator& op, const std::vector<double>& nodes);
RadialSolution integrate_Inm(const RadialOperator& op, double r_end, const GridOptions& opt = {});

double closed_form_In0(const ModelGeometry& g, int n, double r);
double closed_form_log_In0(const ModelGeometry& g, int n, double r);

struct NeckCoefficients {
    double c = 0.0;
    double log_c = 0.0;
    double c_prime = 0.0;
    double alpha = 0.0;
    double residual = 0.0;  // max log-space mismatch of the two-exponential form on the neck nodes
};

NeckCoefficients neck_coefficients(const RadialSolution& Inm, double R0, double tol = 1e-8);

// I(R0) / I(R0 + s) * exp(alpha s)
double ratio_bound(const ModelGeometry& g, int n, int m, double s, const GridOptions& opt = {});

}  // namespace z2neck
