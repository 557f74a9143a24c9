#pragma once

#include "z2neck/geometry.hpp"
#include "z2neck/green_maps.hpp"
#include "z2neck/grid.hpp"
#include "z2neck/mode_solver.hpp"
#include "z2neck/source.hpp"
#include "z2neck/variation_tensor.hpp"

#include <complex>
#include <optional>
#include <utility>
#include <vector>

namespace z2neck {

// single bump rescaled to unit integral
RealBumpSum normalized_bump(double center, double half_width);

// T = 2 eta dr^2; eta must integrate to 1 and sit inside the neck of `end`
VariationTensor stretch_tensor(const ModelGeometry& g, const RealBumpSum& eta, int end = 0);

// neck length of g + 2 t eta dr^2, s + int (sqrt(1 + 2 t eta) - 1)
double stretched_length(const ModelGeometry& g, const RealBumpSum& eta, double t, int end = 0);

// u_nm at `end` for the source f on g
std::complex<double> extracted_coefficient(const ModelGeometry& g, ModeIndex mode, const SourceSpec& f, int end = 0,
                                           const GridOptions& opt = {});

struct DerivativeEstimate {
    std::complex<double> value;  // Richardson combination of the two centered differences
    std::complex<double> coarse;
    std::complex<double> fine;
    double step = 0.0;
};

// d/dt of u_nm(g + t T) by centered differences at t = +-step and +-step/2
DerivativeEstimate perturbation_derivative(const ModelGeometry& g, ModeIndex mode, const SourceSpec& f,
                                           const VariationTensor& T, int end = 0, double step = 1e-4,
                                           const GridOptions& opt = {});

// trace formula 4 pi^2 int [T(grad G, grad U) - 1/2 tr T <dG, dU>] rho dx, traces in the metric of G's host;
// U is the (n, 0) solution on G's nodes
std::complex<double> trace_variation(const GreenMap& G, const RadialSolution& U, const VariationTensor& T,
                                     std::optional<std::pair<double, double>> source_support = std::nullopt);

// solves, builds G_n and evaluates the trace formula for the source f
std::complex<double> predicted_derivative(const ModelGeometry& g, int n, const SourceSpec& f, const VariationTensor& T,
                                          int end = 0, const GridOptions& opt = {});

struct StretchIdentity {
    std::complex<double> u;      // u_n0 at s
    std::complex<double> du_ds;  // centered differences in the neck length
    std::complex<double> lhs;    // du_ds + n/4 u
    std::complex<double> rhs;    // -int H_n (2 eta U'' + eta' U') rho
    double scale = 0.0;          // |du_ds| + n/4 |u|
    double residual = 0.0;       // |lhs - rhs| / (|lhs| + |rhs| + scale)
    double step = 0.0;
};

// the neck-length derivative of u_n0 against the H_n integral of the stretch bump eta
StretchIdentity dun0_identity(const ModelGeometry& g, int n, const SourceSpec& f, const RealBumpSum& eta, int end = 0,
                              const GridOptions& opt = {}, double step = 1e-3, double tol = 1e-6);
double dun0_identity_residual(const ModelGeometry& g, int n, const SourceSpec& f, const RealBumpSum& eta,
                              int end = 0, const GridOptions& opt = {});

// log of sup |H_n| over [lo, hi]
double hn_log_sup(const GreenMap& G, double lo, double hi);

struct StretchEquivalence {
    std::complex<double> stretched;    // solve on g + 2 t eta dr^2
    std::complex<double> lengthened;   // solve on the neck of length s~(t)
    double s_tilde = 0.0;
    double rel = 0.0;
};

StretchEquivalence stretch_equivalence(const ModelGeometry& g, ModeIndex mode, const SourceSpec& f,
                                       const RealBumpSum& eta, double t, int end = 0, const GridOptions& opt = {});

// real field Re sum_k c_k(x) exp(i (n_k phi + m_k theta)) sampled on radial nodes
struct ModalField {
    struct Term {
        int n = 0;
        int m = 0;
        std::vector<std::complex<double>> value;
        std::vector<std::complex<double>> d1;
    };
    std::vector<double> x;
    std::vector<Term> terms;

    static ModalField from_green(const GreenMap& G);
    static ModalField from_solutions(const std::vector<RadialSolution>& sols);
    static ModalField constant(std::vector<double> x, double c);

    // value and the three coordinate derivatives, linear in x between nodes
    void eval(double x, double phi, double theta, double out[4]) const;
};

struct VanishingReport {
    double mass = 0.0;         // int chi^2 Tr(S^2) over the window, S the trace-free part
    double max_density = 0.0;  // max of Tr(S^2) on the sample grid
    double grad_G = 0.0;       // max |dG| on the sample grid
    double grad_v = 0.0;
    bool nonvanishing = false;
};

// witness T = chi^2 S for the pairing S = (dG dv + dv dG)/2 minus half its trace, chi a bump on [lo, hi]
VanishingReport vanishing_probe(const ModelGeometry& g, const ModalField& G, const ModalField& v, double lo, double hi,
                                int nx = 256, int nphi = 32, int ntheta = 32);

}  // namespace z2neck
