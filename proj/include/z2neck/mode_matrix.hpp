#pragma once

#include "z2neck/geometry.hpp"
#include "z2neck/grid.hpp"
#include "z2neck/mode_solver.hpp"
#include "z2neck/source.hpp"

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <vector>

namespace z2neck {

// columns are sources; rows are (Re, Im) of the (1,0) response at each end, plus Re of the (3,0) response
// at end k for the extended matrix
struct ResponseMatrix {
    Eigen::MatrixXd M;
    int p = 1;
    bool tilde = false;
    int tilde_end = 0;

    double det() const;
    // determinant after scaling every row to unit max-norm
    double det_row_scaled() const;
    double cond() const;  // ratio of extreme singular values, inf when singular
    bool singular(double cond_limit = 1e12) const;
};

// cylinder-limit responses v^cyl_10 (and v^cyl_30 for the extended matrix)
std::vector<std::vector<std::complex<double>>> cylinder_responses(const ModelGeometry& g, const SourceSpec& f,
                                                                  const std::vector<ModeIndex>& modes,
                                                                  const GridOptions& opt = {});

ResponseMatrix assemble_V(const ModelGeometry& g, const std::vector<SourceSpec>& sources, const GridOptions& opt = {});
// the same matrix from finite-s coefficients normalized by exp(s/4)
ResponseMatrix assemble_V_finite(const ModelGeometry& g, const std::vector<SourceSpec>& sources,
                                 const GridOptions& opt = {});

struct NormalizedBasis {
    Eigen::MatrixXd coeffs;             // column k expresses new source k in the original ones
    std::vector<SourceSpec> original;
    std::vector<SourceSpec> sources;    // normalized: identity response
    double cond = 0.0;
};

// throws SingularMatrixError with det and condition number when V is singular
NormalizedBasis normalize_basis(const ResponseMatrix& V, const std::vector<SourceSpec>& sources);

ResponseMatrix assemble_V_tilde(const ModelGeometry& g, const std::vector<SourceSpec>& sources, const SourceSpec& extra,
                                int k, const GridOptions& opt = {});

struct TildeSolution {
    Eigen::VectorXd x;                     // weights of sources..., extra
    SourceSpec source;
    std::vector<std::complex<double>> v10;  // recomputed closure check, per end
    std::complex<double> v30;               // at end k
    double cond = 0.0;
};

// source with vanishing v^cyl_10 at every end and unit Re v^cyl_30 at end k
TildeSolution solve_V_tilde(const ModelGeometry& g, const std::vector<SourceSpec>& sources, const SourceSpec& extra,
                            int k, const GridOptions& opt = {});

struct GenericBasis {
    ModelGeometry g;
    std::uint64_t seed = 0;  // interior seed that produced a regular V
    int reseeds = 0;
    ResponseMatrix V;
    NormalizedBasis basis;
};

// assembles V and reseeds the interior profiles while it is singular
GenericBasis generic_basis(const ModelGeometry& g, const std::vector<SourceSpec>& sources, int max_reseeds = 8,
                           const GridOptions& opt = {});

// sup over modes and interior positions of |f_nm|
double source_norm(const SourceSpec& f, double interior_length, int samples = 2001);

struct OmegaSample {
    double s = 0.0;
    std::vector<double> weights;  // omega_s = sigma - sum_k weights[k] basis[k]
    SourceSpec source;
    double norm = 0.0;
    double a2_residual = 0.0;  // max over ends of |u_10(omega_s)| / |u_10(sigma)|
    double a2_abs = 0.0;
    double a3_log = 0.0;       // min over ends of log(exp(3s/4) |u_30(omega_s)|)
    ModeCoefficients coeffs;   // modes of omega_s; u_10 holds the measured residual
};

struct OmegaReport {
    std::vector<OmegaSample> samples;
    double sigma_norm = 0.0;
    double a1_sup_norm = 0.0;
    double a2_max = 0.0;
    double a3_min = 0.0;  // min over s of exp(3s/4) |u_30|
    bool degenerate = false;
    bool a3_ok = false;

    static constexpr double a3_threshold = 1e-6;
};

// corrects sigma at each s so that u_10 vanishes at every end, then measures A1-A3
OmegaReport construct_omega_s(const ModelGeometry& g, const SourceSpec& sigma, const NormalizedBasis& basis,
                              const std::vector<double>& s_grid, int m_max = 4, const GridOptions& opt = {});

struct ABSeries {
    std::vector<double> s;
    std::vector<double> sup_A;
    std::vector<double> sup_B_minus_Binf;
    std::complex<double> B_inf;       // extrapolation at s_inf
    std::complex<double> B_inf_cyl;   // C_3 v^cyl_30 of the corrected source
    double s_inf = 0.0;
};

// A and B of the rescaled class exp(3s/4) omega_s, with u_10 at its enforced value 0; sup over theta and ends
ABSeries ab_series(const ModelGeometry& g, const SourceSpec& sigma, const NormalizedBasis& basis,
                   const std::vector<double>& s_grid, int m_max = 4, const GridOptions& opt = {});

}  // namespace z2neck
