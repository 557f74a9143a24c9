#pragma once

#include "z2neck/geometry.hpp"
#include "z2neck/grid.hpp"
#include "z2neck/radial_ode.hpp"
#include "z2neck/source.hpp"

#include <complex>
#include <functional>
#include <map>
#include <vector>

namespace z2neck {

struct BoundaryCondition {
    enum class Kind { edge_regular, neumann, transparent, dirichlet };
    Kind kind = Kind::neumann;
    double edge = 0.0;                 // edge_regular: global position of the edge
    std::complex<double> value = 0.0;  // dirichlet data

    static BoundaryCondition edge_regular(double edge) { return {Kind::edge_regular, edge, 0.0}; }
    static BoundaryCondition neumann() { return {Kind::neumann, 0.0, 0.0}; }
    static BoundaryCondition transparent() { return {Kind::transparent, 0.0, 0.0}; }
    static BoundaryCondition dirichlet(std::complex<double> v) { return {Kind::dirichlet, 0.0, v}; }
};

// conservative three-point discretization of -(1/rho)(k u')' + V u on a fixed node set;
// metric samples are shared by every mode solved on it
class RadialDiscretization {
public:
    RadialDiscretization(std::vector<double> nodes, const std::function<MetricCoeffs(double)>& metric);

    const std::vector<double>& nodes() const { return x_; }
    double density(std::size_t i) const { return rho_[i]; }

    RadialSolution solve(ModeIndex mode, const std::vector<std::complex<double>>& f, BoundaryCondition left,
                         BoundaryCondition right) const;
    RadialSolution solve(ModeIndex mode, const RadialSource& f, BoundaryCondition left,
                         BoundaryCondition right) const;
    // -L_h u per node with the interior stencil; zero at the two end nodes
    std::vector<std::complex<double>> apply(ModeIndex mode, const std::vector<std::complex<double>>& u) const;

private:
    double potential(ModeIndex mode, std::size_t i) const;
    // off-diagonals and the excess of the diagonal over their magnitudes
    void row(ModeIndex mode, std::size_t i, double hl, double hr, double kl, double kr, double& lo, double& ex,
             double& up) const;

    std::vector<double> x_;
    std::vector<double> rho_, a_, b_, c_;  // nodes
    std::vector<double> k_half_;           // flux coefficient rho/g_rr at midpoints
    std::vector<char> flat_;               // constant metric around the node
};

// finite-neck problem on the whole model, edge regularity at each end and zero flux at a capped end
class ModeSolver {
public:
    explicit ModeSolver(const ModelGeometry& g, const GridOptions& opt = {});

    const ModelGeometry& geometry() const { return g_; }
    const GridOptions& options() const { return opt_; }
    const RadialDiscretization& discretization() const { return disc_; }

    RadialSolution solve(ModeIndex mode, const RadialSource& f) const;
    RadialSolution solve(ModeIndex mode, const std::vector<std::complex<double>>& f) const;

private:
    ModelGeometry g_;
    GridOptions opt_;
    RadialDiscretization disc_;
};

RadialSolution solve_mode_finite(const ModelGeometry& g, ModeIndex mode, const RadialSource& f,
                                 const GridOptions& opt = {});

struct Extraction {
    ScaledValue u;
    double residual = 0.0;
    std::complex<double> value() const { return u.value(); }
};

// sol and Inm must share their nodes over [lo, hi]
Extraction extract_coefficient(const RadialSolution& sol, const RadialSolution& Inm, double lo, double hi,
                               double tol = 1e-6);

// the solution seen from an end, in that end's local coordinate, restricted to r <= r_max
RadialSolution local_view(const RadialSolution& sol, const ModelGeometry& g, int end, double r_max);

// solve followed by extraction over [R0/4, 3R0/4] at the given end
Extraction mode_coefficient(const ModeSolver& solver, ModeIndex mode, const RadialSolution& sol, int end,
                            double tol = 1e-6);
Extraction mode_coefficient(const ModeSolver& solver, ModeIndex mode, const RadialSource& f, int end,
                            double tol = 1e-6);

struct CylinderSolution {
    RadialSolution sol;               // on the interior segment, global coordinate
    std::vector<std::complex<double>> v;  // value at each cylinder junction, indexed by end
};

// interior segment with exact decay closure u' = alpha u toward each semi-infinite cylinder
class CylinderSolver {
public:
    explicit CylinderSolver(const ModelGeometry& g, const GridOptions& opt = {});
    CylinderSolution solve(ModeIndex mode, const RadialSource& f) const;
    const ModelGeometry& geometry() const { return g_; }

private:
    ModelGeometry g_;
    RadialDiscretization disc_;
};

CylinderSolution solve_mode_cylinder(const ModelGeometry& g, ModeIndex mode, const RadialSource& f,
                                     const GridOptions& opt = {});
// cylinder of finite length with u = 0 at its far end, as an independent check of the decay closure
CylinderSolution solve_mode_cylinder_truncated(const ModelGeometry& g, ModeIndex mode, const RadialSource& f,
                                               double length, const GridOptions& opt = {});

struct ModeCoefficients {
    double s = 0.0;
    int ends = 1;
    std::map<ModeIndex, std::vector<Extraction>> coeffs;  // n > 0, indexed by end

    // conjugate symmetry applied for n < 0
    std::complex<double> value(ModeIndex mode, int end) const;
    ScaledValue scaled(ModeIndex mode, int end) const;
    double max_residual() const;
};

ModeCoefficients compute_mode_coefficients(const ModelGeometry& g, const SourceSpec& src,
                                           const std::vector<ModeIndex>& modes, const GridOptions& opt = {});

struct ABSamples {
    std::vector<double> theta;
    std::vector<std::complex<double>> A;
    std::vector<std::complex<double>> B;
};

// truncated Fourier sums of u_1m and u_3m times exp(log_factor), sampled uniformly in theta
ABSamples assemble_AB(const ModeCoefficients& coeffs, int m_max, int end = 0, int samples = 256,
                      double log_factor = 0.0);

}  // namespace z2neck
