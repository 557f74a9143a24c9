#pragma once

#include "z2neck/geometry.hpp"
#include "z2neck/grid.hpp"
#include "z2neck/mode_solver.hpp"
#include "z2neck/radial_ode.hpp"

#include <complex>
#include <functional>
#include <memory>
#include <vector>

namespace z2neck {

// cutoff chi: 1 toward the edge, 0 on the interior; the transition of length `width` ends `gap` before the
// neck/interior junction
struct ChiParams {
    double gap = 1.0;
    double width = 1.0;
};

class GreenMap {
public:
    int n() const { return n_; }
    int end() const { return end_; }
    bool cylinder() const { return cylinder_; }
    double normalization() const;  // 1 / (8 n pi^2)

    // geometry the map lives on; for the cylinder variant a truncated host whose neck stands in for the
    // semi-infinite cylinder
    const ModelGeometry& host() const { return host_; }
    const std::vector<double>& nodes() const { return h_.r; }
    const RadialSolution& correction() const { return h_; }  // H_n without the normalization factor

    double chi(double x) const;
    double chi_d1(double x) const;
    double chi_d2(double x) const;
    std::pair<double, double> transition() const { return {t_lo_, t_hi_}; }

    // radial profile of G_n in the e^{-i n phi} channel and its x-derivative, at node i
    std::complex<double> profile(std::size_t i) const;
    std::complex<double> profile_d1(std::size_t i) const;
    // chi J at node i, J = 1/I_n0 (finite) or exp(-n r'/4) (cylinder)
    double singular(std::size_t i) const;

private:
    friend GreenMap build_Gn(const ModelGeometry&, int, ChiParams, int, const GridOptions&);
    friend GreenMap build_Gn_cyl(const ModelGeometry&, int, ChiParams, int, const GridOptions&, double);
    friend GreenMap make_green(ModelGeometry host, int n, ChiParams chi, int end, bool cyl,
                               std::vector<double> nodes, BoundaryCondition left, BoundaryCondition right);
    GreenMap() = default;

    int n_ = 1;
    int end_ = 0;
    bool cylinder_ = false;
    ModelGeometry host_ = build_geometry({});
    ChiParams chi_;
    double t_lo_ = 0.0, t_hi_ = 0.0;
    std::vector<double> logJ_, dlogJ_;
    RadialSolution h_;
    std::shared_ptr<const RadialDiscretization> disc_;
    friend double harmonicity_residual(const GreenMap&, double, double);
};

GreenMap build_Gn(const ModelGeometry& g, int n, ChiParams chi = {}, int end = 0, const GridOptions& opt = {});
GreenMap build_Gn_cyl(const ModelGeometry& g, int n, ChiParams chi = {}, int end = 0, const GridOptions& opt = {},
                      double cylinder_length = 4.0);

// manufactured f = c I_n0 (1 - step((r - cut_lo)/(cut_hi - cut_lo))) + extra, r the local radius of `end`;
// f_n0 = c at that end
struct TestFunction {
    double c = 1.0;
    double cut_lo = 1.5;
    double cut_hi = 2.5;
    RealBumpSum extra;  // global coordinate
    int end = 0;

    // Delta f = -L f for the (n, 0) operator
    double laplacian(const ModelGeometry& g, int n, double x) const;
};

// 4 pi^2 * integral of profile * lap * density over the map's nodes
std::complex<double> poisson_identity(const GreenMap& G, const std::function<std::complex<double>(double)>& lap);
std::complex<double> poisson_identity_check(const GreenMap& G, const TestFunction& f);

// max |L_h(chi J + H)| over nodes in [lo, hi] outside the chi transition, relative to the largest forcing
double harmonicity_residual(const GreenMap& G, double lo, double hi);

double Cn_constant(const ModelGeometry& g, int n);

}  // namespace z2neck
