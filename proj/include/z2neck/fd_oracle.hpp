#pragma once

#include "z2neck/geometry.hpp"
#include "z2neck/grid.hpp"
#include "z2neck/source.hpp"

#include <Eigen/Dense>

#include <complex>
#include <utility>
#include <vector>

namespace z2neck {

// sum_k f_k(x) exp(i n_k phi) for a fixed theta-mode
using PhiSource = std::vector<std::pair<int, RadialSource>>;

// the phi-modes of f with the given m, negative n included through conjugate symmetry
PhiSource phi_source(const ModelGeometry& g, const SourceSpec& f, int m);

// cell-centred solution on [0, r_total] x [0, pi), antiperiodic in phi
struct FdOracleSolution {
    int m = 0;
    std::vector<double> r;
    std::vector<double> phi;
    Eigen::MatrixXcd u;  // r by phi
};

// 2D finite-volume solve of the theta-reduced problem, written for w = u / q with q = sqrt(r~) near each edge
// and q = sqrt(2) elsewhere, which makes every coefficient regular at the edge
FdOracleSolution solve_fd_oracle(const ModelGeometry& g, int m, const PhiSource& f, int nr, int nphi);

// max over cells of |u_fd - sum_n u_n e^{i n phi}| relative to the max of the mode-solver field
double oracle_discrepancy(const ModelGeometry& g, const FdOracleSolution& fd, const PhiSource& f,
                          const GridOptions& opt = {});

struct OracleConvergence {
    std::vector<int> nr;
    std::vector<int> nphi;
    std::vector<double> discrepancy;
    std::vector<double> order;  // log2 of successive discrepancy ratios
    std::vector<double> seconds;
};

// oracle solves at (nr0, nphi0) and `doublings` successive refinements of both directions
OracleConvergence oracle_convergence(const ModelGeometry& g, const SourceSpec& f, int m, int nr0 = 128,
                                     int nphi0 = 16, int doublings = 2, const GridOptions& opt = {});

}  // namespace z2neck
