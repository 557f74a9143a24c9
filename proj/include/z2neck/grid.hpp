#pragma once

#include "z2neck/geometry.hpp"

#include <array>
#include <vector>

namespace z2neck {

struct GridOptions {
    double h = 1e-3;       // uniform spacing away from the edges
    double h_edge = 2.5e-4;  // spacing from the edge zone up to the first breakpoint (R0); 0 means h
    double grade = 2e-3;   // growth ratio minus one in the geometric edge zone
    double r_min = 1e-6;   // first node, measured from an edge
    std::array<int, 2> neck_cells{0, 0};  // 0: ceil(s / h)
};

// geometric from r_min until the spacing reaches h_edge, then uniform pieces between consecutive breakpoints
// (h_edge up to the first, h beyond); every breakpoint is a node and the last one ends the grid
std::vector<double> edge_nodes(const std::vector<double>& breakpoints, const GridOptions& opt);

// nodes on the global coordinate covering every region of g; junctions are nodes
std::vector<double> build_grid(const ModelGeometry& g, const GridOptions& opt);

// uniform nodes with n cells
std::vector<double> uniform_nodes(double a, double b, int cells);

}  // namespace z2neck
