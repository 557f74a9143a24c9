#include "z2neck/grid.hpp"

#include "z2neck/error.hpp"

#include <algorithm>
#include <cmath>

namespace z2neck {

std::vector<double> uniform_nodes(double a, double b, int cells)
{
    if (cells < 1) throw DomainError("uniform_nodes: need at least one cell");
    std::vector<double> x(cells + 1);
    for (int i = 0; i <= cells; ++i) x[i] = a + (b - a) * double(i) / cells;
    x.back() = b;
    return x;
}

namespace {

int cells_for(double len, double h)
{
    return std::max(1, static_cast<int>(std::ceil(len / h - 1e-9)));
}

// edge nodes live on a dyadic lattice so that mirroring them at the far end, r_total - v, is exact and the
// far edge sees the same local radii for every neck length
constexpr int lattice_bits = 44;

double snap(double v, int bits)
{
    return std::ldexp(std::nearbyint(std::ldexp(v, bits)), -bits);
}

int mirror_bits(double r_total)
{
    // v on 2^-bits and r_total on its own ulp grid keep r_total - v representable
    int e = std::ilogb(r_total);
    return std::min(lattice_bits, 52 - e);
}

void append(std::vector<double>& out, const std::vector<double>& piece)
{
    // piece starts at out.back()
    out.insert(out.end(), piece.begin() + 1, piece.end());
}

}  // namespace

std::vector<double> edge_nodes(const std::vector<double>& breakpoints, const GridOptions& opt)
{
    if (breakpoints.empty()) throw DomainError("edge_nodes: no breakpoints");
    if (!(opt.h > 0.0 && opt.grade > 0.0 && opt.r_min > 0.0 && opt.h_edge >= 0.0))
        throw DomainError("edge_nodes: bad grid options");
    double he = opt.h_edge > 0.0 ? opt.h_edge : opt.h;
    std::vector<double> x{opt.r_min};
    double q = 1.0 + opt.grade;
    double first = breakpoints.front();
    while (x.back() * opt.grade < he && x.back() * q < first - he) x.push_back(x.back() * q);
    double prev = x.back();
    for (std::size_t k = 0; k < breakpoints.size(); ++k) {
        double b = breakpoints[k];
        if (b <= prev) throw DomainError("edge_nodes: breakpoints must increase beyond the edge zone");
        append(x, uniform_nodes(prev, b, cells_for(b - prev, k == 0 ? he : opt.h)));
        prev = b;
    }
    for (std::size_t i = 0; i + 1 < x.size(); ++i) x[i] = snap(x[i], lattice_bits);
    return x;
}

std::vector<double> build_grid(const ModelGeometry& g, const GridOptions& opt)
{
    std::vector<double> x = edge_nodes({g.R0()}, opt);
    int bits = mirror_bits(g.r_total());
    for (double& v : x) v = snap(v, bits);
    std::vector<double> edge = x;
    auto neck = [&](int end) {
        int n = opt.neck_cells[end] > 0 ? opt.neck_cells[end] : cells_for(g.neck_length(end), opt.h);
        return n;
    };
    append(x, uniform_nodes(g.neck_start(0), g.junction(0), neck(0)));
    double L = g.interior().length();
    append(x, uniform_nodes(g.interior_start(), g.interior_end(), cells_for(L, opt.h)));
    if (g.ends() == 2) {
        append(x, uniform_nodes(g.junction(1), g.neck_start(1), neck(1)));
        std::vector<double> mirrored(edge.rbegin(), edge.rend());
        for (double& v : mirrored) v = g.r_total() - v;
        mirrored.front() = g.neck_start(1);
        append(x, mirrored);
    }
    return x;
}

}  // namespace z2neck
