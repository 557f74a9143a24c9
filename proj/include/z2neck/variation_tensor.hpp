#pragma once

#include "z2neck/smooth.hpp"

#include <utility>

namespace z2neck {

// radial symmetric 2-tensor T_rr dr^2 + T_pp dphi^2 + T_tt dtheta^2, in global coordinate x
struct VariationTensor {
    RealBumpSum rr;
    RealBumpSum pp;
    RealBumpSum tt;

    bool empty() const { return rr.empty() && pp.empty() && tt.empty(); }
    std::pair<double, double> support() const;
};

}  // namespace z2neck
