#pragma once

#include "z2neck/smooth.hpp"
#include "z2neck/variation_tensor.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace z2neck {

struct ProfileValue {
    double value = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
};

// edge profile r~(r): identity on [0, r_a], a smooth ramp of the slope down to 0, then constant 2
struct NeckProfile {
    double r_a = 1.0;
    double R0 = 4.0;
    double margin = 0.5;

    double ramp_width() const { return 2.0 * (2.0 - r_a); }
    double flat_from() const { return r_a + ramp_width(); }
    void validate() const;
};

ProfileValue profile_eval(const NeckProfile& p, double r);

// integral of 1/r~ over [a, b]
double inverse_profile_integral(const NeckProfile& p, double a, double b, int panels = 64);

enum class Closure { two_ends, capped_end };

enum class RegionKind { boundary, neck, interior };

struct Region {
    RegionKind kind = RegionKind::interior;
    int end = 0;  // which end a boundary/neck region belongs to
    double lo = 0.0;
    double hi = 0.0;
};

const char* to_string(RegionKind k);

struct MetricCoeffs {
    double g_rr = 1.0;
    double g_pp = 1.0;
    double g_tt = 1.0;
};

// value and x-derivative of each coefficient
struct MetricJet {
    MetricCoeffs value;
    MetricCoeffs d1;
};

struct GeometryConfig {
    double r_a = 1.0;
    double R0 = 4.0;
    double margin = 0.5;
    std::array<double, 2> s{10.0, 10.0};
    int p = 1;
    std::uint64_t seed = 7;
    double interior_length = 8.0;
    double amp_phi = 0.25;
    double amp_theta = 0.25;

    // reads the geometry keys present in kv, leaves other keys alone
    static GeometryConfig from_map(const std::map<std::string, std::string>& kv);
    static bool is_geometry_key(const std::string& key);
};

class InteriorProfiles {
public:
    InteriorProfiles() = default;
    InteriorProfiles(double length, RealBumpSum phi, RealBumpSum theta);
    static InteriorProfiles seeded(double length, std::uint64_t seed, double amp_phi, double amp_theta);

    double length() const { return length_; }
    // rho_phi = 2 (1 + phi), rho_theta = 1 + theta, xi in [0, length]
    double rho_phi(double xi) const;
    double rho_phi_d1(double xi) const;
    double rho_theta(double xi) const;
    double rho_theta_d1(double xi) const;
    const RealBumpSum& phi_bumps() const { return phi_; }
    const RealBumpSum& theta_bumps() const { return theta_; }

private:
    double length_ = 8.0;
    RealBumpSum phi_;
    RealBumpSum theta_;
};

class ModelGeometry {
public:
    static ModelGeometry build(const GeometryConfig& config);

    const GeometryConfig& config() const { return config_; }
    const NeckProfile& profile() const { return profile_; }
    const InteriorProfiles& interior() const { return interior_; }
    Closure closure() const { return config_.p == 2 ? Closure::two_ends : Closure::capped_end; }
    int ends() const { return config_.p; }

    double neck_length(int end) const;
    double R0() const { return profile_.R0; }
    double r_total() const { return r_total_; }
    double interior_start() const;
    double interior_end() const;
    // global position of the boundary/neck junction and the neck/interior junction of an end
    double neck_start(int end) const;
    double junction(int end) const;

    // distance from the edge of the given end, and its inverse
    double local_radius(int end, double x) const;
    double to_global(int end, double r) const;
    // +1 for end 0, -1 for end 1
    double orientation(int end) const { return end == 0 ? 1.0 : -1.0; }

    Region region_at(double x) const;
    std::vector<Region> regions() const;

    MetricCoeffs metric(double x) const;
    MetricJet jet(double x) const;
    // jet(to_global(end, r)) with the boundary profile evaluated at r itself, so that the far edge does not
    // inherit the rounding of r_total - r
    MetricJet local_jet(int end, double r) const;
    double volume_density(double x) const;

    ModelGeometry with_neck_length(int end, double s) const;
    ModelGeometry with_neck_lengths(double s0, double s1) const;
    ModelGeometry with_seed(std::uint64_t seed) const;
    ModelGeometry perturbed(const VariationTensor& T, double t) const;
    bool is_perturbed() const { return !perturbations_.empty(); }

private:
    ModelGeometry() = default;
    void check_range(double x) const;
    MetricJet base_jet(double x) const;
    void add_perturbations(MetricJet& j, double x) const;

    GeometryConfig config_;
    NeckProfile profile_;
    InteriorProfiles interior_;
    double r_total_ = 0.0;
    std::vector<std::pair<VariationTensor, double>> perturbations_;
};

ModelGeometry build_geometry(const GeometryConfig& config);
MetricCoeffs metric_coeffs(const ModelGeometry& g, double x);
double volume_density(const ModelGeometry& g, double x);

}  // namespace z2neck
