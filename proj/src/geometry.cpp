#include "z2neck/geometry.hpp"

#include "z2neck/error.hpp"
#include "z2neck/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace z2neck {

std::pair<double, double> VariationTensor::support() const
{
    bool any = false;
    double lo = 0.0, hi = 0.0;
    for (const RealBumpSum* c : {&rr, &pp, &tt}) {
        if (c->empty()) continue;
        auto [a, b] = c->support();
        if (!any) {
            lo = a;
            hi = b;
            any = true;
        }
        lo = std::min(lo, a);
        hi = std::max(hi, b);
    }
    return {lo, hi};
}

void NeckProfile::validate() const
{
    if (!(r_a >= 1.0 && r_a < 2.0))
        throw ConfigError("profile: r_a must lie in [1, 2) (identity zone must cover [0, 1])");
    if (!(margin >= 0.0)) throw ConfigError("profile: margin must be nonnegative");
    if (flat_from() > R0 - margin + 1e-12) {
        std::ostringstream os;
        os << "profile: r~ reaches 2 at r = " << flat_from() << ", beyond R0 - margin = " << R0 - margin;
        throw ConfigError(os.str());
    }
}

ProfileValue profile_eval(const NeckProfile& p, double r)
{
    if (!(r >= 0.0)) throw DomainError("profile_eval: negative radius");
    if (r <= p.r_a) return {r, 1.0, 0.0};
    double w = p.ramp_width();
    double t = (r - p.r_a) / w;
    if (t >= 1.0) return {2.0, 0.0, 0.0};
    return {p.r_a + w * (t - smooth::step_integral(t)), 1.0 - smooth::step(t), -smooth::step_d1(t) / w};
}

double inverse_profile_integral(const NeckProfile& p, double a, double b, int panels)
{
    if (!(a > 0.0)) throw DomainError("inverse_profile_integral: lower limit must be positive");
    if (b < a) return -inverse_profile_integral(p, b, a, panels);
    double acc = 0.0;
    double lo = a, hi = std::min(b, p.r_a);
    if (hi > lo) acc += std::log(hi / lo);
    lo = std::max(a, p.r_a);
    hi = std::min(b, p.flat_from());
    if (hi > lo) acc += gauss_legendre([&](double r) { return 1.0 / profile_eval(p, r).value; }, lo, hi, panels);
    lo = std::max(a, p.flat_from());
    if (b > lo) acc += 0.5 * (b - lo);
    return acc;
}

const char* to_string(RegionKind k)
{
    switch (k) {
    case RegionKind::boundary: return "boundary";
    case RegionKind::neck: return "neck";
    case RegionKind::interior: return "interior";
    }
    return "?";
}

namespace {

double to_double(const std::string& key, const std::string& v)
{
    try {
        std::size_t used = 0;
        double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': not a number: '" + v + "'");
    }
}

}  // namespace

bool GeometryConfig::is_geometry_key(const std::string& key)
{
    static const char* keys[] = {"r_a", "R0", "margin", "s", "s1", "s2", "p", "seed",
                                 "interior_length", "amp_phi", "amp_theta"};
    return std::find_if(std::begin(keys), std::end(keys), [&](const char* k) { return key == k; }) !=
           std::end(keys);
}

GeometryConfig GeometryConfig::from_map(const std::map<std::string, std::string>& kv)
{
    GeometryConfig c;
    auto get = [&](const char* key, double& out) {
        auto it = kv.find(key);
        if (it != kv.end()) out = to_double(key, it->second);
    };
    get("r_a", c.r_a);
    get("R0", c.R0);
    get("margin", c.margin);
    double s = -1.0;
    get("s", s);
    if (s != -1.0) c.s = {s, s};
    get("s1", c.s[0]);
    get("s2", c.s[1]);
    double p = c.p;
    get("p", p);
    if (p != std::floor(p)) throw ConfigError("config key 'p': must be an integer");
    c.p = static_cast<int>(p);
    double seed = static_cast<double>(c.seed);
    get("seed", seed);
    if (seed < 0 || seed != std::floor(seed)) throw ConfigError("config key 'seed': must be a nonnegative integer");
    c.seed = static_cast<std::uint64_t>(seed);
    get("interior_length", c.interior_length);
    get("amp_phi", c.amp_phi);
    get("amp_theta", c.amp_theta);
    return c;
}

InteriorProfiles::InteriorProfiles(double length, RealBumpSum phi, RealBumpSum theta)
    : length_(length), phi_(std::move(phi)), theta_(std::move(theta))
{
}

InteriorProfiles InteriorProfiles::seeded(double length, std::uint64_t seed, double amp_phi, double amp_theta)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto draw = [&](double amp) {
        RealBumpSum sum;
        for (int k = 0; k < 3; ++k) {
            Bump b;
            b.center = length * (0.25 + 0.5 * unit(rng));
            b.half_width = length * (0.1 + 0.1 * unit(rng));
            double a = amp * (2.0 * unit(rng) - 1.0);
            sum.add(b, a);
        }
        return sum;
    };
    RealBumpSum phi = draw(amp_phi);
    RealBumpSum theta = draw(amp_theta);
    return InteriorProfiles(length, std::move(phi), std::move(theta));
}

double InteriorProfiles::rho_phi(double xi) const { return 2.0 * (1.0 + phi_.value(xi)); }
double InteriorProfiles::rho_phi_d1(double xi) const { return 2.0 * phi_.d1(xi); }
double InteriorProfiles::rho_theta(double xi) const { return 1.0 + theta_.value(xi); }
double InteriorProfiles::rho_theta_d1(double xi) const { return theta_.d1(xi); }

ModelGeometry ModelGeometry::build(const GeometryConfig& config)
{
    if (config.p != 1 && config.p != 2) {
        std::ostringstream os;
        os << "unsupported closure: p = " << config.p << " (only p = 1 capped_end and p = 2 two_ends)";
        throw ConfigError(os.str());
    }
    for (int e = 0; e < config.p; ++e)
        if (!(config.s[e] > 0.0)) throw ConfigError("neck length s must be positive");
    if (!(config.interior_length > 0.0)) throw ConfigError("interior_length must be positive");
    if (!(config.amp_phi >= 0.0 && config.amp_phi <= 0.3) || !(config.amp_theta >= 0.0 && config.amp_theta <= 0.3))
        throw ConfigError("interior amplitudes must lie in [0, 0.3] to keep the profiles positive");

    ModelGeometry g;
    g.config_ = config;
    g.profile_.r_a = config.r_a;
    g.profile_.R0 = config.R0;
    g.profile_.margin = config.margin;
    g.profile_.validate();
    g.interior_ = InteriorProfiles::seeded(config.interior_length, config.seed, config.amp_phi, config.amp_theta);
    g.r_total_ = config.R0 + config.s[0] + config.interior_length;
    if (config.p == 2) g.r_total_ += config.s[1] + config.R0;
    return g;
}

double ModelGeometry::neck_length(int end) const
{
    if (end < 0 || end >= ends()) throw DomainError("no such end");
    return config_.s[end];
}

double ModelGeometry::interior_start() const { return profile_.R0 + config_.s[0]; }
double ModelGeometry::interior_end() const { return interior_start() + interior_.length(); }

double ModelGeometry::neck_start(int end) const
{
    if (end == 0) return profile_.R0;
    if (end == 1 && ends() == 2) return interior_end() + config_.s[1];
    throw DomainError("no such end");
}

double ModelGeometry::junction(int end) const
{
    if (end == 0) return interior_start();
    if (end == 1 && ends() == 2) return interior_end();
    throw DomainError("no such end");
}

double ModelGeometry::local_radius(int end, double x) const
{
    if (end == 0) return x;
    if (end == 1 && ends() == 2) return r_total_ - x;
    throw DomainError("no such end");
}

double ModelGeometry::to_global(int end, double r) const
{
    return local_radius(end, r);
}

void ModelGeometry::check_range(double x) const
{
    double tol = 1e-12 * r_total_;
    if (!(x >= -tol && x <= r_total_ + tol)) {
        std::ostringstream os;
        os << "radius " << x << " outside [0, " << r_total_ << "]";
        throw DomainError(os.str());
    }
}

Region ModelGeometry::region_at(double x) const
{
    check_range(x);
    for (const Region& r : regions())
        if (x < r.hi) return r;
    return regions().back();
}

std::vector<Region> ModelGeometry::regions() const
{
    std::vector<Region> out;
    double R0 = profile_.R0;
    out.push_back({RegionKind::boundary, 0, 0.0, R0});
    out.push_back({RegionKind::neck, 0, R0, interior_start()});
    out.push_back({RegionKind::interior, 0, interior_start(), interior_end()});
    if (ends() == 2) {
        out.push_back({RegionKind::neck, 1, interior_end(), neck_start(1)});
        out.push_back({RegionKind::boundary, 1, neck_start(1), r_total_});
    }
    return out;
}

MetricJet ModelGeometry::base_jet(double x) const
{
    MetricJet j;
    double xs = interior_start(), xe = interior_end();
    bool interior = x >= xs && (x <= xe || ends() == 1);
    if (interior) {
        double xi = std::min(x - xs, interior_.length());
        double rp = interior_.rho_phi(xi), rt = interior_.rho_theta(xi);
        j.value = {1.0, 4.0 * rp * rp, rt * rt};
        j.d1 = {0.0, 8.0 * rp * interior_.rho_phi_d1(xi), 2.0 * rt * interior_.rho_theta_d1(xi)};
        return j;
    }
    int end = x < xs ? 0 : 1;
    double r = std::max(0.0, local_radius(end, x));
    ProfileValue pv = profile_eval(profile_, r);
    j.value = {1.0, 4.0 * pv.value * pv.value, 1.0};
    j.d1 = {0.0, 8.0 * pv.value * pv.d1 * orientation(end), 0.0};
    return j;
}

MetricJet ModelGeometry::jet(double x) const
{
    check_range(x);
    MetricJet j = base_jet(x);
    add_perturbations(j, x);
    return j;
}

MetricJet ModelGeometry::local_jet(int end, double r) const
{
    double x = to_global(end, r);
    if (!(r >= 0.0 && r <= R0())) return jet(x);
    check_range(x);
    MetricJet j;
    ProfileValue pv = profile_eval(profile_, r);
    j.value = {1.0, 4.0 * pv.value * pv.value, 1.0};
    j.d1 = {0.0, 8.0 * pv.value * pv.d1 * orientation(end), 0.0};
    add_perturbations(j, x);
    return j;
}

void ModelGeometry::add_perturbations(MetricJet& j, double x) const
{
    for (const auto& [T, t] : perturbations_) {
        j.value.g_rr += t * T.rr.value(x);
        j.value.g_pp += t * T.pp.value(x);
        j.value.g_tt += t * T.tt.value(x);
        j.d1.g_rr += t * T.rr.d1(x);
        j.d1.g_pp += t * T.pp.d1(x);
        j.d1.g_tt += t * T.tt.d1(x);
    }
}

MetricCoeffs ModelGeometry::metric(double x) const
{
    return jet(x).value;
}

double ModelGeometry::volume_density(double x) const
{
    MetricCoeffs m = metric(x);
    return std::sqrt(m.g_rr * m.g_pp * m.g_tt);
}

ModelGeometry ModelGeometry::with_neck_length(int end, double s) const
{
    if (end < 0 || end >= ends()) throw DomainError("no such end");
    GeometryConfig c = config_;
    c.s[end] = s;
    if (ends() == 1) c.s[1] = s;
    ModelGeometry g = build(c);
    g.perturbations_ = perturbations_;
    return g;
}

ModelGeometry ModelGeometry::with_neck_lengths(double s0, double s1) const
{
    GeometryConfig c = config_;
    c.s = {s0, s1};
    ModelGeometry g = build(c);
    g.perturbations_ = perturbations_;
    return g;
}

ModelGeometry ModelGeometry::with_seed(std::uint64_t seed) const
{
    GeometryConfig c = config_;
    c.seed = seed;
    ModelGeometry g = build(c);
    g.perturbations_ = perturbations_;
    return g;
}

ModelGeometry ModelGeometry::perturbed(const VariationTensor& T, double t) const
{
    ModelGeometry g = *this;
    g.perturbations_.emplace_back(T, t);
    if (!T.empty()) {
        auto [lo, hi] = T.support();
        lo = std::max(lo, 0.0);
        hi = std::min(hi, r_total_);
        for (int k = 0; k <= 2000; ++k) {
            double x = lo + (hi - lo) * k / 2000.0;
            MetricCoeffs m = g.metric(x);
            if (!(m.g_rr > 0.0 && m.g_pp > 0.0 && m.g_tt > 0.0))
                throw DomainError("perturbed metric is not positive definite");
        }
    }
    return g;
}

ModelGeometry build_geometry(const GeometryConfig& config)
{
    return ModelGeometry::build(config);
}

MetricCoeffs metric_coeffs(const ModelGeometry& g, double x)
{
    return g.metric(x);
}

double volume_density(const ModelGeometry& g, double x)
{
    return g.volume_density(x);
}

}  // namespace z2neck
