#include "z2neck/source.hpp"

#include "z2neck/error.hpp"

#include <algorithm>
#include <random>
#include <sstream>

namespace z2neck {

SourceSpec SourceSpec::random(std::uint64_t seed, double L, const std::vector<int>& n_values, int m_max,
                              const std::string& label)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    SourceSpec s(label);
    for (int n : n_values) {
        for (int m = -m_max; m <= m_max; ++m) {
            ModeIndex mode{n, m};
            mode.validate();
            if (n <= 0) throw DomainError("SourceSpec::random: n must be positive");
            double weight = 1.0 / ((1.0 + std::abs(m)) * n);
            for (int k = 0; k < 2; ++k) {
                Bump b;
                b.center = L * (0.3 + 0.4 * unit(rng));
                b.half_width = L * (0.08 + 0.07 * unit(rng));
                double re = 2.0 * unit(rng) - 1.0;
                double im = 2.0 * unit(rng) - 1.0;
                s.add(mode, b, weight * std::complex<double>(re, im));
            }
        }
    }
    return s;
}

void SourceSpec::add(ModeIndex mode, const Bump& shape, std::complex<double> amplitude)
{
    mode.validate();
    if (mode.n < 0) {
        mode = {-mode.n, -mode.m};
        amplitude = std::conj(amplitude);
    }
    terms_[mode].add(shape, amplitude);
}

std::complex<double> SourceSpec::profile(ModeIndex mode, double xi) const
{
    bool conj = mode.n < 0;
    if (conj) mode = {-mode.n, -mode.m};
    auto it = terms_.find(mode);
    if (it == terms_.end()) return 0.0;
    std::complex<double> v = it->second.value(xi);
    return conj ? std::conj(v) : v;
}

bool SourceSpec::has_mode(ModeIndex mode) const
{
    if (mode.n < 0) mode = {-mode.n, -mode.m};
    return terms_.count(mode) > 0;
}

std::vector<ModeIndex> SourceSpec::modes() const
{
    std::vector<ModeIndex> out;
    for (const auto& [k, v] : terms_) out.push_back(k);
    return out;
}

RadialSource SourceSpec::radial(const ModelGeometry& g, ModeIndex mode) const
{
    double xs = g.interior_start();
    bool conj = mode.n < 0;
    if (conj) mode = {-mode.n, -mode.m};
    auto it = terms_.find(mode);
    if (it == terms_.end()) return [](double) { return std::complex<double>(0.0); };
    ComplexBumpSum sum = it->second;
    return [sum, xs, conj](double x) {
        std::complex<double> v = sum.value(x - xs);
        return conj ? std::conj(v) : v;
    };
}

std::pair<double, double> SourceSpec::support() const
{
    bool any = false;
    double lo = 0.0, hi = 0.0;
    for (const auto& [mode, sum] : terms_) {
        if (sum.empty()) continue;
        auto [a, b] = sum.support();
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

void SourceSpec::validate(double L) const
{
    for (const auto& [mode, sum] : terms_) {
        mode.validate();
        if (sum.empty()) continue;
        auto [a, b] = sum.support();
        if (a <= 0.0 || b >= L) {
            std::ostringstream os;
            os << "source " << label_ << " mode " << mode.label() << ": support [" << a << ", " << b
               << "] leaves the interior segment [0, " << L << "]";
            throw PreconditionError(os.str());
        }
    }
}

bool SourceSpec::empty() const
{
    for (const auto& [mode, sum] : terms_)
        for (const auto& t : sum.terms())
            if (t.amplitude != 0.0) return false;
    return true;
}

SourceSpec SourceSpec::scaled(double factor) const
{
    SourceSpec out(label_);
    for (const auto& [mode, sum] : terms_) out.terms_[mode] = sum.scaled(factor);
    return out;
}

SourceSpec& SourceSpec::operator+=(const SourceSpec& other)
{
    for (const auto& [mode, sum] : other.terms_) terms_[mode] += sum;
    return *this;
}

SourceSpec operator+(SourceSpec a, const SourceSpec& b)
{
    a += b;
    return a;
}

SourceSpec combine(const std::vector<SourceSpec>& sources, const std::vector<double>& coeffs)
{
    if (sources.size() != coeffs.size()) throw DomainError("combine: size mismatch");
    SourceSpec out;
    for (std::size_t k = 0; k < sources.size(); ++k) out += sources[k].scaled(coeffs[k]);
    return out;
}

}  // namespace z2neck
