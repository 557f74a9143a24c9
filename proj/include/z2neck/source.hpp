#pragma once

#include "z2neck/geometry.hpp"
#include "z2neck/radial_ode.hpp"
#include "z2neck/smooth.hpp"

#include <complex>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace z2neck {

using RadialSource = std::function<std::complex<double>(double x)>;

// per-mode interior source profiles f_nm(xi), xi measured from the start of the interior segment;
// stored for n > 0, the n < 0 profiles follow by conjugate symmetry
class SourceSpec {
public:
    SourceSpec() = default;
    explicit SourceSpec(std::string label) : label_(std::move(label)) {}

    static SourceSpec random(std::uint64_t seed, double interior_length, const std::vector<int>& n_values,
                             int m_max, const std::string& label = "");

    const std::string& label() const { return label_; }
    void set_label(std::string l) { label_ = std::move(l); }

    void add(ModeIndex mode, const Bump& shape, std::complex<double> amplitude);
    std::complex<double> profile(ModeIndex mode, double xi) const;
    bool has_mode(ModeIndex mode) const;
    std::vector<ModeIndex> modes() const;
    const std::map<ModeIndex, ComplexBumpSum>& terms() const { return terms_; }

    RadialSource radial(const ModelGeometry& g, ModeIndex mode) const;
    // hull of all supports in xi
    std::pair<double, double> support() const;
    void validate(double interior_length) const;
    bool empty() const;

    SourceSpec scaled(double factor) const;
    SourceSpec& operator+=(const SourceSpec& other);

private:
    std::string label_;
    std::map<ModeIndex, ComplexBumpSum> terms_;
};

SourceSpec operator+(SourceSpec a, const SourceSpec& b);
// sum_k coeffs[k] * sources[k]
SourceSpec combine(const std::vector<SourceSpec>& sources, const std::vector<double>& coeffs);

}  // namespace z2neck
