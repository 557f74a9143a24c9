#pragma once

#include <complex>
#include <utility>
#include <vector>

namespace z2neck {

namespace smooth {

// C-infinity step: 0 for t <= 0, 1 for t >= 1
double step(double t);
double step_d1(double t);
double step_d2(double t);
// integral of step over [0, t]
double step_integral(double t);

// bump exp(1 - 1/(1 - t^2)) on (-1, 1), peak value 1
double bump(double t);
double bump_d1(double t);
double bump_d2(double t);
double bump_integral();

}  // namespace smooth

struct Bump {
    double center = 0.0;
    double half_width = 1.0;

    double value(double x) const;
    double d1(double x) const;
    double d2(double x) const;
    double lo() const { return center - half_width; }
    double hi() const { return center + half_width; }
    double integral() const;
};

template <class T>
struct WeightedBump {
    Bump shape;
    T amplitude{};
};

template <class T>
class BumpSum {
public:
    BumpSum() = default;
    explicit BumpSum(std::vector<WeightedBump<T>> terms) : terms_(std::move(terms)) {}

    void add(const Bump& b, T amplitude) { terms_.push_back({b, amplitude}); }

    T value(double x) const
    {
        T acc{};
        for (const auto& t : terms_) acc += t.amplitude * t.shape.value(x);
        return acc;
    }
    T d1(double x) const
    {
        T acc{};
        for (const auto& t : terms_) acc += t.amplitude * t.shape.d1(x);
        return acc;
    }
    T d2(double x) const
    {
        T acc{};
        for (const auto& t : terms_) acc += t.amplitude * t.shape.d2(x);
        return acc;
    }

    bool empty() const { return terms_.empty(); }
    const std::vector<WeightedBump<T>>& terms() const { return terms_; }

    // closed hull of the supports; {0,0} when empty
    std::pair<double, double> support() const
    {
        if (terms_.empty()) return {0.0, 0.0};
        double lo = terms_.front().shape.lo(), hi = terms_.front().shape.hi();
        for (const auto& t : terms_) {
            lo = std::min(lo, t.shape.lo());
            hi = std::max(hi, t.shape.hi());
        }
        return {lo, hi};
    }

    BumpSum scaled(T factor) const
    {
        BumpSum out = *this;
        for (auto& t : out.terms_) t.amplitude *= factor;
        return out;
    }
    BumpSum shifted(double dx) const
    {
        BumpSum out = *this;
        for (auto& t : out.terms_) t.shape.center += dx;
        return out;
    }
    BumpSum& operator+=(const BumpSum& other)
    {
        terms_.insert(terms_.end(), other.terms_.begin(), other.terms_.end());
        return *this;
    }

private:
    std::vector<WeightedBump<T>> terms_;
};

using RealBumpSum = BumpSum<double>;
using ComplexBumpSum = BumpSum<std::complex<double>>;

}  // namespace z2neck
