#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>

#include "fpbridge/errors.hpp"
#include "fpbridge/quadrature.hpp"
#include "fpbridge/rng.hpp"
#include "fpbridge/stats.hpp"

namespace fpbridge {

// Expected first-descent depth of the walk and of its sign-flipped dual.
// Their product is var/2 = 1/2 for any zero-mean unit-variance law.
struct LadderConstants {
    double mean_descending;
    double mean_ascending_dual;
};

// Zero-mean, unit-variance increment law with a density.
// support_[lo,hi]: mass outside is below ~1e-16, used to truncate convolution kernels.
// ramp_integral A(t) = int_{-inf}^t cdf(u) du; closed form for built-ins, quadrature fallback
// for custom laws. The density propagation engine builds its exact taps from A.
struct IncrementModel {
    std::string name;
    std::function<double(Rng&)> sample;
    std::function<double(double)> pdf;
    std::function<double(double)> cdf;
    std::function<double(double)> ramp_integral;
    double support_lo = 0.0;
    double support_hi = 0.0;
    // widest lattice spacing that keeps the propagated density near 1e-4 relative accuracy;
    // laws with pdf jumps need a finer grid than smooth ones
    double grid_h_hint = 0.025;
    std::optional<LadderConstants> ladder_exact;
    // closed-form m-step density, set only where one exists (gaussian)
    std::function<double(std::uint64_t, double)> exact_nfold;
};

inline IncrementModel make_gaussian() {
    IncrementModel m;
    m.name = "gaussian";
    m.sample = [](Rng& r) { return r.normal(); };
    m.pdf = [](double x) { return normal_pdf(x); };
    m.cdf = [](double x) { return normal_cdf(x); };
    m.ramp_integral = [](double t) { return t * normal_cdf(t) + normal_pdf(t); };
    m.support_lo = -9.0;
    m.support_hi = 9.0;
    m.grid_h_hint = 0.05;
    m.ladder_exact = LadderConstants{0.70710678118654752440, 0.70710678118654752440};
    m.exact_nfold = [](std::uint64_t n, double x) {
        double s = std::sqrt(static_cast<double>(n));
        return normal_pdf(x / s) / s;
    };
    return m;
}

// X = 1 - E with E standard exponential: density e^{x-1} on x <= 1.
inline IncrementModel make_centered_exponential() {
    IncrementModel m;
    m.name = "centered_exponential";
    m.sample = [](Rng& r) { return 1.0 - r.exponential(); };
    m.pdf = [](double x) { return x <= 1.0 ? std::exp(x - 1.0) : 0.0; };
    m.cdf = [](double x) { return x <= 1.0 ? std::exp(x - 1.0) : 1.0; };
    m.ramp_integral = [](double t) { return t <= 1.0 ? std::exp(t - 1.0) : t; };
    m.support_lo = 1.0 - 38.0;
    m.support_hi = 1.0;
    // first descent below 0 overshoots by Exp(1) (memorylessness); dual value fixed by product = 1/2
    m.ladder_exact = LadderConstants{1.0, 0.5};
    return m;
}

inline IncrementModel make_uniform_centered() {
    IncrementModel m;
    const double a = 1.7320508075688772935; // sqrt(3)
    m.name = "centered_uniform";
    m.sample = [a](Rng& r) { return a * (2.0 * r.uniform() - 1.0); };
    m.pdf = [a](double x) { return std::abs(x) <= a ? 1.0 / (2.0 * a) : 0.0; };
    m.cdf = [a](double x) {
        if (x <= -a) return 0.0;
        if (x >= a) return 1.0;
        return (x + a) / (2.0 * a);
    };
    m.ramp_integral = [a](double t) {
        if (t <= -a) return 0.0;
        if (t >= a) return t;
        double u = t + a;
        return u * u / (4.0 * a);
    };
    m.support_lo = -a;
    m.support_hi = a;
    return m;
}

// Custom law from a (pdf, cdf, inverse-cdf) triple. Mass / mean / variance are checked by
// quadrature at construction; ramp integral falls back to integrating the cdf.
inline IncrementModel make_custom(std::string name,
                                  std::function<double(double)> pdf,
                                  std::function<double(double)> cdf,
                                  std::function<double(double)> inverse_cdf,
                                  double support_lo, double support_hi) {
    if (!(support_hi > support_lo)) throw ValidationError("custom increment law: empty support");
    const double mass = integrate([&](double x) { return pdf(x); }, support_lo, support_hi, 1e-12);
    const double mean = integrate([&](double x) { return x * pdf(x); }, support_lo, support_hi, 1e-12);
    const double var = integrate([&](double x) { return x * x * pdf(x); }, support_lo, support_hi, 1e-12);
    if (std::abs(mass - 1.0) > 1e-6)
        throw ValidationError("custom increment law: density mass " + std::to_string(mass) + " != 1");
    if (std::abs(mean) > 1e-6)
        throw ValidationError("custom increment law: mean " + std::to_string(mean) + " != 0");
    if (std::abs(var - 1.0) > 1e-4)
        throw ValidationError("custom increment law: variance " + std::to_string(var) + " != 1");

    IncrementModel m;
    m.name = std::move(name);
    m.pdf = std::move(pdf);
    m.cdf = cdf;
    m.sample = [icdf = std::move(inverse_cdf)](Rng& r) { return icdf(r.uniform_pos()); };
    m.ramp_integral = [cdf = std::move(cdf), lo = support_lo](double t) {
        if (t <= lo) return 0.0;
        return integrate([&](double u) { return cdf(u); }, lo, t, 1e-12);
    };
    m.support_lo = support_lo;
    m.support_hi = support_hi;
    return m;
}

inline IncrementModel make_model(const std::string& name) {
    if (name == "gaussian") return make_gaussian();
    if (name == "exponential" || name == "centered_exponential" || name == "exp")
        return make_centered_exponential();
    if (name == "uniform" || name == "centered_uniform") return make_uniform_centered();
    throw ValidationError("unknown increment model: " + name);
}

} // namespace fpbridge
