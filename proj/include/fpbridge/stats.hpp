#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace fpbridge {

inline double normal_pdf(double x) { return 0.39894228040143267794 * std::exp(-0.5 * x * x); }

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x * 0.70710678118654752440); }

// int_y^inf e^{-x^2/2} dx, accurate in the far tail via erfc
inline double gauss_upper_tail(double y) {
    return 1.25331413731550025121 * std::erfc(y * 0.70710678118654752440);
}

// sum / sum-of-squares accumulator; merging is associative so block folds stay deterministic
struct Accum {
    double sum = 0.0;
    double sum2 = 0.0;
    std::uint64_t n = 0;

    void add(double x) {
        sum += x;
        sum2 += x * x;
        ++n;
    }
    Accum& operator+=(const Accum& o) {
        sum += o.sum;
        sum2 += o.sum2;
        n += o.n;
        return *this;
    }
    double mean() const { return n ? sum / static_cast<double>(n) : 0.0; }
    double variance() const {
        if (n < 2) return 0.0;
        double m = mean();
        double v = (sum2 - static_cast<double>(n) * m * m) / static_cast<double>(n - 1);
        return v > 0.0 ? v : 0.0;
    }
    double std_error() const { return n ? std::sqrt(variance() / static_cast<double>(n)) : 0.0; }
};

inline double binomial_std_error(double p_hat, std::uint64_t n) {
    if (n == 0) return 0.0;
    double v = p_hat * (1.0 - p_hat);
    return v > 0.0 ? std::sqrt(v / static_cast<double>(n)) : 0.0;
}

enum class Method { bridge_direct, weighted, window, kernel };

inline const char* method_name(Method m) {
    switch (m) {
        case Method::bridge_direct: return "bridge_direct";
        case Method::weighted: return "weighted";
        case Method::window: return "window";
        case Method::kernel: return "kernel";
    }
    return "?";
}

struct EstimateRecord {
    double value = 0.0;
    double std_error = 0.0;      // 0 for kernel results
    std::uint64_t samples = 0;   // replicate count; 0 for kernel
    Method method = Method::kernel;
    std::uint64_t seed = 0;
    double quadrature_loss = 0.0; // kernel only: bound on mass lost to truncation
    bool degenerate = false;      // set when the estimate should not be trusted
    std::string note;
};

// sup |F_n - F| for sorted samples against a reference cdf
template <class Cdf>
double ks_distance(const std::vector<double>& sorted, Cdf cdf) {
    const double n = static_cast<double>(sorted.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        double f = cdf(sorted[i]);
        d = std::max(d, std::abs(f - static_cast<double>(i) / n));
        d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
    }
    return d;
}

inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double d = 0.0;
    std::size_t i = 0, j = 0;
    // consume every copy of the current value from both samples before comparing, so
    // tied (discrete) data measures the cdf gap at the value, not inside the tie block
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == x) ++i;
        while (j < b.size() && b[j] == x) ++j;
        double fa = static_cast<double>(i) / static_cast<double>(a.size());
        double fb = static_cast<double>(j) / static_cast<double>(b.size());
        d = std::max(d, std::abs(fa - fb));
    }
    return d;
}

// asymptotic Kolmogorov critical value at level alpha, scaled for one or two samples
inline double ks_critical_one(double alpha, std::uint64_t n) {
    return std::sqrt(-0.5 * std::log(alpha / 2.0)) / std::sqrt(static_cast<double>(n));
}

inline double ks_critical_two(double alpha, std::uint64_t n, std::uint64_t m) {
    double nn = static_cast<double>(n), mm = static_cast<double>(m);
    return std::sqrt(-0.5 * std::log(alpha / 2.0)) * std::sqrt((nn + mm) / (nn * mm));
}

} // namespace fpbridge
