#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "fpbridge/errors.hpp"
#include "fpbridge/quadrature.hpp"
#include "fpbridge/stats.hpp"
#include "fpbridge/walk_sim.hpp"

namespace fpbridge {

// FAR: lim k/n < 1. The NEAR_* regimes split k = n - o(n) by the size of |g_k| against
// sqrt(n-k): small o(.), critical Theta(.), large omega(.) with g_k < 0.
enum class RegimeLabel { FAR, NEAR_SMALL, NEAR_CRITICAL, NEAR_LARGE };

inline const char* regime_name(RegimeLabel r) {
    switch (r) {
        case RegimeLabel::FAR: return "far";
        case RegimeLabel::NEAR_SMALL: return "near_small";
        case RegimeLabel::NEAR_CRITICAL: return "near_critical";
        case RegimeLabel::NEAR_LARGE: return "near_large";
    }
    return "?";
}

inline RegimeLabel parse_regime(const std::string& s) {
    if (s == "far") return RegimeLabel::FAR;
    if (s == "near_small") return RegimeLabel::NEAR_SMALL;
    if (s == "near_critical") return RegimeLabel::NEAR_CRITICAL;
    if (s == "near_large") return RegimeLabel::NEAR_LARGE;
    throw ValidationError("unknown regime label: " + s);
}

inline constexpr double kSqrt2OverPi = 0.79788456080286535588; // sqrt(2/pi)

// gamma(y) = e^{-y^2/2} - y int_y^inf e^{-x^2/2} dx, decreasing from 1 to 0 on [0,inf)
inline double gamma_fn(double y) {
    if (y < 0.0) throw ValidationError("gamma_fn: negative argument");
    return std::exp(-0.5 * y * y) - y * gauss_upper_tail(y);
}

namespace asymdetail {
// Sign-carrying extension: for s < 0 the integral term flips sign and the function grows
// like |s| sqrt(2 pi). This is what makes the critical formula continuous into the deep-
// boundary regime instead of collapsing to 0.
inline double gamma_signed(double s) {
    return std::exp(-0.5 * s * s) - s * gauss_upper_tail(s);
}
}

// P(tau_g > k | S_n = 0) ~ sqrt(2/pi) L sqrt((n-k)/n) / sqrt(k), k/n bounded away from 1
inline double theorem1_value(std::uint64_t n, std::uint64_t k, double L) {
    if (k < 1 || k >= n) throw ValidationError("theorem1_value: need 1 <= k < n");
    const double nn = static_cast<double>(n), kk = static_cast<double>(k);
    return kSqrt2OverPi * L * std::sqrt((nn - kk) / nn) / std::sqrt(kk);
}

// The k = n - o(n) phase transition. g_k enters only through the NEAR_CRITICAL and
// NEAR_LARGE branches.
inline double theorem2_value(std::uint64_t n, std::uint64_t k, double L, double g_k,
                             RegimeLabel regime) {
    if (k < 1 || k >= n) throw ValidationError("theorem2_value: need 1 <= k < n");
    const double nn = static_cast<double>(n), kk = static_cast<double>(k);
    const double rest = nn - kk;
    switch (regime) {
        case RegimeLabel::NEAR_SMALL:
            return kSqrt2OverPi * L * std::sqrt(rest) / kk;
        case RegimeLabel::NEAR_CRITICAL:
            return kSqrt2OverPi * L * asymdetail::gamma_signed(g_k / std::sqrt(rest)) *
                   std::sqrt(rest) / kk;
        case RegimeLabel::NEAR_LARGE:
            if (!(g_k < 0.0))
                throw ValidationError("theorem2_value: NEAR_LARGE requires g_k < 0");
            return 2.0 * L * (-g_k) / kk;
        case RegimeLabel::FAR:
            throw ValidationError("theorem2_value: FAR regime belongs to theorem1_value");
    }
    throw ValidationError("theorem2_value: bad regime");
}

// regime dispatch used by the sweep harness
inline double asymptotic_value(std::uint64_t n, std::uint64_t k, double L, double g_k,
                               RegimeLabel regime) {
    return regime == RegimeLabel::FAR ? theorem1_value(n, k, L)
                                      : theorem2_value(n, k, L, g_k, regime);
}

// limiting tail of S_n/sqrt(n) given survival: P(S_n > g_n + v sqrt(n) | tau > n) -> e^{-v^2/2}
inline double rayleigh_tail(double v) {
    if (v < 0.0) throw ValidationError("rayleigh_tail: negative argument");
    return std::exp(-0.5 * v * v);
}

// P(tau_g > k) ~ sqrt(2/pi) L / sqrt(k)
inline double tau_tail_value(std::uint64_t k, double L) {
    if (k < 1) throw ValidationError("tau_tail_value: k must be >= 1");
    return kSqrt2OverPi * L / std::sqrt(static_cast<double>(k));
}

// Brownian meander transition density q(u,v)
inline double meander_density_q(double u, double v) {
    if (!(u > 0.0) || !(v > 0.0)) throw ValidationError("meander_density_q: need u, v > 0");
    const double um = u - v, up = u + v;
    return (std::exp(-0.5 * um * um) - std::exp(-0.5 * up * up)) / std::sqrt(2.0 * M_PI);
}

enum class DoneyRegime { i, ii_a, ii_b, iii };

inline const char* doney_regime_name(DoneyRegime r) {
    switch (r) {
        case DoneyRegime::i: return "i";
        case DoneyRegime::ii_a: return "ii_a";
        case DoneyRegime::ii_b: return "ii_b";
        case DoneyRegime::iii: return "iii";
    }
    return "?";
}

// P(S_n in [y, y+Delta), T_0 > n | S_0 = x), with (x, y) scaling picking the display:
//   i:    both o(sqrt n):   V(x) int_y^{y+Delta} U / (sqrt(2 pi) n^{3/2})
//   ii_a: x small, y ~ sqrt n: sqrt(2/pi) E(-S_{T0}) V(x) Delta/sqrt(n) (y/n) e^{-y^2/2n}
//   ii_b: the x <-> y dual with U and the flipped-walk constant
//   iii:  both ~ sqrt n:    Delta q(x/sqrt n, y/sqrt n) / sqrt n
inline double doney_regime_density(DoneyRegime regime, double x, double y, std::uint64_t n,
                                   double delta, const LadderStats& ladder) {
    if (x < 0.0 || y < 0.0) throw ValidationError("doney_regime_density: need x, y >= 0");
    if (!(delta > 0.0)) throw ValidationError("doney_regime_density: need Delta > 0");
    if (n < 1) throw ValidationError("doney_regime_density: need n >= 1");
    const double nn = static_cast<double>(n);
    switch (regime) {
        case DoneyRegime::i: {
            // trapezoid over the ladder table, fine enough for the table's own grid
            const int steps = 64;
            double acc = 0.0;
            for (int s = 0; s < steps; ++s) {
                const double w0 = y + delta * s / steps;
                const double w1 = y + delta * (s + 1) / steps;
                acc += 0.5 * (ladder.u_at(w0) + ladder.u_at(w1)) * (w1 - w0);
            }
            return ladder.v_at(x) * acc / (std::sqrt(2.0 * M_PI) * nn * std::sqrt(nn));
        }
        case DoneyRegime::ii_a:
            return kSqrt2OverPi * ladder.mean_descending * ladder.v_at(x) * delta /
                   std::sqrt(nn) * (y / nn) * std::exp(-0.5 * y * y / nn);
        case DoneyRegime::ii_b:
            return kSqrt2OverPi * ladder.mean_ascending_dual * ladder.u_at(y) * delta /
                   std::sqrt(nn) * (x / nn) * std::exp(-0.5 * x * x / nn);
        case DoneyRegime::iii:
            return delta * meander_density_q(x / std::sqrt(nn), y / std::sqrt(nn)) /
                   std::sqrt(nn);
    }
    throw ValidationError("doney_regime_density: bad regime");
}

enum class Prop2Branch { small_t, large_t };

// killed-walk position density P(S_k in dt; tau_g > k)/dt, prefactor sqrt(2/pi) L / k^{3/2}
inline double prop2_density(double t, std::uint64_t k, double L, double g_k,
                            const LadderStats& ladder, Prop2Branch branch) {
    if (k < 1) throw ValidationError("prop2_density: k must be >= 1");
    if (t < g_k) throw ValidationError("prop2_density: need t >= g_k");
    const double kk = static_cast<double>(k);
    const double pref = kSqrt2OverPi * L / (kk * std::sqrt(kk));
    switch (branch) {
        case Prop2Branch::small_t:
            return pref * ladder.mean_ascending_dual * ladder.u_at(t - g_k);
        case Prop2Branch::large_t:
            return pref * t * std::exp(-0.5 * t * t / kk);
    }
    throw ValidationError("prop2_density: bad branch");
}

// ---- Appendix integral identities, closed forms --------------------------------------

// int_x^inf y^2 e^{-y^2/(2 e(1-e))} dy
inline double lemma_B1(double x, double eps) {
    if (x < 0.0) throw ValidationError("lemma_B1: need x >= 0");
    if (!(eps > 0.0 && eps < 1.0)) throw ValidationError("lemma_B1: eps outside (0,1)");
    const double a2 = eps * (1.0 - eps);
    const double a = std::sqrt(a2);
    return x * a2 * std::exp(-0.5 * x * x / a2) + a2 * a * gauss_upper_tail(x / a);
}

// int_0^inf y/(1-e) e^{-y^2/(2(1-e))} (e^{-(y-c)^2/(2e)} - e^{-(y+c)^2/(2e)}) dy
inline double lemma_B2_full(double c, double eps) {
    if (!(c > 0.0)) throw ValidationError("lemma_B2_full: need c > 0");
    if (!(eps > 0.0 && eps < 1.0)) throw ValidationError("lemma_B2_full: eps outside (0,1)");
    return std::sqrt(2.0 * M_PI) * std::sqrt(eps * (1.0 - eps)) * c * std::exp(-0.5 * c * c);
}

// the same integrand stopped at x; completing the square turns each part into shifted
// Gaussian moments around b = (1-e)c with width a = sqrt(e(1-e))
inline double lemma_B2_partial(double x, double c, double eps) {
    if (x < 0.0) throw ValidationError("lemma_B2_partial: need x >= 0");
    if (!(c > 0.0)) throw ValidationError("lemma_B2_partial: need c > 0");
    if (!(eps > 0.0 && eps < 1.0)) throw ValidationError("lemma_B2_partial: eps outside (0,1)");
    const double a2 = eps * (1.0 - eps);
    const double a = std::sqrt(a2);
    const double b = (1.0 - eps) * c;
    // int_lo^hi e^{-t^2/2} dt. Windows that sit entirely in one tail must be reflected to
    // the positive side first: differencing (sqrt(2 pi) - tiny) terms erases the result.
    auto seg = [&](double lo, double hi) {
        if (hi <= 0.0) return gauss_upper_tail(-hi) - gauss_upper_tail(-lo);
        if (lo >= 0.0) return gauss_upper_tail(lo) - gauss_upper_tail(hi);
        return 2.5066282746310005024 - gauss_upper_tail(-lo) - gauss_upper_tail(hi);
    };
    const double t0 = -b / a, t1 = (x - b) / a;
    const double s0 = b / a, s1 = (x + b) / a;
    const double minus_part = a * b * seg(t0, t1) +
                              a2 * (std::exp(-0.5 * t0 * t0) - std::exp(-0.5 * t1 * t1));
    const double plus_part = a2 * (std::exp(-0.5 * s0 * s0) - std::exp(-0.5 * s1 * s1)) -
                             a * b * seg(s0, s1);
    return std::exp(-0.5 * c * c) / (1.0 - eps) * (minus_part - plus_part);
}

// int_a^b y e^{-(y+g_k)^2/(2(n-k))} dy, b may be infinite
inline double lemma_B3(double a, double b, double g_k, std::uint64_t n, std::uint64_t k) {
    if (n <= k) throw ValidationError("lemma_B3: need n > k");
    if (!(a >= 0.0) || !(b >= a)) throw ValidationError("lemma_B3: need 0 <= a <= b");
    const double m = static_cast<double>(n - k);
    const double sm = std::sqrt(m);
    const double za = (a + g_k) / sm;
    if (std::isinf(b))
        return m * std::exp(-0.5 * za * za) - g_k * sm * gauss_upper_tail(za);
    const double zb = (b + g_k) / sm;
    return m * (std::exp(-0.5 * za * za) - std::exp(-0.5 * zb * zb)) -
           g_k * sm * (gauss_upper_tail(za) - gauss_upper_tail(zb));
}

// ---- closed form vs quadrature lattice check (the `identities` command) --------------

struct IdentityCheckRow {
    std::string lemma;
    double p1 = 0, p2 = 0, p3 = 0;
    double closed = 0, quad = 0, rel_err = 0;
};

struct IdentityCheckReport {
    std::vector<IdentityCheckRow> rows;
    double max_rel_error = 0.0;
};

inline IdentityCheckReport check_integral_identities() {
    IdentityCheckReport rep;
    auto push = [&](const char* lemma, double p1, double p2, double p3, double closed,
                    double quad) {
        IdentityCheckRow r;
        r.lemma = lemma;
        r.p1 = p1;
        r.p2 = p2;
        r.p3 = p3;
        r.closed = closed;
        r.quad = quad;
        const double scale = std::max({std::abs(closed), std::abs(quad), 1e-300});
        r.rel_err = std::abs(closed - quad) / scale;
        rep.rows.push_back(r);
        if (r.rel_err > rep.max_rel_error) rep.max_rel_error = r.rel_err;
    };

    for (int i = 0; i < 10; ++i) {
        const double x = 0.25 * i;
        for (int j = 0; j < 10; ++j) {
            const double eps = 0.05 + 0.1 * j;
            const double a2 = eps * (1.0 - eps);
            const double quad = integrate_to_inf(
                [&](double y) { return y * y * std::exp(-0.5 * y * y / a2); }, x,
                x + 14.0 * std::sqrt(a2), 1e-13);
            push("B1", x, eps, 0, lemma_B1(x, eps), quad);
        }
    }

    for (int i = 0; i < 10; ++i) {
        const double c = 0.3 + 0.3 * i;
        for (int j = 0; j < 10; ++j) {
            const double eps = 0.05 + 0.1 * j;
            auto f = [&](double y) {
                const double ym = y - c, yp = y + c;
                return y / (1.0 - eps) * std::exp(-0.5 * y * y / (1.0 - eps)) *
                       (std::exp(-0.5 * ym * ym / eps) - std::exp(-0.5 * yp * yp / eps));
            };
            const double cut = c + 14.0 * std::sqrt(eps) + 14.0 * std::sqrt(1.0 - eps);
            push("B2_full", c, eps, 0, lemma_B2_full(c, eps),
                 integrate_to_inf(f, 0.0, cut, 1e-13));
            const double x = 0.2 + 0.35 * j;
            push("B2_partial", x, c, eps, lemma_B2_partial(x, c, eps),
                 integrate(f, 0.0, x, 1e-13));
        }
    }

    const double gs[] = {-2.0, 0.5};
    const std::uint64_t rests[] = {16, 100};
    for (double g : gs)
        for (std::uint64_t rest : rests)
            for (int i = 0; i < 5; ++i) {
                const double a = 0.5 * i;
                for (int j = 0; j < 5; ++j) {
                    const double m = static_cast<double>(rest);
                    auto f = [&](double y) {
                        const double z = y + g;
                        return y * std::exp(-0.5 * z * z / m);
                    };
                    const double b = a + (j + 1) * 0.8 * std::sqrt(m);
                    push("B3", a, b, g, lemma_B3(a, b, g, 100 + rest, 100),
                         integrate(f, a, b, 1e-13));
                    if (j == 4)
                        push("B3inf", a, std::numeric_limits<double>::infinity(), g,
                             lemma_B3(a, std::numeric_limits<double>::infinity(), g,
                                      100 + rest, 100),
                             integrate_to_inf(f, a, std::abs(g) + 14.0 * std::sqrt(m), 1e-13));
                }
            }

    return rep;
}

} // namespace fpbridge
