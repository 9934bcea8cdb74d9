#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "fpbridge/asymptotics.hpp"
#include "fpbridge/boundaries.hpp"
#include "fpbridge/errors.hpp"
#include "fpbridge/estimators.hpp"
#include "fpbridge/increments.hpp"
#include "fpbridge/parallel.hpp"
#include "fpbridge/rng.hpp"
#include "fpbridge/stats.hpp"

namespace fpbridge {

// Default-capacity cascade: n agents with capacity thresholds theta + i - 1 - g(i), demand
// given by n iid uniform loads scaled to [0, n]. The cascade size A_n is the number of
// agents that fail. Equivalently: A_n >= k iff the k smallest of n uniforms sit below the
// normalised curve a_i = (theta + i - 1 - g(i)) / n.
//
// Sign convention: a positive perturbation g(i) LOWERS the curve (harder to stay below).
struct CascadeConfig {
    std::uint64_t n = 0;
    double theta = 1.0;
    std::function<double(std::uint64_t)> perturbation; // g(i), 1-based; null means 0
    std::string perturb_desc = "none";

    double curve(std::uint64_t i) const {
        const double gi = perturbation ? perturbation(i) : 0.0;
        const double v = (theta + static_cast<double>(i) - 1.0 - gi) / static_cast<double>(n);
        return std::clamp(v, 0.0, 1.0);
    }

    void validate() const {
        if (n < 1) throw ValidationError("CascadeConfig: n must be >= 1");
        if (!(theta > 0.0)) throw ValidationError("CascadeConfig: theta must be positive");
    }
};

// "none" | "constant:c" | "power:c,alpha"  with g(i) = c * i^alpha (positive convention).
inline CascadeConfig parse_cascade_perturbation(CascadeConfig cfg, const std::string& text) {
    cfg.perturb_desc = text;
    if (text.empty() || text == "none") {
        cfg.perturbation = nullptr;
        cfg.perturb_desc = "none";
        return cfg;
    }
    auto colon = text.find(':');
    const std::string family = text.substr(0, colon);
    const std::string args = colon == std::string::npos ? "" : text.substr(colon + 1);
    try {
        if (family == "constant") {
            const double c = std::stod(args);
            cfg.perturbation = [c](std::uint64_t) { return c; };
            return cfg;
        }
        if (family == "power") {
            auto comma = args.find(',');
            if (comma == std::string::npos) throw ValidationError("power perturbation needs c,alpha");
            const double c = std::stod(args.substr(0, comma));
            const double alpha = std::stod(args.substr(comma + 1));
            cfg.perturbation = [c, alpha](std::uint64_t i) {
                return c * std::pow(static_cast<double>(i), alpha);
            };
            return cfg;
        }
    } catch (const std::invalid_argument&) {
        throw ValidationError("parse_cascade_perturbation: bad number in '" + text + "'");
    }
    throw ValidationError("parse_cascade_perturbation: unknown family '" + family + "'");
}

// Keys: n, theta, perturb. Unknown keys are rejected so typos fail loudly.
inline CascadeConfig parse_cascade_config(const std::map<std::string, std::string>& kv) {
    CascadeConfig cfg;
    std::string perturb = "none";
    for (const auto& [key, val] : kv) {
        try {
            if (key == "n") cfg.n = static_cast<std::uint64_t>(std::stoull(val));
            else if (key == "theta") cfg.theta = std::stod(val);
            else if (key == "perturb") perturb = val;
            else throw ValidationError("parse_cascade_config: unknown key '" + key + "'");
        } catch (const std::invalid_argument&) {
            throw ValidationError("parse_cascade_config: bad value for '" + key + "'");
        }
    }
    cfg = parse_cascade_perturbation(std::move(cfg), perturb);
    cfg.validate();
    return cfg;
}

// One cascade draw. The order statistics are generated sequentially,
//   1 - U_(i) = (1 - U_(i-1)) * W^(1/(n-i+1)),   W ~ uniform(0,1),
// which has the same joint law as sorting n uniforms but lets us stop at the first
// index whose order statistic clears the curve. A_n is that index minus one.
inline std::uint64_t simulate_cascade_size(const CascadeConfig& cfg, Rng& rng) {
    cfg.validate();
    double one_minus_u = 1.0;
    for (std::uint64_t i = 1; i <= cfg.n; ++i) {
        const double w = rng.uniform_pos();
        one_minus_u *= std::pow(w, 1.0 / static_cast<double>(cfg.n - i + 1));
        const double u_i = 1.0 - one_minus_u;
        if (u_i > cfg.curve(i)) return i - 1;
    }
    return cfg.n;
}

struct CascadeTailEstimate {
    EstimateRecord record;     // P(A_n >= k)
    std::uint64_t k = 0;
};

inline CascadeTailEstimate estimate_cascade_tail(const CascadeConfig& cfg, std::uint64_t k,
                                                 std::uint64_t reps, std::uint64_t master_seed) {
    cfg.validate();
    if (k > cfg.n) throw ValidationError("estimate_cascade_tail: k must be <= n");
    if (reps == 0) throw ValidationError("estimate_cascade_tail: reps must be positive");
    auto parts = run_blocks<std::uint64_t>(reps, kDefaultBlock,
        [&](std::uint64_t lo, std::uint64_t hi) {
            std::uint64_t hits = 0;
            for (std::uint64_t r = lo; r < hi; ++r) {
                Rng rng(master_seed, r);
                if (simulate_cascade_size(cfg, rng) >= k) ++hits;
            }
            return hits;
        });
    std::uint64_t hits = 0;
    for (auto p : parts) hits += p;

    CascadeTailEstimate out;
    out.k = k;
    out.record.value = static_cast<double>(hits) / static_cast<double>(reps);
    out.record.std_error = binomial_std_error(out.record.value, reps);
    out.record.samples = reps;
    out.record.method = Method::bridge_direct;
    out.record.seed = master_seed;
    return out;
}

struct ExactCrossing {
    double probability = 0.0;
    double mass_defect = 0.0;  // |1 - kept - killed| after the recursion; pure fp noise
    bool unstable = false;     // defect above 1e-8
};

// P(A_n >= k) exactly, by a forward recursion over c_i = #{uniforms <= b_i} where the
// b_i are the suffix minima of the curve over [i, k] (sharpening the thresholds this way
// makes them non-decreasing without changing the event, since order statistics are
// sorted). The event is {c_i >= i for all i <= k}; conditioning level by level only ever
// adds nonnegative binomial mass, so there is no alternating-sum cancellation. Capped at
// n = 200 to keep the O(k n^2) recursion instant.
inline ExactCrossing exact_crossing_probability(const CascadeConfig& cfg, std::uint64_t k) {
    cfg.validate();
    if (k > cfg.n) throw ValidationError("exact_crossing_probability: k must be <= n");
    if (cfg.n > 200) throw ValidationError("exact_crossing_probability: n capped at 200");
    if (k == 0) return {1.0, 0.0, false};

    const auto n = static_cast<std::size_t>(cfg.n);
    std::vector<double> b(k);
    for (std::uint64_t i = 1; i <= k; ++i) b[i - 1] = cfg.curve(i);
    for (std::size_t i = k - 1; i-- > 0;) b[i] = std::min(b[i], b[i + 1]);
    if (b[0] <= 0.0) return {0.0, 0.0, false};

    std::vector<double> lf(n + 1);
    for (std::size_t i = 1; i <= n; ++i) lf[i] = lf[i - 1] + std::log(static_cast<double>(i));
    auto binom_pmf = [&](std::size_t trials, double p, std::size_t j) {
        if (p <= 0.0) return j == 0 ? 1.0 : 0.0;
        if (p >= 1.0) return j == trials ? 1.0 : 0.0;
        const double lp = std::log(p);
        const double l1p = std::log1p(-p);
        const auto jd = static_cast<double>(j);
        const auto rd = static_cast<double>(trials - j);
        return std::exp(lf[trials] - lf[j] - lf[trials - j] + jd * lp + rd * l1p);
    };

    std::vector<double> dist(n + 1, 0.0), next(n + 1, 0.0);
    dist[0] = 1.0;
    double prev_b = 0.0;
    double killed = 0.0;
    for (std::uint64_t level = 1; level <= k; ++level) {
        const double denom = 1.0 - prev_b;
        const double q = denom > 0.0 ? (b[level - 1] - prev_b) / denom : 0.0;
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t m = 0; m <= n; ++m) {
            if (dist[m] == 0.0) continue;
            for (std::size_t j = 0; j + m <= n; ++j)
                next[m + j] += dist[m] * binom_pmf(n - m, q, j);
        }
        std::swap(dist, next);
        for (std::size_t c = 0; c < level && c <= n; ++c) {
            killed += dist[c];
            dist[c] = 0.0;
        }
        prev_b = b[level - 1];
    }

    ExactCrossing out;
    for (double d : dist) out.probability += d;
    out.mass_defect = std::abs(1.0 - out.probability - killed);
    out.unstable = out.mass_defect > 1e-8;
    return out;
}

struct CascadeComparison {
    CascadeTailEstimate mc;        // order-statistics Monte Carlo
    EstimateRecord bridge;         // weighted exponential-walk estimate
    double exact = std::numeric_limits<double>::quiet_NaN(); // recursion, when n <= 200
    double asymptotic = 0.0;       // sqrt(2/pi) L sqrt((n-k)/n) / sqrt(k) with L = theta
    double l_used = 0.0;
};

// The uniform order-statistic event {A_n >= k} equals a first-passage event for the
// centred exponential walk over the boundary 1 - theta + g(i), pinned at S_{n+1} = 1.
// The weighted estimator pins at S_n = 0 instead; the two conditionings differ by a
// relative O(1/n), which is visible at small n and fades in the comparison as n grows.
inline CascadeComparison cascade_vs_bridge(const CascadeConfig& cfg, std::uint64_t k,
                                           std::uint64_t reps, std::uint64_t master_seed,
                                           const GridConfig& grid = {},
                                           double l_override = 0.0) {
    cfg.validate();
    if (k < 1 || k + 2 > cfg.n) throw ValidationError("cascade_vs_bridge: need 1 <= k <= n - 2");

    CascadeComparison out;
    out.mc = estimate_cascade_tail(cfg, k, reps, mix_seed(master_seed, 1));

    std::vector<double> gvals(k);
    for (std::uint64_t i = 1; i <= k; ++i) {
        const double gi = cfg.perturbation ? cfg.perturbation(i) : 0.0;
        gvals[i - 1] = 1.0 - cfg.theta + gi;
    }
    BoundarySequence g = BoundarySequence::table(std::move(gvals));
    IncrementModel model = make_centered_exponential();
    out.bridge = estimate_conditional_survival_weighted(model, g, cfg.n, k, reps,
                                                        mix_seed(master_seed, 2), grid);

    if (cfg.n <= 200) out.exact = exact_crossing_probability(cfg, k).probability;
    out.l_used = l_override > 0.0 ? l_override : cfg.theta;
    out.asymptotic = theorem1_value(cfg.n, k, out.l_used);
    return out;
}

} // namespace fpbridge
