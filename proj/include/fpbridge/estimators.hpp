#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fpbridge/asymptotics.hpp"
#include "fpbridge/boundaries.hpp"
#include "fpbridge/density_kernel.hpp"
#include "fpbridge/errors.hpp"
#include "fpbridge/increments.hpp"
#include "fpbridge/parallel.hpp"
#include "fpbridge/rng.hpp"
#include "fpbridge/stats.hpp"
#include "fpbridge/walk_sim.hpp"

namespace fpbridge {

namespace estdetail {

// Runs the gaussian bridge recursion to step k (of an n-step bridge pinned at 0) and
// reports whether the path stayed above the boundary the whole way. Inlined here rather
// than reusing sample_gaussian_bridge so a killed path costs only its own prefix.
inline bool bridge_prefix_survives(const BoundarySequence& g, std::uint64_t n,
                                   std::uint64_t k, Rng& rng) {
    double s = 0.0;
    for (std::uint64_t i = 1; i <= k; ++i) {
        const double left = static_cast<double>(n - (i - 1));
        s += -s / left + std::sqrt((left - 1.0) / left) * rng.normal();
        if (s <= g(i)) return false;
    }
    return true;
}

} // namespace estdetail

// P(tau_g > k | S_n = 0) by direct simulation of the conditioned path. Exact bridge
// sampling is only available for the gaussian model.
inline EstimateRecord estimate_conditional_survival_bridge(const IncrementModel& model,
                                                           const BoundarySequence& g,
                                                           std::uint64_t n, std::uint64_t k,
                                                           std::uint64_t reps,
                                                           std::uint64_t master_seed) {
    if (model.name != "gaussian")
        throw ValidationError("estimate_conditional_survival_bridge: exact bridge sampling "
                              "requires the gaussian model, got " + model.name);
    if (k < 1 || k >= n) throw ValidationError("estimate_conditional_survival_bridge: need 1 <= k < n");
    if (reps == 0) throw ValidationError("estimate_conditional_survival_bridge: reps must be positive");

    auto parts = run_blocks<std::uint64_t>(reps, kDefaultBlock,
        [&](std::uint64_t lo, std::uint64_t hi) {
            std::uint64_t hits = 0;
            for (std::uint64_t r = lo; r < hi; ++r) {
                Rng rng(master_seed, r);
                if (estdetail::bridge_prefix_survives(g, n, k, rng)) ++hits;
            }
            return hits;
        });
    std::uint64_t hits = 0;
    for (auto p : parts) hits += p;

    EstimateRecord rec;
    rec.value = static_cast<double>(hits) / static_cast<double>(reps);
    rec.std_error = binomial_std_error(rec.value, reps);
    rec.samples = reps;
    rec.method = Method::bridge_direct;
    rec.seed = master_seed;
    return rec;
}

// P(tau_g > k | S_n = 0) as E[ 1{tau_g > k} f~_{n-k}(S_k) ] / f_n(0) over unconditioned
// walks. The denominator is deterministic, so the s.e. is the numerator's divided by it.
inline EstimateRecord estimate_conditional_survival_weighted(const IncrementModel& model,
                                                             const BoundarySequence& g,
                                                             std::uint64_t n, std::uint64_t k,
                                                             std::uint64_t reps,
                                                             std::uint64_t master_seed,
                                                             const GridConfig& cfg = {}) {
    if (k < 1) throw ValidationError("estimate_conditional_survival_weighted: k must be >= 1");
    if (n < k + 2) throw ValidationError("estimate_conditional_survival_weighted: need n - k >= 2");
    if (reps == 0) throw ValidationError("estimate_conditional_survival_weighted: reps must be positive");

    auto rev = reversed_density_fn(model, n - k, cfg);
    const double fn0 = origin_density(model, n, cfg);
    if (fn0 < 1e-15) throw NumericsError("estimate_conditional_survival_weighted: endpoint density vanished");

    auto parts = run_blocks<Accum>(reps, kDefaultBlock,
        [&](std::uint64_t lo, std::uint64_t hi) {
            Accum a;
            for (std::uint64_t r = lo; r < hi; ++r) {
                Rng rng(master_seed, r);
                double s = 0.0;
                bool alive = true;
                for (std::uint64_t i = 1; i <= k; ++i) {
                    s += model.sample(rng);
                    if (s <= g(i)) { alive = false; break; }
                }
                // f~ evaluates the reversed walk's density, so the remaining n-k steps
                // land on 0 exactly when they sum to -S_k:  f~_{n-k}(S_k) = f_{n-k}(-S_k).
                a.add(alive ? rev(s) : 0.0);
            }
            return a;
        });
    Accum total;
    for (const auto& p : parts) total += p;

    EstimateRecord rec;
    rec.value = total.mean() / fn0;
    rec.std_error = total.std_error() / fn0;
    rec.samples = reps;
    rec.method = Method::weighted;
    rec.seed = master_seed;
    return rec;
}

// Debug estimator: condition on |S_n| <= delta instead of S_n = 0. Biased at fixed delta;
// kept for cross-checking the weighted estimator, not for production runs.
inline EstimateRecord estimate_conditional_survival_window(const IncrementModel& model,
                                                           const BoundarySequence& g,
                                                           std::uint64_t n, std::uint64_t k,
                                                           std::uint64_t reps,
                                                           std::uint64_t master_seed,
                                                           double delta = 0.1) {
    if (k < 1 || k >= n) throw ValidationError("estimate_conditional_survival_window: need 1 <= k < n");
    if (delta <= 0.0) throw ValidationError("estimate_conditional_survival_window: delta must be positive");
    if (reps == 0) throw ValidationError("estimate_conditional_survival_window: reps must be positive");

    struct Part {
        std::uint64_t in_window = 0;
        std::uint64_t in_window_alive = 0;
        Part& operator+=(const Part& o) {
            in_window += o.in_window;
            in_window_alive += o.in_window_alive;
            return *this;
        }
    };
    auto parts = run_blocks<Part>(reps, kDefaultBlock,
        [&](std::uint64_t lo, std::uint64_t hi) {
            Part p;
            for (std::uint64_t r = lo; r < hi; ++r) {
                Rng rng(master_seed, r);
                double s = 0.0;
                bool alive = true;
                for (std::uint64_t i = 1; i <= n; ++i) {
                    s += model.sample(rng);
                    if (alive && i <= k && s <= g(i)) alive = false;
                }
                if (std::abs(s) <= delta) {
                    ++p.in_window;
                    if (alive) ++p.in_window_alive;
                }
            }
            return p;
        });
    Part total;
    for (const auto& p : parts) total += p;

    EstimateRecord rec;
    rec.samples = total.in_window;
    rec.method = Method::window;
    rec.seed = master_seed;
    if (total.in_window == 0) {
        rec.degenerate = true;
        rec.note = "no paths landed in the window";
        return rec;
    }
    rec.value = static_cast<double>(total.in_window_alive) / static_cast<double>(total.in_window);
    rec.std_error = binomial_std_error(rec.value, total.in_window);
    if (total.in_window < 1000) {
        rec.degenerate = true;
        rec.note = "fewer than 1000 window hits";
    }
    return rec;
}

// The boundary-dependent prefactor L_g, estimated two ways from the same walks:
//   undershoot form   E[-S_tau ; tau_g <= k]     (primary; converges fast in k)
//   definition form   E[S_k - g_k ; tau_g > k]   (slow: the killed mass still matters at finite k)
// Both are expectations over all paths, with the complementary event contributing zero.
struct LgEstimate {
    EstimateRecord undershoot;
    EstimateRecord definition;
    double value() const { return undershoot.value; }
    double std_error() const { return undershoot.std_error; }
};

inline LgEstimate estimate_Lg(const IncrementModel& model, const BoundarySequence& g,
                              std::uint64_t k, std::uint64_t reps,
                              std::uint64_t master_seed) {
    if (k < 1) throw ValidationError("estimate_Lg: k must be >= 1");
    if (reps == 0) throw ValidationError("estimate_Lg: reps must be positive");

    struct Part {
        Accum under;
        Accum defn;
        std::uint64_t survivors = 0;
        Part& operator+=(const Part& o) {
            under += o.under;
            defn += o.defn;
            survivors += o.survivors;
            return *this;
        }
    };
    const double gk = g(k);
    auto parts = run_blocks<Part>(reps, kDefaultBlock,
        [&](std::uint64_t lo, std::uint64_t hi) {
            Part p;
            for (std::uint64_t r = lo; r < hi; ++r) {
                Rng rng(master_seed, r);
                double s = 0.0;
                bool alive = true;
                for (std::uint64_t i = 1; i <= k; ++i) {
                    s += model.sample(rng);
                    if (s <= g(i)) {
                        p.under.add(-s);
                        p.defn.add(0.0);
                        alive = false;
                        break;
                    }
                }
                if (alive) {
                    p.under.add(0.0);
                    p.defn.add(s - gk);
                    ++p.survivors;
                }
            }
            return p;
        });
    Part total;
    for (const auto& p : parts) total += p;

    LgEstimate out;
    out.undershoot.value = total.under.mean();
    out.undershoot.std_error = total.under.std_error();
    out.undershoot.samples = reps;
    out.undershoot.seed = master_seed;
    out.undershoot.note = "E(-S_tau; tau<=k)";
    out.definition.value = total.defn.mean();
    out.definition.std_error = total.defn.std_error();
    out.definition.samples = reps;
    out.definition.seed = master_seed;
    out.definition.note = "E(S_k - g_k; tau>k)";
    if (total.survivors == reps) {
        // nothing was ever killed; the undershoot form carries no information
        out.undershoot.degenerate = true;
        out.undershoot.note += " [no kills observed]";
    }
    return out;
}

// P( (S_n - g_n)/sqrt(n) > v | tau_g > n ) by rejection: simulate killed walks to
// horizon n and look at the survivors' endpoints.
inline EstimateRecord estimate_rayleigh_tail(const IncrementModel& model,
                                             const BoundarySequence& g,
                                             std::uint64_t n, double v,
                                             std::uint64_t reps,
                                             std::uint64_t master_seed) {
    if (n < 1) throw ValidationError("estimate_rayleigh_tail: n must be >= 1");
    if (v < 0.0) throw ValidationError("estimate_rayleigh_tail: v must be nonnegative");
    if (reps == 0) throw ValidationError("estimate_rayleigh_tail: reps must be positive");

    struct Part {
        std::uint64_t survivors = 0;
        std::uint64_t above = 0;
        Part& operator+=(const Part& o) {
            survivors += o.survivors;
            above += o.above;
            return *this;
        }
    };
    const double threshold = g(n) + v * std::sqrt(static_cast<double>(n));
    auto parts = run_blocks<Part>(reps, kDefaultBlock,
        [&](std::uint64_t lo, std::uint64_t hi) {
            Part p;
            for (std::uint64_t r = lo; r < hi; ++r) {
                Rng rng(master_seed, r);
                double s = 0.0;
                bool alive = true;
                for (std::uint64_t i = 1; i <= n; ++i) {
                    s += model.sample(rng);
                    if (s <= g(i)) { alive = false; break; }
                }
                if (alive) {
                    ++p.survivors;
                    if (s > threshold) ++p.above;
                }
            }
            return p;
        });
    Part total;
    for (const auto& p : parts) total += p;

    EstimateRecord rec;
    rec.samples = total.survivors;
    rec.method = Method::bridge_direct;
    rec.seed = master_seed;
    if (total.survivors == 0) {
        rec.degenerate = true;
        rec.note = "no survivors at horizon n";
        return rec;
    }
    rec.value = static_cast<double>(total.above) / static_cast<double>(total.survivors);
    rec.std_error = binomial_std_error(rec.value, total.survivors);
    if (total.survivors < 1000) {
        rec.degenerate = true;
        rec.note = "fewer than 1000 survivors; widen reps or shrink n";
    }
    return rec;
}

// --- convergence sweeps: estimate / prediction ratios across n ---------------------

enum class KRule { fraction, n_minus_power };

struct SweepSpec {
    std::string model_name = "gaussian";
    std::string boundary_text = "constant:-1";
    std::vector<std::uint64_t> n_values;
    KRule k_rule = KRule::fraction;
    double k_param = 0.5;          // fraction of n, or the exponent in k = n - ceil(n^p)
    RegimeLabel regime = RegimeLabel::FAR;
    Method method = Method::bridge_direct;
    std::uint64_t reps = 100000;
    std::uint64_t lg_reps = 200000;
    std::uint64_t lg_k = 0;        // horizon for the L estimate; 0 = use each row's k
    std::uint64_t master_seed = 1;
    GridConfig grid;
};

struct SweepRow {
    std::uint64_t n = 0;
    std::uint64_t k = 0;
    RegimeLabel regime = RegimeLabel::FAR;
    Method method = Method::bridge_direct;
    double estimate = 0.0;
    double se = 0.0;
    double l_hat = 0.0;
    double l_hat_se = 0.0;
    double asymptotic = 0.0;
    double ratio = 0.0;            // estimate / asymptotic
    std::uint64_t seed = 0;
    std::string error;             // non-empty when this row failed
};

inline std::uint64_t sweep_k_for(const SweepSpec& spec, std::uint64_t n) {
    if (spec.k_rule == KRule::fraction) {
        auto k = static_cast<std::uint64_t>(std::llround(spec.k_param * static_cast<double>(n)));
        if (k < 1) k = 1;
        if (k > n - 2) k = n - 2;
        return k;
    }
    const double p = spec.k_param;
    auto gap = static_cast<std::uint64_t>(std::ceil(std::pow(static_cast<double>(n), p)));
    if (gap < 2) gap = 2;
    if (gap >= n) throw ValidationError("sweep_k_for: n^p gap exceeds n");
    return n - gap;
}

// One row per n: estimate the conditional survival, estimate L_g, evaluate the matching
// closed-form prediction, and report the ratio. A failing row records its error text and
// the sweep moves on.
inline std::vector<SweepRow> convergence_sweep(const SweepSpec& spec) {
    if (spec.n_values.empty()) throw ValidationError("convergence_sweep: no n values given");
    IncrementModel model = make_model(spec.model_name);
    BoundarySequence g = BoundarySequence::parse(spec.boundary_text);

    std::vector<SweepRow> rows;
    rows.reserve(spec.n_values.size());
    for (std::size_t idx = 0; idx < spec.n_values.size(); ++idx) {
        SweepRow row;
        row.n = spec.n_values[idx];
        row.regime = spec.regime;
        row.method = spec.method;
        row.seed = mix_seed(spec.master_seed, idx);
        try {
            row.k = sweep_k_for(spec, row.n);

            const std::uint64_t lg_k = spec.lg_k ? spec.lg_k : row.k;
            LgEstimate lg = estimate_Lg(model, g, lg_k, spec.lg_reps, mix_seed(row.seed, 1));
            row.l_hat = lg.value();
            row.l_hat_se = lg.std_error();

            EstimateRecord est;
            switch (spec.method) {
                case Method::bridge_direct:
                    est = estimate_conditional_survival_bridge(model, g, row.n, row.k,
                                                               spec.reps, mix_seed(row.seed, 2));
                    break;
                case Method::weighted:
                    est = estimate_conditional_survival_weighted(model, g, row.n, row.k,
                                                                 spec.reps, mix_seed(row.seed, 2),
                                                                 spec.grid);
                    break;
                case Method::window:
                    est = estimate_conditional_survival_window(model, g, row.n, row.k,
                                                               spec.reps, mix_seed(row.seed, 2));
                    break;
                case Method::kernel: {
                    BridgeKernelResult kr = bridge_survival(model, g, row.n, row.k, spec.grid);
                    est.value = kr.probability;
                    est.std_error = 0.0;
                    est.method = Method::kernel;
                    est.quadrature_loss = kr.max_step_discrepancy;
                    break;
                }
            }
            row.estimate = est.value;
            row.se = est.std_error;

            row.asymptotic = spec.regime == RegimeLabel::FAR
                                 ? theorem1_value(row.n, row.k, row.l_hat)
                                 : theorem2_value(row.n, row.k, row.l_hat, g(row.k), spec.regime);
            if (row.asymptotic <= 0.0) throw NumericsError("prediction is not positive");
            row.ratio = row.estimate / row.asymptotic;
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace fpbridge
