#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "fpbridge/boundaries.hpp"
#include "fpbridge/errors.hpp"
#include "fpbridge/increments.hpp"
#include "fpbridge/parallel.hpp"
#include "fpbridge/rng.hpp"

namespace fpbridge {

struct WalkPath {
    std::uint64_t seed = 0; // RNG stream the increments came from, echoed for dumps
    std::vector<double> values; // S_1..S_m
    std::optional<std::uint64_t> killed_at; // minimal 1-based i with S_i <= g_i
};

// Walk until the boundary is hit (inclusive, S_i <= g_i) or the horizon is reached;
// the path is truncated at the kill step.
inline WalkPath simulate_killed(const IncrementModel& model, const BoundarySequence& g,
                                std::uint64_t horizon, Rng& rng) {
    if (horizon < 1) throw ValidationError("simulate_killed: horizon must be >= 1");
    WalkPath p;
    p.values.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(horizon, 4096)));
    double s = 0.0;
    for (std::uint64_t i = 1; i <= horizon; ++i) {
        s += model.sample(rng);
        p.values.push_back(s);
        if (s <= g(i)) {
            p.killed_at = i;
            break;
        }
    }
    return p;
}

// Exact Gaussian bridge: S_n = 0 by construction, increment i+1 has conditional mean
// -S_i/(n-i) and variance (n-i-1)/(n-i).
inline WalkPath sample_gaussian_bridge(std::uint64_t n, Rng& rng) {
    if (n < 2) throw ValidationError("sample_gaussian_bridge: need n >= 2");
    WalkPath p;
    p.values.resize(static_cast<std::size_t>(n));
    double s = 0.0;
    for (std::uint64_t i = 0; i + 1 < n; ++i) {
        const double left = static_cast<double>(n - i);
        s += -s / left + std::sqrt((left - 1.0) / left) * rng.normal();
        p.values[static_cast<std::size_t>(i)] = s;
    }
    p.values[static_cast<std::size_t>(n - 1)] = 0.0;
    return p;
}

// Renewal statistics of the strict ladder processes. U counts ascending ladder points with
// height <= t (origin included), V the descending counterpart; both tables sit on a uniform
// grid over [0, grid_max].
struct LadderStats {
    double mean_descending = 0.0; // E(-S_{T_0}), first nonpositive entry depth
    double se_descending = 0.0;
    double mean_ascending_dual = 0.0; // same for the sign-flipped walk = first overshoot above 0
    double se_ascending_dual = 0.0;
    double product_se = 0.0; // delta-method s.e. of the product, covariance included
    std::vector<double> u_table, v_table;
    double grid_max = 0.0;
    std::uint64_t paths = 0;
    double capped_fraction = 0.0;
    bool cap_warning = false; // capped paths exceeded 1%

    double product() const { return mean_descending * mean_ascending_dual; }

  private:
    double table_at(const std::vector<double>& tab, double t) const {
        if (tab.size() < 2 || grid_max <= 0.0) return 1.0;
        if (t <= 0.0) return tab.front();
        const double dt = grid_max / static_cast<double>(tab.size() - 1);
        const double jr = t / dt;
        const std::size_t j = static_cast<std::size_t>(jr);
        if (j + 1 < tab.size()) {
            const double w = jr - static_cast<double>(j);
            return tab[j] * (1.0 - w) + tab[j + 1] * w;
        }
        // beyond the grid: extend with the secant slope of the top half (tables are
        // asymptotically linear)
        const std::size_t mid = tab.size() / 2;
        const double slope = (tab.back() - tab[mid]) /
                             (static_cast<double>(tab.size() - 1 - mid) * dt);
        return tab.back() + slope * (t - grid_max);
    }

  public:
    double u_at(double t) const { return table_at(u_table, t); }
    double v_at(double t) const { return table_at(v_table, t); }
};

// One pass per path: walk until both running extrema clear grid_max (so both ladder tables
// are complete) or the step cap hits. First weak descent/ascent values feed the mean
// estimates; strict records feed the tables.
inline LadderStats estimate_ladder_stats(const IncrementModel& model, std::uint64_t paths,
                                         double height_grid_max, std::uint64_t master_seed,
                                         std::size_t bins = 256,
                                         std::uint64_t step_cap = 1000000) {
    if (paths < 10000) throw ValidationError("estimate_ladder_stats: need >= 1e4 paths");
    if (!(height_grid_max > 0.0)) throw ValidationError("estimate_ladder_stats: grid max must be positive");
    if (bins < 2) throw ValidationError("estimate_ladder_stats: need >= 2 bins");

    struct Part {
        double sa = 0, sa2 = 0, sb = 0, sb2 = 0, sab = 0;
        std::uint64_t n_pairs = 0, capped = 0;
        std::vector<double> ucnt, vcnt;
    };
    const double dt = height_grid_max / static_cast<double>(bins);

    auto parts = run_blocks<Part>(paths, kDefaultBlock, [&](std::uint64_t lo, std::uint64_t hi) {
        Part part;
        part.ucnt.assign(bins + 1, 0.0);
        part.vcnt.assign(bins + 1, 0.0);
        for (std::uint64_t idx = lo; idx < hi; ++idx) {
            Rng rng(master_seed, idx);
            double s = 0.0, mx = 0.0, mn = 0.0;
            bool desc_seen = false, asc_seen = false;
            double desc = 0.0, asc = 0.0;
            bool complete = false;
            for (std::uint64_t step = 0; step < step_cap; ++step) {
                s += model.sample(rng);
                if (!desc_seen && s <= 0.0) {
                    desc = -s;
                    desc_seen = true;
                }
                if (!asc_seen && s >= 0.0) {
                    asc = s;
                    asc_seen = true;
                }
                if (s > mx) {
                    if (s <= height_grid_max) {
                        const std::size_t j = static_cast<std::size_t>(std::ceil(s / dt));
                        part.ucnt[std::min(j, bins)] += 1.0;
                    }
                    mx = s;
                }
                if (s < mn) {
                    const double depth = -s;
                    if (depth <= height_grid_max) {
                        const std::size_t j = static_cast<std::size_t>(std::ceil(depth / dt));
                        part.vcnt[std::min(j, bins)] += 1.0;
                    }
                    mn = s;
                }
                if (mx > height_grid_max && mn < -height_grid_max) {
                    complete = true;
                    break;
                }
            }
            if (!complete) ++part.capped;
            if (desc_seen && asc_seen) {
                part.sa += desc;
                part.sa2 += desc * desc;
                part.sb += asc;
                part.sb2 += asc * asc;
                part.sab += desc * asc;
                ++part.n_pairs;
            }
        }
        return part;
    });

    Part tot;
    tot.ucnt.assign(bins + 1, 0.0);
    tot.vcnt.assign(bins + 1, 0.0);
    for (const auto& p : parts) {
        tot.sa += p.sa;
        tot.sa2 += p.sa2;
        tot.sb += p.sb;
        tot.sb2 += p.sb2;
        tot.sab += p.sab;
        tot.n_pairs += p.n_pairs;
        tot.capped += p.capped;
        for (std::size_t j = 0; j <= bins; ++j) {
            tot.ucnt[j] += p.ucnt[j];
            tot.vcnt[j] += p.vcnt[j];
        }
    }

    LadderStats out;
    out.paths = paths;
    out.grid_max = height_grid_max;
    out.capped_fraction = static_cast<double>(tot.capped) / static_cast<double>(paths);
    out.cap_warning = out.capped_fraction > 0.01;

    const double n = static_cast<double>(tot.n_pairs);
    if (tot.n_pairs >= 2) {
        const double ma = tot.sa / n, mb = tot.sb / n;
        const double va = std::max(0.0, (tot.sa2 - n * ma * ma) / (n - 1.0));
        const double vb = std::max(0.0, (tot.sb2 - n * mb * mb) / (n - 1.0));
        const double cab = (tot.sab - n * ma * mb) / (n - 1.0);
        out.mean_descending = ma;
        out.mean_ascending_dual = mb;
        out.se_descending = std::sqrt(va / n);
        out.se_ascending_dual = std::sqrt(vb / n);
        const double vprod = mb * mb * va + ma * ma * vb + 2.0 * ma * mb * cab;
        out.product_se = std::sqrt(std::max(0.0, vprod) / n);
    }

    out.u_table.resize(bins + 1);
    out.v_table.resize(bins + 1);
    double cu = 0.0, cv = 0.0;
    const double np = static_cast<double>(paths);
    for (std::size_t j = 0; j <= bins; ++j) {
        cu += tot.ucnt[j];
        cv += tot.vcnt[j];
        out.u_table[j] = 1.0 + cu / np; // origin counts as a ladder point
        out.v_table[j] = 1.0 + cv / np;
    }
    return out;
}

} // namespace fpbridge
