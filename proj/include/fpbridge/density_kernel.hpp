#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "fpbridge/boundaries.hpp"
#include "fpbridge/errors.hpp"
#include "fpbridge/increments.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fpbridge {

// Grid policy: bounds +/- (bound_sigmas * sqrt(m) + support pad), re-sized whenever the step
// count crosses a power of two. Spacing shrinks to fit target_nodes at small m but never
// exceeds the spacing cap: the killed density keeps O(1)-scale structure near the boundary at
// every m, so the spacing must not grow with m (the node count grows instead).
// h_max = 0 defers the spacing cap to the increment model's hint.
struct GridConfig {
    std::size_t target_nodes = 4096;
    double h_max = 0.0;
    double bound_sigmas = 12.0;
};

namespace griddetail {
inline double lin_piece(double y0, double y1, double len) { return 0.5 * (y0 + y1) * len; }
}

// Piecewise-linear density on a lattice anchored at 0 (node j sits at (base+j)*h), plus an
// explicit sub-cell segment at the kill boundary: zero at and below cut_pos, linear from
// (cut_pos, cut_val) to the first lattice node above. Nodes at or below cut_pos hold 0.
struct DensityGrid {
    double h = 1.0;
    std::int64_t base = 0;
    std::vector<double> v;
    std::uint64_t m = 0;

    bool has_cut = false;
    double cut_pos = 0.0;
    double cut_val = 0.0;
    std::int64_t cut_next = 0; // index of first node above cut_pos

    double survival_mass = 1.0;
    double max_step_discrepancy = 0.0; // worst relative step-to-step mass defect

    double x(std::int64_t j) const { return static_cast<double>(base + j) * h; }
    double lo() const { return x(0); }
    double hi() const { return x(static_cast<std::int64_t>(v.size()) - 1); }

    double value_at(double xx) const {
        if (v.empty()) return 0.0;
        if (has_cut && xx <= cut_pos) return 0.0;
        const double jr = xx / h - static_cast<double>(base);
        const std::int64_t j = static_cast<std::int64_t>(std::floor(jr));
        if (j < 0 || j + 1 >= static_cast<std::int64_t>(v.size()))
            return (j >= 0 && j + 1 == static_cast<std::int64_t>(v.size()) && jr == static_cast<double>(j))
                       ? v[static_cast<std::size_t>(j)]
                       : 0.0;
        if (has_cut && j + 1 == cut_next) {
            const double len = x(cut_next) - cut_pos;
            if (len > 0.0)
                return cut_val + (v[static_cast<std::size_t>(cut_next)] - cut_val) * (xx - cut_pos) / len;
        }
        const double t = jr - static_cast<double>(j);
        return v[static_cast<std::size_t>(j)] * (1.0 - t) + v[static_cast<std::size_t>(j + 1)] * t;
    }

    // integral of the representation; exact because the breakpoints (nodes, cut) are honored
    double integral_range(double a, double b) const {
        if (v.empty() || !(b > a)) return 0.0;
        a = std::max(a, lo());
        b = std::min(b, hi());
        if (has_cut) a = std::max(a, cut_pos);
        if (!(b > a)) return 0.0;
        double acc = 0.0;
        double p = a;
        // the representation jumps at the cut: value_at(cut_pos) is 0 but the segment
        // starts at cut_val, and an integral from the cut wants the right limit
        double fp = (has_cut && p == cut_pos) ? cut_val : value_at(p);
        while (p < b) {
            const double jr = p / h - static_cast<double>(base);
            double nxt = x(static_cast<std::int64_t>(std::floor(jr)) + 1);
            if (nxt <= p) nxt = p + h;
            if (has_cut && p < cut_pos && cut_pos < nxt) nxt = cut_pos;
            if (nxt > b) nxt = b;
            const double fn = value_at(nxt);
            acc += griddetail::lin_piece(fp, fn, nxt - p);
            p = nxt;
            fp = fn;
        }
        return acc;
    }

    // int repr(x) * w(x) dx for smooth w, two-point Gauss per linear piece
    template <class W>
    double weighted_integral(W&& w) const {
        if (v.empty()) return 0.0;
        constexpr double kGl = 0.28867513459481288225; // 1/(2 sqrt(3))
        double acc = 0.0;
        const std::int64_t n = static_cast<std::int64_t>(v.size());
        const std::int64_t start = has_cut ? std::max<std::int64_t>(cut_next - 1, 0) : 0;
        for (std::int64_t j = start; j + 1 < n; ++j) {
            double p0 = x(j), p1 = x(j + 1);
            if (has_cut && j + 1 == cut_next) p0 = cut_pos;
            if (has_cut && j + 1 < cut_next) continue;
            const double len = p1 - p0;
            if (!(len > 0.0)) continue;
            const double mid = 0.5 * (p0 + p1), off = len * kGl;
            acc += 0.5 * len *
                   (value_at(mid - off) * w(mid - off) + value_at(mid + off) * w(mid + off));
        }
        return acc;
    }

    double recompute_mass() const {
        if (v.empty()) return 0.0;
        double s = 0.0;
        if (!has_cut) {
            for (double val : v) s += val;
            return s * h;
        }
        for (std::size_t j = static_cast<std::size_t>(std::max<std::int64_t>(cut_next, 0)); j < v.size(); ++j)
            s += v[j];
        s *= h;
        const double vj = cut_next >= 0 && cut_next < static_cast<std::int64_t>(v.size())
                              ? v[static_cast<std::size_t>(cut_next)]
                              : 0.0;
        s -= 0.5 * vj * h;
        s += 0.5 * (cut_val + vj) * (x(cut_next) - cut_pos);
        return s;
    }
};

namespace griddetail {

// Convolution taps: hat function of width h convolved with the increment law, evaluated via
// the ramp integral A (tap(t) = (A(t+h) - 2A(t) + A(t-h)) / h). Rows sum to 1 exactly by
// telescoping, so each un-killed step conserves mass to rounding.
struct Taps {
    std::int64_t dmin = 0;
    std::vector<double> rev; // rev[t] = tap(dmax - t), contiguous for the inner dot product
    std::size_t size() const { return rev.size(); }
    std::int64_t dmax() const { return dmin + static_cast<std::int64_t>(rev.size()) - 1; }
};

inline double tap_at(const IncrementModel& mod, double h, double t) {
    return (mod.ramp_integral(t + h) - 2.0 * mod.ramp_integral(t) + mod.ramp_integral(t - h)) / h;
}

inline Taps build_taps(const IncrementModel& mod, double h) {
    Taps tp;
    tp.dmin = static_cast<std::int64_t>(std::floor(mod.support_lo / h)) - 1;
    const std::int64_t dmax = static_cast<std::int64_t>(std::ceil(mod.support_hi / h)) + 1;
    tp.rev.resize(static_cast<std::size_t>(dmax - tp.dmin + 1));
    for (std::int64_t d = tp.dmin; d <= dmax; ++d) {
        double g = tap_at(mod, h, static_cast<double>(d) * h);
        tp.rev[static_cast<std::size_t>(dmax - d)] = g > 0.0 ? g : 0.0;
    }
    return tp;
}

struct EpochSpec {
    double h;
    std::int64_t base;
    std::size_t n;
};

inline EpochSpec epoch_spec(std::uint64_t cap, const GridConfig& cfg, const IncrementModel& mod,
                            double start) {
    const double pad = std::max({-mod.support_lo, mod.support_hi, 1.0}) + std::abs(start);
    const double R = cfg.bound_sigmas * std::sqrt(static_cast<double>(cap)) + pad;
    const double h_cap = cfg.h_max > 0.0 ? cfg.h_max : mod.grid_h_hint;
    double h = 2.0 * R / static_cast<double>(cfg.target_nodes);
    if (h > h_cap) h = h_cap;
    EpochSpec s;
    s.h = h;
    s.base = static_cast<std::int64_t>(std::floor(-R / h)) - 1;
    const std::int64_t top = static_cast<std::int64_t>(std::ceil(R / h)) + 1;
    s.n = static_cast<std::size_t>(top - s.base + 1);
    if (s.n > 8u * 1024u * 1024u) throw ValidationError("density grid would exceed the node cap");
    return s;
}

} // namespace griddetail

// Stepwise killed-density propagation. Killing is inclusive: nodes at or below g_m are
// zeroed after each step; the density limit just above the boundary is kept as the sub-cell
// segment so the next convolution does not lose the half-cell of mass at the cut.
class Propagator {
public:
    Propagator(IncrementModel model, GridConfig cfg, double start = 0.0)
        : model_(std::move(model)), cfg_(cfg), start_(start) {
        cap_ = 1;
        auto spec = griddetail::epoch_spec(cap_, cfg_, model_, start_);
        grid_.h = spec.h;
        grid_.base = spec.base;
        grid_.v.assign(spec.n, 0.0);
        taps_ = griddetail::build_taps(model_, grid_.h);
        // mass-conserving hat projection of the one-step density (point sampling would leak
        // mass at pdf jumps); tap values are hat integrals, hence the 1/h
        for (std::size_t j = 0; j < grid_.v.size(); ++j)
            grid_.v[j] = std::max(
                griddetail::tap_at(model_, grid_.h, grid_.x(static_cast<std::int64_t>(j)) - start_) / grid_.h, 0.0);
        grid_.m = 1;
        grid_.survival_mass = grid_.recompute_mass();
    }

    // resume from a snapshot (same config -> identical epochs -> identical continuation)
    Propagator(DensityGrid snapshot, IncrementModel model, GridConfig cfg, double start = 0.0)
        : model_(std::move(model)), cfg_(cfg), start_(start), grid_(std::move(snapshot)) {
        cap_ = 1;
        while (cap_ < grid_.m) cap_ *= 2;
        taps_ = griddetail::build_taps(model_, grid_.h);
    }

    const DensityGrid& grid() const { return grid_; }
    DensityGrid take() { return std::move(grid_); }

    // advance one step; kill at gval afterwards unless unkilled
    void step(std::optional<double> gval) {
        maybe_regrid(grid_.m + 1);
        const std::int64_t n = static_cast<std::int64_t>(grid_.v.size());
        std::vector<double> out(static_cast<std::size_t>(n), 0.0);

        std::int64_t a0 = 0, a1 = n - 1;
        while (a0 < n && grid_.v[static_cast<std::size_t>(a0)] == 0.0) ++a0;
        while (a1 >= a0 && grid_.v[static_cast<std::size_t>(a1)] == 0.0) --a1;

        const std::int64_t dmin = taps_.dmin, dmax = taps_.dmax();
        const double* vv = grid_.v.data();
        const double* rt = taps_.rev.data();
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
        for (std::int64_t i = 0; i < n; ++i) {
            const std::int64_t jlo = std::max(a0, i - dmax);
            const std::int64_t jhi = std::min(a1, i - dmin);
            double acc = 0.0;
            const std::int64_t off = i - dmax; // rev index = j - off
            for (std::int64_t j = jlo; j <= jhi; ++j) acc += vv[j] * rt[j - off];
            out[static_cast<std::size_t>(i)] = acc;
        }

        if (grid_.has_cut) add_cut_correction(out);

        double pre_mass = 0.0;
        for (double val : out) pre_mass += val;
        pre_mass *= grid_.h;

        const double ref = grid_.survival_mass > 1e-300 ? grid_.survival_mass : 1e-300;
        const double disc = std::abs(pre_mass - grid_.survival_mass) / ref;
        if (disc > grid_.max_step_discrepancy) grid_.max_step_discrepancy = disc;
        if (disc > 1e-4)
            throw NumericsError("density grid too coarse: step mass discrepancy " + std::to_string(disc));

        grid_.v = std::move(out);
        grid_.m += 1;
        grid_.has_cut = false;
        if (gval) {
            apply_cut(*gval);
            grid_.survival_mass = grid_.recompute_mass();
        } else {
            grid_.survival_mass = pre_mass;
        }
    }

    void kill_now(double gval) {
        apply_cut(gval);
        grid_.survival_mass = grid_.recompute_mass();
    }

private:
    void apply_cut(double gval) {
        const std::int64_t n = static_cast<std::int64_t>(grid_.v.size());
        const double jr = gval / grid_.h - static_cast<double>(grid_.base);
        const std::int64_t jcut = static_cast<std::int64_t>(std::floor(jr + 1e-9));
        if (jcut < 0) {
            grid_.has_cut = false;
            return;
        }
        if (jcut >= n - 1) throw NumericsError("kill boundary reached the top of the density grid");
        double cval = 0.0;
        {
            const double t = jr - static_cast<double>(jcut);
            const double v0 = grid_.v[static_cast<std::size_t>(jcut)];
            const double v1 = grid_.v[static_cast<std::size_t>(jcut + 1)];
            cval = v0 * (1.0 - t) + v1 * t;
        }
        for (std::int64_t j = 0; j <= jcut; ++j) grid_.v[static_cast<std::size_t>(j)] = 0.0;
        grid_.has_cut = true;
        grid_.cut_pos = gval;
        grid_.cut_val = cval > 0.0 ? cval : 0.0;
        grid_.cut_next = jcut + 1;
    }

    // The lattice alone would ramp from 0 at the node below the cut; the true representation
    // is zero up to cut_pos then linear from cut_val. Integrate the difference against the
    // increment density (two-point Gauss per sub-segment) and fold it into the step output.
    void add_cut_correction(std::vector<double>& out) {
        const std::int64_t j0 = grid_.cut_next;
        const std::int64_t n = static_cast<std::int64_t>(grid_.v.size());
        if (j0 <= 0 || j0 >= n) return;
        const double h = grid_.h;
        const double xj0 = grid_.x(j0);
        const double vj0 = grid_.v[static_cast<std::size_t>(j0)];
        const double b = grid_.cut_pos;
        const double c = grid_.cut_val;

        auto lattice_ramp = [&](double xx) { return vj0 * (xx - (xj0 - h)) / h; };
        auto true_seg = [&](double xx) {
            if (xx <= b) return 0.0;
            const double len = xj0 - b;
            return len > 0.0 ? c + (vj0 - c) * (xx - b) / len : 0.0;
        };

        constexpr double kGl = 0.28867513459481288225;
        struct Node {
            double pos, weight;
        };
        Node nodes[4];
        int n_nodes = 0;
        const double segs[2][2] = {{xj0 - h, b}, {b, xj0}};
        for (auto& s : segs) {
            const double len = s[1] - s[0];
            if (!(len > 1e-14 * h)) continue;
            const double mid = 0.5 * (s[0] + s[1]), off = len * kGl;
            nodes[n_nodes++] = {mid - off, 0.5 * len};
            nodes[n_nodes++] = {mid + off, 0.5 * len};
        }
        for (int q = 0; q < n_nodes; ++q) {
            const double delta = true_seg(nodes[q].pos) - lattice_ramp(nodes[q].pos);
            const double wq = nodes[q].weight * delta;
            if (wq == 0.0) continue;
            // only outputs within the increment support of this position are touched; the
            // hat-smoothed kernel keeps the added mass exact even across pdf jumps
            const double ylo = nodes[q].pos + model_.support_lo;
            const double yhi = nodes[q].pos + model_.support_hi;
            std::int64_t ilo = static_cast<std::int64_t>(std::floor(ylo / h - static_cast<double>(grid_.base))) - 1;
            std::int64_t ihi = static_cast<std::int64_t>(std::ceil(yhi / h - static_cast<double>(grid_.base))) + 1;
            ilo = std::max<std::int64_t>(ilo, 0);
            ihi = std::min<std::int64_t>(ihi, n - 1);
            for (std::int64_t i = ilo; i <= ihi; ++i)
                out[static_cast<std::size_t>(i)] +=
                    wq * griddetail::tap_at(model_, h, grid_.x(i) - nodes[q].pos) / h;
        }
    }

    void maybe_regrid(std::uint64_t m_next) {
        if (m_next <= cap_) return;
        while (cap_ < m_next) cap_ *= 2;
        const auto spec = griddetail::epoch_spec(cap_, cfg_, model_, start_);
        if (spec.h == grid_.h && spec.base <= grid_.base &&
            spec.base + static_cast<std::int64_t>(spec.n) >=
                grid_.base + static_cast<std::int64_t>(grid_.v.size())) {
            // same lattice, wider window: plain copy, no interpolation error
            std::vector<double> nv(spec.n, 0.0);
            const std::int64_t off = grid_.base - spec.base;
            for (std::size_t j = 0; j < grid_.v.size(); ++j)
                nv[static_cast<std::size_t>(off) + j] = grid_.v[j];
            grid_.v = std::move(nv);
            grid_.base = spec.base;
            if (grid_.has_cut) grid_.cut_next += off;
            return;
        }
        std::vector<double> nv(spec.n, 0.0);
        DensityGrid old = grid_;
        for (std::size_t j = 0; j < spec.n; ++j) {
            const double xx = static_cast<double>(spec.base + static_cast<std::int64_t>(j)) * spec.h;
            nv[j] = std::max(old.value_at(xx), 0.0);
        }
        grid_.h = spec.h;
        grid_.base = spec.base;
        grid_.v = std::move(nv);
        if (grid_.has_cut) {
            grid_.cut_next =
                static_cast<std::int64_t>(std::floor(grid_.cut_pos / grid_.h - static_cast<double>(grid_.base) + 1e-9)) + 1;
            for (std::int64_t j = 0; j < std::min<std::int64_t>(grid_.cut_next, static_cast<std::int64_t>(grid_.v.size())); ++j)
                grid_.v[static_cast<std::size_t>(j)] = 0.0;
        }
        taps_ = griddetail::build_taps(model_, grid_.h);
        grid_.survival_mass = grid_.recompute_mass();
    }

    IncrementModel model_;
    GridConfig cfg_;
    double start_;
    DensityGrid grid_;
    std::uint64_t cap_ = 1;
    griddetail::Taps taps_;
};

// P(S_m in dx; tau_g > m)/dx on the grid, inclusive kill at every step up to k
inline DensityGrid propagate_killed(const IncrementModel& model, const BoundarySequence& g,
                                    std::uint64_t k, const GridConfig& cfg = {},
                                    double start = 0.0) {
    if (k < 1) throw ValidationError("propagate_killed: k must be >= 1");
    Propagator p(model, cfg, start);
    p.kill_now(g(1));
    for (std::uint64_t m = 2; m <= k; ++m) p.step(g(m));
    return p.take();
}

// resume a snapshot up to k (Chapman-Kolmogorov consistency: equals the direct run)
inline DensityGrid continue_killed(DensityGrid snapshot, const IncrementModel& model,
                                   const BoundarySequence& g, std::uint64_t k,
                                   const GridConfig& cfg = {}) {
    if (k < snapshot.m) throw ValidationError("continue_killed: target before snapshot");
    Propagator p(std::move(snapshot), model, cfg);
    for (std::uint64_t m = p.grid().m + 1; m <= k; ++m) p.step(g(m));
    return p.take();
}

inline DensityGrid unkilled_density(const IncrementModel& model, std::uint64_t m,
                                    const GridConfig& cfg = {}, double start = 0.0) {
    if (m < 1) throw ValidationError("unkilled_density: m must be >= 1");
    Propagator p(model, cfg, start);
    for (std::uint64_t s = 2; s <= m; ++s) p.step(std::nullopt);
    return p.take();
}

// m-step density at x: closed form where the model has one, otherwise grid propagation.
// For bulk evaluation build the grid once and interpolate.
inline double nfold_density(const IncrementModel& model, std::uint64_t m, double xx,
                            const GridConfig& cfg = {}) {
    if (m < 1) throw ValidationError("nfold_density: m must be >= 1");
    if (model.exact_nfold) return model.exact_nfold(m, xx);
    return unkilled_density(model, m, cfg).value_at(xx);
}

// density of the reversed (sign-flipped) walk after m steps, as a reusable evaluator
inline std::function<double(double)> reversed_density_fn(const IncrementModel& model,
                                                         std::uint64_t m,
                                                         const GridConfig& cfg = {}) {
    if (model.exact_nfold)
        return [fn = model.exact_nfold, m](double u) { return fn(m, -u); };
    auto grid = std::make_shared<DensityGrid>(unkilled_density(model, m, cfg));
    return [grid](double u) { return grid->value_at(-u); };
}

inline double origin_density(const IncrementModel& model, std::uint64_t n,
                             const GridConfig& cfg = {}) {
    if (model.exact_nfold) return model.exact_nfold(n, 0.0);
    return unkilled_density(model, n, cfg).value_at(0.0);
}

struct BridgeKernelResult {
    double probability = 0.0;
    double numerator = 0.0;  // int P(S_k in du; tau > k) f~_{n-k}(u)
    double fn0 = 0.0;        // f_n(0)
    double max_step_discrepancy = 0.0;
};

// P(tau_g > k | S_n = 0) by propagating the killed density to k and integrating it against
// the reversed-walk density over the remaining n-k steps.
inline BridgeKernelResult bridge_survival(const IncrementModel& model, const BoundarySequence& g,
                                          std::uint64_t n, std::uint64_t k,
                                          const GridConfig& cfg = {}) {
    if (k < 1) throw ValidationError("bridge_survival: k must be >= 1");
    if (n < k + 2) throw ValidationError("bridge_survival: need n - k >= 2");
    DensityGrid killed = propagate_killed(model, g, k, cfg);
    auto rev = reversed_density_fn(model, n - k, cfg);
    const double fn0 = origin_density(model, n, cfg);
    if (fn0 < 1e-15) throw NumericsError("bridge_survival: endpoint density vanished");
    BridgeKernelResult r;
    r.fn0 = fn0;
    r.numerator = killed.weighted_integral(rev);
    r.probability = r.numerator / fn0;
    r.max_step_discrepancy = killed.max_step_discrepancy;
    return r;
}

} // namespace fpbridge
