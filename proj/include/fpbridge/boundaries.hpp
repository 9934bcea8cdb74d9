#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "fpbridge/errors.hpp"

namespace fpbridge {

// Moving boundary g_i, i >= 1. Built-in families keep |g_i| = o(sqrt(i)); table data is
// taken as-is (checked only by the diagnostics below).
class BoundarySequence {
public:
    enum class Family { constant, power, log_like, table };

    static BoundarySequence constant(double c) {
        BoundarySequence b;
        b.family_ = Family::constant;
        b.c_ = c;
        return b;
    }

    // g_i = -c * i^alpha; alpha >= 1/2 would break the o(sqrt(i)) requirement
    static BoundarySequence power(double c, double alpha) {
        if (alpha >= 0.5) throw ValidationError("power boundary: alpha must be < 1/2");
        BoundarySequence b;
        b.family_ = Family::power;
        b.c_ = c;
        b.alpha_ = alpha;
        return b;
    }

    // g_i = -c * log(i + 1)
    static BoundarySequence log_boundary(double c) {
        BoundarySequence b;
        b.family_ = Family::log_like;
        b.c_ = c;
        return b;
    }

    static BoundarySequence table(std::vector<double> values) {
        if (values.empty()) throw ValidationError("table boundary: no values");
        BoundarySequence b;
        b.family_ = Family::table;
        b.values_ = std::move(values);
        return b;
    }

    // one value per line; blank lines and #-comments skipped
    static BoundarySequence from_csv(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ValidationError("table boundary: cannot open " + path);
        std::vector<double> v;
        std::string line;
        while (std::getline(in, line)) {
            std::size_t p = line.find_first_not_of(" \t\r");
            if (p == std::string::npos || line[p] == '#') continue;
            try {
                v.push_back(std::stod(line.substr(p)));
            } catch (const std::exception&) {
                throw ValidationError("table boundary: bad line '" + line + "' in " + path);
            }
        }
        return table(std::move(v));
    }

    // "const:c" | "power:c,alpha" | "log:c" | "table:path"
    static BoundarySequence parse(const std::string& text) {
        std::size_t colon = text.find(':');
        if (colon == std::string::npos) throw ValidationError("boundary spec needs family:params, got " + text);
        std::string fam = text.substr(0, colon);
        std::string rest = text.substr(colon + 1);
        try {
            if (fam == "const" || fam == "constant") return constant(std::stod(rest));
            if (fam == "log") return log_boundary(std::stod(rest));
            if (fam == "power") {
                std::size_t comma = rest.find(',');
                if (comma == std::string::npos) throw ValidationError("power boundary spec: power:c,alpha");
                return power(std::stod(rest.substr(0, comma)), std::stod(rest.substr(comma + 1)));
            }
        } catch (const ValidationError&) {
            throw;
        } catch (const std::exception&) {
            throw ValidationError("boundary spec: bad number in " + text);
        }
        if (fam == "table") return from_csv(rest);
        throw ValidationError("unknown boundary family: " + fam);
    }

    double operator()(std::uint64_t i) const {
        if (i < 1) throw ValidationError("boundary index starts at 1");
        switch (family_) {
            case Family::constant: return c_;
            case Family::power: return -c_ * std::pow(static_cast<double>(i), alpha_);
            case Family::log_like: return -c_ * std::log(static_cast<double>(i) + 1.0);
            case Family::table:
                if (i > values_.size())
                    throw ValidationError("table boundary: index " + std::to_string(i) + " beyond table");
                return values_[i - 1];
        }
        return 0.0;
    }

    Family family() const { return family_; }
    std::size_t table_size() const { return values_.size(); }

    std::string description() const {
        std::ostringstream os;
        switch (family_) {
            case Family::constant: os << "const:" << c_; break;
            case Family::power: os << "power:" << c_ << "," << alpha_; break;
            case Family::log_like: os << "log:" << c_; break;
            case Family::table: os << "table[" << values_.size() << "]"; break;
        }
        return os.str();
    }

private:
    Family family_ = Family::constant;
    double c_ = 0.0;
    double alpha_ = 0.0;
    std::vector<double> values_;
};

// sup_{j in [ceil((1-eps)k), k]} |g_j - g_k| / |g_k|.
// 0 when the window is flat at a zero boundary; +inf when g_k = 0 but the window moves.
inline double fluctuation_ratio(const BoundarySequence& g, std::uint64_t k, double eps) {
    if (!(eps > 0.0 && eps < 1.0)) throw ValidationError("fluctuation_ratio: eps must be in (0,1)");
    if (k < 1) throw ValidationError("fluctuation_ratio: k must be >= 1");
    std::uint64_t lo = static_cast<std::uint64_t>(std::ceil((1.0 - eps) * static_cast<double>(k)));
    if (lo < 1) lo = 1;
    const double gk = g(k);
    double sup = 0.0;
    for (std::uint64_t j = lo; j <= k; ++j) sup = std::max(sup, std::abs(g(j) - gk));
    if (gk == 0.0) return sup == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return sup / std::abs(gk);
}

struct BoundedPrefactorReport {
    enum class Verdict { finite, evidence_only };
    Verdict verdict;
    // partial sums of sum(-g_n / n^{3/2}) and sum(sqrt(log n) * (-g_n) / n^{3/2})
    std::vector<std::uint64_t> checkpoints;
    std::vector<double> plain_partial;
    std::vector<double> log_weighted_partial;
};

// Convergence evidence for the limiting prefactor. Analytic verdict for the closed-form
// families (their series converge for any coefficient once alpha < 1/2); table boundaries
// only get the numeric partial sums.
inline BoundedPrefactorReport l_infinity_criterion(const BoundarySequence& g, std::uint64_t horizon) {
    if (horizon < 1000) throw ValidationError("l_infinity_criterion: horizon must be >= 1000");
    if (g.family() == BoundarySequence::Family::table && g.table_size() < horizon)
        throw ValidationError("l_infinity_criterion: table shorter than horizon");

    BoundedPrefactorReport rep;
    rep.verdict = g.family() == BoundarySequence::Family::table
                      ? BoundedPrefactorReport::Verdict::evidence_only
                      : BoundedPrefactorReport::Verdict::finite;
    rep.checkpoints = {100, 1000, horizon};

    double plain = 0.0, logw = 0.0;
    std::size_t next = 0;
    for (std::uint64_t n = 1; n <= horizon && next < rep.checkpoints.size(); ++n) {
        const double nn = static_cast<double>(n);
        const double w = -g(n) / (nn * std::sqrt(nn));
        plain += w;
        logw += w * std::sqrt(std::log(nn > 1.0 ? nn : 1.0));
        while (next < rep.checkpoints.size() && n == rep.checkpoints[next]) {
            rep.plain_partial.push_back(plain);
            rep.log_weighted_partial.push_back(logw);
            ++next;
        }
    }
    return rep;
}

// Finite-horizon proxy for |g_i| = o(sqrt(i)): sup over the trailing decade (N/10, N].
// Strictly decreasing across growing N for the built-in families.
inline double sup_ratio_window(const BoundarySequence& g, std::uint64_t N) {
    if (N < 10) throw ValidationError("sup_ratio_window: N must be >= 10");
    double sup = 0.0;
    for (std::uint64_t i = N / 10 + 1; i <= N; ++i)
        sup = std::max(sup, std::abs(g(i)) / std::sqrt(static_cast<double>(i)));
    return sup;
}

} // namespace fpbridge
