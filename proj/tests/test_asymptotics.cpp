#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <limits>

#include "fpbridge/asymptotics.hpp"
#include "fpbridge/quadrature.hpp"
#include "fpbridge/walk_sim.hpp"

using namespace fpbridge;

TEST_CASE("gamma function endpoints and shape", "[asymptotics]") {
    REQUIRE(gamma_fn(0.0) == 1.0);
    REQUIRE(gamma_fn(8.0) < 1e-10);
    REQUIRE_THROWS_AS(gamma_fn(-1.0), ValidationError);

    const double direct =
        std::exp(-0.5) - integrate([](double x) { return std::exp(-0.5 * x * x); }, 1.0, 40.0, 1e-13);
    REQUIRE(gamma_fn(1.0) == Catch::Approx(direct).margin(1e-10));
    REQUIRE(gamma_fn(1.0) == Catch::Approx(0.20884091428928198).epsilon(1e-13));

    double prev = gamma_fn(0.0);
    for (int i = 1; i <= 1000; ++i) {
        const double y = 8.0 * i / 1000.0;
        const double cur = gamma_fn(y);
        REQUIRE(cur < prev);
        REQUIRE(cur > 0.0);
        REQUIRE(cur <= std::exp(-0.5 * y * y));
        prev = cur;
    }
}

TEST_CASE("far-regime value anchors and scaling", "[asymptotics]") {
    REQUIRE(theorem1_value(50, 25, 1.0) == Catch::Approx(0.11283791670955126).epsilon(1e-13));
    REQUIRE(theorem1_value(400, 200, 1.0) ==
            Catch::Approx(0.039894228040143268).epsilon(1e-13));
    REQUIRE(theorem1_value(1600, 800, 1.0) ==
            Catch::Approx(0.019947114020071634).epsilon(1e-13));
    REQUIRE(theorem1_value(50, 25, 2.5) == Catch::Approx(2.5 * 0.11283791670955126).epsilon(1e-13));

    // self-similar in (n, k) -> (4n, 4k): halves
    REQUIRE(theorem1_value(4 * 360, 4 * 90, 0.7) ==
            Catch::Approx(theorem1_value(360, 90, 0.7) / 2.0).epsilon(1e-14));

    REQUIRE_THROWS_AS(theorem1_value(10, 0, 1.0), ValidationError);
    REQUIRE_THROWS_AS(theorem1_value(10, 10, 1.0), ValidationError);
}

TEST_CASE("transition-zone branches fit together", "[asymptotics]") {
    // NEAR_SMALL is theorem1 times sqrt(n/k)
    const std::uint64_t n = 1000, k = 900;
    const double r = theorem2_value(n, k, 1.3, 0.0, RegimeLabel::NEAR_SMALL) /
                     theorem1_value(n, k, 1.3);
    REQUIRE(r == Catch::Approx(std::sqrt(static_cast<double>(n) / k)).epsilon(1e-12));

    // deep in k = n - o(n) the two are indistinguishable
    const double rr = theorem2_value(10000, 9900, 1.0, 0.0, RegimeLabel::NEAR_SMALL) /
                      theorem1_value(10000, 9900, 1.0);
    REQUIRE(rr > 0.99);
    REQUIRE(rr < 1.01);

    // the critical branch is continuous through g_k = 0
    const double base = theorem2_value(n, k, 1.0, 0.0, RegimeLabel::NEAR_SMALL);
    for (double gk : {-1e-8, 1e-8}) {
        const double v = theorem2_value(n, k, 1.0, gk, RegimeLabel::NEAR_CRITICAL);
        REQUIRE(v == Catch::Approx(base).epsilon(1e-7));
    }

    REQUIRE_THROWS_AS(theorem2_value(n, k, 1.0, 0.5, RegimeLabel::NEAR_LARGE), ValidationError);
    REQUIRE_THROWS_AS(theorem2_value(n, k, 1.0, 0.0, RegimeLabel::FAR), ValidationError);
    REQUIRE(asymptotic_value(n, k, 1.0, -3.0, RegimeLabel::FAR) == theorem1_value(n, k, 1.0));
}

TEST_CASE("critical-to-deep crossover ratio", "[asymptotics]") {
    // sqrt(2/pi) gamma_signed(-eta) / (2 eta): how far the critical formula sits above
    // the deep-boundary line when g_k = -eta sqrt(n-k)
    const double c2 = kSqrt2OverPi * asymdetail::gamma_signed(-2.0) / 4.0;
    const double c4 = kSqrt2OverPi * asymdetail::gamma_signed(-4.0) / 8.0;
    REQUIRE(c2 == Catch::Approx(1.00424535130841).margin(1e-11));
    REQUIRE(c4 == Catch::Approx(1.00000178631461).margin(1e-11));

    const std::uint64_t n = 5000, k = 4900; // rest = 100
    const double gk = -2.0 * std::sqrt(100.0);
    const double ratio = theorem2_value(n, k, 1.0, gk, RegimeLabel::NEAR_CRITICAL) /
                         theorem2_value(n, k, 1.0, gk, RegimeLabel::NEAR_LARGE);
    REQUIRE(ratio == Catch::Approx(c2).epsilon(1e-12));
}

TEST_CASE("limit tails and homogeneity", "[asymptotics]") {
    REQUIRE(rayleigh_tail(0.0) == 1.0);
    REQUIRE(rayleigh_tail(std::sqrt(2.0 * std::log(2.0))) == Catch::Approx(0.5).epsilon(1e-15));
    REQUIRE_THROWS_AS(rayleigh_tail(-0.1), ValidationError);

    REQUIRE(tau_tail_value(4 * 625, 0.8) == Catch::Approx(tau_tail_value(625, 0.8) / 2.0).epsilon(1e-14));
    REQUIRE_THROWS_AS(tau_tail_value(0, 1.0), ValidationError);
}

TEST_CASE("meander transition density", "[asymptotics]") {
    REQUIRE(meander_density_q(1.0, 1.0) == Catch::Approx(0.34495131388824463).epsilon(1e-13));
    for (auto [u, v] : {std::pair{0.3, 1.7}, {2.0, 0.5}, {1.1, 1.2}})
        REQUIRE(meander_density_q(u, v) == Catch::Approx(meander_density_q(v, u)).epsilon(1e-14));

    // int_0^inf q(1,v) dv = 2 Phi(1) - 1
    const double mass = integrate([](double v) { return meander_density_q(1.0, v); }, 1e-12,
                                  40.0, 1e-12);
    REQUIRE(mass == Catch::Approx(0.6826894921370859).margin(1e-9));

    REQUIRE_THROWS_AS(meander_density_q(0.0, 1.0), ValidationError);
    REQUIRE_THROWS_AS(meander_density_q(1.0, 0.0), ValidationError);
}

TEST_CASE("scaling-window display recomputation", "[asymptotics]") {
    LadderStats flat; // empty tables read as 1.0, means set by hand
    flat.mean_descending = 0.7071;
    flat.mean_ascending_dual = 0.7072;

    const std::uint64_t n = 40000;
    const double nn = static_cast<double>(n);
    const double delta = 0.25;

    const double x3 = 1.5 * std::sqrt(nn), y3 = 0.8 * std::sqrt(nn);
    REQUIRE(doney_regime_density(DoneyRegime::iii, x3, y3, n, delta, flat) ==
            Catch::Approx(delta * meander_density_q(1.5, 0.8) / std::sqrt(nn)).epsilon(1e-12));

    const double x2 = 2.0, y2 = 0.9 * std::sqrt(nn);
    REQUIRE(doney_regime_density(DoneyRegime::ii_a, x2, y2, n, delta, flat) ==
            Catch::Approx(kSqrt2OverPi * 0.7071 * delta / std::sqrt(nn) * (y2 / nn) *
                          std::exp(-0.5 * y2 * y2 / nn))
                .epsilon(1e-12));
    REQUIRE(doney_regime_density(DoneyRegime::ii_b, y2, x2, n, delta, flat) ==
            Catch::Approx(kSqrt2OverPi * 0.7072 * delta / std::sqrt(nn) * (y2 / nn) *
                          std::exp(-0.5 * y2 * y2 / nn))
                .epsilon(1e-12));

    // with flat tables the small-scale display integrates a constant exactly
    REQUIRE(doney_regime_density(DoneyRegime::i, 1.0, 2.0, n, delta, flat) ==
            Catch::Approx(delta / (std::sqrt(2.0 * M_PI) * nn * std::sqrt(nn))).epsilon(1e-12));

    REQUIRE_THROWS_AS(doney_regime_density(DoneyRegime::i, -1.0, 2.0, n, delta, flat),
                      ValidationError);
    REQUIRE_THROWS_AS(doney_regime_density(DoneyRegime::i, 1.0, 2.0, n, 0.0, flat),
                      ValidationError);
}

TEST_CASE("killed-position density branches", "[asymptotics]") {
    LadderStats flat;
    flat.mean_ascending_dual = 2.5;

    const std::uint64_t k = 900;
    const double kk = 900.0;
    const double L = 1.4;
    const double pref = kSqrt2OverPi * L / (kk * std::sqrt(kk));

    // at t = sqrt(k) the bulk branch collapses to pref sqrt(k) e^{-1/2}
    REQUIRE(prop2_density(std::sqrt(kk), k, L, -3.0, flat, Prop2Branch::large_t) ==
            Catch::Approx(pref * std::sqrt(kk) * std::exp(-0.5)).epsilon(1e-12));
    REQUIRE(prop2_density(-1.0, k, L, -3.0, flat, Prop2Branch::small_t) ==
            Catch::Approx(pref * 2.5).epsilon(1e-12));

    REQUIRE_THROWS_AS(prop2_density(-4.0, k, L, -3.0, flat, Prop2Branch::small_t),
                      ValidationError);
    REQUIRE_THROWS_AS(prop2_density(1.0, 0, L, -3.0, flat, Prop2Branch::large_t),
                      ValidationError);
}

TEST_CASE("appendix integral closed forms", "[asymptotics]") {
    REQUIRE(lemma_B1(1.0, 0.3) == Catch::Approx(0.022926473497774427).epsilon(1e-13));
    REQUIRE(lemma_B1(0.0, 0.5) == Catch::Approx(0.15666426716443753).epsilon(1e-13));
    for (double eps : {0.1, 0.35, 0.62}) {
        const double a2 = eps * (1.0 - eps);
        REQUIRE(lemma_B1(0.0, eps) ==
                Catch::Approx(std::pow(a2, 1.5) * std::sqrt(M_PI / 2.0)).epsilon(1e-14));
    }
    REQUIRE_THROWS_AS(lemma_B1(-1.0, 0.3), ValidationError);
    REQUIRE_THROWS_AS(lemma_B1(1.0, 0.0), ValidationError);
    REQUIRE_THROWS_AS(lemma_B1(1.0, 1.0), ValidationError);

    REQUIRE(lemma_B2_full(1.5, 0.4) == Catch::Approx(0.59800597316734471).epsilon(1e-13));
    REQUIRE(lemma_B2_full(1.0, 0.5) ==
            Catch::Approx(std::sqrt(2.0 * M_PI) * 0.5 * std::exp(-0.5)).epsilon(1e-14));
    REQUIRE_THROWS_AS(lemma_B2_full(0.0, 0.4), ValidationError);

    REQUIRE(lemma_B2_partial(0.8, 1.5, 0.4) ==
            Catch::Approx(0.12361735814475691).epsilon(1e-12));
    REQUIRE(lemma_B2_partial(40.0, 1.5, 0.4) ==
            Catch::Approx(lemma_B2_full(1.5, 0.4)).epsilon(1e-12));
    // the bracket in the integrand never exceeds 1, so the stopped integral is
    // dominated by 1 - e^{-x^2/(2(1-eps))}
    for (double x : {0.2, 0.6, 1.1, 2.0})
        for (double c : {0.4, 1.0, 2.2})
            for (double eps : {0.15, 0.5, 0.85})
                REQUIRE(lemma_B2_partial(x, c, eps) <=
                        1.0 - std::exp(-0.5 * x * x / (1.0 - eps)) + 1e-14);

    REQUIRE(lemma_B3(0.5, 3.0, -2.0, 116, 100) ==
            Catch::Approx(4.3164148211694821).epsilon(1e-13));
    const double inf = std::numeric_limits<double>::infinity();
    REQUIRE(lemma_B3(0.0, inf, 0.0, 116, 100) == Catch::Approx(16.0).epsilon(1e-14));
    REQUIRE_THROWS_AS(lemma_B3(3.0, 1.0, -2.0, 116, 100), ValidationError);
    REQUIRE_THROWS_AS(lemma_B3(0.5, 3.0, -2.0, 100, 100), ValidationError);
}

TEST_CASE("closed forms agree with quadrature over the whole lattice", "[asymptotics]") {
    IdentityCheckReport rep = check_integral_identities();
    REQUIRE(rep.rows.size() == 420);
    REQUIRE(rep.max_rel_error <= 1e-10);
}

TEST_CASE("regime labels round trip", "[asymptotics]") {
    for (RegimeLabel r : {RegimeLabel::FAR, RegimeLabel::NEAR_SMALL, RegimeLabel::NEAR_CRITICAL,
                          RegimeLabel::NEAR_LARGE})
        REQUIRE(parse_regime(regime_name(r)) == r);
    REQUIRE_THROWS_AS(parse_regime("sideways"), ValidationError);
}
