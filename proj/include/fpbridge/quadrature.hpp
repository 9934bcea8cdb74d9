#pragma once

#include <cmath>
#include <cstddef>

#include "fpbridge/errors.hpp"

namespace fpbridge {

// Adaptive Gauss-Kronrod 7-15 on a finite interval. The G7/K15 gap drives refinement.
// Integrands here are smooth with at most isolated kinks, so plain bisection converges fast.
namespace gkdetail {

inline constexpr double kNodes[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};

inline constexpr double kWeightK[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};

inline constexpr double kWeightG[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class F>
void k15(F&& f, double a, double b, double& kron, double& err) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double fc = f(c);
    double acc_k = kWeightK[7] * fc;
    double acc_g = kWeightG[3] * fc;
    for (int i = 0; i < 7; ++i) {
        double x = h * kNodes[i];
        double s = f(c - x) + f(c + x);
        acc_k += kWeightK[i] * s;
        if (i % 2 == 1) acc_g += kWeightG[i / 2] * s;
    }
    kron = acc_k * h;
    err = std::abs((acc_k - acc_g) * h);
}

template <class F>
double adapt(F&& f, double a, double b, double tol_abs, int depth) {
    double v, e;
    k15(f, a, b, v, e);
    if (e <= tol_abs || depth >= 48) return v;
    double m = 0.5 * (a + b);
    return adapt(f, a, m, 0.5 * tol_abs, depth + 1) + adapt(f, m, b, 0.5 * tol_abs, depth + 1);
}

} // namespace gkdetail

template <class F>
double integrate(F&& f, double a, double b, double rel_tol = 1e-13) {
    if (!(b > a)) return 0.0;
    double v0, e0;
    gkdetail::k15(f, a, b, v0, e0);
    double scale = std::abs(v0);
    if (scale < 1e-300) scale = 1.0;
    return gkdetail::adapt(f, a, b, rel_tol * scale, 0);
}

// Semi-infinite upper limit for integrands with (sub-)Gaussian or exponential decay:
// caller supplies a cut beyond which the tail is below the target accuracy.
template <class F>
double integrate_to_inf(F&& f, double a, double cut, double rel_tol = 1e-13) {
    if (cut <= a) return 0.0;
    return integrate(f, a, cut, rel_tol);
}

} // namespace fpbridge
