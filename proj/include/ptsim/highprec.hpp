#pragma once

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <stdexcept>

// Independent high-precision (50 decimal digit) evaluation of the analytic
// quantities, straight from the closed-form expressions in ordinary floating
// point. Deliberately shares no code with ptsim::bounds (no rationals, no
// log-domain assembly); used only to cross-check it.

namespace ptsim::hp {

using F50 = boost::multiprecision::cpp_bin_float_50;

inline F50 ipow(const F50& base, long e) {
    F50 r = 1;
    for (long i = 0; i < e; ++i) r *= base;
    return r;
}

inline F50 expected_purity(const F50& d_E, long d_S, long k) {
    if (d_E == 1) return F50(1);
    const F50 d_ES = d_E * d_S;
    const F50 lead = (d_E * d_E - 1) / (d_E * (d_ES + 1));
    const F50 ratio = (d_E * d_E - 1) / (d_ES * d_ES - 1);
    return lead * ipow(ratio, k) + 1 / d_E;
}

inline F50 concentration_rate(const F50& d_E, long d_S, long k) {
    const F50 d_ES = d_E * d_S;
    const F50 frac = (F50(d_S) - 1) / (ipow(F50(d_S), k + 1) - 1);
    return d_ES * (k + 1) / 16 * frac * frac;
}

inline F50 mean_nm_bound(const F50& d_E, long d_S, long k) {
    const F50 purity = expected_purity(d_E, d_S, k);
    const F50 ds_pow = ipow(F50(d_S), 2 * k + 1);
    if (d_E >= ds_pow) return sqrt(ds_pow * purity - 1) / 2;
    const F50 y = 1 - d_E / ds_pow;
    const F50 x = d_E / ds_pow * (1 + y);
    return (sqrt(d_E * purity - x) + y) / 2;
}

inline F50 coeff_sum_bound(const F50& d_E, long d_S, long k) {
    return (ipow(d_E, 4) * ipow(F50(d_S), 2 * (k + 2)) + 1 / ipow(F50(d_S), 2 * k + 1)) / 4;
}

/// log2 of the design tail bound, all three terms evaluated linearly in
/// 50-digit arithmetic.
inline F50 design_tail_log2(long d_S, long log2_dE, long k, long t, const F50& epsilon,
                            const F50& delta, const F50& m) {
    const F50 d_E = ipow(F50(2), log2_dE);
    const F50 d_ES = d_E * d_S;
    const F50 prefactor = pow(ipow(F50(d_S), 3 * (2 * k + 1)) / (delta * delta), m);
    const F50 c = concentration_rate(d_E, d_S, k);
    const F50 b = mean_nm_bound(d_E, d_S, k);
    const F50 eta = coeff_sum_bound(d_E, d_S, k);
    F50 sum = pow(m / c, m);
    if (b > 0) sum += pow(2 * b, 2 * m);
    if (epsilon > 0) sum += epsilon / pow(d_ES, F50(t)) * pow(eta, 2 * m);
    return log(prefactor * sum) / log(F50(2));
}

inline F50 haar_tail_probability(const F50& delta, const F50& d_E, long d_S, long k,
                                 bool quadratic = true) {
    const F50 c = concentration_rate(d_E, d_S, k);
    const F50 scale = 1 / ipow(F50(d_S), 2 * (2 * k + 1));
    const F50 e = quadratic ? -4 * c * delta * delta * scale : -4 * c * delta * scale;
    const F50 p = exp(e);
    return p > 1 ? F50(1) : p;
}

}  // namespace ptsim::hp
