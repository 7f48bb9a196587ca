#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace ptsim::bounds {

using BigInt = boost::multiprecision::cpp_int;
using BigRat = boost::multiprecision::cpp_rational;

inline BigInt big_pow(const BigInt& base, long exp) {
    BigInt r = 1;
    for (long i = 0; i < exp; ++i) r *= base;
    return r;
}

/// Double value of a big rational; safe for numerators/denominators far
/// beyond the double range as long as the quotient itself is representable.
inline double to_double(const BigRat& r) {
    if (r == 0) return 0.0;
    BigInt p = boost::multiprecision::numerator(r);
    BigInt q = boost::multiprecision::denominator(r);
    double sign = 1.0;
    if (p < 0) {
        p = -p;
        sign = -1.0;
    }
    const long bp = static_cast<long>(boost::multiprecision::msb(p));
    const long bq = static_cast<long>(boost::multiprecision::msb(q));
    const long sp = std::max(0L, bp - 128);
    const long sq = std::max(0L, bq - 128);
    const double pd = static_cast<double>(p >> sp);
    const double qd = static_cast<double>(q >> sq);
    return sign * std::ldexp(pd / qd, static_cast<int>(sp - sq));
}

inline double log2_big(const BigInt& p) {
    if (p <= 0) throw std::invalid_argument("log2_big: argument must be positive");
    const long b = static_cast<long>(boost::multiprecision::msb(p));
    const long s = std::max(0L, b - 52);
    return static_cast<double>(s) + std::log2(static_cast<double>(p >> s));
}

/// log2 of a positive big rational, accurate to ~1e-13 absolute.
inline double log2_rational(const BigRat& r) {
    if (r <= 0) throw std::invalid_argument("log2_rational: argument must be positive");
    return log2_big(boost::multiprecision::numerator(r)) -
           log2_big(boost::multiprecision::denominator(r));
}

/// log2(sum_i 2^x_i); -inf entries are skipped.
inline double log_sum_exp2(const std::vector<double>& xs) {
    double m = -std::numeric_limits<double>::infinity();
    for (double x : xs) m = std::max(m, x);
    if (!std::isfinite(m)) return m;
    double s = 0;
    for (double x : xs)
        if (std::isfinite(x)) s += std::exp2(x - m);
    return m + std::log2(s);
}

// --- Haar closed forms (exact rationals) --------------------------------

/// E_H[tr(Upsilon^2)] for the per-step Haar ensemble:
/// (d_E^2-1)/(d_E (d_ES+1)) * ((d_E^2-1)/(d_ES^2-1))^k + 1/d_E.
inline BigRat expected_purity_haar(const BigInt& d_E, long d_S, long k) {
    if (d_E < 1 || d_S < 2 || k < 0)
        throw std::invalid_argument("expected_purity_haar: bad parameters");
    if (d_E == 1) return BigRat(1);
    const BigInt d_ES = d_E * d_S;
    const BigRat lead(d_E * d_E - 1, d_E * (d_ES + 1));
    const BigRat ratio(d_E * d_E - 1, d_ES * d_ES - 1);
    BigRat acc = lead;
    for (long i = 0; i < k; ++i) acc *= ratio;
    return acc + BigRat(1, d_E);
}

/// Concentration rate constant, tail-bound normalization:
/// d_ES (k+1)/16 * ((d_S-1)/(d_S^{k+1}-1))^2.
inline BigRat haar_concentration_rate(const BigInt& d_E, long d_S, long k) {
    if (d_E < 1 || d_S < 2 || k < 0)
        throw std::invalid_argument("haar_concentration_rate: bad parameters");
    const BigInt d_ES = d_E * d_S;
    const BigInt den = big_pow(BigInt(d_S), k + 1) - 1;
    return BigRat(d_ES * (k + 1), 16) * BigRat(d_S - 1, den) * BigRat(d_S - 1, den);
}

/// The exponential-bound normalization of the same constant (4x the
/// tail-bound value); (m/C)^m == (4m/C_exp)^m.
inline BigRat haar_concentration_rate_exp(const BigInt& d_E, long d_S, long k) {
    return 4 * haar_concentration_rate(d_E, d_S, k);
}

/// Upper bound on the expected trace-norm non-Markovianity of the Haar
/// ensemble. Piecewise in d_E against d_S^(2k+1); the radicand is kept as an
/// exact rational to survive the catastrophic cancellation at large d_E.
inline double haar_mean_nm_bound(const BigInt& d_E, long d_S, long k) {
    const BigRat purity = expected_purity_haar(d_E, d_S, k);
    const BigInt ds_pow = big_pow(BigInt(d_S), 2 * k + 1);
    if (d_E >= ds_pow) {
        const BigRat rad = BigRat(ds_pow) * purity - 1;
        if (rad < 0) throw std::runtime_error("haar_mean_nm_bound: negative radicand");
        return 0.5 * std::sqrt(to_double(rad));
    }
    const BigRat y = 1 - BigRat(d_E, ds_pow);
    const BigRat x = BigRat(d_E, ds_pow) * (1 + y);
    const BigRat rad = BigRat(d_E) * purity - x;
    if (rad < 0) throw std::runtime_error("haar_mean_nm_bound: negative radicand");
    return 0.5 * (std::sqrt(to_double(rad)) + to_double(y));
}

/// log2 of the coefficient-sum bound eta of the squared N_2 polynomial:
/// eta = (d_E^4 d_S^{2(k+2)} + d_S^{-(2k+1)}) / 4.
inline double coeff_sum_bound_log2(const BigInt& d_E, long d_S, long k) {
    if (d_E < 1 || d_S < 2 || k < 0)
        throw std::invalid_argument("coeff_sum_bound_log2: bad parameters");
    BigRat four_eta = BigRat(big_pow(d_E, 4) * big_pow(BigInt(d_S), 2 * (k + 2))) +
                      BigRat(1, big_pow(BigInt(d_S), 2 * k + 1));
    return log2_rational(four_eta / 4);
}

/// Haar moment bound E_H[N_2^{2m}] <= (m/C)^m + (2B)^{2m}, assembled in the
/// log domain.
inline double haar_moment_bound(double m, const BigInt& d_E, long d_S, long k) {
    if (!(m > 0)) throw std::invalid_argument("haar_moment_bound: m must be > 0");
    const double log2_c = log2_rational(haar_concentration_rate(d_E, d_S, k));
    const double b = haar_mean_nm_bound(d_E, d_S, k);
    const double term_c = m * (std::log2(m) - log2_c);
    const double term_b = (b > 0) ? 2.0 * m * std::log2(2.0 * b)
                                  : -std::numeric_limits<double>::infinity();
    return std::exp2(log_sum_exp2({term_c, term_b}));
}

// --- design tail bound ---------------------------------------------------

struct BoundParams {
    long d_S = 2;
    long log2_dE = 1;   // d_E = 2^log2_dE
    long k = 0;
    long t = 2;
    double epsilon = 1e-12;  // in [0, 1]; 0 recovers the pure Haar assembly
    double delta = 0.1;
    std::optional<double> m;  // explicit exponent; nullopt = optimize

    void validate() const {
        if (d_S < 2) throw std::invalid_argument("BoundParams: d_S must be >= 2");
        if (log2_dE < 0) throw std::invalid_argument("BoundParams: log2_dE must be >= 0");
        if (k < 0) throw std::invalid_argument("BoundParams: k must be >= 0");
        if (t < 1) throw std::invalid_argument("BoundParams: t must be >= 1");
        if (epsilon < 0.0 || epsilon > 1.0)
            throw std::invalid_argument("BoundParams: epsilon must be in [0, 1]");
        if (!(delta > 0)) throw std::invalid_argument("BoundParams: delta must be > 0");
        if (m && !(*m > 0 && *m <= t / 4.0))
            throw std::invalid_argument("BoundParams: m must be in (0, t/4]");
    }
    BigInt d_E() const { return BigInt(1) << log2_dE; }
};

/// Term-by-term log2 breakdown of the tail bound; each term carries the
/// d_S^{3m(2k+1)}/delta^{2m} prefactor.
struct BoundBreakdown {
    double m_used = 0;
    double log2_term_moment = 0;
    double log2_term_B = 0;
    double log2_term_eps = 0;
    double log2_total = 0;
    double total_clamped = 0;
};

namespace detail {

// Exact-rational work hoisted out of the per-m evaluation.
struct BoundContext {
    double log2_c = 0;
    double b = 0;
    double log2_eta = 0;
};

inline BoundContext make_bound_context(const BoundParams& p) {
    const BigInt d_E = p.d_E();
    BoundContext ctx;
    ctx.log2_c = log2_rational(haar_concentration_rate(d_E, p.d_S, p.k));
    ctx.b = haar_mean_nm_bound(d_E, p.d_S, p.k);
    ctx.log2_eta = coeff_sum_bound_log2(d_E, p.d_S, p.k);
    return ctx;
}

inline BoundBreakdown eval_tail_bound(const BoundParams& p, const BoundContext& ctx, double m) {
    const double log2_ds = std::log2(static_cast<double>(p.d_S));
    const double prefactor = 3.0 * m * (2 * p.k + 1) * log2_ds - 2.0 * m * std::log2(p.delta);
    BoundBreakdown out;
    out.m_used = m;
    out.log2_term_moment = prefactor + m * (std::log2(m) - ctx.log2_c);
    out.log2_term_B = prefactor + ((ctx.b > 0) ? 2.0 * m * std::log2(2.0 * ctx.b)
                                               : -std::numeric_limits<double>::infinity());
    const double log2_d_es = static_cast<double>(p.log2_dE) + log2_ds;
    out.log2_term_eps =
        (p.epsilon > 0)
            ? prefactor + std::log2(p.epsilon) - p.t * log2_d_es + 2.0 * m * ctx.log2_eta
            : -std::numeric_limits<double>::infinity();
    out.log2_total = log_sum_exp2({out.log2_term_moment, out.log2_term_B, out.log2_term_eps});
    out.total_clamped = std::min(1.0, std::exp2(out.log2_total));
    return out;
}

}  // namespace detail

/// P[N_diamond >= delta] <= (d_S^{3m(2k+1)}/delta^{2m})
///     [ (m/C)^m + (2B)^{2m} + (epsilon/d_ES^t) eta^{2m} ],
/// valid for m in (0, t/4], evaluated entirely in the log2 domain.
inline BoundBreakdown design_tail_bound(const BoundParams& params, double m) {
    BoundParams p = params;
    p.m = m;
    p.validate();
    return detail::eval_tail_bound(p, detail::make_bound_context(p), m);
}

/// Minimize log2 of the tail bound over m in (0, t/4]: 512-point geometric
/// grid on [t/4 * 1e-6, t/4], then golden-section refinement to relative
/// 1e-6, ties toward smaller m.
inline std::pair<double, BoundBreakdown> optimize_m(const BoundParams& params) {
    BoundParams p = params;
    p.m.reset();
    p.validate();
    const auto ctx = detail::make_bound_context(p);
    const auto eval = [&](double m) { return detail::eval_tail_bound(p, ctx, m).log2_total; };

    const double m_hi = p.t / 4.0;
    const double m_lo = m_hi * 1e-6;
    const int grid_points = 512;

    double best_m = m_lo;
    double best_val = std::numeric_limits<double>::infinity();
    int best_idx = 0;
    const double ratio = std::pow(m_hi / m_lo, 1.0 / (grid_points - 1));
    std::vector<double> grid(grid_points);
    for (int i = 0; i < grid_points; ++i) grid[i] = m_lo * std::pow(ratio, i);
    grid.back() = m_hi;
    for (int i = 0; i < grid_points; ++i) {
        const double v = eval(grid[i]);
        if (v < best_val) {
            best_val = v;
            best_m = grid[i];
            best_idx = i;
        }
    }

    // Golden-section refinement in the bracket around the best grid point.
    double lo = grid[std::max(0, best_idx - 1)];
    double hi = grid[std::min(grid_points - 1, best_idx + 1)];
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - gr * (hi - lo);
    double x2 = lo + gr * (hi - lo);
    double f1 = eval(x1);
    double f2 = eval(x2);
    while ((hi - lo) > 1e-6 * hi) {
        if (f1 <= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - gr * (hi - lo);
            f1 = eval(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + gr * (hi - lo);
            f2 = eval(x2);
        }
        const double x = (f1 <= f2) ? x1 : x2;
        const double f = std::min(f1, f2);
        if (f < best_val || (f == best_val && x < best_m)) {
            best_val = f;
            best_m = x;
        }
    }
    return {best_m, detail::eval_tail_bound(p, ctx, best_m)};
}

enum class HaarTailForm {
    quadratic,  // exp(-4 C delta^2 d_S^{-2(2k+1)})
    linear,     // alternative exp(-eta delta), eta = d_S^{-2(2k+1)} C_exp
};

struct HaarTail {
    double threshold = 0;
    double probability_bound = 1;
};

/// Haar large-deviation bound: P[N_diamond >= d_S^{2k+1} B + delta] is at
/// most the returned probability bound.
inline HaarTail haar_tail_bound(double delta, const BigInt& d_E, long d_S, long k,
                                HaarTailForm form = HaarTailForm::quadratic) {
    if (!(delta > 0)) throw std::invalid_argument("haar_tail_bound: delta must be > 0");
    const double b = haar_mean_nm_bound(d_E, d_S, k);
    const BigRat c = haar_concentration_rate(d_E, d_S, k);
    const BigRat ds_scale(1, big_pow(BigInt(d_S), 2 * (2 * k + 1)));
    HaarTail out;
    out.threshold = std::pow(static_cast<double>(d_S), static_cast<double>(2 * k + 1)) * b + delta;
    const double rate = to_double(4 * c * ds_scale);
    const double exponent =
        (form == HaarTailForm::quadratic) ? -rate * delta * delta : -rate * delta;
    out.probability_bound = std::min(1.0, std::exp(exponent));
    return out;
}

struct EpsilonCondition {
    double required_log2_epsilon = 0;
    bool satisfied = false;
};

/// Markov-convergence requirement on the design approximation:
/// epsilon << [delta^2 (2/(d_E^2 d_S^{(10k+11)/4}))^4]^m d_E^t d_S^t.
/// `margin_bits` is how far below the right-hand side log2(epsilon) must sit.
inline EpsilonCondition epsilon_condition(const BoundParams& params, double m,
                                          double margin_bits = 10.0) {
    BoundParams p = params;
    p.m = m;
    p.validate();
    const double log2_ds = std::log2(static_cast<double>(p.d_S));
    const double inner = 2.0 * std::log2(p.delta) +
                         4.0 * (1.0 - 2.0 * static_cast<double>(p.log2_dE) -
                                (10.0 * p.k + 11.0) / 4.0 * log2_ds);
    EpsilonCondition out;
    out.required_log2_epsilon =
        m * inner + static_cast<double>(p.t) * (static_cast<double>(p.log2_dE) + log2_ds);
    out.satisfied =
        p.epsilon > 0 && std::log2(p.epsilon) <= out.required_log2_epsilon - margin_bits;
    return out;
}

}  // namespace ptsim::bounds
