#pragma once

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ptsim/matrix.hpp"

namespace ptsim {

inline long checked_pow(long base, long exp) {
    long r = 1;
    for (long i = 0; i < exp; ++i) {
        if (r > (1L << 40) / base) throw std::invalid_argument("dimension overflow");
        r *= base;
    }
    return r;
}

/// Dimensions of a k-step system-environment process.
struct ProcessDims {
    long d_E = 1;  // environment dimension, >= 1
    long d_S = 2;  // system dimension, >= 2
    long k = 0;    // step count, >= 0

    void validate() const {
        if (d_E < 1) throw std::invalid_argument("ProcessDims: d_E must be >= 1");
        if (d_S < 2) throw std::invalid_argument("ProcessDims: d_S must be >= 2");
        if (k < 0) throw std::invalid_argument("ProcessDims: k must be >= 0");
        (void)dilation_dim();
    }
    long num_legs() const { return 2 * k + 1; }
    long choi_dim() const { return checked_pow(d_S, 2 * k + 1); }
    long dilation_dim() const {
        long c = choi_dim();
        if (c > (1L << 40) / d_E) throw std::invalid_argument("dimension overflow");
        return d_E * c;
    }
    std::vector<long> leg_dims() const { return std::vector<long>(num_legs(), d_S); }
    bool operator==(const ProcessDims&) const = default;
};

/// Choi state of a k-step process.
///
/// Leg order of `matrix`, major digit first:
///   leg 0         : final system output S_out
///   leg 2i-1      : step-i input leg (the leg the i-th intervention feeds
///                   into the i-th unitary), i = 1..k
///   leg 2i        : step-i output leg (the system state the process emits
///                   before the i-th intervention)
/// Normalization: trace 1 (ancilla pairs are normalized maximally entangled
/// states). event_probability() restores the Born-rule scale internally.
struct ProcessChoi {
    ProcessDims dims;
    Matrix matrix;

    void validate(double tol = kHermTol) const {
        dims.validate();
        const long d = dims.choi_dim();
        if (matrix.rows() != d || matrix.cols() != d)
            throw std::invalid_argument("ProcessChoi: matrix dimension mismatch");
        if (hermiticity_residual(matrix) > tol)
            throw std::invalid_argument("ProcessChoi: matrix not Hermitian");
        if (std::abs(matrix.trace().real() - 1.0) > tol || std::abs(matrix.trace().imag()) > tol)
            throw std::invalid_argument("ProcessChoi: trace != 1");
        const auto ev = hermitian_eigenvalues(matrix, tol);
        if (ev.back() < -tol) throw std::invalid_argument("ProcessChoi: matrix not PSD");
    }
};

/// Normalized maximally entangled projector (1/d) sum_ij |ii><jj|.
inline Matrix max_entangled(long d) {
    Matrix out = Matrix::Zero(d * d, d * d);
    const double w = 1.0 / static_cast<double>(d);
    for (long i = 0; i < d; ++i)
        for (long j = 0; j < d; ++j) out(i * d + i, j * d + j) = w;
    return out;
}

inline Vector max_entangled_vector(long d) {
    Vector v = Vector::Zero(d * d);
    const double a = 1.0 / std::sqrt(static_cast<double>(d));
    for (long i = 0; i < d; ++i) v(i * d + i) = a;
    return v;
}

namespace detail {

// Dilation tensor-digit layout, major first:
//   digit 0      : E            (dim d_E)
//   digit 1      : S            (dim d_S)
//   digit 2i     : step-i input leg   (dim d_S), i = 1..k
//   digit 2i+1   : step-i output leg  (dim d_S), i = 1..k
// Ancilla pair i starts as a maximally entangled state on digits (2i, 2i+1);
// the step-i swap exchanges digit 1 (S) with digit 2i+1, which deposits the
// current system state on the output leg and feeds the entangled half into
// the next unitary.
inline std::vector<long> dilation_digit_dims(const ProcessDims& pd) {
    std::vector<long> d;
    d.reserve(2 * pd.k + 2);
    d.push_back(pd.d_E);
    for (long i = 0; i < 2 * pd.k + 1; ++i) d.push_back(pd.d_S);
    return d;
}

// Index map of the step-i swap: out[x] is the basis index x with the S digit
// and the step-i output digit exchanged. Self-inverse.
inline std::vector<long> swap_index_map(const ProcessDims& pd, long step) {
    if (step < 1 || step > pd.k) throw std::out_of_range("swap step index out of range");
    const auto dims = dilation_digit_dims(pd);
    const auto strides = ptsim::detail::strides_of(dims);
    const long sa = strides[1];                // S digit
    const long sb = strides[2 * step + 1];     // step output digit
    const long d = pd.dilation_dim();
    const long dS = pd.d_S;
    std::vector<long> out(d);
    for (long x = 0; x < d; ++x) {
        const long a = (x / sa) % dS;
        const long b = (x / sb) % dS;
        out[x] = x + (b - a) * sa + (a - b) * sb;
    }
    return out;
}

inline void require_unitary(const Matrix& u, long dim, const char* what) {
    if (u.rows() != dim || u.cols() != dim)
        throw std::invalid_argument(std::string(what) + ": dimension mismatch");
    if (unitarity_residual(u) > kHermTol)
        throw std::invalid_argument(std::string(what) + ": matrix is not unitary");
}

inline void require_state(const Matrix& rho, long dim, const char* what) {
    if (rho.rows() != dim || rho.cols() != dim)
        throw std::invalid_argument(std::string(what) + ": dimension mismatch");
    if (hermiticity_residual(rho) > kHermTol)
        throw std::invalid_argument(std::string(what) + ": state not Hermitian");
    if (std::abs(rho.trace().real() - 1.0) > kHermTol)
        throw std::invalid_argument(std::string(what) + ": state trace != 1");
    const auto ev = hermitian_eigenvalues(rho);
    if (ev.back() < -kHermTol)
        throw std::invalid_argument(std::string(what) + ": state not positive semidefinite");
}

}  // namespace detail

/// Permutation unitary on the full dilation space exchanging the S factor
/// with the half of ancilla pair i that receives the system state at step i.
inline Matrix swap_system_ancilla(long step, const ProcessDims& pd) {
    pd.validate();
    const auto map = detail::swap_index_map(pd, step);
    const long d = pd.dilation_dim();
    Matrix out = Matrix::Zero(d, d);
    for (long x = 0; x < d; ++x) out(map[x], x) = 1.0;
    return out;
}

/// Batched pure-state dilation evolution. Column b of the state is the
/// dilation vector psi_b; the environment trace of the weighted mixture
/// sum_b w_b |psi_b><psi_b| yields the Choi matrix.
class DilationBatch {
public:
    DilationBatch(const ProcessDims& pd, const Matrix& es_columns) : pd_(pd) {
        pd_.validate();
        d_es_ = pd_.d_E * pd_.d_S;
        d_anc_ = checked_pow(pd_.d_S, 2 * pd_.k);
        d_ = pd_.dilation_dim();
        if (es_columns.rows() != d_es_)
            throw std::invalid_argument("DilationBatch: column dimension must be d_E*d_S");
        const long b_count = es_columns.cols();
        state_ = Matrix::Zero(d_, b_count);
        // Tensor each ES column with the k maximally entangled ancilla pairs:
        // only ancilla indices with in_i == out_i for all i are populated.
        const long diag_count = checked_pow(pd_.d_S, pd_.k);
        const double amp = std::pow(static_cast<double>(pd_.d_S), -0.5 * pd_.k);
        for (long c = 0; c < diag_count; ++c) {
            long a = 0, rem = c;
            for (long i = 0; i < pd_.k; ++i) {  // pair digits (in_i, out_i) equal
                const long digit = rem % pd_.d_S;
                rem /= pd_.d_S;
                a = a * pd_.d_S * pd_.d_S + digit * pd_.d_S + digit;
            }
            for (long es = 0; es < d_es_; ++es)
                state_.row(es * d_anc_ + a) = amp * es_columns.row(es);
        }
    }

    /// Apply U (on E tensor S) times identity on all ancillas.
    void apply_es_unitary(const Matrix& u) {
        if (u.rows() != d_es_ || u.cols() != d_es_)
            throw std::invalid_argument("apply_es_unitary: dimension mismatch");
        const Matrix ut = u.transpose();
        Matrix tmp(d_anc_, d_es_);
        for (long b = 0; b < state_.cols(); ++b) {
            Eigen::Map<Matrix> view(state_.col(b).data(), d_anc_, d_es_);
            tmp.noalias() = view * ut;
            view = tmp;
        }
    }

    void apply_swap(long step) {
        const auto map = detail::swap_index_map(pd_, step);
        Matrix out(d_, state_.cols());
        for (long x = 0; x < d_; ++x) out.row(map[x]) = state_.row(x);
        state_.swap(out);
    }

    /// Choi matrix of the environment-traced weighted mixture.
    Matrix env_traced_choi(const std::vector<double>& weights) const {
        if (static_cast<long>(weights.size()) != state_.cols())
            throw std::invalid_argument("env_traced_choi: weight count mismatch");
        const long d_rest = pd_.choi_dim();
        Matrix y = Matrix::Zero(d_rest, d_rest);
        for (long b = 0; b < state_.cols(); ++b) {
            Eigen::Map<const Matrix> m(state_.col(b).data(), d_rest, pd_.d_E);
            y.noalias() += weights[b] * (m * m.adjoint());
        }
        return y;
    }

    const Matrix& state() const { return state_; }

private:
    ProcessDims pd_;
    long d_es_ = 0, d_anc_ = 0, d_ = 0;
    Matrix state_;
};

/// Dense density-matrix dilation evolution (general mixed initial states).
class DilationDensity {
public:
    DilationDensity(const ProcessDims& pd, const Matrix& rho0_es) : pd_(pd) {
        pd_.validate();
        d_es_ = pd_.d_E * pd_.d_S;
        d_anc_ = checked_pow(pd_.d_S, 2 * pd_.k);
        if (rho0_es.rows() != d_es_ || rho0_es.cols() != d_es_)
            throw std::invalid_argument("DilationDensity: rho0 must act on E tensor S");
        Matrix anc = Matrix::Identity(1, 1);
        for (long i = 0; i < pd_.k; ++i) anc = kron(anc, max_entangled(pd_.d_S));
        rho_ = kron(rho0_es, anc);
    }

    void apply_es_unitary(const Matrix& u) {
        rho_ = left_apply(u, rho_);
        rho_ = left_apply(u, rho_.adjoint().eval()).adjoint();
    }

    void apply_swap(long step) {
        const auto map = detail::swap_index_map(pd_, step);
        const long d = rho_.rows();
        Matrix out(d, d);
        for (long r = 0; r < d; ++r)
            for (long c = 0; c < d; ++c) out(r, c) = rho_(map[r], map[c]);
        rho_.swap(out);
    }

    Matrix env_traced_choi() const {
        const long d_rest = pd_.choi_dim();
        Matrix y = Matrix::Zero(d_rest, d_rest);
        for (long e = 0; e < pd_.d_E; ++e)
            y += rho_.block(e * d_rest, e * d_rest, d_rest, d_rest);
        return y;
    }

    const Matrix& state() const { return rho_; }

private:
    Matrix left_apply(const Matrix& u, const Matrix& x) const {
        Matrix y = x;
        const Matrix ut = u.transpose();
        Matrix tmp(d_anc_, d_es_);
        for (long b = 0; b < y.cols(); ++b) {
            Eigen::Map<Matrix> view(y.col(b).data(), d_anc_, d_es_);
            tmp.noalias() = view * ut;
            view = tmp;
        }
        return y;
    }

    ProcessDims pd_;
    long d_es_ = 0, d_anc_ = 0;
    Matrix rho_;
};

namespace detail {

inline ProcessChoi finalize_choi(const ProcessDims& pd, Matrix y) {
    y = 0.5 * (y + y.adjoint()).eval();
    ProcessChoi out{pd, std::move(y)};
    out.validate();
    return out;
}

}  // namespace detail

/// Build the Choi state of the k-step process generated by `unitaries`
/// (list of k+1 operators on E tensor S) from the initial SE state `rho0`.
inline ProcessChoi build_process_choi(const Matrix& rho0, const std::vector<Matrix>& unitaries,
                                      const ProcessDims& pd) {
    pd.validate();
    const long d_es = pd.d_E * pd.d_S;
    detail::require_state(rho0, d_es, "build_process_choi rho0");
    if (static_cast<long>(unitaries.size()) != pd.k + 1)
        throw std::invalid_argument("build_process_choi: need k+1 step unitaries");
    for (const auto& u : unitaries) detail::require_unitary(u, d_es, "build_process_choi step");

    DilationDensity dil(pd, rho0);
    for (long i = 0; i <= pd.k; ++i) {
        dil.apply_es_unitary(unitaries[i]);
        if (i < pd.k) dil.apply_swap(i + 1);
    }
    return detail::finalize_choi(pd, dil.env_traced_choi());
}

/// Pure-initial-state fast path: identical output to build_process_choi with
/// rho0 = |psi0><psi0| within numerical tolerance.
inline ProcessChoi build_process_choi_pure(const Vector& psi0, const std::vector<Matrix>& unitaries,
                                           const ProcessDims& pd) {
    pd.validate();
    const long d_es = pd.d_E * pd.d_S;
    if (psi0.size() != d_es) throw std::invalid_argument("build_process_choi_pure: psi0 dimension");
    if (std::abs(psi0.norm() - 1.0) > 1e-9)
        throw std::invalid_argument("build_process_choi_pure: psi0 not normalized");
    if (static_cast<long>(unitaries.size()) != pd.k + 1)
        throw std::invalid_argument("build_process_choi_pure: need k+1 step unitaries");
    for (const auto& u : unitaries) detail::require_unitary(u, d_es, "build_process_choi_pure step");

    DilationBatch dil(pd, psi0);
    for (long i = 0; i <= pd.k; ++i) {
        dil.apply_es_unitary(unitaries[i]);
        if (i < pd.k) dil.apply_swap(i + 1);
    }
    return detail::finalize_choi(pd, dil.env_traced_choi({1.0}));
}

/// Fast path for rho0 = (I_E/d_E) tensor |s0><s0|: one batched run over the
/// environment basis.
inline ProcessChoi build_process_choi_maxmixed_env(const Vector& sys_state,
                                                   const std::vector<Matrix>& unitaries,
                                                   const ProcessDims& pd) {
    pd.validate();
    if (sys_state.size() != pd.d_S)
        throw std::invalid_argument("build_process_choi_maxmixed_env: system state dimension");
    if (std::abs(sys_state.norm() - 1.0) > 1e-9)
        throw std::invalid_argument("build_process_choi_maxmixed_env: system state not normalized");
    if (static_cast<long>(unitaries.size()) != pd.k + 1)
        throw std::invalid_argument("build_process_choi_maxmixed_env: need k+1 step unitaries");
    const long d_es = pd.d_E * pd.d_S;
    for (const auto& u : unitaries)
        detail::require_unitary(u, d_es, "build_process_choi_maxmixed_env step");

    Matrix cols = Matrix::Zero(d_es, pd.d_E);
    for (long e = 0; e < pd.d_E; ++e) cols.block(e * pd.d_S, e, pd.d_S, 1) = sys_state;
    DilationBatch dil(pd, cols);
    for (long i = 0; i <= pd.k; ++i) {
        dil.apply_es_unitary(unitaries[i]);
        if (i < pd.k) dil.apply_swap(i + 1);
    }
    return detail::finalize_choi(
        pd, dil.env_traced_choi(std::vector<double>(pd.d_E, 1.0 / static_cast<double>(pd.d_E))));
}

/// Markov reference: the process whose Choi state is the tensor product of
/// the marginals of `ups` on the Markov partition
///   {(S_out, in_k), (out_k, in_{k-1}), ..., (out_2, in_1), (out_1)}
/// i.e. k single-step map factors plus one initial-marginal factor. Equals
/// `ups` whenever `ups` is Markovian.
struct MarkovChoi {
    ProcessDims dims;
    std::vector<std::vector<long>> groups;  // leg indices per factor, ascending
    std::vector<Matrix> factors;            // marginal on each group

    ProcessChoi to_choi() const {
        Matrix prod = Matrix::Identity(1, 1);
        std::vector<long> slot_legs;
        for (std::size_t g = 0; g < groups.size(); ++g) {
            prod = kron(prod, factors[g]);
            slot_legs.insert(slot_legs.end(), groups[g].begin(), groups[g].end());
        }
        // Restore the canonical leg order.
        const long n = dims.num_legs();
        std::vector<long> perm(n);
        for (long leg = 0; leg < n; ++leg) {
            const auto it = std::find(slot_legs.begin(), slot_legs.end(), leg);
            perm[leg] = static_cast<long>(it - slot_legs.begin());
        }
        Matrix y = permute_subsystems(prod, std::vector<long>(n, dims.d_S), perm);
        return detail::finalize_choi(dims, std::move(y));
    }
};

inline std::vector<std::vector<long>> markov_partition(const ProcessDims& pd) {
    std::vector<std::vector<long>> groups;
    const long k = pd.k;
    if (k == 0) {
        groups.push_back({0});
        return groups;
    }
    groups.push_back({0, 2 * k - 1});                       // (S_out, in_k)
    for (long i = k; i >= 2; --i) groups.push_back({2 * i - 3, 2 * i});  // (in_{i-1}, out_i)
    groups.push_back({2});                                  // (out_1)
    return groups;
}

inline MarkovChoi markov_product(const ProcessChoi& ups) {
    ups.validate();
    MarkovChoi out;
    out.dims = ups.dims;
    out.groups = markov_partition(ups.dims);
    const auto leg_dims = ups.dims.leg_dims();
    for (auto& g : out.groups) {
        std::sort(g.begin(), g.end());
        out.factors.push_back(partial_trace(ups.matrix, leg_dims, g));
    }
    return out;
}

/// Probability of a sequence of intervention outcomes followed by a final
/// effect, tr[Upsilon Lambda^T] in the multi-time Born rule.
///
/// `intervention_chois[i]` is the Choi matrix of the CP map applied at slot
/// i+1, with the convention C = (M tensor id)(sum_ss' |ss><s's'|): first
/// factor the map output, second the map input; the identity channel has
/// C = sum |ss><s's'| with trace d_S. `final_effect` is a POVM element on
/// S_out. The d_S^k rescaling from the normalized ancilla convention is
/// applied internally.
inline double event_probability(const ProcessChoi& ups, const std::vector<Matrix>& intervention_chois,
                                const Matrix& final_effect) {
    ups.validate();
    const long k = ups.dims.k;
    const long dS = ups.dims.d_S;
    if (static_cast<long>(intervention_chois.size()) != k)
        throw std::invalid_argument("event_probability: need one intervention Choi per step");
    constexpr double slack = 1e-8;
    for (const auto& c : intervention_chois) {
        if (c.rows() != dS * dS || c.cols() != dS * dS)
            throw std::invalid_argument("event_probability: intervention Choi must have dimension d_S^2");
        const auto ev = hermitian_eigenvalues(c);
        if (ev.back() < -slack)
            throw std::invalid_argument("event_probability: intervention Choi not PSD");
        const double tr = c.trace().real();
        if (tr < -slack || tr > static_cast<double>(dS) + slack)
            throw std::invalid_argument("event_probability: intervention Choi trace outside [0, d_S]");
    }
    {
        if (final_effect.rows() != dS || final_effect.cols() != dS)
            throw std::invalid_argument("event_probability: final effect must act on S_out");
        const auto ev = hermitian_eigenvalues(final_effect);
        if (ev.back() < -slack || ev.front() > 1.0 + slack)
            throw std::invalid_argument("event_probability: final effect outside [0, 1]");
    }

    Matrix lambda = final_effect;
    for (const auto& c : intervention_chois) lambda = kron(lambda, c.transpose().eval());
    const Complex raw = (ups.matrix.array() * lambda.transpose().array()).sum();
    double p = raw.real() * std::pow(static_cast<double>(dS), static_cast<double>(k));
    if (p < -1e-8 || p > 1.0 + 1e-8)
        throw std::runtime_error("event_probability: probability outside [0,1] beyond tolerance");
    return std::min(1.0, std::max(0.0, p));
}

// --- serialization -----------------------------------------------------

/// Text format, bit-exact round trip:
///   upsilon v1 <d_E> <d_S> <k>
///   <row> <col> <re> <im>       (one line per entry, row-major)
inline void save_process_choi(std::ostream& os, const ProcessChoi& ups) {
    os << "upsilon v1 " << ups.dims.d_E << ' ' << ups.dims.d_S << ' ' << ups.dims.k << '\n';
    const long d = ups.matrix.rows();
    char buf[128];
    for (long r = 0; r < d; ++r)
        for (long c = 0; c < d; ++c) {
            std::snprintf(buf, sizeof buf, "%ld %ld %.17g %.17g\n", r, c,
                          ups.matrix(r, c).real(), ups.matrix(r, c).imag());
            os << buf;
        }
}

inline ProcessChoi load_process_choi(std::istream& is) {
    std::string tag, ver;
    ProcessDims pd;
    if (!(is >> tag >> ver >> pd.d_E >> pd.d_S >> pd.k) || tag != "upsilon" || ver != "v1")
        throw std::runtime_error("load_process_choi: bad header");
    pd.validate();
    const long d = pd.choi_dim();
    Matrix m = Matrix::Zero(d, d);
    for (long i = 0; i < d * d; ++i) {
        long r, c;
        double re, im;
        if (!(is >> r >> c >> re >> im)) throw std::runtime_error("load_process_choi: truncated file");
        if (r < 0 || r >= d || c < 0 || c >= d)
            throw std::runtime_error("load_process_choi: entry index out of range");
        m(r, c) = Complex(re, im);
    }
    ProcessChoi out{pd, std::move(m)};
    out.validate();
    return out;
}

}  // namespace ptsim
