#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include "ptsim/rng.hpp"

namespace ptsim {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

/// Absolute tolerance on max|M - M^dag| below which a matrix is accepted as
/// Hermitian. Well above double-precision accumulation at in-scope dimensions
/// (<= 4096).
inline constexpr double kHermTol = 1e-10;

inline double hermiticity_residual(const Matrix& m) {
    if (m.rows() != m.cols()) throw std::invalid_argument("hermiticity_residual: matrix not square");
    return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

inline bool is_hermitian(const Matrix& m, double tol = kHermTol) {
    return m.rows() == m.cols() && hermiticity_residual(m) <= tol;
}

inline double unitarity_residual(const Matrix& u) {
    if (u.rows() != u.cols()) throw std::invalid_argument("unitarity_residual: matrix not square");
    Matrix g = u.adjoint() * u;
    g.diagonal().array() -= 1.0;
    return g.cwiseAbs().maxCoeff();
}

/// Kronecker (tensor) product. Left factor indexes the major digit of the
/// composite index.
inline Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

namespace detail {

inline long checked_product(const std::vector<long>& dims) {
    long total = 1;
    for (long d : dims) {
        if (d < 1) throw std::invalid_argument("subsystem dimension must be >= 1");
        if (total > (1L << 40) / d) throw std::invalid_argument("composite dimension too large");
        total *= d;
    }
    return total;
}

// Strides of a mixed-radix index, major digit first.
inline std::vector<long> strides_of(const std::vector<long>& dims) {
    std::vector<long> s(dims.size(), 1);
    for (int i = static_cast<int>(dims.size()) - 2; i >= 0; --i) s[i] = s[i + 1] * dims[i + 1];
    return s;
}

}  // namespace detail

/// Partial trace over the subsystems NOT listed in `keep`. `dims` lists the
/// subsystem dimensions, major digit first; the result keeps the listed
/// subsystems in their original relative order.
inline Matrix partial_trace(const Matrix& m, const std::vector<long>& dims,
                            std::vector<long> keep) {
    const long total = detail::checked_product(dims);
    if (m.rows() != m.cols() || m.rows() != total)
        throw std::invalid_argument("partial_trace: dims inconsistent with matrix");
    std::sort(keep.begin(), keep.end());
    keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
    for (long k : keep)
        if (k < 0 || k >= static_cast<long>(dims.size()))
            throw std::invalid_argument("partial_trace: keep index out of range");

    std::vector<long> traced;
    for (long i = 0; i < static_cast<long>(dims.size()); ++i)
        if (!std::binary_search(keep.begin(), keep.end(), i)) traced.push_back(i);

    const auto strides = detail::strides_of(dims);
    long dim_keep = 1;
    for (long k : keep) dim_keep *= dims[k];
    long dim_tr = 1;
    for (long t : traced) dim_tr *= dims[t];

    // Flat offsets of every kept and traced multi-index.
    std::vector<long> keep_off(dim_keep, 0);
    for (long x = 0; x < dim_keep; ++x) {
        long rem = x, off = 0;
        for (int p = static_cast<int>(keep.size()) - 1; p >= 0; --p) {
            off += (rem % dims[keep[p]]) * strides[keep[p]];
            rem /= dims[keep[p]];
        }
        keep_off[x] = off;
    }
    std::vector<long> tr_off(dim_tr, 0);
    for (long x = 0; x < dim_tr; ++x) {
        long rem = x, off = 0;
        for (int p = static_cast<int>(traced.size()) - 1; p >= 0; --p) {
            off += (rem % dims[traced[p]]) * strides[traced[p]];
            rem /= dims[traced[p]];
        }
        tr_off[x] = off;
    }

    Matrix out = Matrix::Zero(dim_keep, dim_keep);
    for (long r = 0; r < dim_keep; ++r)
        for (long c = 0; c < dim_keep; ++c) {
            Complex acc(0, 0);
            for (long t = 0; t < dim_tr; ++t) acc += m(keep_off[r] + tr_off[t], keep_off[c] + tr_off[t]);
            out(r, c) = acc;
        }
    return out;
}

/// Reorder tensor factors: new slot i holds original subsystem perm[i].
inline Matrix permute_subsystems(const Matrix& m, const std::vector<long>& dims,
                                 const std::vector<long>& perm) {
    const long total = detail::checked_product(dims);
    if (m.rows() != m.cols() || m.rows() != total)
        throw std::invalid_argument("permute_subsystems: dims inconsistent with matrix");
    if (perm.size() != dims.size())
        throw std::invalid_argument("permute_subsystems: permutation size mismatch");
    std::vector<bool> seen(dims.size(), false);
    for (long p : perm) {
        if (p < 0 || p >= static_cast<long>(dims.size()) || seen[p])
            throw std::invalid_argument("permute_subsystems: invalid permutation");
        seen[p] = true;
    }

    const auto old_strides = detail::strides_of(dims);
    std::vector<long> new_dims(dims.size());
    for (std::size_t i = 0; i < perm.size(); ++i) new_dims[i] = dims[perm[i]];
    const auto new_strides = detail::strides_of(new_dims);

    std::vector<long> to_new(total, 0);
    for (long x = 0; x < total; ++x) {
        long y = 0;
        for (std::size_t i = 0; i < perm.size(); ++i) {
            const long digit = (x / old_strides[perm[i]]) % dims[perm[i]];
            y += digit * new_strides[i];
        }
        to_new[x] = y;
    }

    Matrix out(total, total);
    for (long r = 0; r < total; ++r)
        for (long c = 0; c < total; ++c) out(to_new[r], to_new[c]) = m(r, c);
    return out;
}

/// Eigenvalues of a Hermitian matrix, sorted descending.
inline std::vector<double> hermitian_eigenvalues(const Matrix& h, double tol = kHermTol) {
    if (!is_hermitian(h, tol))
        throw std::invalid_argument("hermitian_eigenvalues: input is not Hermitian within tolerance");
    Eigen::SelfAdjointEigenSolver<Matrix> solver(0.5 * (h + h.adjoint()),
                                                 Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("hermitian_eigenvalues: eigensolver failed");
    std::vector<double> ev(solver.eigenvalues().data(),
                           solver.eigenvalues().data() + solver.eigenvalues().size());
    std::sort(ev.begin(), ev.end(), std::greater<double>());
    return ev;
}

struct EigenSystem {
    Eigen::VectorXd values;  // descending
    Matrix vectors;          // columns match values
};

inline EigenSystem hermitian_eigensystem(const Matrix& h, double tol = kHermTol) {
    if (!is_hermitian(h, tol))
        throw std::invalid_argument("hermitian_eigensystem: input is not Hermitian within tolerance");
    Eigen::SelfAdjointEigenSolver<Matrix> solver(0.5 * (h + h.adjoint()));
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("hermitian_eigensystem: eigensolver failed");
    const Eigen::Index n = h.rows();
    EigenSystem out;
    out.values.resize(n);
    out.vectors.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {  // Eigen sorts ascending; flip
        out.values(i) = solver.eigenvalues()(n - 1 - i);
        out.vectors.col(i) = solver.eigenvectors().col(n - 1 - i);
    }
    return out;
}

/// Schatten p-norm for p in {1, 2}. p=1 requires a Hermitian input (all
/// in-scope trace norms are of Hermitian differences).
inline double schatten_norm(const Matrix& m, int p) {
    if (p == 2) return m.norm();
    if (p == 1) {
        const auto ev = hermitian_eigenvalues(m);
        double s = 0;
        for (double v : ev) s += std::abs(v);
        return s;
    }
    throw std::invalid_argument("schatten_norm: p must be 1 or 2");
}

/// Haar-distributed unitary: Ginibre matrix, QR, then the R-diagonal phase
/// correction (plain QR of a Ginibre matrix is not Haar without it).
inline Matrix haar_unitary(long d, RngStream& rng) {
    if (d < 1) throw std::invalid_argument("haar_unitary: d must be >= 1");
    Matrix z(d, d);
    for (long i = 0; i < d; ++i)
        for (long j = 0; j < d; ++j) z(i, j) = rng.complex_normal();
    Eigen::HouseholderQR<Matrix> qr(z);
    Matrix u = qr.householderQ();
    const auto rdiag = qr.matrixQR().diagonal();
    for (long j = 0; j < d; ++j) {
        const double a = std::abs(rdiag(j));
        u.col(j) *= (a > 0) ? rdiag(j) / a : Complex(1, 0);
    }
    return u;
}

}  // namespace ptsim
