#pragma once

#include <cmath>
#include <stdexcept>

#include "ptsim/process.hpp"

namespace ptsim {

/// tr(Upsilon^2); in [d_S^-(2k+1), 1] for a valid process Choi state.
inline double purity(const ProcessChoi& ups) { return ups.matrix.squaredNorm(); }

/// Non-Markovianity surrogate referenced to the maximally mixed Choi state:
/// (1/2) sqrt(tr(Upsilon^2) - d_S^-(2k+1)), which equals
/// (1/2) ||Upsilon - I/d_S^(2k+1)||_2 exactly. Radicands within -1e-12 of
/// zero are clamped; anything lower signals a broken input.
inline double nm_two_identity(const ProcessChoi& ups) {
    const double inv_d = 1.0 / static_cast<double>(ups.dims.choi_dim());
    double rad = purity(ups) - inv_d;
    if (rad < -1e-12)
        throw std::invalid_argument("nm_two_identity: purity below the mixed-state floor");
    if (rad < 0) rad = 0;
    return 0.5 * std::sqrt(rad);
}

/// Trace-distance non-Markovianity against the product of the process's own
/// Markov-partition marginals: (1/2) ||Upsilon - Upsilon^M||_1. An upper
/// bound on the minimized trace-norm measure; zero iff Upsilon is Markovian.
inline double nm_one_marginal(const ProcessChoi& ups) {
    const Matrix ref = markov_product(ups).to_choi().matrix;
    return 0.5 * schatten_norm(ups.matrix - ref, 1);
}

/// Bundle of the non-Markovianity functionals with the diamond-norm bracket
/// d_S^-(2k+1) N_diamond <= N_1 <= N_diamond.
struct NmReport {
    double purity = 0;
    double n2_identity = 0;
    double n1_marginal = 0;
    double diamond_lower = 0;
    double diamond_upper = 0;
};

inline NmReport nm_report(const ProcessChoi& ups) {
    NmReport r;
    r.purity = purity(ups);
    r.n2_identity = nm_two_identity(ups);
    r.n1_marginal = nm_one_marginal(ups);
    r.diamond_lower = r.n1_marginal;
    r.diamond_upper = static_cast<double>(ups.dims.choi_dim()) * r.n1_marginal;
    return r;
}

}  // namespace ptsim
