#pragma once

#include <cmath>
#include <cstdint>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ptsim/matrix.hpp"

namespace ptsim {

/// Discrete phase sets of the random-diagonal-circuit gates for design
/// order t: phi in {2 pi m/(t+1)}, theta in {2 pi m/(floor(t/2)+1)}.
struct PhaseSets {
    int t = 1;
    std::vector<double> phi_values;
    std::vector<double> theta_values;
};

inline PhaseSets phase_sets(int t) {
    if (t < 1) throw std::invalid_argument("phase_sets: t must be >= 1");
    PhaseSets out;
    out.t = t;
    const int np = t + 1;
    const int nt = t / 2 + 1;
    for (int m = 0; m < np; ++m) out.phi_values.push_back(2.0 * std::numbers::pi * m / np);
    for (int m = 0; m < nt; ++m) out.theta_values.push_back(2.0 * std::numbers::pi * m / nt);
    return out;
}

/// Parameters of the layered diagonal-circuit design construction:
/// (2 ell + 1) commuting diagonal layers interleaved with 2 ell full
/// Hadamard layers.
struct CircuitSpec {
    int n = 2;          // qubit count, >= 2
    int t = 1;          // design order
    double epsilon = 1; // target approximation, in (0, 1]
    int ell = 0;        // repetition count, >= 0

    void validate() const {
        if (n < 2) throw std::invalid_argument("CircuitSpec: n must be >= 2");
        if (t < 1) throw std::invalid_argument("CircuitSpec: t must be >= 1");
        if (!(epsilon > 0.0) || epsilon > 1.0)
            throw std::invalid_argument("CircuitSpec: epsilon must be in (0, 1]");
        if (ell < 0) throw std::invalid_argument("CircuitSpec: ell must be >= 0");
    }
    long dim() const { return 1L << n; }
};

/// One two-qubit diagonal gate: phase-set indices for (phi1 on q1, phi2 on
/// q2, theta on the pair). Qubit 0 is the most significant basis digit.
struct GateRecord {
    int q1 = 0, q2 = 1;
    int phi1_idx = 0, phi2_idx = 0, theta_idx = 0;
};

struct DiagonalLayer {
    std::vector<GateRecord> gates;
};

struct CircuitGates {
    int n = 2;
    int t = 1;
    std::vector<DiagonalLayer> layers;  // size 2*ell + 1
};

/// One diagonal layer: every unordered qubit pair gated once, lexicographic
/// order, draws in the fixed order (phi1, phi2, theta) so a seed determines
/// the layer completely.
inline DiagonalLayer sample_rdc_layer_gates(int n, int t, RngStream& rng) {
    if (n < 2) throw std::invalid_argument("sample_rdc_layer_gates: n must be >= 2");
    if (t < 1) throw std::invalid_argument("sample_rdc_layer_gates: t must be >= 1");
    DiagonalLayer layer;
    const std::uint64_t np = static_cast<std::uint64_t>(t) + 1;
    const std::uint64_t nt = static_cast<std::uint64_t>(t / 2) + 1;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            GateRecord g;
            g.q1 = i;
            g.q2 = j;
            g.phi1_idx = static_cast<int>(rng.uniform_index(np));
            g.phi2_idx = static_cast<int>(rng.uniform_index(np));
            g.theta_idx = static_cast<int>(rng.uniform_index(nt));
            layer.gates.push_back(g);
        }
    return layer;
}

/// Additive phase exponents of a diagonal layer, one per basis state. The
/// per-gate contributions are accumulated as exact integer multiples of the
/// two set spacings, so the result is independent of the gate order.
inline std::vector<double> layer_phase_exponents(const DiagonalLayer& layer, int n, int t) {
    const long dim = 1L << n;
    std::vector<std::int64_t> phi_units(dim, 0), theta_units(dim, 0);
    for (const auto& g : layer.gates) {
        if (g.q1 < 0 || g.q1 >= n || g.q2 < 0 || g.q2 >= n || g.q1 == g.q2)
            throw std::invalid_argument("layer_phase_exponents: bad qubit pair");
        const long b1 = 1L << (n - 1 - g.q1);
        const long b2 = 1L << (n - 1 - g.q2);
        for (long x = 0; x < dim; ++x) {
            const bool h1 = (x & b1) != 0;
            const bool h2 = (x & b2) != 0;
            if (h1) phi_units[x] += g.phi1_idx;
            if (h2) phi_units[x] += g.phi2_idx;
            if (h1 && h2) theta_units[x] += g.theta_idx;
        }
    }
    const double phi_step = 2.0 * std::numbers::pi / (t + 1);
    const double theta_step = 2.0 * std::numbers::pi / (t / 2 + 1);
    std::vector<double> out(dim);
    for (long x = 0; x < dim; ++x)
        out[x] = static_cast<double>(phi_units[x]) * phi_step +
                 static_cast<double>(theta_units[x]) * theta_step;
    return out;
}

/// Sample one layer and return its phase exponent vector.
inline std::vector<double> sample_rdc_layer(int n, int t, RngStream& rng) {
    return layer_phase_exponents(sample_rdc_layer_gates(n, t, rng), n, t);
}

inline CircuitGates sample_circuit_gates(const CircuitSpec& spec, RngStream& rng) {
    spec.validate();
    CircuitGates out;
    out.n = spec.n;
    out.t = spec.t;
    for (int l = 0; l < 2 * spec.ell + 1; ++l)
        out.layers.push_back(sample_rdc_layer_gates(spec.n, spec.t, rng));
    return out;
}

/// Test hook: force every drawn phase index to zero (all diagonal layers
/// become the identity).
inline void zero_all_phases(CircuitGates& gates) {
    for (auto& layer : gates.layers)
        for (auto& g : layer.gates) g.phi1_idx = g.phi2_idx = g.theta_idx = 0;
}

namespace detail {

// In-place H^{tensor n} on the rows of m (columns are state vectors).
inline void apply_hadamard_rows(Matrix& m, int n) {
    const double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
    const long dim = 1L << n;
    Eigen::RowVectorXcd a, b;
    for (int q = 0; q < n; ++q) {
        const long s = 1L << (n - 1 - q);
        for (long x = 0; x < dim; ++x) {
            if ((x & s) != 0) continue;
            a = m.row(x);
            b = m.row(x + s);
            m.row(x) = (a + b) * inv_sqrt2;
            m.row(x + s) = (a - b) * inv_sqrt2;
        }
    }
}

}  // namespace detail

/// Assemble the dense unitary of a sampled design circuit: layer 0 acts
/// first, full Hadamard layers in between.
inline Matrix assemble_design_circuit(const CircuitGates& gates, int memory_cap_qubits = 12) {
    if (gates.n > memory_cap_qubits)
        throw std::invalid_argument("assemble_design_circuit: n exceeds the dense memory cap");
    const long dim = 1L << gates.n;
    Matrix m = Matrix::Identity(dim, dim);
    for (std::size_t l = 0; l < gates.layers.size(); ++l) {
        if (l > 0) detail::apply_hadamard_rows(m, gates.n);
        const auto phase = layer_phase_exponents(gates.layers[l], gates.n, gates.t);
        for (long x = 0; x < dim; ++x)
            m.row(x) *= std::exp(Complex(0.0, phase[x]));
    }
    return m;
}

/// Sample and assemble one design circuit.
inline Matrix build_design_circuit(const CircuitSpec& spec, RngStream& rng,
                                   int memory_cap_qubits = 12) {
    return assemble_design_circuit(sample_circuit_gates(spec, rng), memory_cap_qubits);
}

/// Smallest repetition count guaranteeing an epsilon-approximate t-design:
/// ceil(t - log2(epsilon)/n).
inline int min_repetitions(int t, double epsilon, int n) {
    if (t < 1) throw std::invalid_argument("min_repetitions: t must be >= 1");
    if (!(epsilon > 0.0) || epsilon > 1.0)
        throw std::invalid_argument("min_repetitions: epsilon must be in (0, 1]");
    if (n < 2) throw std::invalid_argument("min_repetitions: n must be >= 2");
    return static_cast<int>(std::ceil(static_cast<double>(t) - std::log2(epsilon) / n));
}

/// Asymptotic non-commuting gate depth t - log2(epsilon)/n (un-ceiled).
inline double gate_depth(int t, double epsilon, int n) {
    if (t < 1) throw std::invalid_argument("gate_depth: t must be >= 1");
    if (!(epsilon > 0.0) || epsilon > 1.0)
        throw std::invalid_argument("gate_depth: epsilon must be in (0, 1]");
    if (n < 2) throw std::invalid_argument("gate_depth: n must be >= 2");
    return static_cast<double>(t) - std::log2(epsilon) / n;
}

struct GateCount {
    long two_qubit = 0;
    long hadamard = 0;
};

inline GateCount gate_count(const CircuitSpec& spec) {
    spec.validate();
    GateCount out;
    out.two_qubit = (2L * spec.ell + 1) * spec.n * (spec.n - 1) / 2;
    out.hadamard = 2L * spec.ell * spec.n;
    return out;
}

// --- circuit dump format ------------------------------------------------
//
//   circuit v1 <n> <t> <layers>
//   pair <i> <j> <phi1_idx> <phi2_idx> <theta_idx>
//   hadamard-layer
//   ...
//
// Layers are separated by `hadamard-layer` markers; replay is bit-exact.

inline void save_circuit_gates(std::ostream& os, const CircuitGates& gates) {
    os << "circuit v1 " << gates.n << ' ' << gates.t << ' ' << gates.layers.size() << '\n';
    for (std::size_t l = 0; l < gates.layers.size(); ++l) {
        if (l > 0) os << "hadamard-layer\n";
        for (const auto& g : gates.layers[l].gates)
            os << "pair " << g.q1 << ' ' << g.q2 << ' ' << g.phi1_idx << ' ' << g.phi2_idx << ' '
               << g.theta_idx << '\n';
    }
}

inline CircuitGates load_circuit_gates(std::istream& is) {
    std::string tag, ver;
    CircuitGates out;
    std::size_t layer_count = 0;
    if (!(is >> tag >> ver >> out.n >> out.t >> layer_count) || tag != "circuit" || ver != "v1")
        throw std::runtime_error("load_circuit_gates: bad header");
    is.ignore();
    out.layers.emplace_back();
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line == "hadamard-layer") {
            out.layers.emplace_back();
            continue;
        }
        std::istringstream ls(line);
        std::string kind;
        GateRecord g;
        if (!(ls >> kind >> g.q1 >> g.q2 >> g.phi1_idx >> g.phi2_idx >> g.theta_idx) ||
            kind != "pair")
            throw std::runtime_error("load_circuit_gates: bad gate line");
        out.layers.back().gates.push_back(g);
    }
    if (out.layers.size() != layer_count)
        throw std::runtime_error("load_circuit_gates: layer count mismatch");
    return out;
}

}  // namespace ptsim
