#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "ptsim/designs.hpp"

using namespace ptsim;

namespace {

// Dense oracle for a single two-qubit diagonal gate embedded in an n-qubit
// identity, built from explicit tensor products.
Matrix gate_oracle(int n, const GateRecord& g, int t) {
    const auto sets = phase_sets(t);
    const double p1 = sets.phi_values[g.phi1_idx];
    const double p2 = sets.phi_values[g.phi2_idx];
    const double th = sets.theta_values[g.theta_idx];
    const long dim = 1L << n;
    Matrix m = Matrix::Zero(dim, dim);
    for (long x = 0; x < dim; ++x) {
        const bool b1 = (x >> (n - 1 - g.q1)) & 1;
        const bool b2 = (x >> (n - 1 - g.q2)) & 1;
        double phase = 0;
        if (b1) phase += p1;
        if (b2) phase += p2;
        if (b1 && b2) phase += th;
        m(x, x) = std::exp(Complex(0, phase));
    }
    return m;
}

Matrix hadamard_oracle(int n) {
    Matrix h(2, 2);
    const double s = 1.0 / std::numbers::sqrt2;
    h << s, s, s, -s;
    Matrix out = Matrix::Identity(1, 1);
    for (int i = 0; i < n; ++i) out = kron(out, h);
    return out;
}

Matrix layer_oracle(int n, int t, const DiagonalLayer& layer) {
    const long dim = 1L << n;
    Matrix m = Matrix::Identity(dim, dim);
    for (const auto& g : layer.gates) m = gate_oracle(n, g, t) * m;
    return m;
}

}  // namespace

TEST_CASE("phase sets enumerate the discrete grids") {
    const auto s2 = phase_sets(2);
    REQUIRE(s2.phi_values.size() == 3);
    REQUIRE(s2.theta_values.size() == 2);
    REQUIRE(s2.phi_values[0] == Catch::Approx(0.0));
    REQUIRE(s2.phi_values[1] == Catch::Approx(2.0 * std::numbers::pi / 3.0));
    REQUIRE(s2.phi_values[2] == Catch::Approx(4.0 * std::numbers::pi / 3.0));
    REQUIRE(s2.theta_values[0] == Catch::Approx(0.0));
    REQUIRE(s2.theta_values[1] == Catch::Approx(std::numbers::pi));

    const auto s1 = phase_sets(1);
    REQUIRE(s1.phi_values.size() == 2);
    REQUIRE(s1.theta_values.size() == 1);
    REQUIRE(s1.phi_values[1] == Catch::Approx(std::numbers::pi));
    REQUIRE(s1.theta_values[0] == Catch::Approx(0.0));

    for (int t : {1, 2, 5, 10}) {
        const auto s = phase_sets(t);
        REQUIRE(static_cast<int>(s.phi_values.size()) == t + 1);
        REQUIRE(static_cast<int>(s.theta_values.size()) == t / 2 + 1);
        for (double v : s.phi_values) {
            REQUIRE(v >= 0.0);
            REQUIRE(v < 2.0 * std::numbers::pi);
        }
    }
    REQUIRE_THROWS_AS(phase_sets(0), std::invalid_argument);
}

TEST_CASE("single-pair layer matches the hand-multiplied diagonal") {
    // basis order |q1 q2>: diag {1, e^{i phi2}, e^{i phi1}, e^{i(phi1+phi2+theta)}}
    DiagonalLayer layer;
    layer.gates.push_back(GateRecord{0, 1, 2, 1, 1});
    const auto sets = phase_sets(2);
    const auto phase = layer_phase_exponents(layer, 2, 2);
    REQUIRE(phase[0] == Catch::Approx(0.0));
    REQUIRE(phase[1] == Catch::Approx(sets.phi_values[1]));
    REQUIRE(phase[2] == Catch::Approx(sets.phi_values[2]));
    REQUIRE(phase[3] == Catch::Approx(sets.phi_values[2] + sets.phi_values[1] +
                                      sets.theta_values[1]));
}

TEST_CASE("zero phases give the identity layer and the expected gate count") {
    RngStream rng(60, 0);
    auto layer = sample_rdc_layer_gates(4, 3, rng);
    REQUIRE(layer.gates.size() == 6);  // n(n-1)/2
    for (auto& g : layer.gates) g.phi1_idx = g.phi2_idx = g.theta_idx = 0;
    const auto phase = layer_phase_exponents(layer, 4, 3);
    for (double p : phase) REQUIRE(p == 0.0);
}

TEST_CASE("layer phase vector is exactly invariant under gate order") {
    RngStream rng(61, 0);
    auto layer = sample_rdc_layer_gates(5, 4, rng);
    auto shuffled = layer;
    std::reverse(shuffled.gates.begin(), shuffled.gates.end());
    std::swap(shuffled.gates[0], shuffled.gates[3]);
    const auto a = layer_phase_exponents(layer, 5, 4);
    const auto b = layer_phase_exponents(shuffled, 5, 4);
    for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(a[i] == b[i]);
}

TEST_CASE("sampled layer entries all have unit modulus") {
    RngStream rng(62, 0);
    const auto phase = sample_rdc_layer(3, 5, rng);
    REQUIRE(phase.size() == 8);
    for (double p : phase) REQUIRE(std::abs(std::abs(std::exp(Complex(0, p))) - 1.0) < 1e-15);
}

TEST_CASE("ell=0 circuit is a single diagonal layer") {
    RngStream rng(63, 0);
    CircuitSpec spec{3, 2, 1.0, 0};
    const auto gates = sample_circuit_gates(spec, rng);
    REQUIRE(gates.layers.size() == 1);
    const Matrix w = assemble_design_circuit(gates);
    for (long r = 0; r < w.rows(); ++r)
        for (long c = 0; c < w.cols(); ++c)
            if (r != c) REQUIRE(std::abs(w(r, c)) == 0.0);
    const auto phase = layer_phase_exponents(gates.layers[0], 3, 2);
    for (long x = 0; x < w.rows(); ++x)
        REQUIRE(std::abs(w(x, x) - std::exp(Complex(0, phase[x]))) < 1e-15);
}

TEST_CASE("n=2 ell=1 circuit equals the five-matrix oracle") {
    RngStream rng(64, 0);
    CircuitSpec spec{2, 3, 0.5, 1};
    const auto gates = sample_circuit_gates(spec, rng);
    REQUIRE(gates.layers.size() == 3);
    const Matrix w = assemble_design_circuit(gates);
    const Matrix h2 = hadamard_oracle(2);
    const Matrix oracle = layer_oracle(2, 3, gates.layers[2]) * h2 *
                          layer_oracle(2, 3, gates.layers[1]) * h2 *
                          layer_oracle(2, 3, gates.layers[0]);
    REQUIRE((w - oracle).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("deeper circuits match the layered oracle") {
    RngStream rng(65, 0);
    CircuitSpec spec{3, 2, 1.0, 2};
    const auto gates = sample_circuit_gates(spec, rng);
    const Matrix w = assemble_design_circuit(gates);
    const Matrix h = hadamard_oracle(3);
    Matrix oracle = layer_oracle(3, 2, gates.layers[0]);
    for (std::size_t l = 1; l < gates.layers.size(); ++l)
        oracle = layer_oracle(3, 2, gates.layers[l]) * h * oracle;
    REQUIRE((w - oracle).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("circuits are unitary across sizes") {
    RngStream rng(66, 0);
    for (int n : {2, 3, 5, 7}) {
        CircuitSpec spec{n, 3, 1e-2, min_repetitions(3, 1e-2, n)};
        const Matrix w = build_design_circuit(spec, rng);
        REQUIRE(unitarity_residual(w) <= 1e-10);
    }
}

TEST_CASE("all-zero phases collapse the circuit to the identity") {
    RngStream rng(67, 0);
    CircuitSpec spec{3, 2, 1.0, 2};
    auto gates = sample_circuit_gates(spec, rng);
    zero_all_phases(gates);
    const Matrix w = assemble_design_circuit(gates);
    REQUIRE((w - Matrix::Identity(8, 8)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("dense assembly enforces the memory cap") {
    CircuitGates gates;
    gates.n = 13;
    gates.t = 2;
    gates.layers.emplace_back();
    REQUIRE_THROWS_AS(assemble_design_circuit(gates), std::invalid_argument);
}

TEST_CASE("min repetitions at the reference operating point") {
    REQUIRE(min_repetitions(10, 1e-12, 35) == 12);
    REQUIRE(min_repetitions(7, 1.0, 9) == 7);  // log2(1) = 0
    // n -> infinity: the depth tends to t, the ceiled count settles at t+1
    REQUIRE(gate_depth(4, 1e-12, 100000) == Catch::Approx(4.0).margin(1e-3));
    REQUIRE(min_repetitions(4, 1e-12, 100000) == 5);
    REQUIRE_THROWS_AS(min_repetitions(0, 0.5, 4), std::invalid_argument);
    REQUIRE_THROWS_AS(min_repetitions(2, 0.0, 4), std::invalid_argument);
    REQUIRE_THROWS_AS(min_repetitions(2, 2.0, 4), std::invalid_argument);
    REQUIRE_THROWS_AS(min_repetitions(2, 0.5, 1), std::invalid_argument);
}

TEST_CASE("gate depth arithmetic and ceiling relation") {
    REQUIRE(gate_depth(10, 1e-12, 35) == Catch::Approx(11.139).margin(1e-3));
    REQUIRE(gate_depth(6, 1.0, 12) == 6.0);
    for (int t : {2, 5, 10})
        for (double eps : {1.0, 1e-3, 1e-12})
            for (int n : {5, 20, 50}) {
                const double d = gate_depth(t, eps, n);
                const int ell = min_repetitions(t, eps, n);
                REQUIRE(d <= ell);
                REQUIRE(ell < d + 1.0);
            }
}

TEST_CASE("gate counts") {
    REQUIRE(gate_count(CircuitSpec{2, 2, 1.0, 1}).two_qubit == 3);
    REQUIRE(gate_count(CircuitSpec{2, 2, 1.0, 1}).hadamard == 4);

    CircuitSpec fig{35, 10, 1e-12, min_repetitions(10, 1e-12, 35)};
    REQUIRE(gate_count(fig).two_qubit == 14875);
    REQUIRE(gate_count(fig).two_qubit >= 10000);
    REQUIRE(gate_count(fig).two_qubit <= 20000);

    // quadratic scaling in n at fixed ell
    const double ratio = static_cast<double>(gate_count(CircuitSpec{20, 2, 1.0, 3}).two_qubit) /
                         static_cast<double>(gate_count(CircuitSpec{10, 2, 1.0, 3}).two_qubit);
    REQUIRE(ratio > 3.5);
    REQUIRE(ratio < 4.5);
}

TEST_CASE("circuit dump replays bit exactly") {
    RngStream rng(68, 0);
    CircuitSpec spec{4, 3, 1e-2, 2};
    const auto gates = sample_circuit_gates(spec, rng);
    std::stringstream ss;
    save_circuit_gates(ss, gates);
    const auto back = load_circuit_gates(ss);
    REQUIRE(back.n == gates.n);
    REQUIRE(back.t == gates.t);
    REQUIRE(back.layers.size() == gates.layers.size());
    const Matrix a = assemble_design_circuit(gates);
    const Matrix b = assemble_design_circuit(back);
    for (long r = 0; r < a.rows(); ++r)
        for (long c = 0; c < a.cols(); ++c) {
            REQUIRE(a(r, c).real() == b(r, c).real());
            REQUIRE(a(r, c).imag() == b(r, c).imag());
        }
    // saving again yields identical text
    std::stringstream ss2;
    save_circuit_gates(ss2, back);
    std::stringstream ss3;
    save_circuit_gates(ss3, gates);
    REQUIRE(ss2.str() == ss3.str());

    std::stringstream bad("circuit v2 2 2 1\n");
    REQUIRE_THROWS_AS(load_circuit_gates(bad), std::runtime_error);
}

TEST_CASE("first-moment diagnostic: sampled circuits average a traceless operator toward zero") {
    // Diagnostic, not an acceptance assertion on design quality at this size:
    // the construction guarantee is asymptotic in n.
    const int n = 4, t = 2;
    CircuitSpec spec{n, t, 1e-3, min_repetitions(t, 1e-3, n)};
    const long dim = 1L << n;
    Matrix x = Matrix::Zero(dim, dim);
    for (long i = 0; i < dim; ++i) x(i, i) = (i < dim / 2) ? 1.0 : -1.0;  // Z on qubit 0
    Matrix mean = Matrix::Zero(dim, dim);
    const int samples = 10000;
    RngStream rng(69, 0);
    for (int s = 0; s < samples; ++s) {
        const Matrix u = build_design_circuit(spec, rng);
        mean += u * x * u.adjoint();
    }
    mean /= static_cast<double>(samples);
    REQUIRE(mean.norm() <= 0.05 * x.norm());
}
