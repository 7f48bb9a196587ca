#pragma once

#include <boost/math/distributions/beta.hpp>

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "ptsim/designs.hpp"
#include "ptsim/measures.hpp"
#include "ptsim/process.hpp"

namespace ptsim::mc {

enum class EnsembleKind { haar_per_step, design_circuit };

enum class InitialStateKind {
    maxmixed_env,    // (I_E/d_E) tensor |0><0|_S  (default)
    all_zero_pure,   // |0...0> on E tensor S
    explicit_matrix  // caller-provided density matrix on E tensor S
};

/// Which distribution over step unitaries to sample. Each sample index owns
/// the RNG stream (base_seed, index); within a sample the k+1 step unitaries
/// are drawn sequentially, so results are reproducible under any parallel
/// schedule.
struct EnsembleSpec {
    EnsembleKind kind = EnsembleKind::haar_per_step;
    ProcessDims dims;
    std::optional<CircuitSpec> circuit;  // required for design_circuit
    InitialStateKind initial = InitialStateKind::maxmixed_env;
    Matrix initial_matrix;  // used when initial == explicit_matrix
    long samples = 1;
    std::uint64_t base_seed = 0;
    bool zero_phase_hook = false;  // test hook: zero all circuit phases
    int circuit_memory_cap = 12;   // dense-assembly qubit cap

    void validate() const {
        dims.validate();
        if (samples < 1) throw std::invalid_argument("EnsembleSpec: samples must be >= 1");
        if (kind == EnsembleKind::design_circuit) {
            if (!circuit) throw std::invalid_argument("EnsembleSpec: design ensemble needs a circuit");
            circuit->validate();
            const long d_es = dims.d_E * dims.d_S;
            if ((dims.d_E & (dims.d_E - 1)) != 0 || (dims.d_S & (dims.d_S - 1)) != 0)
                throw std::invalid_argument("EnsembleSpec: design ensemble needs power-of-two dims");
            if ((1L << circuit->n) != d_es)
                throw std::invalid_argument("EnsembleSpec: circuit needs 2^n = d_E*d_S");
        }
        if (initial == InitialStateKind::explicit_matrix) {
            const long d_es = dims.d_E * dims.d_S;
            if (initial_matrix.rows() != d_es || initial_matrix.cols() != d_es)
                throw std::invalid_argument("EnsembleSpec: explicit initial state dimension mismatch");
        }
    }
};

namespace detail {

inline std::vector<Matrix> draw_step_unitaries(const EnsembleSpec& spec, RngStream& rng) {
    const long d_es = spec.dims.d_E * spec.dims.d_S;
    std::vector<Matrix> us;
    us.reserve(spec.dims.k + 1);
    for (long i = 0; i <= spec.dims.k; ++i) {
        if (spec.kind == EnsembleKind::haar_per_step) {
            us.push_back(haar_unitary(d_es, rng));
        } else {
            CircuitGates gates = sample_circuit_gates(*spec.circuit, rng);
            if (spec.zero_phase_hook) zero_all_phases(gates);
            us.push_back(assemble_design_circuit(gates, spec.circuit_memory_cap));
        }
    }
    return us;
}

}  // namespace detail

/// Deterministic function of (base_seed, index): the index-th process of the
/// ensemble. The system occupies the trailing qubits of design circuits.
inline ProcessChoi sample_process(const EnsembleSpec& spec, long index) {
    spec.validate();
    if (index < 0 || index >= spec.samples)
        throw std::out_of_range("sample_process: index out of range");
    RngStream rng(spec.base_seed, static_cast<std::uint64_t>(index));
    const auto us = detail::draw_step_unitaries(spec, rng);

    switch (spec.initial) {
        case InitialStateKind::maxmixed_env: {
            Vector s0 = Vector::Zero(spec.dims.d_S);
            s0(0) = 1.0;
            return build_process_choi_maxmixed_env(s0, us, spec.dims);
        }
        case InitialStateKind::all_zero_pure: {
            Vector psi0 = Vector::Zero(spec.dims.d_E * spec.dims.d_S);
            psi0(0) = 1.0;
            return build_process_choi_pure(psi0, us, spec.dims);
        }
        case InitialStateKind::explicit_matrix:
            return build_process_choi(spec.initial_matrix, us, spec.dims);
    }
    throw std::logic_error("sample_process: unreachable");
}

struct SampleRow {
    long index = 0;
    double purity = 0;
    double n2id = 0;
    double n1marg = 0;
};

/// All per-sample measures, computed in parallel over sample indices.
/// Results are keyed by index, so the output is independent of the thread
/// count and schedule.
inline std::vector<SampleRow> run_ensemble(const EnsembleSpec& spec, int threads = 1) {
    spec.validate();
    if (threads < 1) threads = 1;
    std::vector<SampleRow> rows(spec.samples);
    auto work = [&](long begin, long step) {
        for (long i = begin; i < spec.samples; i += step) {
            const ProcessChoi ups = sample_process(spec, i);
            rows[i].index = i;
            rows[i].purity = purity(ups);
            rows[i].n2id = nm_two_identity(ups);
            rows[i].n1marg = nm_one_marginal(ups);
        }
    };
    if (threads == 1 || spec.samples == 1) {
        work(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
        for (auto& th : pool) th.join();
    }
    return rows;
}

enum class MeasureSelector { purity, n2id, n1marg };

inline double pick_measure(const SampleRow& row, MeasureSelector sel) {
    switch (sel) {
        case MeasureSelector::purity: return row.purity;
        case MeasureSelector::n2id: return row.n2id;
        case MeasureSelector::n1marg: return row.n1marg;
    }
    throw std::logic_error("pick_measure: unreachable");
}

inline MeasureSelector measure_from_name(const std::string& name) {
    if (name == "purity") return MeasureSelector::purity;
    if (name == "n2id") return MeasureSelector::n2id;
    if (name == "n1marg") return MeasureSelector::n1marg;
    throw std::invalid_argument("unknown measure selector: " + name);
}

inline const char* measure_name(MeasureSelector sel) {
    switch (sel) {
        case MeasureSelector::purity: return "purity";
        case MeasureSelector::n2id: return "n2id";
        case MeasureSelector::n1marg: return "n1marg";
    }
    return "?";
}

/// Empirical tail estimate with a 95% Clopper-Pearson interval.
struct TailEstimate {
    double delta = 0;
    long hits = 0;
    long samples = 0;
    double p_hat = 0;
    double ci_low = 0;
    double ci_high = 1;
};

inline TailEstimate clopper_pearson(long hits, long samples, double delta,
                                    double confidence = 0.95) {
    if (samples < 1) throw std::invalid_argument("clopper_pearson: samples must be >= 1");
    if (hits < 0 || hits > samples) throw std::invalid_argument("clopper_pearson: bad hit count");
    const double alpha = 1.0 - confidence;
    TailEstimate e;
    e.delta = delta;
    e.hits = hits;
    e.samples = samples;
    e.p_hat = static_cast<double>(hits) / static_cast<double>(samples);
    if (hits == 0) {
        e.ci_low = 0.0;
    } else {
        boost::math::beta_distribution<double> lo(static_cast<double>(hits),
                                                  static_cast<double>(samples - hits + 1));
        e.ci_low = boost::math::quantile(lo, alpha / 2);
    }
    if (hits == samples) {
        e.ci_high = 1.0;
    } else {
        boost::math::beta_distribution<double> hi(static_cast<double>(hits + 1),
                                                  static_cast<double>(samples - hits));
        e.ci_high = boost::math::quantile(hi, 1.0 - alpha / 2);
    }
    return e;
}

inline TailEstimate estimate_tail(const std::vector<SampleRow>& rows, MeasureSelector sel,
                                  double delta) {
    long hits = 0;
    for (const auto& r : rows)
        if (pick_measure(r, sel) >= delta) ++hits;
    return clopper_pearson(hits, static_cast<long>(rows.size()), delta);
}

inline TailEstimate estimate_tail(const EnsembleSpec& spec, MeasureSelector sel, double delta,
                                  int threads = 1) {
    return estimate_tail(run_ensemble(spec, threads), sel, delta);
}

struct MeanStderr {
    double mean = 0;
    double stderr_ = 0;
};

inline MeanStderr mean_stderr(const std::vector<double>& values) {
    const long n = static_cast<long>(values.size());
    if (n < 2) throw std::invalid_argument("mean_stderr: need at least 2 values");
    double mean = 0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(n);
    double var = 0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n - 1);
    return {mean, std::sqrt(var / static_cast<double>(n))};
}

inline MeanStderr measure_mean_stderr(const std::vector<SampleRow>& rows, MeasureSelector sel) {
    std::vector<double> vals;
    vals.reserve(rows.size());
    for (const auto& r : rows) vals.push_back(pick_measure(r, sel));
    return mean_stderr(vals);
}

/// Sample mean and standard error of the purity over the ensemble.
inline MeanStderr estimate_mean_purity(const EnsembleSpec& spec, int threads = 1) {
    if (spec.samples < 2) throw std::invalid_argument("estimate_mean_purity: samples must be >= 2");
    return measure_mean_stderr(run_ensemble(spec, threads), MeasureSelector::purity);
}

/// Per-sample CSV (columns index,purity,n2id,n1marg,seed), full 17-digit
/// precision, byte-stable across runs and thread counts.
inline std::string rows_to_csv(const std::vector<SampleRow>& rows, std::uint64_t base_seed,
                               const std::vector<std::string>& comment_lines = {}) {
    std::string out;
    for (const auto& line : comment_lines) {
        out += "# ";
        out += line;
        out += '\n';
    }
    out += "index,purity,n2id,n1marg,seed\n";
    char buf[160];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%ld,%.17g,%.17g,%.17g,%llu\n", r.index, r.purity, r.n2id,
                      r.n1marg, static_cast<unsigned long long>(base_seed));
        out += buf;
    }
    return out;
}

}  // namespace ptsim::mc
