#pragma once

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ptsim/bounds.hpp"
#include "ptsim/montecarlo.hpp"
#include "ptsim/validate.hpp"
#include "ptsim/version.hpp"

namespace ptsim::cli {

// exit codes: 0 success, 2 argument error, 3 validation failure,
// 4 resource cap exceeded
inline constexpr int kExitOk = 0;
inline constexpr int kExitArgError = 2;
inline constexpr int kExitValidationFailure = 3;
inline constexpr int kExitResourceCap = 4;

struct ResourceCapError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline std::string fmt_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Inclusive numeric range with step, parsed from "lo", "lo:hi" or
/// "lo:hi:step".
struct Range {
    double lo = 0, hi = 0, step = 1;

    static Range parse(const std::string& text) {
        Range r;
        try {
            const auto first = text.find(':');
            if (first == std::string::npos) {
                r.lo = r.hi = std::stod(text);
                return r;
            }
            r.lo = std::stod(text.substr(0, first));
            const auto second = text.find(':', first + 1);
            if (second == std::string::npos) {
                r.hi = std::stod(text.substr(first + 1));
            } else {
                r.hi = std::stod(text.substr(first + 1, second - first - 1));
                r.step = std::stod(text.substr(second + 1));
            }
        } catch (const std::exception&) {
            throw std::invalid_argument("bad range syntax: " + text);
        }
        if (!(r.step > 0) || r.hi < r.lo) throw std::invalid_argument("bad range: " + text);
        return r;
    }

    std::vector<long> ivalues() const {
        std::vector<long> out;
        for (double v = lo; v <= hi + 1e-9; v += step) out.push_back(std::lround(v));
        return out;
    }

    std::string str() const {
        std::string s = fmt_g17(lo);
        if (hi != lo) s += ":" + fmt_g17(hi);
        if (step != 1) s += ":" + fmt_g17(step);
        return s;
    }
};

namespace detail {

inline std::string escape_value(const std::string& v) {
    std::string out;
    for (char ch : v) {
        if (ch == '%')
            out += "%25";
        else if (ch == ' ')
            out += "%20";
        else
            out += ch;
    }
    return out;
}

inline std::string unescape_value(const std::string& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i] == '%' && i + 3 <= v.size()) {
            if (v.compare(i, 3, "%20") == 0) {
                out += ' ';
                i += 2;
                continue;
            }
            if (v.compare(i, 3, "%25") == 0) {
                out += '%';
                i += 2;
                continue;
            }
        }
        out += v[i];
    }
    return out;
}

}  // namespace detail

/// Canonical, order-preserving record of the content-determining parameters
/// of a run, embedded as a comment header in every CSV/JSON output and
/// parseable back to an identical RunConfig. The thread count and output
/// destination do not change the produced bytes and are not recorded.
struct RunConfig {
    std::string command;
    std::vector<std::pair<std::string, std::string>> params;

    void add(const std::string& key, const std::string& value) { params.emplace_back(key, value); }
    void add(const std::string& key, long value) { add(key, std::to_string(value)); }
    void add(const std::string& key, unsigned long long value) { add(key, std::to_string(value)); }
    void add(const std::string& key, double value) { add(key, fmt_g17(value)); }

    std::string header_line() const {
        std::string out = "config command=" + command;
        for (const auto& [k, v] : params) out += " " + k + "=" + detail::escape_value(v);
        return out;
    }

    static RunConfig parse_header_line(const std::string& line_in) {
        std::string line = line_in;
        if (line.rfind("# ", 0) == 0) line = line.substr(2);
        std::istringstream is(line);
        std::string tag;
        is >> tag;
        if (tag != "config") throw std::runtime_error("RunConfig: not a config line");
        RunConfig cfg;
        std::string token;
        while (is >> token) {
            const auto eq = token.find('=');
            if (eq == std::string::npos) throw std::runtime_error("RunConfig: bad token " + token);
            const std::string key = token.substr(0, eq);
            const std::string value = detail::unescape_value(token.substr(eq + 1));
            if (key == "command")
                cfg.command = value;
            else
                cfg.add(key, value);
        }
        if (cfg.command.empty()) throw std::runtime_error("RunConfig: missing command");
        return cfg;
    }

    bool operator==(const RunConfig&) const = default;
};

inline std::string output_preamble(const RunConfig& cfg) {
    std::string out = "# ptsim ";
    out += kVersion;
    out += "\n# ";
    out += cfg.header_line();
    out += '\n';
    return out;
}

// --- bound-sweep ----------------------------------------------------------

struct BoundSweepOptions {
    long d_S = 2;
    double delta = 0.1;
    double epsilon = 1e-12;
    Range t{2, 10, 1};
    Range k{0, 4, 1};
    Range log2de{10, 60, 1};
    std::optional<double> m;  // fixed exponent; nullopt = optimize per row
};

inline RunConfig bound_sweep_config(const BoundSweepOptions& o) {
    RunConfig cfg;
    cfg.command = "bound-sweep";
    cfg.add("ds", o.d_S);
    cfg.add("delta", o.delta);
    cfg.add("eps", o.epsilon);
    cfg.add("t", o.t.str());
    cfg.add("k", o.k.str());
    cfg.add("log2de", o.log2de.str());
    if (o.m) cfg.add("m", *o.m);
    return cfg;
}

inline std::string run_bound_sweep_csv(const BoundSweepOptions& o) {
    std::string out = output_preamble(bound_sweep_config(o));
    out += "log2_dE,k,t,delta,epsilon,m_star,log2_Bnu,Bnu_clamped\n";
    for (long k : o.k.ivalues())
        for (long t : o.t.ivalues())
            for (long log2de : o.log2de.ivalues()) {
                bounds::BoundParams p;
                p.d_S = o.d_S;
                p.k = k;
                p.t = t;
                p.delta = o.delta;
                p.epsilon = o.epsilon;
                p.log2_dE = log2de;
                double m_used;
                bounds::BoundBreakdown b;
                if (o.m) {
                    m_used = *o.m;
                    b = bounds::design_tail_bound(p, m_used);
                } else {
                    std::tie(m_used, b) = bounds::optimize_m(p);
                }
                char buf[256];
                std::snprintf(buf, sizeof buf, "%ld,%ld,%ld,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                              log2de, k, t, o.delta, o.epsilon, m_used, b.log2_total,
                              b.total_clamped);
                out += buf;
            }
    return out;
}

// --- depth-sweep -----------------------------------------------------------

struct DepthSweepOptions {
    Range t{2, 10, 1};
    Range n{35, 60, 1};
    double epsilon = 1e-12;
    // premise parameters for the tail-bound column
    long d_S = 2;
    long k = 2;
    double delta = 0.1;
};

inline RunConfig depth_sweep_config(const DepthSweepOptions& o) {
    RunConfig cfg;
    cfg.command = "depth-sweep";
    cfg.add("t", o.t.str());
    cfg.add("n", o.n.str());
    cfg.add("eps", o.epsilon);
    cfg.add("ds", o.d_S);
    cfg.add("k", o.k);
    cfg.add("delta", o.delta);
    return cfg;
}

inline std::string run_depth_sweep_csv(const DepthSweepOptions& o) {
    std::string out = output_preamble(depth_sweep_config(o));
    out += "n,t,epsilon,ell,D,two_qubit_gates,Bnu_at_premise\n";
    for (long t : o.t.ivalues())
        for (long n : o.n.ivalues()) {
            const int ell = min_repetitions(static_cast<int>(t), o.epsilon, static_cast<int>(n));
            const double depth = gate_depth(static_cast<int>(t), o.epsilon, static_cast<int>(n));
            const CircuitSpec spec{static_cast<int>(n), static_cast<int>(t), o.epsilon, ell};
            bounds::BoundParams p;
            p.d_S = o.d_S;
            p.k = o.k;
            p.delta = o.delta;
            p.epsilon = o.epsilon;
            p.t = t;
            p.log2_dE = n;
            const double bnu = bounds::optimize_m(p).second.total_clamped;
            char buf[256];
            std::snprintf(buf, sizeof buf, "%ld,%ld,%.17g,%d,%.17g,%ld,%.17g\n", n, t, o.epsilon,
                          ell, depth, gate_count(spec).two_qubit, bnu);
            out += buf;
        }
    return out;
}

// --- sample ----------------------------------------------------------------

struct SampleOptions {
    std::string ensemble = "haar";  // haar | design
    long d_S = 2;
    long k = 1;
    long log2_dE = -1;                 // haar ensembles
    int n = -1;                        // design ensembles
    int t = 2;
    double epsilon = 1e-3;
    std::optional<int> ell;            // default: min_repetitions(t, epsilon, n)
    std::string initial = "maxmixed";  // maxmixed | zero
    long samples = 100;
    std::uint64_t seed = 0;
    int threads = 1;
    std::string tail_measure = "n2id";
    std::vector<double> tail_deltas;
    bool force = false;
};

inline mc::EnsembleSpec make_ensemble_spec(const SampleOptions& o) {
    mc::EnsembleSpec spec;
    spec.samples = o.samples;
    spec.base_seed = o.seed;
    if (o.initial == "maxmixed")
        spec.initial = mc::InitialStateKind::maxmixed_env;
    else if (o.initial == "zero")
        spec.initial = mc::InitialStateKind::all_zero_pure;
    else
        throw std::invalid_argument("unknown initial state: " + o.initial);

    if (o.ensemble == "haar") {
        if (o.log2_dE < 0) throw std::invalid_argument("haar ensemble requires --log2-de");
        spec.kind = mc::EnsembleKind::haar_per_step;
        spec.dims = ProcessDims{1L << o.log2_dE, o.d_S, o.k};
    } else if (o.ensemble == "design") {
        if (o.n < 2) throw std::invalid_argument("design ensemble requires --n >= 2");
        spec.kind = mc::EnsembleKind::design_circuit;
        const long d_es = 1L << o.n;
        if (d_es % o.d_S != 0) throw std::invalid_argument("2^n must be divisible by d_S");
        spec.dims = ProcessDims{d_es / o.d_S, o.d_S, o.k};
        const int ell = o.ell ? *o.ell : min_repetitions(o.t, o.epsilon, o.n);
        spec.circuit = CircuitSpec{o.n, o.t, o.epsilon, ell};
        if (o.force) spec.circuit_memory_cap = o.n;
    } else {
        throw std::invalid_argument("unknown ensemble: " + o.ensemble);
    }
    spec.validate();
    return spec;
}

inline void enforce_resource_cap(const mc::EnsembleSpec& spec, bool force) {
    if (force) return;
    if (spec.dims.dilation_dim() > (1L << 13))
        throw ResourceCapError("dilation dimension " + std::to_string(spec.dims.dilation_dim()) +
                               " exceeds 2^13; pass --force to override");
    if (spec.circuit && spec.circuit->n > 12)
        throw ResourceCapError("dense circuits above 12 qubits need --force");
}

inline RunConfig sample_config(const SampleOptions& o, const mc::EnsembleSpec& spec) {
    RunConfig cfg;
    cfg.command = "sample";
    cfg.add("ensemble", o.ensemble);
    cfg.add("ds", o.d_S);
    cfg.add("k", o.k);
    if (o.ensemble == "haar") {
        cfg.add("log2de", o.log2_dE);
    } else {
        cfg.add("n", static_cast<long>(o.n));
        cfg.add("t", static_cast<long>(o.t));
        cfg.add("eps", o.epsilon);
        cfg.add("ell", static_cast<long>(spec.circuit->ell));
    }
    cfg.add("initial", o.initial);
    cfg.add("samples", o.samples);
    cfg.add("seed", static_cast<unsigned long long>(o.seed));
    return cfg;
}

struct SampleOutputs {
    std::string csv;
    std::string json;
};

inline SampleOutputs run_sample(const SampleOptions& o) {
    const mc::EnsembleSpec spec = make_ensemble_spec(o);
    enforce_resource_cap(spec, o.force);
    const RunConfig cfg = sample_config(o, spec);
    const auto rows = mc::run_ensemble(spec, o.threads);

    SampleOutputs out;
    out.csv = output_preamble(cfg);
    out.csv += mc::rows_to_csv(rows, spec.base_seed);

    nlohmann::json j;
    j["tool"] = "ptsim";
    j["version"] = kVersion;
    j["config"]["command"] = cfg.command;
    for (const auto& [key, value] : cfg.params) j["config"][key] = value;
    j["samples"] = rows.size();
    for (auto sel :
         {mc::MeasureSelector::purity, mc::MeasureSelector::n2id, mc::MeasureSelector::n1marg}) {
        const auto ms = mc::measure_mean_stderr(rows, sel);
        j["measures"][mc::measure_name(sel)] = {{"mean", ms.mean}, {"stderr", ms.stderr_}};
    }
    j["tails"] = nlohmann::json::array();
    const auto sel = mc::measure_from_name(o.tail_measure);
    for (double delta : o.tail_deltas) {
        const auto tail = mc::estimate_tail(rows, sel, delta);
        j["tails"].push_back({{"measure", o.tail_measure},
                              {"delta", tail.delta},
                              {"hits", tail.hits},
                              {"samples", tail.samples},
                              {"p_hat", tail.p_hat},
                              {"ci_low", tail.ci_low},
                              {"ci_high", tail.ci_high}});
    }
    out.json = j.dump(2) + "\n";
    return out;
}

// --- process-dump ----------------------------------------------------------

struct ProcessDumpOptions {
    SampleOptions sample;  // ensemble parameters
    long index = 0;
};

struct ProcessDumpOutputs {
    std::string upsilon;
    std::string circuits;  // empty unless a design ensemble
};

inline ProcessDumpOutputs run_process_dump(const ProcessDumpOptions& o) {
    const mc::EnsembleSpec spec = make_ensemble_spec(o.sample);
    enforce_resource_cap(spec, o.sample.force);
    if (o.index < 0 || o.index >= spec.samples)
        throw std::invalid_argument("--index must be in [0, samples)");

    ProcessDumpOutputs out;
    {
        const ProcessChoi ups = mc::sample_process(spec, o.index);
        std::ostringstream os;
        save_process_choi(os, ups);
        out.upsilon = os.str();
    }
    if (spec.kind == mc::EnsembleKind::design_circuit) {
        // replay the per-sample stream to dump the step circuits
        RngStream rng(spec.base_seed, static_cast<std::uint64_t>(o.index));
        std::ostringstream os;
        for (long i = 0; i <= spec.dims.k; ++i) {
            auto gates = sample_circuit_gates(*spec.circuit, rng);
            if (spec.zero_phase_hook) zero_all_phases(gates);
            save_circuit_gates(os, gates);
        }
        out.circuits = os.str();
    }
    return out;
}

// --- command-line wiring ----------------------------------------------------

namespace detail {

inline void write_file_or_stdout(const std::string& path, const std::string& content) {
    if (path.empty() || path == "-") {
        std::cout << content;
        return;
    }
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open output file: " + path);
    os << content;
}

}  // namespace detail

inline int run(const std::vector<std::string>& args) {
    CLI::App app{"process-tensor sampling, non-Markovianity measures and design tail bounds"};
    app.require_subcommand(1);
    int exit_code = kExitOk;

    // bound-sweep
    BoundSweepOptions bopt;
    std::string b_t = "2:10", b_k = "0:4", b_log2de = "10:60", b_out;
    double b_m = -1;
    auto* bound = app.add_subcommand("bound-sweep", "tail-bound table over (k, t, log2 d_E)");
    bound->add_option("--ds", bopt.d_S, "system dimension")->capture_default_str();
    bound->add_option("--delta", bopt.delta, "tail threshold")->capture_default_str();
    bound->add_option("--eps", bopt.epsilon, "design approximation")->capture_default_str();
    bound->add_option("--t", b_t, "design order range lo:hi[:step]")->capture_default_str();
    bound->add_option("--k", b_k, "step count range")->capture_default_str();
    bound->add_option("--log2de", b_log2de, "log2 environment dimension range")
        ->capture_default_str();
    bound->add_option("--m", b_m, "fixed moment exponent (default: optimize per row)");
    bound->add_option("-o,--out", b_out, "output CSV path (default stdout)");
    bound->callback([&] {
        bopt.t = Range::parse(b_t);
        bopt.k = Range::parse(b_k);
        bopt.log2de = Range::parse(b_log2de);
        if (bound->count("--m")) {
            if (!(b_m > 0)) throw std::invalid_argument("--m must be positive");
            bopt.m = b_m;
        }
        detail::write_file_or_stdout(b_out, run_bound_sweep_csv(bopt));
    });

    // depth-sweep
    DepthSweepOptions dopt;
    std::string d_t = "2:10", d_n = "35:60", d_out;
    auto* depth = app.add_subcommand("depth-sweep", "circuit depth and gate-count table");
    depth->add_option("--t", d_t, "design order range")->capture_default_str();
    depth->add_option("--n", d_n, "qubit count range")->capture_default_str();
    depth->add_option("--eps", dopt.epsilon, "design approximation")->capture_default_str();
    depth->add_option("--ds", dopt.d_S, "premise system dimension")->capture_default_str();
    depth->add_option("--k", dopt.k, "premise step count")->capture_default_str();
    depth->add_option("--delta", dopt.delta, "premise tail threshold")->capture_default_str();
    depth->add_option("-o,--out", d_out, "output CSV path (default stdout)");
    depth->callback([&] {
        dopt.t = Range::parse(d_t);
        dopt.n = Range::parse(d_n);
        detail::write_file_or_stdout(d_out, run_depth_sweep_csv(dopt));
    });

    // sample
    SampleOptions sopt;
    std::string s_out;
    int s_ell = -1;
    auto* sample = app.add_subcommand("sample", "sample an ensemble and emit per-sample measures");
    sample->add_option("--ensemble", sopt.ensemble, "haar | design")->capture_default_str();
    sample->add_option("--ds", sopt.d_S, "system dimension")->capture_default_str();
    sample->add_option("--k", sopt.k, "step count")->capture_default_str();
    sample->add_option("--log2-de", sopt.log2_dE, "log2 environment dimension (haar)");
    sample->add_option("--n", sopt.n, "circuit qubit count (design)");
    sample->add_option("--t", sopt.t, "design order")->capture_default_str();
    sample->add_option("--eps", sopt.epsilon, "design approximation")->capture_default_str();
    sample->add_option("--ell", s_ell, "repetition count override");
    sample->add_option("--initial", sopt.initial, "maxmixed | zero")->capture_default_str();
    sample->add_option("--samples", sopt.samples, "sample count")->capture_default_str();
    sample->add_option("--seed", sopt.seed, "base seed")
        ->envname("PTSIM_SEED")
        ->capture_default_str();
    sample->add_option("--threads", sopt.threads, "worker threads")
        ->envname("PTSIM_THREADS")
        ->capture_default_str();
    sample->add_option("--tail-measure", sopt.tail_measure, "purity | n2id | n1marg")
        ->capture_default_str();
    sample->add_option("--tail-delta", sopt.tail_deltas, "tail thresholds (repeatable)");
    sample->add_flag("--force", sopt.force, "override the resource caps");
    sample->add_option("-o,--out", s_out, "output prefix (writes PREFIX.csv and PREFIX.json)");
    sample->callback([&] {
        if (s_ell >= 0) sopt.ell = s_ell;
        const SampleOutputs out = run_sample(sopt);
        if (s_out.empty()) {
            std::cout << out.csv << out.json;
        } else {
            detail::write_file_or_stdout(s_out + ".csv", out.csv);
            detail::write_file_or_stdout(s_out + ".json", out.json);
        }
    });

    // validate
    validate::Options vopt;
    std::vector<std::string> v_only;
    auto* val = app.add_subcommand("validate", "run the acceptance checks (exit 0 iff all pass)");
    val->add_option("--threads", vopt.threads, "worker threads")
        ->envname("PTSIM_THREADS")
        ->capture_default_str();
    val->add_option("--only", v_only, "run only the named criteria (repeatable)");
    val->add_flag("--corrupt-circuit", vopt.corrupt_circuit,
                  "test hook: inject a non-unitary circuit");
    val->callback([&] {
        const auto results = validate::run_criteria(vopt, v_only);
        if (results.empty()) throw std::invalid_argument("no criteria matched --only");
        if (!validate::print_report(results, std::cout)) exit_code = kExitValidationFailure;
    });

    // process-dump
    ProcessDumpOptions popt;
    std::string p_out, p_circuits_out;
    int p_ell = -1;
    auto* dump = app.add_subcommand("process-dump", "serialize one sampled process Choi state");
    dump->add_option("--ensemble", popt.sample.ensemble, "haar | design")->capture_default_str();
    dump->add_option("--ds", popt.sample.d_S, "system dimension")->capture_default_str();
    dump->add_option("--k", popt.sample.k, "step count")->capture_default_str();
    dump->add_option("--log2-de", popt.sample.log2_dE, "log2 environment dimension (haar)");
    dump->add_option("--n", popt.sample.n, "circuit qubit count (design)");
    dump->add_option("--t", popt.sample.t, "design order")->capture_default_str();
    dump->add_option("--eps", popt.sample.epsilon, "design approximation")->capture_default_str();
    dump->add_option("--ell", p_ell, "repetition count override");
    dump->add_option("--initial", popt.sample.initial, "maxmixed | zero")->capture_default_str();
    dump->add_option("--samples", popt.sample.samples, "ensemble size")->capture_default_str();
    dump->add_option("--seed", popt.sample.seed, "base seed")
        ->envname("PTSIM_SEED")
        ->capture_default_str();
    dump->add_option("--index", popt.index, "sample index")->capture_default_str();
    dump->add_flag("--force", popt.sample.force, "override the resource caps");
    dump->add_option("-o,--out", p_out, "output path for the Choi state (default stdout)");
    dump->add_option("--circuits-out", p_circuits_out,
                     "output path for the step-circuit gate dump (design only)");
    dump->callback([&] {
        if (p_ell >= 0) popt.sample.ell = p_ell;
        const ProcessDumpOutputs out = run_process_dump(popt);
        detail::write_file_or_stdout(p_out, out.upsilon);
        if (!p_circuits_out.empty()) {
            if (out.circuits.empty())
                throw std::invalid_argument("--circuits-out requires a design ensemble");
            detail::write_file_or_stdout(p_circuits_out, out.circuits);
        }
    });

    std::vector<const char*> argv;
    argv.push_back("ptsim");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitArgError;
    } catch (const ResourceCapError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitResourceCap;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitArgError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return exit_code;
}

inline int run(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args);
}

}  // namespace ptsim::cli
