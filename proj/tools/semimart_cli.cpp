// semimart: generate ensembles, decompose, detect, verify reports, probe continuity.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "semimart/errors.hpp"
#include "semimart/io.hpp"

namespace fs = std::filesystem;
using namespace semimart;

namespace {

enum Exit { kOk = 0, kInvariant = 1, kParameter = 2, kInconclusive = 3 };

std::string default_dir() {
    const char* d = std::getenv("SEMIMART_OUT_DIR");
    return d ? std::string(d) : std::string();
}

// Writes to `out`, or to SEMIMART_OUT_DIR/<fallback>, or to stdout.
void emit(const std::string& out, const std::string& fallback, const std::string& text) {
    std::string path = out;
    if (path.empty() && !default_dir().empty()) path = (fs::path(default_dir()) / fallback).string();
    if (path.empty()) {
        std::cout << text;
        return;
    }
    const fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary);
    if (!f) throw ParameterError("cannot write '" + path + "'");
    f << text;
    std::cerr << "wrote " << path << "\n";
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParameterError("cannot open '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

struct Options {
    std::string kind = "rademacher_bm";
    int level = 1;
    std::optional<int> lo;
    std::optional<double> scale;
    double mu = 0.5;
    double hurst = 0.75;
    double jump = 1.5;
    std::uint64_t seed = 0;
    std::string mode = "exact";
    std::size_t paths = 16384;
    double eps = 0.1;
    double tol = 1e-8;
    double ladder_max = 1048576.0;
    std::string out;
    std::string csv;
    std::string input;
    std::string report;
    std::optional<int> detect_level;
    double delta = 0.1;
    int kmax = 64;
};

int run_generate(const Options& o) {
    GeneratorSpec spec;
    spec.kind = parse_kind(o.kind);
    spec.level = o.level;
    spec.scale = o.scale;
    spec.mu = o.mu;
    spec.hurst = o.hurst;
    spec.jump = o.jump;
    spec.seed = o.seed;
    spec.mode = parse_mode(o.mode);
    spec.paths = o.paths;
    const EnsembleProcess e = generate_ensemble(spec);
    emit(o.out, o.kind + "_L" + std::to_string(o.level) + ".jsonl", ensemble_to_string(e));
    return kOk;
}

int run_decompose(const Options& o) {
    const EnsembleProcess e = read_ensemble_file(o.input);
    if (o.level < 0 || o.level > e.spec.level) {
        throw ParameterError("--level must lie in [0, " + std::to_string(e.spec.level) + "]");
    }
    auto [space, s] = ensemble_space(e);
    DoobDecomposition d = [&] {
        if (e.spec.mode == Mode::ExactTree) return doob_decompose(s, o.level);
        const auto orc = compensator_oracle(e, o.level);
        std::vector<RandomVariable> da(std::size_t{1} << o.level, RandomVariable(e.size()));
        for (std::size_t a = 0; a < e.size(); ++a) {
            for (std::size_t k = 0; k < da.size(); ++k) da[k][a] = orc[a][k];
        }
        return DoobDecomposition::from_compensator(at_level(s, o.level), da);
    }();
    emit(o.out, "decomposition_L" + std::to_string(o.level) + ".json", decomposition_json(d));
    return kOk;
}

int run_detect(const Options& o) {
    const EnsembleProcess e = read_ensemble_file(o.input);
    DetectConfig cfg;
    if (o.lo) cfg.lo = *o.lo;
    cfg.hi = o.detect_level;
    cfg.stage.eps = o.eps;
    cfg.stage.ladder.max = o.ladder_max;
    cfg.komlos.tol = o.tol;
    if (!(o.eps > 0.0 && o.eps < 1.0)) throw ParameterError("--eps must lie in (0, 1)");
    const DetectResult r = semimart::run_detect(e, cfg);
    emit(o.out, "report.json", report_json(e, cfg, r));
    if (!o.csv.empty()) emit(o.csv, "", table_csv(r));
    std::cerr << "verdict: " << verdict_name(r.verdict) << "\n";
    if (const auto* inc = std::get_if<Inconclusive>(&r.verdict)) {
        std::cerr << "reason: " << inc->reason << "\n";
        return kInconclusive;
    }
    return kOk;
}

int run_verify(const Options& o) {
    const EnsembleProcess e = read_ensemble_file(o.input);
    const VerifyOutcome v = verify_report(slurp(o.report), e);
    for (const auto& c : v.checks) {
        std::cout << (c.ok ? "ok     " : "FAILED ") << c.name << " (value " << c.value << ", bound " << c.bound
                  << ")\n";
    }
    if (!v.ok()) {
        for (const auto& f : v.failures()) std::cerr << "invariant failed: " << f << "\n";
        return kInvariant;
    }
    return kOk;
}

int run_probe(const Options& o) {
    const EnsembleProcess e = read_ensemble_file(o.input);
    if (o.kmax < 1) throw ParameterError("--kmax must be >= 1");
    if (!(o.delta > 0.0)) throw ParameterError("--delta must be positive");
    auto [space, s] = ensemble_space(e);
    StrategySequence seq;
    for (int k = 1; k <= o.kmax; ++k) seq.elements.push_back(SimpleIntegrand::constant(space, 1.0 / k));
    const ProbeResult p = continuity_probe(s, seq, o.delta);
    nlohmann::ordered_json j;
    j["delta"] = o.delta;
    j["tail"] = p.tail;
    j["li"] = p.li;
    j["li_decreasing"] = p.li_decreasing;
    j["warning"] = p.warning;
    emit(o.out, "probe.json", j.dump(1) + "\n");
    if (!p.warning.empty()) std::cerr << "warning: " << p.warning << "\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Semimartingale decomposition certificates and free-lunch detection on finite trees"};
    app.require_subcommand(1);
    Options o;

    auto* gen = app.add_subcommand("generate", "write an ensemble file");
    gen->add_option("--kind", o.kind, "rademacher_bm | drifted | rl_fractional | jump | deterministic_drift");
    gen->add_option("--level", o.level, "dyadic level");
    gen->add_option("--scale", o.scale, "path scale (default: largest with ||S|| <= 1)");
    gen->add_option("--mu", o.mu, "drift of `drifted`");
    gen->add_option("--hurst", o.hurst, "Hurst index of `rl_fractional`");
    gen->add_option("--jump", o.jump, "jump size of `jump`");
    gen->add_option("--seed", o.seed, "ensemble seed");
    gen->add_option("--mode", o.mode, "exact | ensemble");
    gen->add_option("--paths", o.paths, "ensemble path count (power of two)");
    gen->add_option("--out", o.out, "output file");

    auto* dec = app.add_subcommand("decompose", "Doob decomposition at one level");
    dec->add_option("input", o.input, "ensemble file")->required();
    dec->add_option("--level", o.level, "level n")->required();
    dec->add_option("--out", o.out, "output file");

    auto* det = app.add_subcommand("detect", "run the dichotomy and write a report");
    det->add_option("input", o.input, "ensemble file")->required();
    det->add_option("--eps", o.eps, "epsilon");
    det->add_option("--tol", o.tol, "Komlos tolerance");
    det->add_option("--ladder-max", o.ladder_max, "largest ladder value");
    det->add_option("--lo", o.lo, "first level of the window (default 1)");
    det->add_option("--level", o.detect_level, "last level of the window (default finest)");
    det->add_option("--seed", o.seed, "accepted for symmetry; detection is deterministic");
    det->add_option("--out", o.out, "report file");
    det->add_option("--csv", o.csv, "level table as CSV");

    auto* ver = app.add_subcommand("verify", "re-check a report against its ensemble");
    ver->add_option("report", o.report, "report file")->required();
    ver->add_option("input", o.input, "ensemble file")->required();

    auto* pro = app.add_subcommand("probe", "continuity probe with H^k = 1/k on (0, 1]");
    pro->add_option("input", o.input, "ensemble file")->required();
    pro->add_option("--delta", o.delta, "threshold");
    pro->add_option("--kmax", o.kmax, "number of integrands");
    pro->add_option("--out", o.out, "output file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kParameter;
    }

    try {
        if (gen->parsed()) return run_generate(o);
        if (dec->parsed()) return run_decompose(o);
        if (det->parsed()) return run_detect(o);
        if (ver->parsed()) return run_verify(o);
        if (pro->parsed()) return run_probe(o);
    } catch (const FormatError& e) {
        std::cerr << "format error at " << e.field() << ": " << e.what() << "\n";
        return kParameter;
    } catch (const ParameterError& e) {
        std::cerr << "parameter error: " << e.what() << "\n";
        return kParameter;
    } catch (const ResourceLimitError& e) {
        std::cerr << "resource limit: " << e.what() << "\n";
        return kParameter;
    } catch (const Error& e) {
        std::cerr << "invariant failure: " << e.what() << "\n";
        return kInvariant;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInvariant;
    }
    return kParameter;
}
