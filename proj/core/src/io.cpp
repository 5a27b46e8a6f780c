#include "semimart/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "semimart/errors.hpp"

namespace semimart {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

constexpr const char* kEnsembleFormat = "semimart-ensemble";
constexpr const char* kReportFormat = "semimart-report";

std::string g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// ---- reading helpers ------------------------------------------------------

const json& field(const json& obj, const std::string& path, const char* key) {
    if (!obj.is_object()) throw FormatError(path, "expected an object");
    const auto it = obj.find(key);
    if (it == obj.end()) throw FormatError(path + "/" + key, "missing");
    return *it;
}

double get_number(const json& obj, const std::string& path, const char* key) {
    const json& v = field(obj, path, key);
    if (!v.is_number()) throw FormatError(path + "/" + key, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw FormatError(path + "/" + key, "not finite");
    return x;
}

std::int64_t get_int(const json& obj, const std::string& path, const char* key) {
    const json& v = field(obj, path, key);
    if (!v.is_number_integer()) throw FormatError(path + "/" + key, "expected an integer");
    return v.get<std::int64_t>();
}

std::string get_string(const json& obj, const std::string& path, const char* key) {
    const json& v = field(obj, path, key);
    if (!v.is_string()) throw FormatError(path + "/" + key, "expected a string");
    return v.get<std::string>();
}

double parse_decimal(const json& v, const std::string& path) {
    if (!v.is_string()) throw FormatError(path, "expected a decimal string");
    const std::string& s = v.get_ref<const std::string&>();
    char* end = nullptr;
    const double x = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(x)) {
        throw FormatError(path, "'" + s + "' is not a finite decimal");
    }
    return x;
}

json parse_line(const std::string& text, const std::string& path) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw FormatError(path, std::string("invalid JSON: ") + e.what());
    }
}

// ---- model helpers --------------------------------------------------------

struct Model {
    SpacePtr space;
    std::optional<AdaptedProcess> s;
    std::optional<AdaptedProcess> z;  // process the stages see
};

Model build_model(const EnsembleProcess& e) {
    auto [space, s] = ensemble_space(e);
    Model m{space, s, std::nullopt};
    if (e.spec.mode == Mode::ExactTree) {
        std::vector<std::string> log;
        m.z = normalize_input(s, log).z;
    } else {
        m.z = s;
    }
    return m;
}

// Values of an F_t-measurable variable, one per time-t cell.
ojson per_cell(const FilteredSpace& space, std::span<const double> x, GridIndex t) {
    ojson out = ojson::array();
    for (std::size_t rep : space.cell_representatives(t)) out.push_back(x[rep]);
    return out;
}

RandomVariable from_cells(const FilteredSpace& space, const json& cells, GridIndex t, const std::string& path) {
    if (!cells.is_array() || cells.size() != space.cell_count(t)) {
        throw FormatError(path, "expected " + std::to_string(space.cell_count(t)) + " cell values");
    }
    std::vector<double> v(cells.size());
    for (std::size_t c = 0; c < v.size(); ++c) {
        if (!cells[c].is_number()) throw FormatError(path + "/" + std::to_string(c), "expected a number");
        v[c] = cells[c].get<double>();
    }
    RandomVariable out(space.atom_count());
    const auto ids = space.cells_at(t);
    for (std::size_t a = 0; a < out.size(); ++a) out[a] = v[ids[a]];
    return out;
}

ojson process_json(const AdaptedProcess& p) {
    ojson out = ojson::array();
    for (GridIndex k = 0; k <= p.steps(); ++k) out.push_back(per_cell(*p.space(), p.at(k), k * p.stride()));
    return out;
}

AdaptedProcess process_from_json(const SpacePtr& space, const json& v, const std::string& path) {
    const GridIndex last = space->last_index();
    if (!v.is_array() || v.size() != static_cast<std::size_t>(last) + 1) {
        throw FormatError(path, "expected " + std::to_string(last + 1) + " time slices");
    }
    std::vector<std::vector<double>> vals;
    for (GridIndex t = 0; t <= last; ++t) vals.push_back(from_cells(*space, v[t], t, path + "/" + std::to_string(t)));
    return AdaptedProcess(space, space->level(), std::move(vals));
}

ojson stopping_json(const StoppingTime& tau) {
    ojson out = ojson::array();
    for (GridIndex v : tau.values()) {
        if (v == kNever) out.push_back(nullptr);
        else out.push_back(v);
    }
    return out;
}

StoppingTime stopping_from_json(const SpacePtr& space, const json& v, const std::string& path) {
    if (!v.is_array() || v.size() != space->atom_count()) {
        throw FormatError(path, "expected one entry per atom");
    }
    std::vector<GridIndex> out(v.size());
    for (std::size_t a = 0; a < out.size(); ++a) {
        if (v[a].is_null()) {
            out[a] = kNever;
        } else if (v[a].is_number_integer()) {
            const auto x = v[a].get<std::int64_t>();
            if (x < 0 || x > space->last_index()) throw FormatError(path + "/" + std::to_string(a), "off the grid");
            out[a] = static_cast<GridIndex>(x);
        } else {
            throw FormatError(path + "/" + std::to_string(a), "expected an integer or null");
        }
    }
    return StoppingTime(space, std::move(out));
}

ojson optional_json(const std::optional<double>& x) { return x ? ojson(*x) : ojson(nullptr); }

ojson config_json(const DetectConfig& cfg) {
    ojson c;
    c["lo"] = cfg.lo;
    c["hi"] = cfg.hi ? ojson(*cfg.hi) : ojson(nullptr);
    c["eps"] = cfg.stage.eps;
    c["ladder"] = {{"start", cfg.stage.ladder.start}, {"max", cfg.stage.ladder.max}};
    c["growth_min_levels"] = cfg.stage.growth_min_levels;
    c["growth_min_ratio"] = cfg.stage.growth_min_ratio;
    c["komlos"] = {{"window", cfg.komlos.window}, {"tol", cfg.komlos.tol},
                   {"max_iterations", cfg.komlos.max_iterations}};
    c["rule_bound"] = cfg.rule_bound;
    c["kappa_fraction"] = cfg.kappa_fraction;
    return c;
}

DetectConfig config_from_json(const json& c) {
    const std::string p = "/config";
    DetectConfig cfg;
    cfg.lo = static_cast<int>(get_int(c, p, "lo"));
    const json& hi = field(c, p, "hi");
    if (!hi.is_null()) cfg.hi = hi.get<int>();
    cfg.stage.eps = get_number(c, p, "eps");
    cfg.rule_bound = get_number(c, p, "rule_bound");
    cfg.kappa_fraction = get_number(c, p, "kappa_fraction");
    return cfg;
}

ojson spec_json(const EnsembleProcess& e) {
    ojson g;
    g["kind"] = to_string(e.spec.kind);
    g["level"] = e.spec.level;
    g["scale_requested"] = e.spec.scale ? ojson(*e.spec.scale) : ojson(nullptr);
    g["scale"] = e.scale;
    g["mu"] = e.spec.mu;
    g["hurst"] = e.spec.hurst;
    g["jump"] = e.spec.jump;
    g["seed"] = e.spec.seed;
    g["paths"] = e.spec.paths;
    return g;
}

Check bool_check(std::string name, bool ok) { return Check{std::move(name), ok ? 0.0 : 1.0, 0.0, ok}; }

Check le_check(std::string name, double value, double bound) {
    return Check{std::move(name), value, bound, value <= bound};
}

double rel_diff(double x, double y) { return std::abs(x - y) / std::max(1.0, std::abs(y)); }

}  // namespace

// ---- ensemble files -------------------------------------------------------

void write_ensemble(std::ostream& os, const EnsembleProcess& e) {
    ojson h;
    h["format"] = kEnsembleFormat;
    h["version"] = kFormatVersion;
    h["level"] = e.spec.level;
    h["atoms"] = e.size();
    h["mode"] = to_string(e.spec.mode);
    h["generator"] = spec_json(e);
    os << h.dump() << '\n';
    for (std::size_t i = 0; i < e.size(); ++i) {
        std::string xi;
        xi.reserve(e.innovations[i].size());
        for (int x : e.innovations[i]) xi.push_back(x == 1 ? '+' : '-');
        os << "{\"p\":[" << e.prob_num[i] << ',' << e.prob_exp[i] << "],\"xi\":\"" << xi << "\",\"s\":[";
        for (std::size_t t = 0; t < e.values[i].size(); ++t) {
            os << (t ? ",\"" : "\"") << g17(e.values[i][t]) << '"';
        }
        os << "]}\n";
    }
}

std::string ensemble_to_string(const EnsembleProcess& e) {
    std::ostringstream os;
    write_ensemble(os, e);
    return os.str();
}

EnsembleProcess read_ensemble(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw FormatError("line 1", "empty file");
    const json h = parse_line(line, "line 1");
    const std::string hp = "line 1";
    if (get_string(h, hp, "format") != kEnsembleFormat) {
        throw FormatError(hp + "/format", "expected \"" + std::string(kEnsembleFormat) + "\"");
    }
    if (get_int(h, hp, "version") != kFormatVersion) throw FormatError(hp + "/version", "unsupported version");

    EnsembleProcess e;
    const json& g = field(h, hp, "generator");
    const std::string gp = hp + "/generator";
    try {
        e.spec.kind = parse_kind(get_string(g, gp, "kind"));
        e.spec.mode = parse_mode(get_string(h, hp, "mode"));
    } catch (const ParameterError& ex) {
        throw FormatError(gp + "/kind", ex.what());
    }
    const std::int64_t level = get_int(h, hp, "level");
    if (level < 0 || level > 16) throw FormatError(hp + "/level", "outside [0, 16]");
    if (get_int(g, gp, "level") != level) throw FormatError(gp + "/level", "disagrees with the header level");
    e.spec.level = static_cast<int>(level);
    const json& req = field(g, gp, "scale_requested");
    if (!req.is_null()) {
        if (!req.is_number()) throw FormatError(gp + "/scale_requested", "expected a number or null");
        e.spec.scale = req.get<double>();
    }
    e.scale = get_number(g, gp, "scale");
    e.spec.mu = get_number(g, gp, "mu");
    e.spec.hurst = get_number(g, gp, "hurst");
    e.spec.jump = get_number(g, gp, "jump");
    const json& seed = field(g, gp, "seed");
    if (!seed.is_number_unsigned() && !seed.is_number_integer()) throw FormatError(gp + "/seed", "expected an integer");
    e.spec.seed = seed.get<std::uint64_t>();
    const std::int64_t paths = get_int(g, gp, "paths");
    if (paths <= 0) throw FormatError(gp + "/paths", "must be positive");
    e.spec.paths = static_cast<std::size_t>(paths);
    const std::int64_t atoms = get_int(h, hp, "atoms");
    if (atoms <= 0) throw FormatError(hp + "/atoms", "must be positive");

    const std::size_t steps = std::size_t{1} << e.spec.level;
    const bool deterministic = e.spec.kind == Kind::DeterministicDrift;
    std::size_t lineno = 1;
    int max_exp = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::string p = "line " + std::to_string(lineno);
        const json a = parse_line(line, p);
        const json& pr = field(a, p, "p");
        if (!pr.is_array() || pr.size() != 2 || !pr[0].is_number_unsigned() || !pr[1].is_number_unsigned()) {
            throw FormatError(p + "/p", "expected [numerator, exponent] with non-negative integers");
        }
        const auto num = pr[0].get<std::uint64_t>();
        const auto exp = pr[1].get<std::int64_t>();
        if (num == 0) throw FormatError(p + "/p/0", "probability must be positive");
        if (exp > 62) throw FormatError(p + "/p/1", "exponent above 62");
        max_exp = std::max(max_exp, static_cast<int>(exp));

        const std::string xi = get_string(a, p, "xi");
        if (xi.size() != (deterministic ? 0 : steps)) {
            throw FormatError(p + "/xi", "expected " + std::to_string(deterministic ? 0 : steps) + " innovations");
        }
        std::vector<int> inn(xi.size());
        for (std::size_t j = 0; j < xi.size(); ++j) {
            if (xi[j] == '+') inn[j] = 1;
            else if (xi[j] == '-') inn[j] = -1;
            else throw FormatError(p + "/xi/" + std::to_string(j), "innovation must be '+' or '-'");
        }
        const json& s = field(a, p, "s");
        if (!s.is_array() || s.size() != steps + 1) {
            throw FormatError(p + "/s", "expected " + std::to_string(steps + 1) + " values");
        }
        std::vector<double> vals(s.size());
        for (std::size_t t = 0; t < vals.size(); ++t) vals[t] = parse_decimal(s[t], p + "/s/" + std::to_string(t));

        e.prob_num.push_back(num);
        e.prob_exp.push_back(static_cast<int>(exp));
        e.innovations.push_back(std::move(inn));
        e.values.push_back(std::move(vals));
    }
    if (static_cast<std::int64_t>(e.size()) != atoms) {
        throw FormatError(hp + "/atoms", "header announces " + std::to_string(atoms) + " atoms, file has " +
                                             std::to_string(e.size()));
    }
    unsigned __int128 total = 0;
    for (std::size_t i = 0; i < e.size(); ++i) {
        total += static_cast<unsigned __int128>(e.prob_num[i]) << (max_exp - e.prob_exp[i]);
    }
    if (total != (static_cast<unsigned __int128>(1) << max_exp)) {
        throw FormatError("p", "atom probabilities do not sum to exactly 1");
    }
    return e;
}

EnsembleProcess read_ensemble_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParameterError("cannot open '" + path + "'");
    return read_ensemble(in);
}

std::string fingerprint(const EnsembleProcess& e) {
    const std::string bytes = ensemble_to_string(e);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

DetectResult run_detect(const EnsembleProcess& e, const DetectConfig& cfg) {
    if (e.spec.mode == Mode::Ensemble) return detect_ensemble(e, cfg);
    auto [space, s] = ensemble_space(e);
    return detect(s, cfg);
}

// ---- reports --------------------------------------------------------------

std::string report_json(const EnsembleProcess& e, const DetectConfig& cfg, const DetectResult& r) {
    const Model model = build_model(e);
    const FilteredSpace& space = *model.space;
    ojson rep;
    rep["format"] = kReportFormat;
    rep["version"] = kFormatVersion;
    rep["input"] = {{"fingerprint", fingerprint(e)},
                    {"level", e.spec.level},
                    {"atoms", e.size()},
                    {"mode", to_string(e.spec.mode)},
                    {"generator", spec_json(e)}};
    rep["config"] = config_json(cfg);

    ojson v;
    v["kind"] = verdict_name(r.verdict);
    if (const auto* c = std::get_if<SemimartingaleCertificate>(&r.verdict)) {
        v["big_c"] = c->big_c;
        v["constant"] = c->constant;
        v["martingale_residual"] = c->martingale_residual;
        v["identity_residual"] = c->identity_residual;
        v["tv_max"] = c->tv_max;
        v["p_alpha_finite"] = c->alpha.probability_finite();
        v["alpha"] = stopping_json(c->alpha);
        v["localization"] = stopping_json(c->localization);
        v["M"] = process_json(c->m);
        v["A"] = process_json(c->a);
    } else if (const auto* f = std::get_if<FreeLunchEvidence>(&r.verdict)) {
        v["witness_kind"] = f->witness_kind;
        v["alpha_sup"] = f->alpha_sup;
        v["alpha_star"] = f->alpha_star;
        ojson els = ojson::array();
        for (std::size_t i = 0; i < f->levels.size(); ++i) {
            const SimpleIntegrand& h = f->strategies.elements[i];
            const auto& d = f->strategies.diagnostics[i];
            const GridIndex stride = space.last_index() >> f->levels[i];
            ojson w = ojson::array();
            for (std::size_t k = 0; k < h.size(); ++k) {
                w.push_back(per_cell(space, h.weights()[k], static_cast<GridIndex>(k) * stride));
            }
            els.push_back({{"level", f->levels[i]},
                           {"scale", f->scales[i]},
                           {"unit_gain", f->unit_gain[i]},
                           {"li", d.li},
                           {"vr", d.vr},
                           {"fl", d.fl},
                           {"weights", std::move(w)}});
        }
        v["strategies"] = std::move(els);
    } else {
        v["reason"] = std::get<Inconclusive>(r.verdict).reason;
    }
    rep["verdict"] = std::move(v);

    ojson table = ojson::array();
    for (const auto& row : r.table) {
        table.push_back({{"level", row.stats.level},
                         {"qv_mean", row.stats.qv_mean},
                         {"qv_max", row.stats.qv_max},
                         {"tv_mean", row.stats.tv_mean},
                         {"tv_max", row.stats.tv_max},
                         {"c1", optional_json(row.c1)},
                         {"c2", optional_json(row.c2)},
                         {"C", row.big_c},
                         {"p_rho", optional_json(row.p_rho)}});
    }
    rep["table"] = std::move(table);
    ojson checks = ojson::array();
    for (const auto& c : r.checks) {
        checks.push_back({{"name", c.name}, {"value", c.value}, {"bound", c.bound}, {"ok", c.ok}});
    }
    rep["checks"] = std::move(checks);
    rep["log"] = r.log;
    return rep.dump(1) + "\n";
}

std::string table_csv(const DetectResult& r) {
    std::ostringstream os;
    auto opt = [](const std::optional<double>& x) { return x ? g17(*x) : std::string(); };
    os << "level,qv_mean,qv_max,tv_mean,tv_max,c1,c2,C,p_rho\n";
    for (const auto& row : r.table) {
        os << row.stats.level << ',' << g17(row.stats.qv_mean) << ',' << g17(row.stats.qv_max) << ','
           << g17(row.stats.tv_mean) << ',' << g17(row.stats.tv_max) << ',' << opt(row.c1) << ',' << opt(row.c2)
           << ',' << g17(row.big_c) << ',' << opt(row.p_rho) << '\n';
    }
    return os.str();
}

std::string decomposition_json(const DoobDecomposition& d) {
    const FilteredSpace& space = *d.m.space();
    ojson out;
    out["level"] = d.level;
    out["qv_mean"] = expectation(space, d.qv);
    out["tv_mean"] = expectation(space, d.tv);
    out["m1_l2"] = d.m1_l2;
    out["M"] = process_json(d.m);
    out["A"] = process_json(d.a);
    return out.dump(1) + "\n";
}

// ---- verification ---------------------------------------------------------

bool VerifyOutcome::ok() const {
    for (const auto& c : checks) {
        if (!c.ok) return false;
    }
    return true;
}

std::vector<std::string> VerifyOutcome::failures() const {
    std::vector<std::string> out;
    for (const auto& c : checks) {
        if (!c.ok) out.push_back(c.name);
    }
    return out;
}

VerifyOutcome verify_report(const std::string& report_text, const EnsembleProcess& e) {
    const json rep = parse_line(report_text, "report");
    if (get_string(rep, "", "format") != kReportFormat) throw FormatError("/format", "not a detection report");
    VerifyOutcome out;
    const json& input = field(rep, "", "input");
    out.checks.push_back(bool_check("input fingerprint matches", get_string(input, "/input", "fingerprint") ==
                                                                   fingerprint(e)));
    if (!out.ok()) return out;

    const DetectConfig cfg = config_from_json(field(rep, "", "config"));
    const Model model = build_model(e);
    const SpacePtr& space = model.space;
    const AdaptedProcess& z = *model.z;

    // Level table.
    const json& table = field(rep, "", "table");
    if (!table.is_array()) throw FormatError("/table", "expected an array");
    for (std::size_t i = 0; i < table.size(); ++i) {
        const std::string p = "/table/" + std::to_string(i);
        const int n = static_cast<int>(get_int(table[i], p, "level"));
        if (n < 0 || n > space->level()) throw FormatError(p + "/level", "off the grid");
        DoobDecomposition d =
            e.spec.mode == Mode::Ensemble
                ? [&] {
                      std::vector<RandomVariable> da(std::size_t{1} << n, RandomVariable(e.size()));
                      const auto orc = compensator_oracle(e, n);
                      for (std::size_t a = 0; a < e.size(); ++a) {
                          for (std::size_t k = 0; k < da.size(); ++k) da[k][a] = orc[a][k];
                      }
                      return DoobDecomposition::from_compensator(at_level(z, n), da);
                  }()
                : doob_decompose(z, n);
        const double qv = expectation(*space, d.qv);
        const double tv = expectation(*space, d.tv);
        const double diff = std::max(rel_diff(get_number(table[i], p, "qv_mean"), qv),
                                     rel_diff(get_number(table[i], p, "tv_mean"), tv));
        out.checks.push_back(le_check("table level " + std::to_string(n) + " matches E[QV], E[TV]", diff, 1e-9));
    }

    const json& v = field(rep, "", "verdict");
    const std::string kind = get_string(v, "/verdict", "kind");
    if (kind == "SemimartingaleCertificate") {
        const AdaptedProcess m = process_from_json(space, field(v, "/verdict", "M"), "/verdict/M");
        const AdaptedProcess a = process_from_json(space, field(v, "/verdict", "A"), "/verdict/A");
        const StoppingTime alpha = stopping_from_json(space, field(v, "/verdict", "alpha"), "/verdict/alpha");
        const StoppingTime loc =
            stopping_from_json(space, field(v, "/verdict", "localization"), "/verdict/localization");
        const bool is_stop = check_stopping_time(alpha);
        out.checks.push_back(bool_check("alpha is a stopping time", is_stop));
        bool below = true;
        for (std::size_t w = 0; w < e.size(); ++w) below = below && alpha[w] <= loc[w];
        out.checks.push_back(bool_check("alpha <= localization", below));
        out.checks.push_back(le_check("M is a martingale", martingale_residual(m), 1e-10));
        if (is_stop) {
            const AdaptedProcess s_alpha = stop_process(*model.s, alpha);
            double id = 0.0;
            for (GridIndex t = 0; t <= space->last_index(); ++t) {
                for (std::size_t w = 0; w < e.size(); ++w) {
                    id = std::max(id, std::abs(m.at(t, w) + a.at(t, w) - s_alpha.at(t, w)));
                }
            }
            out.checks.push_back(le_check("M + A = S^alpha", id, 1e-10));
        }
        double tv = 0.0;
        for (double x : total_variation(a)) tv = std::max(tv, x);
        out.checks.push_back(le_check("TV(A) <= constant", tv, get_number(v, "/verdict", "constant") + 1e-10));
    } else if (kind == "FreeLunchEvidence") {
        const double alpha_star = get_number(v, "/verdict", "alpha_star");
        const double alpha_sup = get_number(v, "/verdict", "alpha_sup");
        const json& els = field(v, "/verdict", "strategies");
        if (!els.is_array() || els.empty()) throw FormatError("/verdict/strategies", "expected a non-empty array");
        StrategySequence seq;
        std::vector<StrategyDiagnostics> claimed;
        for (std::size_t i = 0; i < els.size(); ++i) {
            const std::string p = "/verdict/strategies/" + std::to_string(i);
            const int n = static_cast<int>(get_int(els[i], p, "level"));
            if (n < 0 || n > space->level()) throw FormatError(p + "/level", "off the grid");
            const json& w = field(els[i], p, "weights");
            const std::size_t steps = std::size_t{1} << n;
            if (!w.is_array() || w.size() != steps) throw FormatError(p + "/weights", "expected one entry per step");
            const GridIndex stride = space->last_index() >> n;
            std::vector<RandomVariable> weights;
            for (std::size_t k = 0; k < steps; ++k) {
                weights.push_back(from_cells(*space, w[k], static_cast<GridIndex>(k) * stride,
                                             p + "/weights/" + std::to_string(k)));
            }
            seq.elements.push_back(SimpleIntegrand::on_grid(space, n, std::move(weights)));
            claimed.push_back({get_number(els[i], p, "vr"), get_number(els[i], p, "li"), get_number(els[i], p, "fl")});
        }
        out.checks.push_back(bool_check("alpha* > 0", alpha_star > 0.0));
        if (!(alpha_star > 0.0)) return out;
        diagnose(seq, z, alpha_star);
        double diff = 0.0;
        for (std::size_t i = 0; i < claimed.size(); ++i) {
            diff = std::max({diff, std::abs(claimed[i].li - seq.diagnostics[i].li),
                             std::abs(claimed[i].vr - seq.diagnostics[i].vr),
                             std::abs(claimed[i].fl - seq.diagnostics[i].fl)});
        }
        out.checks.push_back(le_check("strategy diagnostics match", diff, 1e-9));
        const auto& dg = seq.diagnostics;
        bool decreasing = true;
        bool fl_ok = true;
        for (std::size_t i = 0; i < dg.size(); ++i) {
            if (i > 0 && !(dg[i].li < dg[i - 1].li)) decreasing = false;
            if (dg[i].fl < alpha_star) fl_ok = false;
        }
        out.checks.push_back(bool_check("li strictly decreasing", decreasing));
        out.checks.push_back(le_check("li at window end below rule bound", dg.back().li, cfg.rule_bound));
        out.checks.push_back(le_check("vr at window end below rule bound", dg.back().vr, cfg.rule_bound));
        out.checks.push_back(bool_check("fl(alpha*) >= alpha* for every element", fl_ok));
        std::vector<RandomVariable> gains;
        for (const auto& h : seq.elements) {
            RandomVariable g = integrate(h, z, space->last_index());
            for (double& x : g) x = std::max(x, 0.0);
            gains.push_back(std::move(g));
        }
        out.checks.push_back(le_check("alpha_sup matches the plateau", rel_diff(alpha_sup, plateau_level(gains, *space)),
                                      1e-9));
        out.checks.push_back(le_check("alpha* <= alpha_sup / 2", alpha_star, alpha_sup / 2.0 * (1.0 + 1e-12)));
    } else if (kind == "Inconclusive") {
        out.checks.push_back(bool_check("inconclusive verdict states a reason",
                                        !get_string(v, "/verdict", "reason").empty()));
    } else {
        throw FormatError("/verdict/kind", "unknown verdict '" + kind + "'");
    }
    return out;
}

}  // namespace semimart
