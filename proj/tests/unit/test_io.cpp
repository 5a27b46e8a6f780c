#include <gtest/gtest.h>

#include <sstream>

#include "json.hpp"
#include "semimart/errors.hpp"
#include "semimart/io.hpp"

using namespace semimart;
using json = nlohmann::json;

namespace {

EnsembleProcess small(Kind kind, int level, Mode mode = Mode::ExactTree) {
    GeneratorSpec spec;
    spec.kind = kind;
    spec.level = level;
    spec.mode = mode;
    spec.paths = 64;
    spec.seed = 7;
    return generate_ensemble(spec);
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) out.push_back(line);
    return out;
}

std::string join(const std::vector<std::string>& lines) {
    std::string s;
    for (const auto& l : lines) s += l + "\n";
    return s;
}

// Applies `edit` to the JSON on (1-based) line `n` and returns the file.
template <class F>
std::string edit_line(const EnsembleProcess& e, std::size_t n, F edit) {
    auto lines = lines_of(ensemble_to_string(e));
    json j = json::parse(lines.at(n - 1));
    edit(j);
    lines[n - 1] = j.dump();
    return join(lines);
}

std::string format_error_field(const std::string& text) {
    std::istringstream is(text);
    try {
        read_ensemble(is);
    } catch (const FormatError& ex) {
        return ex.field();
    }
    return "<no error>";
}

EnsembleProcess round_trip(const EnsembleProcess& e) {
    std::istringstream is(ensemble_to_string(e));
    return read_ensemble(is);
}

}  // namespace

TEST(EnsembleFile, RoundTripIsBitExact) {
    for (Kind kind : {Kind::RademacherBm, Kind::Drifted, Kind::RlFractional, Kind::Jump,
                      Kind::DeterministicDrift}) {
        const auto e = small(kind, 2);
        const auto back = round_trip(e);
        EXPECT_EQ(back.values, e.values) << to_string(kind);
        EXPECT_EQ(back.innovations, e.innovations);
        EXPECT_EQ(back.prob_num, e.prob_num);
        EXPECT_EQ(back.prob_exp, e.prob_exp);
        EXPECT_EQ(back.scale, e.scale);
        EXPECT_EQ(back.spec.kind, e.spec.kind);
        EXPECT_EQ(ensemble_to_string(back), ensemble_to_string(e));
        EXPECT_EQ(fingerprint(back), fingerprint(e));
    }
    const auto ens = small(Kind::RlFractional, 6, Mode::Ensemble);
    EXPECT_EQ(round_trip(ens).values, ens.values);
}

TEST(EnsembleFile, FingerprintSeesEveryValue) {
    const auto e = small(Kind::RademacherBm, 1);
    auto f = e;
    f.values[2][1] = std::nextafter(f.values[2][1], 2.0);
    EXPECT_NE(fingerprint(e), fingerprint(f));
}

TEST(EnsembleFile, FormatErrorsNameTheField) {
    const auto e = small(Kind::RademacherBm, 1);
    EXPECT_EQ(format_error_field(""), "line 1");
    EXPECT_EQ(format_error_field("{not json\n"), "line 1");
    EXPECT_EQ(format_error_field(edit_line(e, 1, [](json& j) { j["format"] = "csv"; })), "line 1/format");
    EXPECT_EQ(format_error_field(edit_line(e, 1, [](json& j) { j["version"] = 99; })), "line 1/version");
    EXPECT_EQ(format_error_field(edit_line(e, 1, [](json& j) { j["atoms"] = 5; })), "line 1/atoms");
    EXPECT_EQ(format_error_field(edit_line(e, 3, [](json& j) { j["s"][1] = "abc"; })), "line 3/s/1");
    EXPECT_EQ(format_error_field(edit_line(e, 3, [](json& j) { j["s"][2] = "inf"; })), "line 3/s/2");
    EXPECT_EQ(format_error_field(edit_line(e, 4, [](json& j) { j["s"].erase(0); })), "line 4/s");
    EXPECT_EQ(format_error_field(edit_line(e, 2, [](json& j) { j["xi"] = "+x"; })), "line 2/xi/1");
    EXPECT_EQ(format_error_field(edit_line(e, 2, [](json& j) { j["xi"] = "+"; })), "line 2/xi");
    EXPECT_EQ(format_error_field(edit_line(e, 5, [](json& j) { j["p"] = json::array({0, 2}); })), "line 5/p/0");
    EXPECT_EQ(format_error_field(edit_line(e, 5, [](json& j) { j["p"] = json::array({1, 63}); })), "line 5/p/1");
    EXPECT_EQ(format_error_field(edit_line(e, 5, [](json& j) { j.erase("p"); })), "line 5/p");
    // Probabilities 1/4 + 1/4 + 1/4 + 1/8.
    EXPECT_EQ(format_error_field(edit_line(e, 5, [](json& j) { j["p"] = json::array({1, 3}); })), "p");
}

TEST(EnsembleFile, MissingFileIsAParameterError) {
    EXPECT_THROW(read_ensemble_file("/nonexistent/semimart.jsonl"), ParameterError);
}

TEST(Report, DeterministicAndVerifiable) {
    for (Kind kind : {Kind::RademacherBm, Kind::Drifted, Kind::DeterministicDrift, Kind::RlFractional}) {
        const auto e = small(kind, kind == Kind::RlFractional ? 3 : 2);
        const DetectConfig cfg;
        const auto r1 = report_json(e, cfg, run_detect(e, cfg));
        const auto r2 = report_json(e, cfg, run_detect(e, cfg));
        EXPECT_EQ(r1, r2) << to_string(kind);
        const auto v = verify_report(r1, e);
        EXPECT_TRUE(v.ok()) << to_string(kind) << ": " << (v.failures().empty() ? "" : v.failures().front());
        EXPECT_FALSE(v.checks.empty());
    }
}

TEST(Report, TamperedCertificateFails) {
    const auto e = small(Kind::RademacherBm, 1);
    const DetectConfig cfg;
    const auto r = run_detect(e, cfg);
    ASSERT_EQ(r.verdict.index(), 1u);
    json rep = json::parse(report_json(e, cfg, r));
    rep["verdict"]["A"][1][0] = rep["verdict"]["A"][1][0].get<double>() + 0.01;
    const auto v = verify_report(rep.dump(), e);
    EXPECT_FALSE(v.ok());
    bool named = false;
    for (const auto& f : v.failures()) named |= f.find("M + A = S^alpha") != std::string::npos;
    EXPECT_TRUE(named);
}

TEST(Report, WrongInputFailsTheFingerprint) {
    const auto e = small(Kind::RademacherBm, 1);
    const auto other = small(Kind::Drifted, 1);
    const DetectConfig cfg;
    const auto rep = report_json(e, cfg, run_detect(e, cfg));
    const auto v = verify_report(rep, other);
    EXPECT_FALSE(v.ok());
    EXPECT_EQ(v.failures().front(), "input fingerprint matches");
}

TEST(Report, TamperedTableFails) {
    const auto e = small(Kind::Drifted, 2);
    const DetectConfig cfg;
    json rep = json::parse(report_json(e, cfg, run_detect(e, cfg)));
    ASSERT_FALSE(rep["table"].empty());
    rep["table"][0]["tv_mean"] = rep["table"][0]["tv_mean"].get<double>() * 1.5;
    EXPECT_FALSE(verify_report(rep.dump(), e).ok());
}

TEST(Report, GarbageIsAFormatError) {
    const auto e = small(Kind::RademacherBm, 1);
    EXPECT_THROW(verify_report("{}", e), FormatError);
    EXPECT_THROW(verify_report("[1, 2", e), FormatError);
}

TEST(Report, CsvHasOneRowPerLevel) {
    const auto e = small(Kind::Drifted, 2);
    const auto r = run_detect(e, DetectConfig{});
    const auto lines = lines_of(table_csv(r));
    EXPECT_EQ(lines.size(), r.table.size() + 1);
}

TEST(DecompositionJson, HasMAndA) {
    const auto e = small(Kind::Drifted, 1);
    auto [space, s] = ensemble_space(e);
    const json j = json::parse(decomposition_json(doob_decompose(s, 1)));
    EXPECT_TRUE(j.contains("M"));
    EXPECT_TRUE(j.contains("A"));
}
