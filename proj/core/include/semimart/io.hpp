#pragma once

// Ensemble files (JSON lines), detection reports and report verification.

#include <iosfwd>
#include <string>
#include <vector>

#include "semimart/doob.hpp"
#include "semimart/generators.hpp"
#include "semimart/pipeline.hpp"

namespace semimart {

inline constexpr int kFormatVersion = 1;

// Line 1 is a header object, then one line per atom:
//   {"p":[num,exp],"xi":"+-+...","s":["<%.17g>", ...]}
void write_ensemble(std::ostream& os, const EnsembleProcess& e);
std::string ensemble_to_string(const EnsembleProcess& e);

// Throws FormatError (with a field path such as "line 7/s/3") on malformed input.
EnsembleProcess read_ensemble(std::istream& is);
EnsembleProcess read_ensemble_file(const std::string& path);

// FNV-1a of the serialized ensemble, hex.
std::string fingerprint(const EnsembleProcess& e);

// Exact files run the full pipeline on their tree; ensembles use the
// analytic compensator.
DetectResult run_detect(const EnsembleProcess& e, const DetectConfig& cfg);

std::string report_json(const EnsembleProcess& e, const DetectConfig& cfg, const DetectResult& r);
std::string table_csv(const DetectResult& r);

std::string decomposition_json(const DoobDecomposition& d);

struct VerifyOutcome {
    std::vector<Check> checks;
    bool ok() const;
    // Names of failed checks.
    std::vector<std::string> failures() const;
};

// Recomputes the invariants a report claims against its ensemble. Throws
// FormatError when the report cannot be read at all.
VerifyOutcome verify_report(const std::string& report_text, const EnsembleProcess& e);

}  // namespace semimart
