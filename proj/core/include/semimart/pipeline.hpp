#pragma once

// End-to-end dichotomy: a decomposition certificate S = M + A up to a
// stopping time, or a sequence of free-lunch strategies.

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "semimart/doob.hpp"
#include "semimart/filtered_space.hpp"
#include "semimart/generators.hpp"
#include "semimart/komlos.hpp"
#include "semimart/simple_integrand.hpp"

namespace semimart {

struct Check {
    std::string name;
    double value = 0.0;
    double bound = 0.0;
    bool ok = false;
};

// The level-n martingale extended to the finest grid by conditional
// expectations of its terminal value, and the matching A = S - M.
struct ExtendedDecomposition {
    AdaptedProcess m;
    AdaptedProcess a;
    double intermediate_bound = 0.0;  // max |A_t - A_{j/2^n}| inside level-n cells
};

// `s` is the process on the finest grid (S_0 = 0, ||S|| <= 1).
ExtendedDecomposition extend_martingale(const DoobDecomposition& d, const AdaptedProcess& s);

struct ContinuousLevel {
    int level = 0;
    ExtendedDecomposition ext;
    StoppingTime rho;
    RandomVariable r1;                 // R^n_1 = 1{rho >= 1}
    ConvexEntry weights;               // convex weights defining Rbar^n
    std::vector<RandomVariable> rbar;  // rbar[k] is Rbar^n on (k-1, k], k = 1..last
    StoppingTime alpha_n;
    std::vector<RandomVariable> sbar;  // same layout as rbar
    AdaptedProcess cal_m;
    AdaptedProcess cal_a;
};

struct ContinuousStage {
    double big_c = 0.0;
    double eps = 0.0;
    std::vector<ContinuousLevel> elements;  // levels lo..hi, then copies of hi
    std::vector<std::size_t> selected;
    std::optional<StoppingTime> alpha;
    KomlosResult komlos;
    std::vector<Check> checks;
    bool ok = false;
    std::vector<std::string> log;
};

// Needs a passing discrete stage built on `s` (S_0 = 0, ||S|| <= 1).
ContinuousStage continuous_stage(const AdaptedProcess& s, const DiscreteStage& stage,
                                 const KomlosConfig& cfg);

struct AssembledDecomposition {
    AdaptedProcess m;  // finest grid
    AdaptedProcess a;
    double constant = 0.0;  // 6(C+2) + 2C
    std::vector<Check> checks;
    bool ok = false;
    std::vector<std::string> log;
};

AssembledDecomposition assemble_decomposition(const AdaptedProcess& s, const ContinuousStage& stage,
                                              const KomlosConfig& cfg);

struct JumpSplit {
    AdaptedProcess x;
    AdaptedProcess j;
};

// J collects grid increments with |Delta S| >= 1, X = S - J.
JumpSplit big_jump_split(const AdaptedProcess& s);

// Localization: tau = first k with ess-sup over the time-k cell of |S_{k+1}| > 1.
StoppingTime localizing_time(const AdaptedProcess& s);

// Finest-grid TV per atom.
RandomVariable total_variation(const AdaptedProcess& p);

// max_k max_atoms |E[M_k - M_{k-1} | F_{k-1}]| on the finest grid.
double martingale_residual(const AdaptedProcess& m);

struct NormalizedInput {
    AdaptedProcess s;  // input on the finest grid
    JumpSplit split;
    AdaptedProcess z;  // X - X_0 stopped at tau
    StoppingTime tau;
};

// Big-jump split, removal of the starting value and localization to
// ||S|| <= 1; the stages run on `z`.
NormalizedInput normalize_input(const AdaptedProcess& s, std::vector<std::string>& log);

struct SemimartingaleCertificate {
    AdaptedProcess m;
    AdaptedProcess a;
    StoppingTime alpha;         // certificate holds for S stopped here
    StoppingTime localization;  // part of alpha coming from ||S|| <= 1
    double big_c = 0.0;
    double constant = 0.0;  // bound on TV(A)
    double martingale_residual = 0.0;
    double identity_residual = 0.0;
    double tv_max = 0.0;
};

struct FreeLunchEvidence {
    std::string witness_kind;
    std::vector<int> levels;
    StrategySequence strategies;   // scaled witnesses with diagnostics at alpha_star
    std::vector<double> unit_gain; // E[(h^n.S)_1^+] of the unit witnesses
    std::vector<double> scales;    // eps_n
    double alpha_sup = 0.0;
    double alpha_star = 0.0;
};

struct Inconclusive {
    std::string reason;
};

using Verdict = std::variant<Inconclusive, SemimartingaleCertificate, FreeLunchEvidence>;

std::string verdict_name(const Verdict& v);

struct DetectConfig {
    int lo = 1;
    std::optional<int> hi;  // defaults to the finest level
    StageConfig stage;
    KomlosConfig komlos;
    double rule_bound = 1e-3;  // li and vr must end below this
    double kappa_fraction = 0.5;
};

struct LevelRow {
    LevelStats stats;
    std::optional<double> c1;
    std::optional<double> c2;
    double big_c = 0.0;
    std::optional<double> p_rho;
};

struct DetectResult {
    Verdict verdict;
    std::vector<LevelRow> table;
    std::vector<Check> checks;
    std::vector<std::string> log;
    // Process the stages ran on (jumps removed, S_0 removed, localized).
    std::optional<AdaptedProcess> normalized;
};

// sup{a : min_n P[G_n >= a] >= a} over per-element gain vectors.
double plateau_level(const std::vector<RandomVariable>& gains, const FilteredSpace& space);

// Builds the rescaled strategy sequence and applies the decision rule.
Verdict free_lunch_evidence(const AdaptedProcess& s, const DiscreteStage& stage,
                            const DetectConfig& cfg, std::vector<std::string>& log);

DetectResult detect(const AdaptedProcess& s, const DetectConfig& cfg = {});

// Ensemble files: the empirical innovation tree with the analytic compensator.
DetectResult detect_ensemble(const EnsembleProcess& e, const DetectConfig& cfg = {});

}  // namespace semimart
