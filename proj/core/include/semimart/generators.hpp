#pragma once

// Reference processes driven by +-1 innovations: exact binary trees for small
// levels, seeded path ensembles with an analytic compensator beyond that.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "semimart/filtered_space.hpp"

namespace semimart {

enum class Kind { RademacherBm, Drifted, RlFractional, Jump, DeterministicDrift };
enum class Mode { ExactTree, Ensemble };

std::string to_string(Kind k);
std::string to_string(Mode m);
Kind parse_kind(const std::string& s);
Mode parse_mode(const std::string& s);

struct GeneratorSpec {
    Kind kind = Kind::RademacherBm;
    int level = 1;
    std::optional<double> scale;  // empty: largest scale with ||S|| <= 1
    double mu = 0.5;              // drift of `drifted`
    double hurst = 0.75;
    double jump = 1.5;            // jump magnitude of `jump`
    std::uint64_t seed = 0;
    Mode mode = Mode::ExactTree;
    std::size_t paths = 16384;
};

void validate(const GeneratorSpec& spec);

// Sup-norm of S over all sign sequences when scale = 1 (excluding drift and
// jump terms).
double unit_sup_norm(const GeneratorSpec& spec);

// Scale actually used: `auto` gives the largest value with ||S|| <= 1; exact
// trees clamp a larger request to that value, ensembles keep it.
double effective_scale(const GeneratorSpec& spec);

// Path values S_0..S_N (N = 2^level) for innovations xi_1..xi_N.
std::vector<double> path_values(const GeneratorSpec& spec, double scale, std::span<const int> xi);

// E[S_{k s} - S_{(k-1) s} | F_{(k-1) s}] for k = 1..2^n on the path with
// innovations xi (s = 2^(level - n)).
std::vector<double> compensator_increments(const GeneratorSpec& spec, double scale,
                                           std::span<const int> xi, int n);

struct GeneratedTree {
    SpacePtr space;
    AdaptedProcess process;
    double scale = 0.0;
};

// Full binary tree (level <= kMaxTreeLevel); one atom for deterministic_drift.
GeneratedTree generate_tree(const GeneratorSpec& spec);

struct EnsembleProcess {
    GeneratorSpec spec;
    double scale = 0.0;
    std::vector<std::vector<int>> innovations;  // per path, length 2^level
    std::vector<std::vector<double>> values;    // per path, length 2^level + 1
    // Path probabilities as num / 2^exp.
    std::vector<std::uint64_t> prob_num;
    std::vector<int> prob_exp;

    std::size_t size() const { return values.size(); }
    double probability(std::size_t i) const;
};

std::uint64_t path_seed(std::uint64_t seed, std::uint64_t index);

// Seeded sampling (power-of-two path count); exact mode enumerates all atoms
// of the full tree with the same layout.
EnsembleProcess generate_ensemble(const GeneratorSpec& spec);

// Per path, the level-n compensator increments.
std::vector<std::vector<double>> compensator_oracle(const EnsembleProcess& e, int n);

// Empirical innovation tree of an ensemble and its process.
std::pair<SpacePtr, AdaptedProcess> ensemble_space(const EnsembleProcess& e);

}  // namespace semimart
