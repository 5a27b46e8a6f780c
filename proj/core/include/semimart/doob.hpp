#pragma once

// Discrete Doob decomposition at dyadic levels, quadratic and total
// variation, the stopping constructions used to localize them, and the
// discrete approximation stage.

#include <optional>
#include <string>
#include <vector>

#include "semimart/filtered_space.hpp"
#include "semimart/simple_integrand.hpp"

namespace semimart {

// S_n = M + A on the level-n grid with A predictable, A_0 = 0.
struct DoobDecomposition {
    int level = 0;
    AdaptedProcess s;  // S sampled at level n
    AdaptedProcess m;
    AdaptedProcess a;
    RandomVariable qv;  // sum of squared level-n increments of S
    RandomVariable tv;  // level-n total variation of A
    double m1_l2 = 0.0; // E[M_1^2]

    // Builds the decomposition from given compensator increments
    // dA[k-1][atom] = E[S_k - S_{k-1} | F_{k-1}] (level-n steps). Checks
    // predictability; the martingale property is the caller's claim.
    static DoobDecomposition from_compensator(const AdaptedProcess& s_n,
                                              const std::vector<RandomVariable>& dA);
};

// S read at the level-n grid points (n <= space level).
AdaptedProcess at_level(const AdaptedProcess& s, int n);

DoobDecomposition doob_decompose(const AdaptedProcess& s, int n);

RandomVariable quadratic_variation(const AdaptedProcess& s, int n);

// h_k = -S_{k-1} on the level-n grid. Requires ||S|| <= 1.
SimpleIntegrand qv_strategy(const AdaptedProcess& s, int n);

// First k >= 1 with sum_{j<=k} (Delta S_j)^2 >= c - 4 (finest-grid index).
StoppingTime sigma_stop(const AdaptedProcess& s, int n, double c);

// First k >= 1 with sum_{j<=k} |Delta A_j| >= c - 2.
StoppingTime tau_stop(const DoobDecomposition& d, double c);

// Powers of two from `start` up to `max`.
struct Ladder {
    double start = 8.0;
    double max = 1048576.0;
    std::vector<double> values() const;
};

struct LadderSearch {
    std::optional<double> value;  // empty when the ladder is exhausted
    std::vector<std::string> log;
};

// Smallest ladder c with P[sigma_n(c) < inf] < eps/2 for every n in [lo, hi].
LadderSearch find_c1(const AdaptedProcess& s, int lo, int hi, double eps, const Ladder& ladder = {});

// E[M_1^2] - E[M_0^2].
double martingale_l2(const AdaptedProcess& m);

struct StepEnergy {
    double ds = 0.0;  // E[(Delta S)^2]
    double dm = 0.0;
    double da = 0.0;
};

std::vector<StepEnergy> increment_energy(const DoobDecomposition& d);

// Sum over atoms and steps of the stopped TV: sum_k |Delta A_k| 1{stop >= k}.
RandomVariable stopped_total_variation(const DoobDecomposition& d, const StoppingTime& stop);

// b_k = sign(A^stop_k - A^stop_{k-1}) on the level-n grid, sign(0) = 0.
SimpleIntegrand sign_strategy(const DoobDecomposition& d, const StoppingTime& stop);

// First level-n time with |(h.M)_k| >= c2.
StoppingTime doob_maximal_stop(const DoobDecomposition& d, const SimpleIntegrand& h, double c2);

struct StageCertificate {
    int level = 0;
    std::optional<StoppingTime> rho;
    std::optional<double> c1;
    std::optional<double> c2;
    double constant = 0.0;  // C = c1 v c2
    double tv_bound = 0.0;  // max over atoms of TV(A^{n,rho})
    double m_l2 = 0.0;      // E[(M^{n,rho}_1)^2]
    double p_stop = 0.0;    // P[rho < inf]
    double eps = 0.0;
    bool passed = false;
    std::string reason;
    // Failed certificates carry the unit-size witnessing strategy.
    std::optional<SimpleIntegrand> witness;
    std::string witness_kind;
};

struct LevelStats {
    int level = 0;
    double qv_mean = 0.0;
    double qv_max = 0.0;
    double tv_mean = 0.0;
    double tv_max = 0.0;
};

struct StageConfig {
    double eps = 0.1;
    Ladder ladder;
    // Growth gate: strictly increasing level means over at least
    // `growth_min_levels` levels with geometric-mean ratio >= growth_min_ratio
    // count as unbounded.
    int growth_min_levels = 3;
    double growth_min_ratio = 1.05;
};

struct GrowthTest {
    bool strictly_increasing = false;
    double mean_ratio = 1.0;
    bool detected = false;
};

GrowthTest growth_test(const std::vector<double>& means, const StageConfig& cfg);

struct DiscreteStage {
    bool passed = false;
    std::vector<StageCertificate> certificates;
    std::vector<DoobDecomposition> decompositions;  // levels lo..hi
    std::vector<LevelStats> stats;
    std::optional<double> c1;
    std::optional<double> c2;
    std::vector<std::string> log;
};

// Runs the discrete approximation over levels [lo, hi]. Requires S_0 = 0 and
// ||S|| <= 1. `decompositions`, when given, replace doob_decompose (one per
// level, in order).
DiscreteStage discrete_stage(const AdaptedProcess& s, int lo, int hi, const StageConfig& cfg,
                             std::vector<DoobDecomposition> decompositions = {});

}  // namespace semimart
