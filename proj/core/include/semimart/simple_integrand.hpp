#pragma once

// Simple predictable integrands H = sum_j f_j 1_(tau_{j-1}, tau_j] and the
// Riemann-sum stochastic integral against an adapted process.

#include <string>
#include <vector>

#include "semimart/filtered_space.hpp"

namespace semimart {

class SimpleIntegrand {
public:
    // mesh holds tau_0 <= ... <= tau_N (kNever read as the terminal index);
    // weights[j-1] is f_j, which must be constant on the cells of the
    // partition at tau_{j-1}(omega). Throws InvariantError otherwise.
    SimpleIntegrand(SpacePtr space, std::vector<StoppingTime> mesh,
                    std::vector<RandomVariable> weights);

    // Deterministic level-n mesh k/2^n with weights[k-1] the position held on
    // ((k-1)/2^n, k/2^n].
    static SimpleIntegrand on_grid(SpacePtr space, int level, std::vector<RandomVariable> weights);
    // c * 1_(0,1].
    static SimpleIntegrand constant(SpacePtr space, double c);
    static SimpleIntegrand zero(SpacePtr space) { return constant(std::move(space), 0.0); }

    const SpacePtr& space() const { return space_; }
    std::size_t size() const { return weights_.size(); }
    const std::vector<StoppingTime>& mesh() const { return mesh_; }
    const std::vector<RandomVariable>& weights() const { return weights_; }

    SimpleIntegrand scaled(double c) const;
    // H 1_[0, tau]: weights f_j 1{tau_{j-1} < tau} on the mesh tau_j ^ tau.
    SimpleIntegrand stopped(const StoppingTime& tau) const;
    double sup_norm() const;

private:
    SpacePtr space_;
    std::vector<StoppingTime> mesh_;
    std::vector<RandomVariable> weights_;
};

// (H.S)_t = sum_j f_j (S_{tau_j ^ t} - S_{tau_{j-1} ^ t}) at finest index t.
RandomVariable integrate(const SimpleIntegrand& h, const AdaptedProcess& s, GridIndex t);

// t -> (H.S)_t on the finest grid.
AdaptedProcess integral_process(const SimpleIntegrand& h, const AdaptedProcess& s);

// sup_t ess-sup (H.S)_t^-.
double vr_metric(const SimpleIntegrand& h, const AdaptedProcess& s);

// ||H||_inf.
double li_metric(const SimpleIntegrand& h);

struct StrategyDiagnostics {
    double vr = 0.0;
    double li = 0.0;
    double fl = 0.0;  // P[(H.S)_1^+ >= alpha] at the threshold used
};

struct StrategySequence {
    std::vector<SimpleIntegrand> elements;
    std::vector<StrategyDiagnostics> diagnostics;
};

// Per-element P[(H^n.S)_1^+ >= alpha]. Throws ParameterError unless alpha > 0.
std::vector<double> fl_statistic(const StrategySequence& seq, const AdaptedProcess& s,
                                 double alpha);

// Fills seq.diagnostics for threshold alpha.
void diagnose(StrategySequence& seq, const AdaptedProcess& s, double alpha);

struct ProbeResult {
    std::vector<double> tail;  // P[|(H^k.S)_1| > delta]
    std::vector<double> li;
    bool li_decreasing = true;
    std::string warning;
};

ProbeResult continuity_probe(const AdaptedProcess& s, const StrategySequence& seq, double delta);

// Left-continuous step function on [0,1]: value values[k-1] on
// (breaks[k-1], breaks[k]], breaks[0] = 0, breaks.back() = 1.
class StepFunction {
public:
    StepFunction(std::vector<double> breaks, std::vector<double> values);

    const std::vector<double>& breaks() const { return breaks_; }
    const std::vector<double>& values() const { return values_; }
    double operator()(double t) const;
    double sup_norm() const;
    // Sum of the jumps of f inside (0, 1).
    double total_variation() const;

private:
    std::vector<double> breaks_;
    std::vector<double> values_;
};

// Deterministic function known at finitely many times.
class SampledFunction {
public:
    SampledFunction(std::vector<double> times, std::vector<double> values);

    // Throws ParameterError if t is not a sample time.
    double operator()(double t) const;
    double sup_norm() const;
    const std::vector<double>& times() const { return times_; }

private:
    std::vector<double> times_;
    std::vector<double> values_;
};

// (f.g)_t = sum_k f_k (g(s_k ^ t) - g(s_{k-1} ^ t)).
double step_integral(const StepFunction& f, const SampledFunction& g, double t);

struct SumByPartsBound {
    double lhs = 0.0;
    double rhs = 0.0;
};

// lhs = sum_i |(f.g)(t_i) - (f.g)(t_{i-1})|,
// rhs = 2 TV(f) ||g|| + ||f|| sum_i |g(t_i) - g(t_{i-1})|.
SumByPartsBound sum_by_parts_bound(const StepFunction& f, const SampledFunction& g,
                                   const std::vector<double>& partition);

}  // namespace semimart
