#include "semimart/simple_integrand.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "semimart/errors.hpp"

namespace semimart {

namespace {

bool same_value(double a, double b) {
    return std::abs(a - b) <= kIdentityTol * std::max(1.0, std::abs(a));
}

void require_same_space(const SpacePtr& a, const SpacePtr& b) {
    if (a != b) throw StructuralError("integrand and process live on different filtered spaces");
}

}  // namespace

SimpleIntegrand::SimpleIntegrand(SpacePtr space, std::vector<StoppingTime> mesh,
                                 std::vector<RandomVariable> weights)
    : space_(std::move(space)), mesh_(std::move(mesh)), weights_(std::move(weights)) {
    if (!space_) throw StructuralError("integrand without a filtered space");
    if (mesh_.size() != weights_.size() + 1) {
        throw InvariantError("mesh needs one more stopping time than there are weights");
    }
    const std::size_t n = space_->atom_count();
    for (const auto& tau : mesh_) {
        if (tau.space() != space_) throw StructuralError("mesh time on a different space");
        if (!check_stopping_time(tau)) throw InvariantError("mesh entry is not a stopping time");
    }
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t j = 1; j < mesh_.size(); ++j) {
            if (mesh_[j].clamped(a) < mesh_[j - 1].clamped(a)) {
                throw InvariantError("mesh is not increasing at atom " + std::to_string(a));
            }
        }
    }
    for (std::size_t j = 0; j < weights_.size(); ++j) {
        const auto& f = weights_[j];
        if (f.size() != n) throw InvariantError("weight has wrong atom count");
        const StoppingTime& start = mesh_[j];
        for (std::size_t a = 0; a < n; ++a) {
            if (!std::isfinite(f[a])) throw InvariantError("non-finite integrand weight");
            const GridIndex t = start.clamped(a);
            const std::size_t rep = space_->cell_representatives(t)[space_->cell_of(t, a)];
            if (!same_value(f[rep], f[a])) {
                std::ostringstream os;
                os << "weight f_" << (j + 1) << " is not measurable at its left mesh point (atom " << a
                   << ")";
                throw InvariantError(os.str());
            }
        }
    }
}

SimpleIntegrand SimpleIntegrand::on_grid(SpacePtr space, int level,
                                         std::vector<RandomVariable> weights) {
    if (level < 0 || level > space->level()) throw ParameterError("integrand level off the grid");
    const GridIndex steps = GridIndex{1} << level;
    if (weights.size() != static_cast<std::size_t>(steps)) {
        throw InvariantError("on-grid integrand needs one weight per level-" +
                             std::to_string(level) + " step");
    }
    const GridIndex stride = space->last_index() / steps;
    std::vector<StoppingTime> mesh;
    mesh.reserve(steps + 1);
    for (GridIndex k = 0; k <= steps; ++k) mesh.push_back(StoppingTime::constant(space, k * stride));
    return SimpleIntegrand(std::move(space), std::move(mesh), std::move(weights));
}

SimpleIntegrand SimpleIntegrand::constant(SpacePtr space, double c) {
    const std::size_t n = space->atom_count();
    return on_grid(std::move(space), 0, {RandomVariable(n, c)});
}

SimpleIntegrand SimpleIntegrand::scaled(double c) const {
    auto w = weights_;
    for (auto& f : w) {
        for (double& x : f) x *= c;
    }
    return SimpleIntegrand(space_, mesh_, std::move(w));
}

SimpleIntegrand SimpleIntegrand::stopped(const StoppingTime& tau) const {
    if (tau.space() != space_) throw StructuralError("stopping time on a different space");
    std::vector<StoppingTime> mesh;
    mesh.reserve(mesh_.size());
    for (const auto& m : mesh_) mesh.push_back(m.min(tau));
    auto w = weights_;
    for (std::size_t j = 0; j < w.size(); ++j) {
        for (std::size_t a = 0; a < w[j].size(); ++a) {
            if (!(mesh_[j].clamped(a) < tau.clamped(a))) w[j][a] = 0.0;
        }
    }
    return SimpleIntegrand(space_, std::move(mesh), std::move(w));
}

double SimpleIntegrand::sup_norm() const {
    double m = 0.0;
    for (const auto& f : weights_) {
        for (double x : f) m = std::max(m, std::abs(x));
    }
    return m;
}

RandomVariable integrate(const SimpleIntegrand& h, const AdaptedProcess& s, GridIndex t) {
    require_same_space(h.space(), s.space());
    if (t < 0 || t > s.space()->last_index()) throw ParameterError("integration time off the grid");
    const std::size_t n = s.space()->atom_count();
    RandomVariable out(n, 0.0);
    const auto& mesh = h.mesh();
    const auto& w = h.weights();
    for (std::size_t a = 0; a < n; ++a) {
        double acc = 0.0;
        for (std::size_t j = 0; j < w.size(); ++j) {
            const GridIndex lo = std::min(mesh[j].clamped(a), t);
            const GridIndex hi = std::min(mesh[j + 1].clamped(a), t);
            if (hi > lo) acc += w[j][a] * (s.at_fine(hi, a) - s.at_fine(lo, a));
        }
        out[a] = acc;
    }
    return out;
}

AdaptedProcess integral_process(const SimpleIntegrand& h, const AdaptedProcess& s) {
    require_same_space(h.space(), s.space());
    const auto& space = *s.space();
    const GridIndex last = space.last_index();
    const std::size_t n = space.atom_count();
    std::vector<std::vector<double>> out(last + 1, std::vector<double>(n, 0.0));
    const auto& mesh = h.mesh();
    const auto& w = h.weights();
    for (std::size_t a = 0; a < n; ++a) {
        double done = 0.0;
        GridIndex t = 0;
        for (std::size_t j = 0; j < w.size(); ++j) {
            const GridIndex lo = mesh[j].clamped(a);
            const GridIndex hi = mesh[j + 1].clamped(a);
            for (; t <= hi; ++t) {
                out[t][a] = t > lo ? done + w[j][a] * (s.at_fine(t, a) - s.at_fine(lo, a)) : done;
            }
            if (hi > lo) done += w[j][a] * (s.at_fine(hi, a) - s.at_fine(lo, a));
        }
        for (; t <= last; ++t) out[t][a] = done;
    }
    return AdaptedProcess(s.space(), space.level(), std::move(out));
}

double vr_metric(const SimpleIntegrand& h, const AdaptedProcess& s) {
    const AdaptedProcess ip = integral_process(h, s);
    double worst = 0.0;
    for (const auto& slice : ip.values()) {
        for (double v : slice) worst = std::max(worst, -v);
    }
    return worst;
}

double li_metric(const SimpleIntegrand& h) { return h.sup_norm(); }

std::vector<double> fl_statistic(const StrategySequence& seq, const AdaptedProcess& s,
                                 double alpha) {
    if (!(alpha > 0.0)) throw ParameterError("fl_statistic threshold must be positive");
    const auto& space = *s.space();
    std::vector<double> out;
    out.reserve(seq.elements.size());
    for (const auto& h : seq.elements) {
        const RandomVariable gain = integrate(h, s, space.last_index());
        double p = 0.0;
        for (std::size_t a = 0; a < gain.size(); ++a) {
            if (std::max(gain[a], 0.0) >= alpha) p += space.probability(a);
        }
        out.push_back(p);
    }
    return out;
}

void diagnose(StrategySequence& seq, const AdaptedProcess& s, double alpha) {
    const auto fl = fl_statistic(seq, s, alpha);
    seq.diagnostics.clear();
    for (std::size_t i = 0; i < seq.elements.size(); ++i) {
        seq.diagnostics.push_back({vr_metric(seq.elements[i], s), li_metric(seq.elements[i]), fl[i]});
    }
}

ProbeResult continuity_probe(const AdaptedProcess& s, const StrategySequence& seq, double delta) {
    if (!(delta > 0.0)) throw ParameterError("continuity probe needs delta > 0");
    ProbeResult r;
    const auto& space = *s.space();
    for (const auto& h : seq.elements) {
        const RandomVariable x = integrate(h, s, space.last_index());
        double p = 0.0;
        for (std::size_t a = 0; a < x.size(); ++a) {
            if (std::abs(x[a]) > delta) p += space.probability(a);
        }
        r.tail.push_back(p);
        r.li.push_back(li_metric(h));
    }
    for (std::size_t i = 1; i < r.li.size(); ++i) {
        if (r.li[i] > r.li[i - 1]) r.li_decreasing = false;
    }
    if (!r.li_decreasing || (r.li.size() > 1 && !(r.li.back() < r.li.front()))) {
        r.li_decreasing = false;
        r.warning = "integrand sup-norms do not decrease along the sequence";
    }
    return r;
}

StepFunction::StepFunction(std::vector<double> breaks, std::vector<double> values)
    : breaks_(std::move(breaks)), values_(std::move(values)) {
    if (breaks_.size() < 2 || values_.size() + 1 != breaks_.size()) {
        throw ParameterError("step function needs breaks s_0 < ... < s_m and m values");
    }
    if (breaks_.front() != 0.0 || breaks_.back() != 1.0) {
        throw ParameterError("step function breaks must start at 0 and end at 1");
    }
    for (std::size_t k = 1; k < breaks_.size(); ++k) {
        if (!(breaks_[k] > breaks_[k - 1])) throw ParameterError("step function breaks must increase");
    }
    for (double v : values_) {
        if (!std::isfinite(v)) throw ParameterError("step function values must be finite");
    }
}

double StepFunction::operator()(double t) const {
    if (t <= 0.0) return values_.front();
    const auto it = std::lower_bound(breaks_.begin() + 1, breaks_.end(), t);
    if (it == breaks_.end()) return values_.back();
    return values_[static_cast<std::size_t>(it - breaks_.begin()) - 1];
}

double StepFunction::sup_norm() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
}

double StepFunction::total_variation() const {
    double tv = 0.0;
    for (std::size_t k = 1; k < values_.size(); ++k) tv += std::abs(values_[k] - values_[k - 1]);
    return tv;
}

SampledFunction::SampledFunction(std::vector<double> times, std::vector<double> values)
    : times_(std::move(times)), values_(std::move(values)) {
    if (times_.empty() || times_.size() != values_.size()) {
        throw ParameterError("sampled function needs one value per sample time");
    }
    for (std::size_t k = 1; k < times_.size(); ++k) {
        if (!(times_[k] > times_[k - 1])) throw ParameterError("sample times must increase");
    }
}

double SampledFunction::operator()(double t) const {
    const auto it = std::lower_bound(times_.begin(), times_.end(), t - 1e-12);
    if (it == times_.end() || std::abs(*it - t) > 1e-12) {
        std::ostringstream os;
        os << "function is not sampled at t = " << t;
        throw ParameterError(os.str());
    }
    return values_[static_cast<std::size_t>(it - times_.begin())];
}

double SampledFunction::sup_norm() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
}

double step_integral(const StepFunction& f, const SampledFunction& g, double t) {
    const auto& s = f.breaks();
    const auto& v = f.values();
    double acc = 0.0;
    for (std::size_t k = 1; k < s.size(); ++k) {
        if (s[k - 1] >= t) break;
        acc += v[k - 1] * (g(std::min(s[k], t)) - g(s[k - 1]));
    }
    return acc;
}

SumByPartsBound sum_by_parts_bound(const StepFunction& f, const SampledFunction& g,
                                   const std::vector<double>& partition) {
    if (partition.empty()) throw ParameterError("empty partition");
    for (std::size_t i = 1; i < partition.size(); ++i) {
        if (partition[i] < partition[i - 1]) throw ParameterError("partition must be non-decreasing");
    }
    SumByPartsBound b;
    double g_var = 0.0;
    double prev = step_integral(f, g, partition.front());
    for (std::size_t i = 1; i < partition.size(); ++i) {
        const double cur = step_integral(f, g, partition[i]);
        b.lhs += std::abs(cur - prev);
        g_var += std::abs(g(partition[i]) - g(partition[i - 1]));
        prev = cur;
    }
    b.rhs = 2.0 * f.total_variation() * g.sup_norm() + f.sup_norm() * g_var;
    return b;
}

}  // namespace semimart
