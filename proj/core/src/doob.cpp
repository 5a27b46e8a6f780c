#include "semimart/doob.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "semimart/errors.hpp"

namespace semimart {

namespace {

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

double probability_where(const FilteredSpace& space, const std::vector<bool>& event) {
    double p = 0.0;
    for (std::size_t a = 0; a < event.size(); ++a) {
        if (event[a]) p += space.probability(a);
    }
    return p;
}

std::string fmt_double(double x) {
    std::ostringstream os;
    os.precision(6);
    os << x;
    return os.str();
}

void check_level(const AdaptedProcess& s, int n) {
    if (n < 0 || n > s.space()->level()) {
        throw ParameterError("level " + std::to_string(n) + " outside the grid of the space (finest " +
                             std::to_string(s.space()->level()) + ")");
    }
}

// Running sums of a per-step non-negative quantity; first k >= 1 where the
// sum reaches `threshold`, as a finest index.
StoppingTime first_crossing(const SpacePtr& space, int n,
                            const std::vector<RandomVariable>& step_amount, double threshold) {
    const GridIndex stride = space->last_index() >> n;
    const std::size_t atoms = space->atom_count();
    std::vector<GridIndex> out(atoms, kNever);
    for (std::size_t a = 0; a < atoms; ++a) {
        double run = 0.0;
        for (std::size_t k = 0; k < step_amount.size(); ++k) {
            run += step_amount[k][a];
            if (run >= threshold) {
                out[a] = static_cast<GridIndex>(k + 1) * stride;
                break;
            }
        }
    }
    return StoppingTime(space, std::move(out));
}

}  // namespace

AdaptedProcess at_level(const AdaptedProcess& s, int n) {
    check_level(s, n);
    if (n == s.level()) return s;
    if (n < s.level()) return s.sample(n);
    const GridIndex stride = s.space()->last_index() >> n;
    std::vector<std::vector<double>> v((GridIndex{1} << n) + 1);
    for (GridIndex k = 0; k < static_cast<GridIndex>(v.size()); ++k) {
        const GridIndex i = k * stride;
        v[k].resize(s.space()->atom_count());
        for (std::size_t a = 0; a < v[k].size(); ++a) v[k][a] = s.at_fine(i, a);
    }
    return AdaptedProcess(s.space(), n, std::move(v));
}

DoobDecomposition DoobDecomposition::from_compensator(const AdaptedProcess& s_n,
                                                      const std::vector<RandomVariable>& dA) {
    const auto& space = *s_n.space();
    const GridIndex steps = s_n.steps();
    const GridIndex stride = s_n.stride();
    const std::size_t atoms = space.atom_count();
    if (dA.size() != static_cast<std::size_t>(steps)) {
        throw InvariantError("compensator needs one increment per level step");
    }
    std::vector<std::vector<double>> a(steps + 1, std::vector<double>(atoms, 0.0));
    std::vector<std::vector<double>> m(steps + 1);
    m[0].assign(s_n.at(0).begin(), s_n.at(0).end());
    for (GridIndex k = 1; k <= steps; ++k) {
        if (dA[k - 1].size() != atoms) throw InvariantError("compensator increment has wrong size");
        if (!is_measurable(space, dA[k - 1], (k - 1) * stride)) {
            throw InvariantError("compensator increment " + std::to_string(k) + " is not predictable");
        }
        m[k].resize(atoms);
        for (std::size_t w = 0; w < atoms; ++w) {
            a[k][w] = a[k - 1][w] + dA[k - 1][w];
            m[k][w] = s_n.at(k, w) - a[k][w];
        }
    }
    RandomVariable qv(atoms, 0.0);
    RandomVariable tv(atoms, 0.0);
    for (GridIndex k = 1; k <= steps; ++k) {
        for (std::size_t w = 0; w < atoms; ++w) {
            const double ds = s_n.at(k, w) - s_n.at(k - 1, w);
            qv[w] += ds * ds;
            tv[w] += std::abs(dA[k - 1][w]);
        }
    }
    double m1 = 0.0;
    for (std::size_t w = 0; w < atoms; ++w) m1 += space.probability(w) * m[steps][w] * m[steps][w];

    return DoobDecomposition{s_n.level(),
                             s_n,
                             AdaptedProcess(s_n.space(), s_n.level(), std::move(m)),
                             AdaptedProcess(s_n.space(), s_n.level(), std::move(a)),
                             std::move(qv),
                             std::move(tv),
                             m1};
}

DoobDecomposition doob_decompose(const AdaptedProcess& s, int n) {
    const AdaptedProcess s_n = at_level(s, n);
    const auto& space = *s.space();
    const GridIndex stride = s_n.stride();
    std::vector<RandomVariable> dA;
    dA.reserve(s_n.steps());
    RandomVariable diff(space.atom_count());
    for (GridIndex k = 1; k <= s_n.steps(); ++k) {
        for (std::size_t w = 0; w < diff.size(); ++w) diff[w] = s_n.at(k, w) - s_n.at(k - 1, w);
        dA.push_back(conditional_expectation(space, diff, (k - 1) * stride));
    }
    return DoobDecomposition::from_compensator(s_n, dA);
}

RandomVariable quadratic_variation(const AdaptedProcess& s, int n) {
    const AdaptedProcess s_n = at_level(s, n);
    RandomVariable qv(s.space()->atom_count(), 0.0);
    for (GridIndex k = 1; k <= s_n.steps(); ++k) {
        for (std::size_t a = 0; a < qv.size(); ++a) {
            const double d = s_n.at(k, a) - s_n.at(k - 1, a);
            qv[a] += d * d;
        }
    }
    return qv;
}

SimpleIntegrand qv_strategy(const AdaptedProcess& s, int n) {
    const AdaptedProcess s_n = at_level(s, n);
    if (s_n.sup_norm() > 1.0 + kIdentityTol) {
        throw PreconditionError("qv_strategy needs ||S|| <= 1; scale or stop S first");
    }
    std::vector<RandomVariable> w;
    w.reserve(s_n.steps());
    for (GridIndex k = 1; k <= s_n.steps(); ++k) {
        RandomVariable f(s_n.at(k - 1).begin(), s_n.at(k - 1).end());
        for (double& x : f) x = -x;
        w.push_back(std::move(f));
    }
    return SimpleIntegrand::on_grid(s.space(), n, std::move(w));
}

StoppingTime sigma_stop(const AdaptedProcess& s, int n, double c) {
    if (!(c > 0.0)) throw ParameterError("sigma_stop needs c > 0");
    const AdaptedProcess s_n = at_level(s, n);
    std::vector<RandomVariable> sq(s_n.steps(), RandomVariable(s.space()->atom_count()));
    for (GridIndex k = 1; k <= s_n.steps(); ++k) {
        for (std::size_t a = 0; a < sq[k - 1].size(); ++a) {
            const double d = s_n.at(k, a) - s_n.at(k - 1, a);
            sq[k - 1][a] = d * d;
        }
    }
    return first_crossing(s.space(), n, sq, c - 4.0);
}

StoppingTime tau_stop(const DoobDecomposition& d, double c) {
    if (!(c > 0.0)) throw ParameterError("tau_stop needs c > 0");
    std::vector<RandomVariable> step(d.a.steps(), RandomVariable(d.a.space()->atom_count()));
    for (GridIndex k = 1; k <= d.a.steps(); ++k) {
        for (std::size_t w = 0; w < step[k - 1].size(); ++w) {
            step[k - 1][w] = std::abs(d.a.at(k, w) - d.a.at(k - 1, w));
        }
    }
    return first_crossing(d.a.space(), d.level, step, c - 2.0);
}

std::vector<double> Ladder::values() const {
    if (!(start > 0.0) || max < start) throw ParameterError("invalid search ladder");
    std::vector<double> v;
    for (double c = start; c <= max; c *= 2.0) v.push_back(c);
    return v;
}

LadderSearch find_c1(const AdaptedProcess& s, int lo, int hi, double eps, const Ladder& ladder) {
    if (!(eps > 0.0 && eps < 1.0)) throw ParameterError("eps must lie in (0, 1)");
    if (lo > hi) throw ParameterError("empty level range");
    std::vector<RandomVariable> qv;
    for (int n = lo; n <= hi; ++n) qv.push_back(quadratic_variation(s, n));
    const auto& space = *s.space();
    LadderSearch out;
    for (double c : ladder.values()) {
        // sigma_n(c) < inf iff the full level-n QV reaches c - 4.
        double worst = 0.0;
        for (const auto& q : qv) {
            std::vector<bool> hit(q.size());
            for (std::size_t a = 0; a < q.size(); ++a) hit[a] = q[a] >= c - 4.0;
            worst = std::max(worst, probability_where(space, hit));
        }
        out.log.push_back("c1 ladder: c = " + fmt_double(c) + ", max_n P[sigma_n(c) < inf] = " +
                          fmt_double(worst));
        if (worst < eps / 2.0) {
            out.value = c;
            return out;
        }
    }
    out.log.push_back("c1 ladder exhausted at " + fmt_double(ladder.max));
    return out;
}

double martingale_l2(const AdaptedProcess& m) {
    const auto& space = *m.space();
    double e1 = 0.0;
    double e0 = 0.0;
    const auto last = m.at(m.steps());
    const auto first = m.at(0);
    for (std::size_t a = 0; a < space.atom_count(); ++a) {
        e1 += space.probability(a) * last[a] * last[a];
        e0 += space.probability(a) * first[a] * first[a];
    }
    return e1 - e0;
}

std::vector<StepEnergy> increment_energy(const DoobDecomposition& d) {
    const auto& space = *d.s.space();
    std::vector<StepEnergy> out(d.s.steps());
    for (GridIndex k = 1; k <= d.s.steps(); ++k) {
        StepEnergy e;
        for (std::size_t a = 0; a < space.atom_count(); ++a) {
            const double p = space.probability(a);
            const double ds = d.s.at(k, a) - d.s.at(k - 1, a);
            const double dm = d.m.at(k, a) - d.m.at(k - 1, a);
            const double da = d.a.at(k, a) - d.a.at(k - 1, a);
            e.ds += p * ds * ds;
            e.dm += p * dm * dm;
            e.da += p * da * da;
        }
        out[k - 1] = e;
    }
    return out;
}

RandomVariable stopped_total_variation(const DoobDecomposition& d, const StoppingTime& stop) {
    const GridIndex stride = d.a.stride();
    RandomVariable tv(d.a.space()->atom_count(), 0.0);
    for (GridIndex k = 1; k <= d.a.steps(); ++k) {
        for (std::size_t w = 0; w < tv.size(); ++w) {
            if (stop[w] >= k * stride) tv[w] += std::abs(d.a.at(k, w) - d.a.at(k - 1, w));
        }
    }
    return tv;
}

SimpleIntegrand sign_strategy(const DoobDecomposition& d, const StoppingTime& stop) {
    if (stop.space() != d.a.space()) throw StructuralError("stopping time on a different space");
    const GridIndex stride = d.a.stride();
    std::vector<RandomVariable> w(d.a.steps(), RandomVariable(d.a.space()->atom_count(), 0.0));
    for (GridIndex k = 1; k <= d.a.steps(); ++k) {
        for (std::size_t a = 0; a < w[k - 1].size(); ++a) {
            if (stop[a] >= k * stride) w[k - 1][a] = sign(d.a.at(k, a) - d.a.at(k - 1, a));
        }
    }
    return SimpleIntegrand::on_grid(d.a.space(), d.level, std::move(w));
}

StoppingTime doob_maximal_stop(const DoobDecomposition& d, const SimpleIntegrand& h, double c2) {
    if (!(c2 > 0.0)) throw ParameterError("doob_maximal_stop needs c2 > 0");
    const AdaptedProcess ip = integral_process(h, d.m);
    const GridIndex stride = d.m.stride();
    std::vector<GridIndex> out(ip.space()->atom_count(), kNever);
    for (std::size_t a = 0; a < out.size(); ++a) {
        for (GridIndex k = 1; k <= d.m.steps(); ++k) {
            if (std::abs(ip.at(k * stride, a)) >= c2) {
                out[a] = k * stride;
                break;
            }
        }
    }
    return StoppingTime(d.m.space(), std::move(out));
}

GrowthTest growth_test(const std::vector<double>& means, const StageConfig& cfg) {
    GrowthTest g;
    if (means.size() < static_cast<std::size_t>(std::max(2, cfg.growth_min_levels))) return g;
    if (!(means.front() > 0.0)) return g;
    g.strictly_increasing = true;
    for (std::size_t i = 1; i < means.size(); ++i) {
        if (!(means[i] > means[i - 1])) g.strictly_increasing = false;
    }
    g.mean_ratio = std::pow(means.back() / means.front(), 1.0 / static_cast<double>(means.size() - 1));
    g.detected = g.strictly_increasing && g.mean_ratio >= cfg.growth_min_ratio;
    return g;
}

DiscreteStage discrete_stage(const AdaptedProcess& s, int lo, int hi, const StageConfig& cfg,
                             std::vector<DoobDecomposition> decompositions) {
    const auto& space = *s.space();
    if (lo < 0 || hi > space.level() || lo > hi) {
        throw ParameterError("level range [" + std::to_string(lo) + ", " + std::to_string(hi) +
                             "] is not inside [0, " + std::to_string(space.level()) + "]");
    }
    if (!(cfg.eps > 0.0 && cfg.eps < 1.0)) throw ParameterError("eps must lie in (0, 1)");
    for (double v : s.at(0)) {
        if (std::abs(v) > kIdentityTol) {
            throw PreconditionError("discrete_stage needs S_0 = 0; subtract S_0 first (detect does this)");
        }
    }
    if (s.sup_norm() > 1.0 + kIdentityTol) {
        throw PreconditionError(
            "discrete_stage needs ||S|| <= 1; stop or scale S first (detect localizes automatically)");
    }

    DiscreteStage out;
    std::ostringstream head;
    head << "discrete stage: levels " << lo << ".." << hi << ", eps = " << cfg.eps << ", ladder "
         << cfg.ladder.start << ".." << cfg.ladder.max;
    out.log.push_back(head.str());

    if (decompositions.empty()) {
        for (int n = lo; n <= hi; ++n) decompositions.push_back(doob_decompose(s, n));
    } else if (decompositions.size() != static_cast<std::size_t>(hi - lo + 1)) {
        throw ParameterError("one decomposition per level expected");
    }
    out.decompositions = std::move(decompositions);
    const auto& decs = out.decompositions;

    std::vector<double> qv_means;
    std::vector<double> tv_means;
    for (const auto& d : decs) {
        LevelStats st;
        st.level = d.level;
        st.qv_mean = expectation(space, d.qv);
        st.tv_mean = expectation(space, d.tv);
        st.qv_max = *std::max_element(d.qv.begin(), d.qv.end());
        st.tv_max = *std::max_element(d.tv.begin(), d.tv.end());
        qv_means.push_back(st.qv_mean);
        tv_means.push_back(st.tv_mean);
        out.stats.push_back(st);
    }

    // c1 from the QV, c2 from the TV of A; both searched over the ladder.
    std::vector<RandomVariable> qvs;
    for (const auto& d : decs) qvs.push_back(d.qv);
    auto search = [&](const std::vector<RandomVariable>& vars, double offset, const char* name) {
        std::optional<double> found;
        for (double c : cfg.ladder.values()) {
            double worst = 0.0;
            for (const auto& v : vars) {
                std::vector<bool> hit(v.size());
                for (std::size_t a = 0; a < v.size(); ++a) hit[a] = v[a] >= c - offset;
                worst = std::max(worst, probability_where(space, hit));
            }
            out.log.push_back(std::string(name) + " ladder: c = " + fmt_double(c) +
                              ", max_n P[stop < inf] = " + fmt_double(worst));
            if (worst < cfg.eps / 2.0) {
                found = c;
                break;
            }
        }
        if (!found) out.log.push_back(std::string(name) + " ladder exhausted");
        return found;
    };
    out.c1 = search(qvs, 4.0, "c1");
    std::vector<RandomVariable> tvs;
    for (const auto& d : decs) tvs.push_back(d.tv);
    out.c2 = search(tvs, 2.0, "c2");

    const GrowthTest qv_growth = growth_test(qv_means, cfg);
    const GrowthTest tv_growth = growth_test(tv_means, cfg);
    auto growth_line = [&](const char* name, const std::vector<double>& means, const GrowthTest& g) {
        std::ostringstream os;
        os << name << " level means:";
        for (double m : means) os << ' ' << fmt_double(m);
        os << "; strictly increasing = " << (g.strictly_increasing ? "yes" : "no")
           << ", geometric-mean ratio = " << fmt_double(g.mean_ratio) << " (gate "
           << cfg.growth_min_ratio << " over >= " << cfg.growth_min_levels << " levels)"
           << (g.detected ? " -> unbounded" : "");
        out.log.push_back(os.str());
    };
    growth_line("E[QV]", qv_means, qv_growth);
    growth_line("E[TV(A)]", tv_means, tv_growth);

    const bool qv_route = !out.c1 || qv_growth.detected;
    const bool tv_route = !out.c2 || tv_growth.detected;

    if (!qv_route && !tv_route) {
        const double c1 = *out.c1;
        const double c2 = *out.c2;
        const double big_c = std::max(c1, c2);
        out.passed = true;
        for (const auto& d : decs) {
            StageCertificate cert;
            cert.level = d.level;
            cert.c1 = c1;
            cert.c2 = c2;
            cert.constant = big_c;
            cert.eps = cfg.eps;
            const StoppingTime rho = sigma_stop(s, d.level, c1).min(tau_stop(d, c2));
            const RandomVariable tv = stopped_total_variation(d, rho);
            cert.tv_bound = *std::max_element(tv.begin(), tv.end());
            const AdaptedProcess m_rho = stop_process(d.m, rho);
            const auto m1 = m_rho.at(m_rho.steps());
            double e = 0.0;
            for (std::size_t a = 0; a < m1.size(); ++a) e += space.probability(a) * m1[a] * m1[a];
            cert.m_l2 = e;
            cert.p_stop = rho.probability_finite();
            cert.rho = rho;
            std::vector<std::string> bad;
            if (cert.tv_bound > big_c + 1e-10) bad.push_back("TV(A^rho) > C");
            if (cert.m_l2 > big_c + 1e-10) bad.push_back("E[(M^rho_1)^2] > C");
            if (!(cert.p_stop < cfg.eps)) bad.push_back("P[rho < inf] >= eps");
            cert.passed = bad.empty();
            for (const auto& b : bad) cert.reason += (cert.reason.empty() ? "" : "; ") + b;
            if (!cert.passed) out.passed = false;
            out.certificates.push_back(std::move(cert));
        }
        out.log.push_back(out.passed ? "discrete stage passed with C = " + fmt_double(big_c)
                                     : "discrete stage: certificate bounds violated");
        return out;
    }

    std::string why;
    if (!out.c1) why = "c1 ladder exhausted";
    else if (qv_growth.detected) why = "E[QV] grows across levels";
    else if (!out.c2) why = "c2 ladder exhausted";
    else why = "E[TV(A)] grows across levels";
    out.log.push_back("discrete stage failed: " + why + "; emitting " +
                      (qv_route ? "qv_strategy" : "sign_strategy") + " witnesses");

    for (const auto& d : decs) {
        StageCertificate cert;
        cert.level = d.level;
        cert.c1 = out.c1;
        cert.c2 = out.c2;
        cert.constant = std::max(out.c1.value_or(cfg.ladder.max), out.c2.value_or(cfg.ladder.max));
        cert.eps = cfg.eps;
        cert.reason = why;
        if (qv_route) {
            cert.witness = qv_strategy(s, d.level);
            cert.witness_kind = "qv_strategy";
        } else {
            const StoppingTime sigma = sigma_stop(s, d.level, *out.c1);
            const SimpleIntegrand h0 = sign_strategy(d, sigma);
            const RandomVariable hm = integrate(h0, d.m, space.last_index());
            double e2 = 0.0;
            for (std::size_t a = 0; a < hm.size(); ++a) e2 += space.probability(a) * hm[a] * hm[a];
            const double c_doob = e2 > 0.0 ? 2.0 * std::sqrt(2.0 * e2 / cfg.eps) : 1.0;
            const StoppingTime tau_d = doob_maximal_stop(d, h0, c_doob);
            const double p = tau_d.probability_finite();
            std::ostringstream os;
            os << "level " << d.level << ": Doob stop at c = " << fmt_double(c_doob)
               << ", P[tau < inf] = " << fmt_double(p) << " <= 4E[(h.M)_1^2]/c^2 = "
               << fmt_double(4.0 * e2 / (c_doob * c_doob));
            out.log.push_back(os.str());
            if (p > 4.0 * e2 / (c_doob * c_doob) + 1e-12) {
                throw InvariantError("Doob maximal inequality violated at level " +
                                     std::to_string(d.level));
            }
            cert.witness = sign_strategy(d, sigma.min(tau_d));
            cert.witness_kind = "sign_strategy";
        }
        out.certificates.push_back(std::move(cert));
    }
    return out;
}

}  // namespace semimart
