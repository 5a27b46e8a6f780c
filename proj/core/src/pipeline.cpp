#include "semimart/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "semimart/errors.hpp"

namespace semimart {

namespace {

constexpr double kBoundTol = 1e-10;

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(6);
    os << x;
    return os.str();
}

Check make_check(std::string name, double value, double bound) {
    return Check{std::move(name), value, bound, value <= bound};
}

// sum_k |p(k s) - p((k-1) s)| per atom on the level-n grid.
RandomVariable grid_total_variation(const AdaptedProcess& p, int n) {
    const GridIndex stride = p.space()->last_index() >> n;
    RandomVariable tv(p.space()->atom_count(), 0.0);
    for (GridIndex k = 1; k <= (GridIndex{1} << n); ++k) {
        for (std::size_t a = 0; a < tv.size(); ++a) {
            tv[a] += std::abs(p.at_fine(k * stride, a) - p.at_fine((k - 1) * stride, a));
        }
    }
    return tv;
}

double max_of(const RandomVariable& x) {
    double m = 0.0;
    for (double v : x) m = std::max(m, v);
    return m;
}

void require_normalized(const AdaptedProcess& s) {
    for (double v : s.at(0)) {
        if (std::abs(v) > kIdentityTol) throw PreconditionError("normalize S first: S_0 must be 0");
    }
    if (s.sup_norm() > 1.0 + kIdentityTol) throw PreconditionError("normalize S first: ||S|| must be <= 1");
}

std::vector<std::vector<double>> transpose(const std::vector<std::vector<double>>& v) {
    if (v.empty()) return {};
    std::vector<std::vector<double>> out(v.front().size(), std::vector<double>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
        for (std::size_t j = 0; j < v[i].size(); ++j) out[j][i] = v[i][j];
    }
    return out;
}

std::vector<LevelRow> make_table(const DiscreteStage& st) {
    std::vector<LevelRow> rows;
    for (std::size_t i = 0; i < st.stats.size(); ++i) {
        LevelRow r;
        r.stats = st.stats[i];
        r.c1 = st.c1;
        r.c2 = st.c2;
        if (i < st.certificates.size()) {
            r.big_c = st.certificates[i].constant;
            if (st.certificates[i].rho) r.p_rho = st.certificates[i].p_stop;
        }
        rows.push_back(r);
    }
    return rows;
}

}  // namespace

ExtendedDecomposition extend_martingale(const DoobDecomposition& d, const AdaptedProcess& s) {
    if (s.level() != s.space()->level()) throw ParameterError("extend_martingale needs S on the finest grid");
    if (d.m.space() != s.space()) throw StructuralError("decomposition and process on different spaces");
    require_normalized(s);
    const auto& space = *s.space();
    const GridIndex last = space.last_index();
    const auto m1 = d.m.at(d.m.steps());
    std::vector<std::vector<double>> m(last + 1);
    std::vector<std::vector<double>> a(last + 1);
    for (GridIndex t = 0; t <= last; ++t) {
        m[t] = conditional_expectation(space, m1, t);
        a[t].resize(space.atom_count());
        for (std::size_t w = 0; w < a[t].size(); ++w) a[t][w] = s.at(t, w) - m[t][w];
    }
    const GridIndex stride = d.a.stride();
    double bound = 0.0;
    for (GridIndex t = 0; t <= last; ++t) {
        const GridIndex j = (t + stride - 1) / stride;
        for (std::size_t w = 0; w < a[t].size(); ++w) bound = std::max(bound, std::abs(a[t][w] - d.a.at(j, w)));
    }
    return ExtendedDecomposition{AdaptedProcess(s.space(), space.level(), std::move(m)),
                                 AdaptedProcess(s.space(), space.level(), std::move(a)), bound};
}

ContinuousStage continuous_stage(const AdaptedProcess& s, const DiscreteStage& stage,
                                 const KomlosConfig& cfg) {
    if (!stage.passed || stage.certificates.empty()) {
        throw PreconditionError("continuous stage needs a passing discrete stage");
    }
    require_normalized(s);
    const auto& space = *s.space();
    const GridIndex last = space.last_index();
    const std::size_t atoms = space.atom_count();

    ContinuousStage out;
    out.big_c = stage.certificates.front().constant;
    out.eps = stage.certificates.front().eps;
    const double big_c = out.big_c;

    struct Base {
        int level;
        ExtendedDecomposition ext;
        StoppingTime rho;
        RandomVariable r1;
    };
    std::vector<Base> base;
    for (std::size_t i = 0; i < stage.certificates.size(); ++i) {
        const auto& cert = stage.certificates[i];
        const auto& d = stage.decompositions[i];
        ExtendedDecomposition ext = extend_martingale(d, s);
        out.checks.push_back(make_check("level " + std::to_string(d.level) + ": |A_t - A_{j/2^n}| <= 2",
                                        ext.intermediate_bound, 2.0 + kBoundTol));
        const StoppingTime& rho = *cert.rho;
        double uniform = 0.0;
        for (GridIndex t = 0; t <= last; ++t) {
            for (std::size_t a = 0; a < atoms; ++a) {
                uniform = std::max(uniform, std::abs(ext.a.at(std::min(t, rho.clamped(a)), a)));
            }
        }
        out.checks.push_back(make_check("level " + std::to_string(d.level) + ": ||A^rho|| <= C + 2",
                                        uniform, big_c + 2.0 + kBoundTol));
        RandomVariable r1(atoms);
        for (std::size_t a = 0; a < atoms; ++a) r1[a] = rho[a] >= last ? 1.0 : 0.0;
        base.push_back(Base{d.level, std::move(ext), rho, std::move(r1)});
    }
    // Sampling beyond the finest level reproduces it, so the tail is padded
    // with copies of the finest term.
    std::vector<std::size_t> index_of;
    for (std::size_t i = 0; i < base.size(); ++i) index_of.push_back(i);
    for (int c = 0; c < 3; ++c) index_of.push_back(base.size() - 1);
    out.log.push_back("continuous stage: " + std::to_string(base.size()) + " levels + 3 copies of level " +
                      std::to_string(base.back().level));

    std::vector<RandomVariable> r1_seq;
    for (std::size_t idx : index_of) r1_seq.push_back(base[idx].r1);
    out.komlos = extract_convex(r1_seq, space, cfg);
    for (const auto& l : out.komlos.log) out.log.push_back("komlos: " + l);

    for (std::size_t e = 0; e < index_of.size(); ++e) {
        const Base& b = base[index_of[e]];
        const ConvexEntry& w = out.komlos.weights[e];
        std::vector<RandomVariable> rbar(last + 1, RandomVariable(atoms, 0.0));
        for (std::size_t i = 0; i < w.weights.size(); ++i) {
            if (w.weights[i] == 0.0) continue;
            const StoppingTime& rho_i = base[index_of[w.start + i]].rho;
            for (GridIndex k = 1; k <= last; ++k) {
                for (std::size_t a = 0; a < atoms; ++a) {
                    if (k <= rho_i[a]) rbar[k][a] += w.weights[i];
                }
            }
        }
        std::vector<GridIndex> alpha(atoms, kNever);
        for (std::size_t a = 0; a < atoms; ++a) {
            for (GridIndex k = 1; k <= last; ++k) {
                if (rbar[k][a] < 0.5) {
                    alpha[a] = k - 1;
                    break;
                }
            }
        }
        std::vector<RandomVariable> sbar(last + 1, RandomVariable(atoms, 0.0));
        for (GridIndex k = 1; k <= last; ++k) {
            for (std::size_t a = 0; a < atoms; ++a) {
                if (k <= alpha[a]) sbar[k][a] = 1.0 / rbar[k][a];
            }
        }
        // Y^M = sum mu_i M^i stopped at rho_i, likewise Y^A; then Sbar . Y.
        std::vector<std::vector<double>> ym(last + 1, std::vector<double>(atoms, 0.0));
        std::vector<std::vector<double>> ya(last + 1, std::vector<double>(atoms, 0.0));
        for (std::size_t i = 0; i < w.weights.size(); ++i) {
            if (w.weights[i] == 0.0) continue;
            const Base& bi = base[index_of[w.start + i]];
            for (GridIndex t = 0; t <= last; ++t) {
                for (std::size_t a = 0; a < atoms; ++a) {
                    const GridIndex u = std::min(t, bi.rho.clamped(a));
                    ym[t][a] += w.weights[i] * bi.ext.m.at(u, a);
                    ya[t][a] += w.weights[i] * bi.ext.a.at(u, a);
                }
            }
        }
        std::vector<std::vector<double>> cm(last + 1, std::vector<double>(atoms, 0.0));
        std::vector<std::vector<double>> ca(last + 1, std::vector<double>(atoms, 0.0));
        for (GridIndex k = 1; k <= last; ++k) {
            for (std::size_t a = 0; a < atoms; ++a) {
                cm[k][a] = cm[k - 1][a] + sbar[k][a] * (ym[k][a] - ym[k - 1][a]);
                ca[k][a] = ca[k - 1][a] + sbar[k][a] * (ya[k][a] - ya[k - 1][a]);
            }
        }
        out.elements.push_back(ContinuousLevel{
            b.level, b.ext, b.rho, b.r1, w, std::move(rbar), StoppingTime(s.space(), std::move(alpha)),
            std::move(sbar), AdaptedProcess(s.space(), space.level(), std::move(cm)),
            AdaptedProcess(s.space(), space.level(), std::move(ca))});
    }

    // Subsequence with P(|Rbar^{n_k}_1 - Rbar_1| >= 1/15) <= eps 2^-k.
    const auto& limit = out.komlos.limit;
    std::size_t k = 1;
    for (std::size_t e : out.komlos.emitted) {
        double p = 0.0;
        for (std::size_t a = 0; a < atoms; ++a) {
            if (std::abs(out.elements[e].rbar[last][a] - limit[a]) >= 1.0 / 15.0) p += space.probability(a);
        }
        if (p <= out.eps * std::ldexp(1.0, -static_cast<int>(k))) {
            out.selected.push_back(e);
            ++k;
        }
    }
    if (out.selected.empty()) {
        out.log.push_back("no element passed the subsequence criterion");
        out.ok = false;
        return out;
    }
    {
        std::ostringstream os;
        os << "selected subsequence:";
        for (std::size_t e : out.selected) os << ' ' << e;
        out.log.push_back(os.str());
    }

    StoppingTime alpha = out.elements[out.selected.front()].alpha_n;
    for (std::size_t e : out.selected) alpha = alpha.min(out.elements[e].alpha_n);
    out.alpha = alpha;

    const AdaptedProcess s_alpha = stop_process(s, alpha);
    const double c_prime = 6.0 * (big_c + 2.0) + 2.0 * big_c;
    for (std::size_t e : out.selected) {
        const auto& el = out.elements[e];
        const std::string tag = "element " + std::to_string(e) + " (level " + std::to_string(el.level) + "): ";
        const AdaptedProcess m_alpha = stop_process(el.cal_m, alpha);
        const AdaptedProcess a_alpha = stop_process(el.cal_a, alpha);
        double ident = 0.0;
        for (GridIndex t = 0; t <= last; ++t) {
            for (std::size_t a = 0; a < atoms; ++a) {
                ident = std::max(ident, std::abs(m_alpha.at(t, a) + a_alpha.at(t, a) - s_alpha.at(t, a)));
            }
        }
        out.checks.push_back(make_check(tag + "A^alpha + M^alpha = S^alpha", ident, kBoundTol));
        const auto m1 = m_alpha.at(last);
        double l2 = 0.0;
        for (std::size_t a = 0; a < atoms; ++a) l2 += space.probability(a) * m1[a] * m1[a];
        out.checks.push_back(make_check(tag + "E[(M^alpha_1)^2] <= 4C", l2, 4.0 * big_c + kBoundTol));
        out.checks.push_back(make_check(tag + "TV(A^alpha) <= 6(C+2)+2C",
                                        max_of(grid_total_variation(a_alpha, el.level)), c_prime + kBoundTol));
        double sb = 0.0;
        for (const auto& x : el.sbar) sb = std::max(sb, max_of(x));
        out.checks.push_back(make_check(tag + "||Sbar|| <= 2", sb, 2.0 + kBoundTol));
        out.checks.push_back(
            make_check(tag + "P[alpha_n < inf] <= 2 eps", el.alpha_n.probability_finite(), 2.0 * out.eps + kBoundTol));
    }
    out.checks.push_back(make_check("P[alpha < inf] <= 4 eps", alpha.probability_finite(), 4.0 * out.eps + kBoundTol));
    out.ok = std::all_of(out.checks.begin(), out.checks.end(), [](const Check& c) { return c.ok; });
    return out;
}

AssembledDecomposition assemble_decomposition(const AdaptedProcess& s, const ContinuousStage& stage,
                                              const KomlosConfig& cfg) {
    if (!stage.ok || !stage.alpha) throw PreconditionError("assembly needs a verified continuous stage");
    const auto& space = *s.space();
    const GridIndex last = space.last_index();
    const StoppingTime& alpha = *stage.alpha;

    std::vector<std::size_t> seq_idx = stage.selected;
    AssembledDecomposition out{s, s, 6.0 * (stage.big_c + 2.0) + 2.0 * stage.big_c, {}, false, {}};
    while (seq_idx.size() < 3) {
        seq_idx.push_back(seq_idx.back());
        out.log.push_back("assembly: repeated the last selected element to reach 3 terms");
    }

    // Sequence 0 is M_1^{n,alpha}; sequence 1 + t is A_t^{n,alpha}.
    std::vector<std::vector<std::vector<double>>> seqs(last + 2);
    for (std::size_t e : seq_idx) {
        const AdaptedProcess m_alpha = stop_process(stage.elements[e].cal_m, alpha);
        const AdaptedProcess a_alpha = stop_process(stage.elements[e].cal_a, alpha);
        seqs[0].emplace_back(m_alpha.at(last).begin(), m_alpha.at(last).end());
        for (GridIndex t = 0; t <= last; ++t) seqs[1 + t].emplace_back(a_alpha.at(t).begin(), a_alpha.at(t).end());
    }
    const KomlosMultiResult km = extract_convex_multi(seqs, space.probabilities(), cfg);
    for (const auto& l : km.combined.log) out.log.push_back("assembly komlos: " + l);

    std::vector<std::vector<double>> m(last + 1);
    std::vector<std::vector<double>> a(last + 1);
    for (GridIndex t = 0; t <= last; ++t) {
        m[t] = conditional_expectation(space, km.limits[0], t);
        a[t] = km.limits[1 + t];
    }
    out.m = AdaptedProcess(s.space(), space.level(), std::move(m));
    out.a = AdaptedProcess(s.space(), space.level(), std::move(a));

    const AdaptedProcess s_alpha = stop_process(s, alpha);
    double ident = 0.0;
    for (GridIndex t = 0; t <= last; ++t) {
        for (std::size_t w = 0; w < space.atom_count(); ++w) {
            ident = std::max(ident, std::abs(out.m.at(t, w) + out.a.at(t, w) - s_alpha.at(t, w)));
        }
    }
    out.checks.push_back(make_check("assembled M_t + A_t = S^alpha_t", ident, cfg.tol));
    out.checks.push_back(make_check("assembled martingale residual", martingale_residual(out.m), kBoundTol));
    out.checks.push_back(make_check("assembled TV(A) <= 6(C+2)+2C", max_of(total_variation(out.a)),
                                    out.constant + kBoundTol));
    out.ok = std::all_of(out.checks.begin(), out.checks.end(), [](const Check& c) { return c.ok; });
    return out;
}

JumpSplit big_jump_split(const AdaptedProcess& s) {
    const std::size_t atoms = s.space()->atom_count();
    std::vector<std::vector<double>> j(s.steps() + 1, std::vector<double>(atoms, 0.0));
    std::vector<std::vector<double>> x(s.steps() + 1);
    x[0].assign(s.at(0).begin(), s.at(0).end());
    for (GridIndex k = 1; k <= s.steps(); ++k) {
        x[k].resize(atoms);
        for (std::size_t a = 0; a < atoms; ++a) {
            const double d = s.at(k, a) - s.at(k - 1, a);
            j[k][a] = j[k - 1][a] + (std::abs(d) >= 1.0 ? d : 0.0);
            x[k][a] = s.at(k, a) - j[k][a];
        }
    }
    return JumpSplit{AdaptedProcess(s.space(), s.level(), std::move(x)),
                     AdaptedProcess(s.space(), s.level(), std::move(j))};
}

StoppingTime localizing_time(const AdaptedProcess& s) {
    const auto& space = *s.space();
    const GridIndex stride = s.stride();
    std::vector<GridIndex> tau(space.atom_count(), kNever);
    for (GridIndex k = 0; k < s.steps(); ++k) {
        const auto cells = space.cells_at(k * stride);
        std::vector<double> cell_max(space.cell_count(k * stride), 0.0);
        for (std::size_t a = 0; a < tau.size(); ++a) {
            cell_max[cells[a]] = std::max(cell_max[cells[a]], std::abs(s.at(k + 1, a)));
        }
        for (std::size_t a = 0; a < tau.size(); ++a) {
            if (tau[a] == kNever && cell_max[cells[a]] > 1.0) tau[a] = k * stride;
        }
    }
    return StoppingTime(s.space(), std::move(tau));
}

RandomVariable total_variation(const AdaptedProcess& p) {
    RandomVariable tv(p.space()->atom_count(), 0.0);
    for (GridIndex k = 1; k <= p.steps(); ++k) {
        for (std::size_t a = 0; a < tv.size(); ++a) tv[a] += std::abs(p.at(k, a) - p.at(k - 1, a));
    }
    return tv;
}

double martingale_residual(const AdaptedProcess& m) {
    const auto& space = *m.space();
    double worst = 0.0;
    RandomVariable d(space.atom_count());
    for (GridIndex k = 1; k <= m.steps(); ++k) {
        for (std::size_t a = 0; a < d.size(); ++a) d[a] = m.at(k, a) - m.at(k - 1, a);
        const RandomVariable c = conditional_expectation(space, d, (k - 1) * m.stride());
        for (double v : c) worst = std::max(worst, std::abs(v));
    }
    return worst;
}

std::string verdict_name(const Verdict& v) {
    switch (v.index()) {
        case 1: return "SemimartingaleCertificate";
        case 2: return "FreeLunchEvidence";
        default: return "Inconclusive";
    }
}

double plateau_level(const std::vector<RandomVariable>& gains, const FilteredSpace& space) {
    // Per element: gain values sorted descending with cumulative probability,
    // so P[G >= a] is a lookup.
    struct Tail {
        std::vector<double> value;  // descending
        std::vector<double> cum;    // P[G >= value[i]]
        double at(double a) const {
            const auto it = std::lower_bound(value.begin(), value.end(), a, std::greater<double>());
            // value[0..idx) are > a; include ties.
            std::size_t idx = static_cast<std::size_t>(it - value.begin());
            while (idx < value.size() && value[idx] >= a) ++idx;
            return idx == 0 ? 0.0 : cum[idx - 1];
        }
    };
    std::vector<Tail> tails;
    std::vector<double> all;
    for (const auto& g : gains) {
        std::vector<std::size_t> order(g.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return g[x] > g[y]; });
        Tail t;
        double c = 0.0;
        for (std::size_t i : order) {
            if (!(g[i] > 0.0)) break;
            c += space.probability(i);
            t.value.push_back(g[i]);
            t.cum.push_back(c);
            all.push_back(g[i]);
        }
        tails.push_back(std::move(t));
    }
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    double best = 0.0;
    double prev = 0.0;
    for (double v : all) {
        double f = 1.0;
        for (const auto& t : tails) f = std::min(f, t.at(v));
        // On (prev, v] the minimum tail probability equals f.
        if (f > prev) best = std::max(best, std::min(v, f));
        prev = v;
    }
    return best;
}

Verdict free_lunch_evidence(const AdaptedProcess& s, const DiscreteStage& stage, const DetectConfig& cfg,
                            std::vector<std::string>& log) {
    const auto& space = *s.space();
    FreeLunchEvidence ev;
    std::vector<SimpleIntegrand> unit;
    std::vector<RandomVariable> unit_gain_pos;
    std::vector<double> li_unit;
    std::vector<double> vr_unit;
    for (const auto& cert : stage.certificates) {
        if (!cert.witness) return Inconclusive{"failed discrete stage without a witness at level " +
                                               std::to_string(cert.level)};
        ev.witness_kind = cert.witness_kind;
        ev.levels.push_back(cert.level);
        const RandomVariable gain = integrate(*cert.witness, s, space.last_index());
        RandomVariable pos(gain.size());
        for (std::size_t a = 0; a < gain.size(); ++a) pos[a] = std::max(gain[a], 0.0);
        const double g = expectation(space, pos);
        if (!(g > 0.0)) {
            return Inconclusive{"witness at level " + std::to_string(cert.level) + " has no positive gain"};
        }
        ev.unit_gain.push_back(g);
        li_unit.push_back(li_metric(*cert.witness));
        vr_unit.push_back(vr_metric(*cert.witness, s));
        unit.push_back(*cert.witness);
        unit_gain_pos.push_back(std::move(pos));
    }
    const double denom = std::max(li_unit.back(), vr_unit.back());
    if (!(denom > 0.0)) return Inconclusive{"witness at the window end is zero"};
    const double kappa = cfg.kappa_fraction * cfg.rule_bound * ev.unit_gain.back() / denom;
    std::ostringstream os;
    os << "free-lunch rule: " << ev.witness_kind << " witnesses, kappa = " << fmt(kappa)
       << ", eps_n = kappa / E[(h^n.S)_1^+]";
    log.push_back(os.str());

    std::vector<RandomVariable> scaled_gain;
    for (std::size_t i = 0; i < unit.size(); ++i) {
        const double e = kappa / ev.unit_gain[i];
        ev.scales.push_back(e);
        ev.strategies.elements.push_back(unit[i].scaled(e));
        RandomVariable gsc = unit_gain_pos[i];
        for (double& x : gsc) x *= e;
        scaled_gain.push_back(std::move(gsc));
    }
    ev.alpha_sup = plateau_level(scaled_gain, space);
    ev.alpha_star = ev.alpha_sup / 2.0;
    if (!(ev.alpha_star > 0.0)) return Inconclusive{"fl_statistic plateau is empty"};
    diagnose(ev.strategies, s, ev.alpha_star);

    std::vector<std::string> failed;
    const auto& dg = ev.strategies.diagnostics;
    for (std::size_t i = 0; i < dg.size(); ++i) {
        std::ostringstream row;
        row << "level " << ev.levels[i] << ": eps_n = " << fmt(ev.scales[i]) << ", li = " << fmt(dg[i].li)
            << ", vr = " << fmt(dg[i].vr) << ", fl(alpha*) = " << fmt(dg[i].fl);
        log.push_back(row.str());
        if (i > 0 && !(dg[i].li < dg[i - 1].li)) failed.push_back("li not strictly decreasing");
        if (dg[i].fl < ev.alpha_star) failed.push_back("fl_statistic(alpha*) < alpha* at level " + std::to_string(ev.levels[i]));
    }
    if (!(dg.back().li < cfg.rule_bound)) failed.push_back("li at window end not below " + fmt(cfg.rule_bound));
    if (!(dg.back().vr < cfg.rule_bound)) failed.push_back("vr at window end not below " + fmt(cfg.rule_bound));
    log.push_back("alpha_sup = " + fmt(ev.alpha_sup) + ", alpha* = " + fmt(ev.alpha_star));
    if (!failed.empty()) {
        std::string r = "free-lunch rule not met: ";
        for (std::size_t i = 0; i < failed.size(); ++i) r += (i ? "; " : "") + failed[i];
        return Inconclusive{r};
    }
    log.push_back("free-lunch rule met over levels " + std::to_string(ev.levels.front()) + ".." +
                  std::to_string(ev.levels.back()));
    return ev;
}

NormalizedInput normalize_input(const AdaptedProcess& input, std::vector<std::string>& log) {
    AdaptedProcess s = input.on_finest_grid();
    JumpSplit split = big_jump_split(s);
    const RandomVariable jtv = total_variation(split.j);
    if (max_of(jtv) > 0.0) {
        log.push_back("big jumps removed: max TV(J) = " + fmt(max_of(jtv)) +
                      ", P[J != 0] = " + fmt([&] {
                          double p = 0.0;
                          for (std::size_t a = 0; a < jtv.size(); ++a) {
                              if (jtv[a] > 0.0) p += s.space()->probability(a);
                          }
                          return p;
                      }()));
    }
    std::vector<std::vector<double>> y = split.x.values();
    const RandomVariable x0(split.x.at(0).begin(), split.x.at(0).end());
    for (auto& slice : y) {
        for (std::size_t a = 0; a < slice.size(); ++a) slice[a] -= x0[a];
    }
    AdaptedProcess yp(s.space(), s.level(), std::move(y));
    StoppingTime tau = localizing_time(yp);
    const double p = tau.probability_finite();
    if (p > 0.0) log.push_back("localized to ||S|| <= 1: P[tau < inf] = " + fmt(p));
    AdaptedProcess z = stop_process(yp, tau);
    return NormalizedInput{std::move(s), std::move(split), std::move(z), std::move(tau)};
}

namespace {

void resolve_levels(const DetectConfig& cfg, int finest, int& lo, int& hi) {
    lo = std::min(cfg.lo, finest);
    hi = cfg.hi.value_or(finest);
    if (lo < 0 || hi > finest || lo > hi) {
        throw ParameterError("level window [" + std::to_string(lo) + ", " + std::to_string(hi) +
                             "] is not inside [0, " + std::to_string(finest) + "]");
    }
}

}  // namespace

DetectResult detect(const AdaptedProcess& input, const DetectConfig& cfg) {
    DetectResult res;
    int lo = 0;
    int hi = 0;
    resolve_levels(cfg, input.space()->level(), lo, hi);
    NormalizedInput nz = normalize_input(input, res.log);
    res.normalized = nz.z;
    const auto& space = *nz.s.space();

    DiscreteStage stage;
    try {
        stage = discrete_stage(nz.z, lo, hi, cfg.stage);
    } catch (const Error& e) {
        res.verdict = Inconclusive{std::string("discrete stage: ") + e.what()};
        return res;
    }
    res.log.insert(res.log.end(), stage.log.begin(), stage.log.end());
    res.table = make_table(stage);

    if (!stage.passed) {
        const bool has_witness = !stage.certificates.empty() && stage.certificates.front().witness.has_value();
        if (!has_witness) {
            res.verdict = Inconclusive{"discrete stage certificate bounds violated"};
            return res;
        }
        res.verdict = free_lunch_evidence(nz.z, stage, cfg, res.log);
        return res;
    }
    for (const auto& cert : stage.certificates) {
        res.checks.push_back(make_check("level " + std::to_string(cert.level) + ": TV(A^rho) <= C",
                                        cert.tv_bound, cert.constant + kBoundTol));
        res.checks.push_back(make_check("level " + std::to_string(cert.level) + ": E[(M^rho_1)^2] <= C",
                                        cert.m_l2, cert.constant + kBoundTol));
        res.checks.push_back(Check{"level " + std::to_string(cert.level) + ": P[rho < inf] < eps", cert.p_stop,
                                   cert.eps, cert.p_stop < cert.eps});
    }

    try {
        const ContinuousStage cs = continuous_stage(nz.z, stage, cfg.komlos);
        res.log.insert(res.log.end(), cs.log.begin(), cs.log.end());
        res.checks.insert(res.checks.end(), cs.checks.begin(), cs.checks.end());
        if (!cs.ok) {
            std::string r = "continuous stage checks failed:";
            for (const auto& c : cs.checks) {
                if (!c.ok) r += " [" + c.name + ": " + fmt(c.value) + " > " + fmt(c.bound) + "]";
            }
            if (cs.selected.empty()) r += " [no subsequence element selected]";
            res.verdict = Inconclusive{r};
            return res;
        }
        const AssembledDecomposition ad = assemble_decomposition(nz.z, cs, cfg.komlos);
        res.log.insert(res.log.end(), ad.log.begin(), ad.log.end());
        res.checks.insert(res.checks.end(), ad.checks.begin(), ad.checks.end());
        if (!ad.ok) {
            res.verdict = Inconclusive{"assembled decomposition failed its checks"};
            return res;
        }

        // Fold back S_0 and the big jumps.
        const StoppingTime alpha = cs.alpha->min(nz.tau);
        const AdaptedProcess j_alpha = stop_process(nz.split.j, alpha);
        const GridIndex last = space.last_index();
        std::vector<std::vector<double>> m(last + 1);
        std::vector<std::vector<double>> a(last + 1);
        for (GridIndex t = 0; t <= last; ++t) {
            m[t].resize(space.atom_count());
            a[t].resize(space.atom_count());
            for (std::size_t w = 0; w < space.atom_count(); ++w) {
                m[t][w] = nz.split.x.at(0, w) + ad.m.at(t, w);
                a[t][w] = ad.a.at(t, w) + j_alpha.at(t, w);
            }
        }
        SemimartingaleCertificate cert{AdaptedProcess(nz.s.space(), space.level(), std::move(m)),
                                       AdaptedProcess(nz.s.space(), space.level(), std::move(a)),
                                       alpha,
                                       nz.tau,
                                       cs.big_c,
                                       ad.constant + max_of(total_variation(j_alpha)),
                                       0.0,
                                       0.0,
                                       0.0};
        cert.martingale_residual = martingale_residual(cert.m);
        const AdaptedProcess s_alpha = stop_process(nz.s, alpha);
        for (GridIndex t = 0; t <= last; ++t) {
            for (std::size_t w = 0; w < space.atom_count(); ++w) {
                cert.identity_residual =
                    std::max(cert.identity_residual, std::abs(cert.m.at(t, w) + cert.a.at(t, w) - s_alpha.at(t, w)));
            }
        }
        cert.tv_max = max_of(total_variation(cert.a));
        const Check c1 = make_check("certificate: martingale residual", cert.martingale_residual, kBoundTol);
        const Check c2 = make_check("certificate: M + A = S^alpha", cert.identity_residual, kBoundTol);
        const Check c3 = make_check("certificate: TV(A) <= constant", cert.tv_max, cert.constant + kBoundTol);
        res.checks.push_back(c1);
        res.checks.push_back(c2);
        res.checks.push_back(c3);
        if (!(c1.ok && c2.ok && c3.ok)) {
            res.verdict = Inconclusive{"certificate failed its final checks"};
            return res;
        }
        res.log.push_back("certificate: C = " + fmt(cert.big_c) + ", TV(A) bound = " + fmt(cert.constant) +
                          ", P[alpha < inf] = " + fmt(alpha.probability_finite()));
        res.verdict = std::move(cert);
    } catch (const ConvergenceError& e) {
        res.verdict = Inconclusive{std::string("komlos extraction failed: ") + e.what()};
    }
    return res;
}

DetectResult detect_ensemble(const EnsembleProcess& e, const DetectConfig& cfg) {
    if (e.spec.kind == Kind::Jump) {
        throw ParameterError("ensemble detection does not support the jump kind (no compensator for the split)");
    }
    DetectResult res;
    auto [space, s] = ensemble_space(e);
    if (s.sup_norm() > 1.0 + kIdentityTol) {
        throw ParameterError("ensemble paths leave [-1, 1] (max |S| = " + fmt(s.sup_norm()) +
                             "); regenerate with a smaller --scale");
    }
    int lo = 0;
    int hi = 0;
    resolve_levels(cfg, space->level(), lo, hi);
    std::vector<DoobDecomposition> decs;
    for (int n = lo; n <= hi; ++n) {
        decs.push_back(DoobDecomposition::from_compensator(at_level(s, n), transpose(compensator_oracle(e, n))));
    }
    res.log.push_back("ensemble mode: " + std::to_string(e.size()) +
                      " paths, empirical innovation tree, analytic compensator");
    res.normalized = s;
    DiscreteStage stage;
    try {
        stage = discrete_stage(s, lo, hi, cfg.stage, std::move(decs));
    } catch (const Error& ex) {
        res.verdict = Inconclusive{std::string("discrete stage: ") + ex.what()};
        return res;
    }
    res.log.insert(res.log.end(), stage.log.begin(), stage.log.end());
    res.table = make_table(stage);
    if (stage.passed) {
        res.verdict = Inconclusive{"discrete stage passed; certificate assembly requires exact-tree mode"};
        return res;
    }
    if (stage.certificates.empty() || !stage.certificates.front().witness) {
        res.verdict = Inconclusive{"discrete stage certificate bounds violated"};
        return res;
    }
    res.verdict = free_lunch_evidence(s, stage, cfg, res.log);
    return res;
}

}  // namespace semimart
