#include "semimart/generators.hpp"

#include <bit>
#include <cmath>
#include <random>

#include "semimart/errors.hpp"

namespace semimart {

namespace {

constexpr int kMaxEnsembleLevel = 16;

// Precomputed kernel data for one (spec, scale): S_t = unit * sum_{l<=t} pw[t-l+1] xi_l.
struct Kernel {
    double unit = 0.0;
    std::vector<double> pw;  // pw[m] = m^(H-1/2), pw[0] = 0
};

GridIndex steps_of(const GeneratorSpec& spec) { return GridIndex{1} << spec.level; }

double rl_norm(int level, double hurst) {
    const GridIndex n = GridIndex{1} << level;
    double acc = 0.0;
    for (GridIndex m = 1; m <= n; ++m) acc += std::pow(static_cast<double>(m), 2.0 * hurst - 1.0);
    return 1.0 / std::sqrt(acc);
}

Kernel make_kernel(const GeneratorSpec& spec, double scale) {
    Kernel k;
    const GridIndex n = steps_of(spec);
    k.pw.assign(n + 1, 0.0);
    if (spec.kind == Kind::RlFractional) {
        k.unit = scale * rl_norm(spec.level, spec.hurst);
        for (GridIndex m = 1; m <= n; ++m) k.pw[m] = std::pow(static_cast<double>(m), spec.hurst - 0.5);
    } else {
        k.unit = scale * (1.0 / std::sqrt(static_cast<double>(n)));
        for (GridIndex m = 1; m <= n; ++m) k.pw[m] = 1.0;
    }
    return k;
}

GridIndex jump_step(const GeneratorSpec& spec) {
    return spec.level == 0 ? 1 : steps_of(spec) / 2;
}

double value_at(const GeneratorSpec& spec, const Kernel& k, std::span<const int> prefix) {
    const auto t = static_cast<GridIndex>(prefix.size());
    const GridIndex n = steps_of(spec);
    double acc = 0.0;
    for (GridIndex l = 1; l <= t; ++l) acc += k.pw[t - l + 1] * prefix[l - 1];
    double v = k.unit * acc;
    if (spec.kind == Kind::Drifted) v += spec.mu * static_cast<double>(t) / n;
    if (spec.kind == Kind::Jump && t >= jump_step(spec)) v += spec.jump * prefix[jump_step(spec) - 1];
    return v;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

std::string to_string(Kind k) {
    switch (k) {
        case Kind::RademacherBm: return "rademacher_bm";
        case Kind::Drifted: return "drifted";
        case Kind::RlFractional: return "rl_fractional";
        case Kind::Jump: return "jump";
        case Kind::DeterministicDrift: return "deterministic_drift";
    }
    return "?";
}

std::string to_string(Mode m) { return m == Mode::ExactTree ? "exact" : "ensemble"; }

Kind parse_kind(const std::string& s) {
    for (Kind k : {Kind::RademacherBm, Kind::Drifted, Kind::RlFractional, Kind::Jump,
                   Kind::DeterministicDrift}) {
        if (to_string(k) == s) return k;
    }
    throw ParameterError("unknown generator kind '" + s + "'");
}

Mode parse_mode(const std::string& s) {
    if (s == "exact" || s == "exact_tree") return Mode::ExactTree;
    if (s == "ensemble") return Mode::Ensemble;
    throw ParameterError("unknown mode '" + s + "' (expected exact or ensemble)");
}

void validate(const GeneratorSpec& spec) {
    if (spec.level < 0) throw ParameterError("level must be non-negative");
    if (spec.mode == Mode::ExactTree && spec.level > kMaxTreeLevel &&
        spec.kind != Kind::DeterministicDrift) {
        throw ParameterError("exact trees are limited to level " + std::to_string(kMaxTreeLevel) +
                             "; use --mode ensemble for level " + std::to_string(spec.level));
    }
    if (spec.level > kMaxEnsembleLevel) {
        throw ParameterError("level above " + std::to_string(kMaxEnsembleLevel) + " is not supported");
    }
    if (!(spec.hurst > 0.0 && spec.hurst < 1.0)) throw ParameterError("hurst must lie in (0, 1)");
    if (spec.scale && !(*spec.scale > 0.0 && std::isfinite(*spec.scale))) {
        throw ParameterError("scale must be positive");
    }
    if (!std::isfinite(spec.mu)) throw ParameterError("mu must be finite");
    if (spec.kind == Kind::Jump && !(spec.jump >= 1.0)) throw ParameterError("jump magnitude must be >= 1");
    if (spec.mode == Mode::Ensemble && (spec.paths == 0 || !std::has_single_bit(spec.paths))) {
        throw ParameterError("ensemble path count must be a power of two, got " +
                             std::to_string(spec.paths));
    }
}

double unit_sup_norm(const GeneratorSpec& spec) {
    const double n = static_cast<double>(steps_of(spec));
    switch (spec.kind) {
        case Kind::DeterministicDrift: return 1.0;
        case Kind::RlFractional: {
            double acc = 0.0;
            for (GridIndex m = 1; m <= steps_of(spec); ++m) {
                acc += std::pow(static_cast<double>(m), spec.hurst - 0.5);
            }
            return rl_norm(spec.level, spec.hurst) * acc;
        }
        default: return n * (1.0 / std::sqrt(n));
    }
}

double effective_scale(const GeneratorSpec& spec) {
    validate(spec);
    double room = 1.0;
    if (spec.kind == Kind::Drifted) room = 1.0 - std::abs(spec.mu);
    if (!(room > 0.0)) {
        if (!spec.scale || spec.mode == Mode::ExactTree) {
            throw ParameterError("|mu| >= 1 leaves no room for ||S|| <= 1");
        }
        return *spec.scale;
    }
    const double largest = room / unit_sup_norm(spec);
    if (!spec.scale) return largest;
    if (spec.mode == Mode::ExactTree) return std::min(*spec.scale, largest);
    return *spec.scale;
}

std::vector<double> path_values(const GeneratorSpec& spec, double scale, std::span<const int> xi) {
    const GridIndex n = steps_of(spec);
    if (spec.kind != Kind::DeterministicDrift && xi.size() != static_cast<std::size_t>(n)) {
        throw ParameterError("innovation sequence has wrong length");
    }
    const Kernel k = make_kernel(spec, scale);
    std::vector<double> v(n + 1);
    for (GridIndex t = 0; t <= n; ++t) {
        v[t] = spec.kind == Kind::DeterministicDrift ? scale * static_cast<double>(t) / n
                                                     : value_at(spec, k, xi.first(t));
    }
    return v;
}

std::vector<double> compensator_increments(const GeneratorSpec& spec, double scale,
                                           std::span<const int> xi, int n) {
    if (n < 0 || n > spec.level) throw ParameterError("compensator level off the grid");
    const GridIndex count = GridIndex{1} << n;
    const GridIndex stride = steps_of(spec) / count;
    std::vector<double> out(count, 0.0);
    switch (spec.kind) {
        case Kind::RademacherBm:
        case Kind::Jump: return out;
        case Kind::Drifted:
            for (auto& x : out) x = spec.mu / count;
            return out;
        case Kind::DeterministicDrift:
            for (auto& x : out) x = scale / count;
            return out;
        case Kind::RlFractional: {
            const Kernel k = make_kernel(spec, scale);
            for (GridIndex j = 1; j <= count; ++j) {
                const GridIndex t1 = (j - 1) * stride;
                const GridIndex t2 = j * stride;
                double acc = 0.0;
                for (GridIndex l = 1; l <= t1; ++l) acc += (k.pw[t2 - l + 1] - k.pw[t1 - l + 1]) * xi[l - 1];
                out[j - 1] = k.unit * acc;
            }
            return out;
        }
    }
    return out;
}

GeneratedTree generate_tree(const GeneratorSpec& spec_in) {
    GeneratorSpec spec = spec_in;
    spec.mode = Mode::ExactTree;
    const double scale = effective_scale(spec);
    if (spec.kind == Kind::DeterministicDrift) {
        SpacePtr space = deterministic_space(spec.level);
        std::vector<std::vector<double>> v(space->grid().size());
        const auto path = path_values(spec, scale, {});
        for (std::size_t t = 0; t < v.size(); ++t) v[t] = {path[t]};
        AdaptedProcess p(space, spec.level, std::move(v));
        return {space, std::move(p), scale};
    }
    const Kernel k = make_kernel(spec, scale);
    auto [space, process] = build_binary_tree(
        spec.level, [&](std::span<const int> prefix) { return value_at(spec, k, prefix); });
    if (spec.kind != Kind::Jump && process.sup_norm() > 1.0 + kIdentityTol) {
        throw InvariantError("generated tree violates ||S|| <= 1");
    }
    return {space, std::move(process), scale};
}

double EnsembleProcess::probability(std::size_t i) const {
    return std::ldexp(static_cast<double>(prob_num[i]), -prob_exp[i]);
}

std::uint64_t path_seed(std::uint64_t seed, std::uint64_t index) { return splitmix64(seed + index); }

EnsembleProcess generate_ensemble(const GeneratorSpec& spec) {
    EnsembleProcess e;
    e.spec = spec;
    e.scale = effective_scale(spec);
    const GridIndex n = steps_of(spec);
    if (spec.kind == Kind::DeterministicDrift) {
        e.innovations.push_back({});
        e.values.push_back(path_values(spec, e.scale, {}));
        e.prob_num.push_back(1);
        e.prob_exp.push_back(0);
        return e;
    }
    std::size_t count = 0;
    int exp = 0;
    if (spec.mode == Mode::ExactTree) {
        count = std::size_t{1} << n;
        exp = n;
    } else {
        count = spec.paths;
        exp = std::countr_zero(spec.paths);
    }
    e.innovations.resize(count);
    e.values.resize(count);
    e.prob_num.assign(count, 1);
    e.prob_exp.assign(count, exp);
    for (std::size_t i = 0; i < count; ++i) {
        std::vector<int> xi(n);
        if (spec.mode == Mode::ExactTree) {
            for (GridIndex j = 0; j < n; ++j) xi[j] = ((i >> (n - 1 - j)) & 1U) ? -1 : 1;
        } else {
            std::mt19937_64 rng(path_seed(spec.seed, i));
            for (GridIndex j = 0; j < n; ++j) xi[j] = (rng() >> 63) ? -1 : 1;
        }
        e.values[i] = path_values(spec, e.scale, xi);
        e.innovations[i] = std::move(xi);
    }
    return e;
}

std::vector<std::vector<double>> compensator_oracle(const EnsembleProcess& e, int n) {
    std::vector<std::vector<double>> out;
    out.reserve(e.size());
    for (std::size_t i = 0; i < e.size(); ++i) {
        out.push_back(compensator_increments(e.spec, e.scale, e.innovations[i], n));
    }
    return out;
}

std::pair<SpacePtr, AdaptedProcess> ensemble_space(const EnsembleProcess& e) {
    std::vector<double> p(e.size());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = e.probability(i);
    SpacePtr space = space_from_innovations(e.spec.level, std::move(p), e.innovations);
    const std::size_t steps = e.values.empty() ? 0 : e.values.front().size();
    std::vector<std::vector<double>> v(steps, std::vector<double>(e.size()));
    for (std::size_t i = 0; i < e.size(); ++i) {
        for (std::size_t t = 0; t < steps; ++t) v[t][i] = e.values[i][t];
    }
    AdaptedProcess process(space, e.spec.level, std::move(v));
    return {std::move(space), std::move(process)};
}

}  // namespace semimart
