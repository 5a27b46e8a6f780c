#pragma once

// Shared fixtures and brute-force oracles for the test binaries. The oracles
// work on full binary trees directly from atom indices and never touch the
// partition machinery of the library.

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <vector>

#include "semimart/filtered_space.hpp"
#include "semimart/generators.hpp"

namespace semimart::testing {

// The canonical level-1 tree: S = (0, xi1/2, (xi1 + xi2)/2).
inline std::pair<SpacePtr, AdaptedProcess> canonical_tree() {
    return build_binary_tree(1, [](std::span<const int> p) {
        double s = 0.0;
        for (int x : p) s += x;
        return s / 2.0;
    });
}

// Tree with i.i.d. uniform values per node in [-bound, bound], S_0 = 0.
inline std::pair<SpacePtr, AdaptedProcess> random_tree(int level, std::mt19937_64& rng, double bound = 1.0) {
    std::uniform_real_distribution<double> u(-bound, bound);
    std::map<std::vector<int>, double> node;
    return build_binary_tree(level, [&](std::span<const int> p) {
        if (p.empty()) return 0.0;
        std::vector<int> key(p.begin(), p.end());
        auto it = node.find(key);
        if (it == node.end()) it = node.emplace(key, u(rng)).first;
        return it->second;
    });
}

inline AdaptedProcess add_drift(const AdaptedProcess& s, double mu) {
    std::vector<std::vector<double>> v = s.values();
    for (std::size_t k = 0; k < v.size(); ++k) {
        for (double& x : v[k]) x += mu * static_cast<double>(k) / static_cast<double>(v.size() - 1);
    }
    return AdaptedProcess(s.space(), s.level(), std::move(v));
}

// Number of steps of a full tree with `atoms` atoms.
inline int tree_steps(std::size_t atoms) {
    int n = 0;
    while ((std::size_t{1} << n) < atoms) ++n;
    return n;
}

// E[x | first t innovations] on a uniform full tree: average over the block of
// atoms sharing the top t bits.
inline std::vector<double> brute_cond_exp(const std::vector<double>& x, int t) {
    const int steps = tree_steps(x.size());
    const std::size_t block = std::size_t{1} << (steps - t);
    std::vector<double> out(x.size());
    for (std::size_t start = 0; start < x.size(); start += block) {
        double acc = 0.0;
        for (std::size_t a = start; a < start + block; ++a) acc += x[a];
        for (std::size_t a = start; a < start + block; ++a) out[a] = acc / static_cast<double>(block);
    }
    return out;
}

struct BruteDoob {
    std::vector<std::vector<double>> m;  // [k][atom], level-n times
    std::vector<std::vector<double>> a;
    std::vector<double> qv;
    std::vector<double> tv;
};

// Level-n Doob decomposition of a finest-level tree process by block averages.
inline BruteDoob brute_doob(const AdaptedProcess& s, int n) {
    const int steps = 1 << s.level();
    const int stride = steps >> n;
    const std::size_t atoms = s.space()->atom_count();
    BruteDoob d;
    d.m.assign((1 << n) + 1, std::vector<double>(atoms, 0.0));
    d.a = d.m;
    d.qv.assign(atoms, 0.0);
    d.tv.assign(atoms, 0.0);
    for (std::size_t w = 0; w < atoms; ++w) d.m[0][w] = s.at(0, w);
    for (int k = 1; k <= (1 << n); ++k) {
        std::vector<double> inc(atoms);
        for (std::size_t w = 0; w < atoms; ++w) inc[w] = s.at(k * stride, w) - s.at((k - 1) * stride, w);
        const auto da = brute_cond_exp(inc, (k - 1) * stride);
        for (std::size_t w = 0; w < atoms; ++w) {
            d.a[k][w] = d.a[k - 1][w] + da[w];
            d.m[k][w] = d.m[k - 1][w] + inc[w] - da[w];
            d.qv[w] += inc[w] * inc[w];
            d.tv[w] += std::abs(da[w]);
        }
    }
    return d;
}

// Owning copy, safe to iterate over a temporary stopping time.
inline std::vector<GridIndex> values_of(const StoppingTime& t) { return {t.values().begin(), t.values().end()}; }

inline double mean(const std::vector<double>& x) {
    double acc = 0.0;
    for (double v : x) acc += v;
    return acc / static_cast<double>(x.size());
}

// Reference values for the Riemann-Liouville kind (H = .75), each level-n
// generator at the common scale 1/sup of the level-4 generator. Levels 1..4
// are exact enumerations, 5..8 Monte Carlo with 20000 paths (independent
// Python implementation).
inline constexpr double kRlScale = 0.2537281820521691;
inline const std::vector<double> kRlTvMean = {0.03089714342199945, 0.05992465931024099, 0.09330191878902024,
                                              0.1302352208610638,  0.17141,             0.21723,
                                              0.27065,             0.33103};
inline const std::vector<double> kRlQvMean = {0.054287106928724446, 0.043460289935045, 0.033349170872233505,
                                              0.024831248977114005};

}  // namespace semimart::testing
