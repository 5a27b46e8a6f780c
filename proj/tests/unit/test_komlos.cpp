#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "semimart/errors.hpp"
#include "semimart/komlos.hpp"

using namespace semimart;

namespace {

const std::vector<double> kProb = {0.25, 0.25, 0.25, 0.25};
const std::vector<double> kV = {1.0, -1.0, 1.0, -1.0};
const std::vector<double> kW = {1.0, 1.0, -1.0, -1.0};  // orthogonal to kV

std::vector<std::vector<double>> alternating(int k) {
    std::vector<std::vector<double>> seq;
    for (int n = 0; n < k; ++n) {
        auto f = kV;
        if (n % 2) {
            for (double& x : f) x = -x;
        }
        seq.push_back(f);
    }
    return seq;
}

std::vector<double> plus(const std::vector<double>& a, const std::vector<double>& b, double c) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + c * b[i];
    return out;
}

double dist(const std::vector<double>& a, const std::vector<double>& b) {
    return l2_norm(plus(a, b, -1.0), kProb);
}

void expect_valid_weights(const KomlosResult& r, std::size_t k, std::size_t window) {
    ASSERT_EQ(r.weights.size(), k);
    for (std::size_t n = 0; n < k; ++n) {
        const auto& e = r.weights[n];
        EXPECT_EQ(e.start, n);
        EXPECT_LE(e.weights.size(), window);
        EXPECT_LE(e.start + e.weights.size(), k);
        double sum = 0.0;
        for (double w : e.weights) {
            EXPECT_GE(w, 0.0);
            sum += w;
        }
        EXPECT_NEAR(sum, 1.0, 1e-12);
    }
}

}  // namespace

TEST(MinNorm, TwoPointsAndSimplex) {
    const std::vector<double> a = {1, 0};
    const std::vector<double> b = {0, 1};
    const std::vector<double> p = {1, 1};
    const auto w = min_norm_weights({a, b}, p);
    EXPECT_NEAR(w[0], 0.5, 1e-12);
    EXPECT_NEAR(w[1], 0.5, 1e-12);
    const std::vector<double> c = {2, 2};
    const auto w2 = min_norm_weights({a, b, c}, p);
    EXPECT_NEAR(w2[2], 0.0, 1e-12);
}

TEST(ExtractConvex, ConstantSequence) {
    const std::vector<std::vector<double>> seq(6, kV);
    const auto r = extract_convex(seq, kProb);
    EXPECT_LE(dist(r.limit, kV), 1e-12);
    expect_valid_weights(r, 6, 16);
    EXPECT_EQ(r.emitted.front(), 0u);
}

TEST(ExtractConvex, AlternatingSequenceHasZeroLimit) {
    const auto seq = alternating(10);
    const auto r = extract_convex(seq, kProb);
    EXPECT_LE(l2_norm(r.limit, kProb), 1e-8);
    expect_valid_weights(r, 10, 16);
    for (std::size_t n : r.emitted) {
        EXPECT_LE(l2_norm(apply_weights(seq, r.weights[n]), kProb), 1e-8);
    }
    // The pair midpoint is a minimiser.
    const auto mid = apply_weights(seq, ConvexEntry{3, {0.5, 0.5}});
    EXPECT_LE(l2_norm(mid, kProb), 1e-15);
}

TEST(ExtractConvex, PerturbedSubsequence) {
    std::vector<std::vector<double>> seq;
    for (int k = 1; k <= 9; ++k) seq.push_back(plus(kV, kW, std::pow(10.0, -k)));
    const auto r = extract_convex(seq, kProb);
    EXPECT_LE(dist(r.limit, kV), 1e-8);
    expect_valid_weights(r, 9, 16);
    // Late windows collapse onto a single element.
    const auto& last = r.weights[r.emitted.back()];
    int ones = 0;
    for (double w : last.weights) ones += (w == 1.0);
    EXPECT_EQ(ones, 1);
}

TEST(ExtractConvex, ConsecutivePerturbedPrefixFollowsOneOverN) {
    std::vector<std::vector<double>> seq;
    for (int n = 1; n <= 40; ++n) seq.push_back(plus(kV, kW, 1.0 / n));
    const auto r = extract_convex(seq, kProb);
    // The last window holds f_39, f_40; the min-norm point is f_40.
    EXPECT_NEAR(dist(r.limit, kV), 1.0 / 40.0, 1e-9);
}

TEST(ExtractConvex, WeightsStayInsideTheWindow) {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<std::vector<double>> seq(25, std::vector<double>(4));
        for (auto& f : seq) {
            for (double& x : f) x = nd(rng);
        }
        KomlosConfig cfg;
        cfg.window = 5;
        cfg.tol = 1e6;
        const auto r = extract_convex(seq, kProb, cfg);
        expect_valid_weights(r, 25, 5);
        for (std::size_t n = 0; n < 25; ++n) {
            const auto g = apply_weights(seq, r.weights[n]);
            EXPECT_NEAR(dist(g, r.limit), r.g_distance[n], 1e-12);
        }
    }
}

TEST(ExtractConvex, HullDistanceMonotoneOnNestedWindows) {
    std::mt19937_64 rng(6);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<std::vector<double>> seq(12, std::vector<double>(4));
        for (auto& f : seq) {
            for (double& x : f) x = nd(rng);
        }
        const auto r = extract_convex(seq, kProb);
        for (std::size_t n = 1; n < r.hull_distance.size(); ++n) {
            // Up to the solver tolerance.
            EXPECT_GE(r.hull_distance[n] + 1e-8, r.hull_distance[n - 1]);
        }
    }
}

TEST(ExtractConvex, IdempotentOnConvergedOutput) {
    for (const auto& seq : {alternating(8), std::vector<std::vector<double>>(5, kW)}) {
        const auto r = extract_convex(seq, kProb);
        std::vector<std::vector<double>> g;
        for (std::size_t n : r.emitted) g.push_back(apply_weights(seq, r.weights[n]));
        while (g.size() < 3) g.push_back(g.back());
        const auto again = extract_convex(g, kProb);
        for (const auto& e : again.weights) {
            int ones = 0;
            for (double w : e.weights) ones += (w == 1.0);
            EXPECT_EQ(ones, 1);
        }
    }
}

TEST(ExtractConvex, Errors) {
    EXPECT_THROW(extract_convex(alternating(2), kProb), ParameterError);
    auto bad = alternating(4);
    bad[1][0] = std::nan("");
    EXPECT_THROW(extract_convex(bad, kProb), ParameterError);
}

TEST(ExtractConvexMulti, OppositeAlternatingPair) {
    const auto a = alternating(8);
    auto b = a;
    for (auto& f : b) {
        for (double& x : f) x = -x;
    }
    const auto r = extract_convex_multi({a, b}, kProb);
    ASSERT_EQ(r.limits.size(), 2u);
    for (const auto& l : r.limits) EXPECT_LE(l2_norm(l, kProb), 1e-8);
    // One schedule serves both sequences.
    for (std::size_t n : r.combined.emitted) {
        EXPECT_LE(l2_norm(apply_weights(a, r.combined.weights[n]), kProb), 1e-8);
        EXPECT_LE(l2_norm(apply_weights(b, r.combined.weights[n]), kProb), 1e-8);
    }
}

TEST(ExtractConvexMulti, ConstantsAndSingleSequence) {
    const std::vector<std::vector<double>> c1(4, kV);
    const std::vector<std::vector<double>> c2(4, kW);
    const auto r = extract_convex_multi({c1, c2}, kProb);
    EXPECT_LE(dist(r.limits[0], kV), 1e-12);
    EXPECT_LE(dist(r.limits[1], kW), 1e-12);

    std::mt19937_64 rng(1);
    std::normal_distribution<double> nd;
    std::vector<std::vector<double>> seq(9, std::vector<double>(4));
    for (auto& f : seq) {
        for (double& x : f) x = nd(rng);
    }
    const auto single = extract_convex(seq, kProb);
    const auto multi = extract_convex_multi({seq}, kProb);
    for (std::size_t n = 0; n < seq.size(); ++n) {
        ASSERT_EQ(single.weights[n].weights.size(), multi.combined.weights[n].weights.size());
        for (std::size_t i = 0; i < single.weights[n].weights.size(); ++i) {
            EXPECT_NEAR(single.weights[n].weights[i], multi.combined.weights[n].weights[i], 1e-12);
        }
    }
    EXPECT_LE(dist(single.limit, multi.limits[0]), 1e-12);
}

TEST(ExtractConvexMulti, RejectsRaggedInput) {
    EXPECT_THROW(extract_convex_multi({alternating(4), alternating(5)}, kProb), ParameterError);
}
