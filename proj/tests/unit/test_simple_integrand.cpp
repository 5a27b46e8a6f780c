#include <gtest/gtest.h>

#include <random>

#include "semimart/errors.hpp"
#include "semimart/simple_integrand.hpp"
#include "support.hpp"

using namespace semimart;
using semimart::testing::canonical_tree;

namespace {

// xi_1 on (1/2, 1], zero before.
SimpleIntegrand xi1_late(const SpacePtr& space, double c = 1.0) {
    return SimpleIntegrand::on_grid(space, 1, {RandomVariable(4, 0.0), {c, c, -c, -c}});
}

std::pair<SpacePtr, AdaptedProcess> linear_drift(int level, double slope) {
    SpacePtr space = deterministic_space(level);
    std::vector<std::vector<double>> v;
    for (GridIndex k = 0; k <= space->last_index(); ++k) v.push_back({slope * space->grid().time(k)});
    AdaptedProcess p(space, level, std::move(v));
    return {space, p};
}

}  // namespace

TEST(Integrate, ConstantOneTelescopes) {
    auto [space, s] = canonical_tree();
    const auto g = integrate(SimpleIntegrand::constant(space, 1.0), s, 2);
    for (std::size_t a = 0; a < 4; ++a) EXPECT_DOUBLE_EQ(g[a], s.at(2, a) - s.at(0, a));
}

TEST(Integrate, LevelOneSignExample) {
    auto [space, s] = canonical_tree();
    EXPECT_EQ(integrate(xi1_late(space), s, 2), (std::vector<double>{.5, -.5, -.5, .5}));
}

TEST(Integrate, ZeroIntegrandGivesZero) {
    auto [space, s] = canonical_tree();
    const auto h = SimpleIntegrand::zero(space);
    for (GridIndex t = 0; t <= 2; ++t) EXPECT_EQ(integrate(h, s, t), RandomVariable(4, 0.0));
}

TEST(Integrate, RejectsAnticipatingWeights) {
    auto [space, s] = canonical_tree();
    // Position on (0, 1/2] depends on xi_1.
    EXPECT_THROW(SimpleIntegrand::on_grid(space, 1, {{1, 1, -1, -1}, RandomVariable(4, 0.0)}), InvariantError);
}

TEST(VrMetric, Examples) {
    auto [space, s] = canonical_tree();
    EXPECT_DOUBLE_EQ(vr_metric(SimpleIntegrand::constant(space, 1.0), s), 1.0);
    EXPECT_DOUBLE_EQ(vr_metric(SimpleIntegrand::zero(space), s), 0.0);
    auto [dspace, d] = linear_drift(2, 1.0);
    EXPECT_DOUBLE_EQ(vr_metric(SimpleIntegrand::constant(dspace, 2.0), d), 0.0);
}

TEST(LiMetric, Examples) {
    auto [space, s] = canonical_tree();
    EXPECT_DOUBLE_EQ(li_metric(SimpleIntegrand::constant(space, 1.0)), 1.0);
    EXPECT_DOUBLE_EQ(li_metric(SimpleIntegrand::on_grid(space, 1, {RandomVariable(4, -.5), RandomVariable(4, .25)})),
                     0.5);
    EXPECT_DOUBLE_EQ(li_metric(SimpleIntegrand::zero(space)), 0.0);
}

TEST(FlStatistic, Examples) {
    auto [space, s] = canonical_tree();
    StrategySequence zeros;
    for (int i = 0; i < 3; ++i) zeros.elements.push_back(SimpleIntegrand::zero(space));
    for (double p : fl_statistic(zeros, s, 0.1)) EXPECT_EQ(p, 0.0);

    StrategySequence one;
    one.elements.push_back(SimpleIntegrand::constant(space, 1.0));
    EXPECT_DOUBLE_EQ(fl_statistic(one, s, 0.25).front(), 0.25);

    auto [dspace, d] = linear_drift(1, 1.0);
    StrategySequence drift;
    drift.elements.push_back(SimpleIntegrand::constant(dspace, 1.0));
    EXPECT_DOUBLE_EQ(fl_statistic(drift, d, 0.5).front(), 1.0);

    EXPECT_THROW(fl_statistic(one, s, 0.0), ParameterError);
}

TEST(StepIntegral, Examples) {
    const SampledFunction g({0, .5, 1}, {0, 1, 0});
    const StepFunction one({0, 1}, {1});
    EXPECT_DOUBLE_EQ(step_integral(one, g, 1.0), g(1.0) - g(0.0));
    EXPECT_DOUBLE_EQ(step_integral(one, g, 0.5), 1.0);

    const StepFunction f({0, .5, 1}, {1, 2});
    EXPECT_DOUBLE_EQ(step_integral(f, g, 0.5), 1.0);
    EXPECT_DOUBLE_EQ(step_integral(f, g, 1.0), -1.0);

    const StepFunction zero({0, 1}, {0});
    EXPECT_DOUBLE_EQ(step_integral(zero, g, 1.0), 0.0);
    EXPECT_THROW(g(0.3), ParameterError);
}

TEST(SumByParts, HandExample) {
    const SampledFunction g({0, .5, 1}, {0, 1, 0});
    const StepFunction f({0, .5, 1}, {1, 2});
    const auto b = sum_by_parts_bound(f, g, {0, .5, 1});
    EXPECT_DOUBLE_EQ(b.lhs, 3.0);
    EXPECT_DOUBLE_EQ(b.rhs, 6.0);
}

TEST(SumByParts, ConstantFAndConstantG) {
    const SampledFunction g({0, .25, .5, .75, 1}, {0, .3, -.2, .4, .1});
    const StepFunction c({0, 1}, {-1.5});
    const auto b = sum_by_parts_bound(c, g, {0, .25, .5, .75, 1});
    EXPECT_NEAR(b.lhs, 1.5 * (.3 + .5 + .6 + .3), 1e-12);
    EXPECT_NEAR(b.lhs, b.rhs, 1e-12);

    const SampledFunction flat({0, .5, 1}, {2, 2, 2});
    const auto z = sum_by_parts_bound(StepFunction({0, .5, 1}, {1, -3}), flat, {0, .5, 1});
    EXPECT_EQ(z.lhs, 0.0);
    EXPECT_GE(z.rhs, 0.0);
}

TEST(SumByParts, RandomTriples) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::uniform_int_distribution<int> pieces(0, 3);
    for (int trial = 0; trial < 300; ++trial) {
        const int m = 8;
        std::vector<double> times;
        std::vector<double> gv;
        for (int i = 0; i <= m; ++i) {
            times.push_back(static_cast<double>(i) / m);
            gv.push_back(u(rng));
        }
        const int k = 1 << pieces(rng);  // breakpoints on the sampling grid
        std::vector<double> br{0.0};
        std::vector<double> fv;
        for (int i = 1; i <= k; ++i) {
            br.push_back(static_cast<double>(i) / k);
            fv.push_back(u(rng));
        }
        const auto b = sum_by_parts_bound(StepFunction(br, fv), SampledFunction(times, gv), times);
        EXPECT_LE(b.lhs, b.rhs + 1e-10);
    }
}

TEST(ContinuityProbe, Examples) {
    auto [space, s] = canonical_tree();
    StrategySequence seq;
    for (int k = 1; k <= 6; ++k) seq.elements.push_back(xi1_late(space, 1.0 / k));
    const auto r = continuity_probe(s, seq, 0.2);
    EXPECT_EQ(r.tail, (std::vector<double>{1, 1, 0, 0, 0, 0}));
    EXPECT_TRUE(r.warning.empty());

    StrategySequence scaled;
    for (int k = 1; k <= 4; ++k) scaled.elements.push_back(SimpleIntegrand::constant(space, 1.0 / k));
    const auto q = continuity_probe(s, scaled, 0.3);
    EXPECT_EQ(q.tail, (std::vector<double>{.5, .5, .5, 0}));

    StrategySequence zeros;
    zeros.elements.push_back(SimpleIntegrand::zero(space));
    zeros.elements.push_back(SimpleIntegrand::zero(space));
    const auto z = continuity_probe(s, zeros, 0.1);
    EXPECT_EQ(z.tail, (std::vector<double>{0, 0}));
    EXPECT_FALSE(z.warning.empty());
}

TEST(IntegrateProperty, BilinearAndAdapted) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1, 1);
    auto [space, s] = semimart::testing::random_tree(2, rng);
    auto random_weights = [&] {
        std::vector<RandomVariable> w;
        for (GridIndex k = 0; k < 4; ++k) {
            RandomVariable f(space->atom_count());
            std::vector<double> per_cell(space->cell_count(k));
            for (double& x : per_cell) x = u(rng);
            for (std::size_t a = 0; a < f.size(); ++a) f[a] = per_cell[space->cell_of(k, a)];
            w.push_back(f);
        }
        return w;
    };
    for (int trial = 0; trial < 20; ++trial) {
        const auto w1 = random_weights();
        const auto w2 = random_weights();
        const double a = u(rng);
        const double b = u(rng);
        auto mix = w1;
        for (std::size_t k = 0; k < mix.size(); ++k) {
            for (std::size_t i = 0; i < mix[k].size(); ++i) mix[k][i] = a * w1[k][i] + b * w2[k][i];
        }
        const auto h1 = SimpleIntegrand::on_grid(space, 2, w1);
        const auto h2 = SimpleIntegrand::on_grid(space, 2, w2);
        const auto hm = SimpleIntegrand::on_grid(space, 2, mix);
        for (GridIndex t = 0; t <= 4; ++t) {
            const auto x1 = integrate(h1, s, t);
            const auto x2 = integrate(h2, s, t);
            const auto xm = integrate(hm, s, t);
            for (std::size_t i = 0; i < xm.size(); ++i) EXPECT_NEAR(xm[i], a * x1[i] + b * x2[i], 1e-12);
            EXPECT_TRUE(is_measurable(*space, xm, t));
        }
    }
}

TEST(IntegrateProperty, StoppingCompatibility) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-1, 1);
    auto [space, s] = semimart::testing::random_tree(2, rng);
    // tau = first k with S_k > 0.2.
    std::vector<GridIndex> tv(space->atom_count(), kNever);
    for (std::size_t a = 0; a < tv.size(); ++a) {
        for (GridIndex k = 0; k <= 4; ++k) {
            if (s.at(k, a) > 0.2) {
                tv[a] = k;
                break;
            }
        }
    }
    const StoppingTime tau(space, tv);
    ASSERT_TRUE(check_stopping_time(tau));
    std::vector<RandomVariable> w;
    for (GridIndex k = 0; k < 4; ++k) w.push_back(conditional_expectation(*space, s.at(4), k));
    const auto h = SimpleIntegrand::on_grid(space, 2, w);
    const auto stopped_s = stop_process(s, tau);
    const auto stopped_h = h.stopped(tau);
    for (GridIndex t = 0; t <= 4; ++t) {
        const auto lhs = integrate(h, stopped_s, t);
        const auto rhs = integrate(stopped_h, s, t);
        for (std::size_t a = 0; a < lhs.size(); ++a) EXPECT_NEAR(lhs[a], rhs[a], 1e-12);
    }
}

TEST(IntegralProcess, MatchesPointwiseIntegrals) {
    auto [space, s] = canonical_tree();
    const auto h = xi1_late(space);
    const auto p = integral_process(h, s);
    for (GridIndex t = 0; t <= 2; ++t) EXPECT_EQ(p.at(t).size(), 4u);
    for (GridIndex t = 0; t <= 2; ++t) {
        const auto x = integrate(h, s, t);
        for (std::size_t a = 0; a < 4; ++a) EXPECT_DOUBLE_EQ(p.at(t, a), x[a]);
    }
}
