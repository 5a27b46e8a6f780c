#include <gtest/gtest.h>

#include <random>

#include "semimart/errors.hpp"
#include "semimart/filtered_space.hpp"
#include "support.hpp"

using namespace semimart;
using semimart::testing::brute_cond_exp;
using semimart::testing::canonical_tree;

TEST(BinaryTree, LevelOneHasFourQuarterAtoms) {
    auto [space, s] = canonical_tree();
    ASSERT_EQ(space->atom_count(), 4u);
    for (std::size_t a = 0; a < 4; ++a) EXPECT_DOUBLE_EQ(space->probability(a), 0.25);
    const std::vector<std::vector<double>> paths = {{0, .5, 1}, {0, .5, 0}, {0, -.5, 0}, {0, -.5, -1}};
    for (std::size_t a = 0; a < 4; ++a) {
        for (GridIndex t = 0; t <= 2; ++t) EXPECT_DOUBLE_EQ(s.at(t, a), paths[a][t]);
    }
}

TEST(BinaryTree, LevelZeroHasOneStep) {
    auto [space, s] = build_binary_tree(0, [](std::span<const int>) { return 3.0; });
    EXPECT_EQ(space->atom_count(), 2u);
    EXPECT_DOUBLE_EQ(space->probability(0), 0.5);
    EXPECT_EQ(space->grid().times(), (std::vector<double>{0.0, 1.0}));
}

TEST(BinaryTree, ZeroMapGivesAdaptedZeroProcess) {
    auto [space, s] = build_binary_tree(2, [](std::span<const int>) { return 0.0; });
    EXPECT_EQ(space->atom_count(), 16u);
    EXPECT_EQ(s.sup_norm(), 0.0);
}

TEST(BinaryTree, LevelFiveIsRefused) {
    try {
        build_binary_tree(5, [](std::span<const int>) { return 0.0; });
        FAIL() << "expected ResourceLimitError";
    } catch (const ResourceLimitError& e) {
        EXPECT_NE(std::string(e.what()).find("2^32"), std::string::npos);
    }
}

TEST(FilteredSpace, RejectsBadProbabilities) {
    EXPECT_THROW(FilteredSpace({0.5, 0.4}, 0, {{0, 0}, {0, 1}}), InvariantError);
    EXPECT_THROW(FilteredSpace({1.0, 0.0}, 0, {{0, 0}, {0, 1}}), InvariantError);
}

TEST(FilteredSpace, RejectsNonRefiningPartitions) {
    // Atoms 0 and 1 share a cell at t = 1 but not at t = 0.
    EXPECT_THROW(FilteredSpace({.25, .25, .25, .25}, 1, {{0, 1, 1, 1}, {0, 0, 1, 1}, {0, 1, 2, 3}}),
                 InvariantError);
}

TEST(AdaptedProcess, RejectsNonAdaptedValues) {
    auto [space, s] = canonical_tree();
    EXPECT_THROW(AdaptedProcess(space, 1, {{0, 0, 0, 1}, {0, 0, 0, 0}, {0, 0, 0, 0}}), InvariantError);
}

TEST(ConditionalExpectation, LevelOneExample) {
    auto [space, s] = canonical_tree();
    const auto e = conditional_expectation(*space, s.at(2), 1);
    EXPECT_EQ(e, (std::vector<double>{.5, .5, -.5, -.5}));
}

TEST(ConditionalExpectation, TrivialPartitionGivesMean) {
    auto [space, s] = canonical_tree();
    const std::vector<double> x = {1, 2, 3, 10};
    for (double v : conditional_expectation(*space, x, 0)) EXPECT_DOUBLE_EQ(v, 4.0);
}

TEST(ConditionalExpectation, ConstantsAreFixed) {
    auto [space, s] = build_binary_tree(2, [](std::span<const int>) { return 0.0; });
    const std::vector<double> c(space->atom_count(), 2.5);
    for (GridIndex t = 0; t <= 4; ++t) EXPECT_EQ(conditional_expectation(*space, c, t), c);
}

TEST(ConditionalExpectation, PropertiesOnRandomVariables) {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> nd;
    auto [space, s] = build_binary_tree(3, [](std::span<const int>) { return 0.0; });
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> x(space->atom_count());
        for (double& v : x) v = nd(rng);
        const double ex = expectation(*space, x);
        for (GridIndex t = 0; t <= space->last_index(); ++t) {
            const auto et = conditional_expectation(*space, x, t);
            const auto oracle = brute_cond_exp(x, t);
            const auto twice = conditional_expectation(*space, et, t);
            EXPECT_NEAR(expectation(*space, et), ex, 1e-12);
            EXPECT_TRUE(is_measurable(*space, et, t));
            for (std::size_t a = 0; a < x.size(); ++a) {
                EXPECT_NEAR(et[a], oracle[a], 1e-12);
                EXPECT_NEAR(twice[a], et[a], 1e-12);
            }
            for (GridIndex u = 0; u <= t; ++u) {
                const auto tower = conditional_expectation(*space, et, u);
                const auto direct = conditional_expectation(*space, x, u);
                for (std::size_t a = 0; a < x.size(); ++a) EXPECT_NEAR(tower[a], direct[a], 1e-12);
            }
        }
    }
}

TEST(StoppingTime, ExamplesOnLevelOneTree) {
    auto [space, s] = canonical_tree();
    EXPECT_TRUE(check_stopping_time(StoppingTime::never(space)));
    EXPECT_TRUE(check_stopping_time(StoppingTime::constant(space, 1)));
    // tau = 1/2 iff xi_2 = +1: looks into the future.
    EXPECT_FALSE(check_stopping_time(StoppingTime(space, {1, kNever, 1, kNever})));
    // tau = 1/2 iff xi_1 = +1 is fine.
    EXPECT_TRUE(check_stopping_time(StoppingTime(space, {1, 1, kNever, kNever})));
}

TEST(StopProcess, Examples) {
    auto [space, s] = canonical_tree();
    const auto same = stop_process(s, StoppingTime::never(space));
    EXPECT_EQ(same.values(), s.values());
    const auto frozen = stop_process(s, StoppingTime::constant(space, 0));
    for (const auto& slice : frozen.values()) EXPECT_EQ(slice, std::vector<double>(4, 0.0));

    const auto st = stop_process(s, StoppingTime(space, {1, 1, kNever, kNever}));
    const std::vector<std::vector<double>> paths = {{0, .5, .5}, {0, .5, .5}, {0, -.5, 0}, {0, -.5, -1}};
    for (std::size_t a = 0; a < 4; ++a) {
        for (GridIndex t = 0; t <= 2; ++t) EXPECT_DOUBLE_EQ(st.at(t, a), paths[a][t]);
    }
}

TEST(StopProcess, RejectsNonStoppingTimes) {
    auto [space, s] = canonical_tree();
    EXPECT_THROW(stop_process(s, StoppingTime(space, {1, kNever, 1, kNever})), PreconditionError);
}

TEST(SpaceFromInnovations, MatchesBinaryTreeCells) {
    auto [tree, s] = build_binary_tree(2, [](std::span<const int>) { return 0.0; });
    std::vector<std::vector<int>> inn;
    for (std::size_t a = 0; a < 16; ++a) {
        std::vector<int> xi(4);
        for (int j = 0; j < 4; ++j) xi[j] = ((a >> (3 - j)) & 1U) ? -1 : 1;
        inn.push_back(xi);
    }
    const auto sp = space_from_innovations(2, std::vector<double>(16, 1.0 / 16), inn);
    for (GridIndex t = 0; t <= 4; ++t) {
        for (std::size_t a = 0; a < 16; ++a) EXPECT_EQ(sp->cell_of(t, a), tree->cell_of(t, a));
    }
}
