#pragma once

// Convex-combination extraction for bounded sequences in a finite L2 space:
// g_n in conv(f_n, f_{n+1}, ...) converging in L2.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "semimart/filtered_space.hpp"

namespace semimart {

struct ConvexEntry {
    std::size_t start = 0;       // index of the first element used
    std::vector<double> weights; // weights on f_start, f_start+1, ...
};

struct KomlosConfig {
    std::size_t window = 16;
    double tol = 1e-8;
    int max_iterations = 1000;
};

struct KomlosResult {
    std::vector<ConvexEntry> weights;  // one entry per sequence index n
    std::vector<double> limit;
    std::vector<std::size_t> emitted;  // indices n with ||g_n - limit|| <= tol
    std::vector<double> g_distance;    // ||g_n - limit|| per n
    std::vector<double> hull_distance; // dist(limit, window hull of n) per n
    std::vector<std::string> log;
};

// Min-norm point of conv(points) under <x, y> = sum_a p_a x_a y_a, as simplex
// weights. Throws ConvergenceError past `max_iterations`.
std::vector<double> min_norm_weights(const std::vector<std::span<const double>>& points,
                                     std::span<const double> prob, int max_iterations = 1000);

// seq[n] is f_n; prob supplies the L2 weights. Needs at least 3 elements.
KomlosResult extract_convex(const std::vector<std::vector<double>>& seq, std::span<const double> prob,
                            const KomlosConfig& cfg = {});

KomlosResult extract_convex(const std::vector<RandomVariable>& seq, const FilteredSpace& space,
                            const KomlosConfig& cfg = {});

struct KomlosMultiResult {
    KomlosResult combined;  // weights shared by every sequence
    std::vector<std::vector<double>> limits;
};

// seqs[m][n] is f^m_n; every sequence must have the same length and each
// element the same dimension as prob.
KomlosMultiResult extract_convex_multi(const std::vector<std::vector<std::vector<double>>>& seqs,
                                       std::span<const double> prob, const KomlosConfig& cfg = {});

std::vector<double> apply_weights(const std::vector<std::vector<double>>& seq, const ConvexEntry& e);

// Weighted L2 norm.
double l2_norm(std::span<const double> x, std::span<const double> prob);

}  // namespace semimart
