#include "semimart/komlos.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "semimart/errors.hpp"

namespace semimart {

namespace {

double dot(std::span<const double> x, std::span<const double> y, std::span<const double> p) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += p[i] * x[i] * y[i];
    return acc;
}

// Wolfe's minimum-norm-point algorithm working on the Gram matrix only.
Eigen::VectorXd wolfe(const Eigen::MatrixXd& g, int max_iterations) {
    const Eigen::Index k = g.rows();
    Eigen::VectorXd lambda = Eigen::VectorXd::Zero(k);
    if (k == 0) throw ParameterError("min-norm point of an empty set");
    const double scale = std::max(g.diagonal().maxCoeff(), 1e-300);
    const double gap_tol = 1e-13 * scale;

    Eigen::Index first = 0;
    g.diagonal().minCoeff(&first);
    std::vector<Eigen::Index> corral{first};
    lambda(first) = 1.0;

    for (int it = 0; it < max_iterations; ++it) {
        const Eigen::VectorXd gl = g * lambda;
        const double xx = lambda.dot(gl);
        Eigen::Index j = 0;
        const double best = gl.minCoeff(&j);
        if (xx - best <= gap_tol) return lambda;
        if (std::find(corral.begin(), corral.end(), j) != corral.end()) return lambda;
        corral.push_back(j);

        while (true) {
            if (++it >= max_iterations) break;
            const auto m = static_cast<Eigen::Index>(corral.size());
            Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(m + 1, m + 1);
            for (Eigen::Index r = 0; r < m; ++r) {
                for (Eigen::Index c = 0; c < m; ++c) kkt(r, c) = g(corral[r], corral[c]) / scale;
                kkt(r, m) = 1.0;
                kkt(m, r) = 1.0;
            }
            Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m + 1);
            rhs(m) = 1.0;
            const Eigen::VectorXd sol = kkt.completeOrthogonalDecomposition().solve(rhs);
            const Eigen::VectorXd mu = sol.head(m) / sol.head(m).sum();

            if ((mu.array() > 1e-14).all()) {
                lambda.setZero();
                for (Eigen::Index r = 0; r < m; ++r) lambda(corral[r]) = mu(r);
                break;
            }
            double theta = 1.0;
            for (Eigen::Index r = 0; r < m; ++r) {
                if (mu(r) <= 1e-14) {
                    const double l = lambda(corral[r]);
                    const double denom = l - mu(r);
                    if (denom > 0.0) theta = std::min(theta, l / denom);
                }
            }
            for (Eigen::Index r = 0; r < m; ++r) {
                lambda(corral[r]) += theta * (mu(r) - lambda(corral[r]));
            }
            std::vector<Eigen::Index> kept;
            for (Eigen::Index idx : corral) {
                if (lambda(idx) > 1e-14) kept.push_back(idx);
                else lambda(idx) = 0.0;
            }
            if (kept.empty()) {
                kept.push_back(corral.back());
                lambda(corral.back()) = 1.0;
            }
            corral = std::move(kept);
            lambda /= lambda.sum();
        }
    }
    throw ConvergenceError("min-norm point solver exceeded " + std::to_string(max_iterations) +
                           " iterations");
}

std::vector<double> combine(const std::vector<std::vector<double>>& seq, std::size_t start,
                            const std::vector<double>& w) {
    std::vector<double> out(seq[start].size(), 0.0);
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (w[i] == 0.0) continue;
        const auto& f = seq[start + i];
        for (std::size_t d = 0; d < out.size(); ++d) out[d] += w[i] * f[d];
    }
    return out;
}

double distance(std::span<const double> x, std::span<const double> y, std::span<const double> p) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += p[i] * (x[i] - y[i]) * (x[i] - y[i]);
    return std::sqrt(acc);
}

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(4);
    os << x;
    return os.str();
}

}  // namespace

double l2_norm(std::span<const double> x, std::span<const double> prob) {
    return std::sqrt(dot(x, x, prob));
}

std::vector<double> min_norm_weights(const std::vector<std::span<const double>>& points,
                                     std::span<const double> prob, int max_iterations) {
    const auto k = static_cast<Eigen::Index>(points.size());
    Eigen::MatrixXd g(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) g(i, j) = g(j, i) = dot(points[i], points[j], prob);
    }
    const Eigen::VectorXd l = wolfe(g, max_iterations);
    return std::vector<double>(l.data(), l.data() + l.size());
}

std::vector<double> apply_weights(const std::vector<std::vector<double>>& seq, const ConvexEntry& e) {
    if (e.start + e.weights.size() > seq.size()) throw ParameterError("weights run past the sequence");
    return combine(seq, e.start, e.weights);
}

KomlosResult extract_convex(const std::vector<std::vector<double>>& seq, std::span<const double> prob,
                            const KomlosConfig& cfg) {
    const std::size_t k = seq.size();
    if (k < 3) throw ParameterError("extract_convex needs a prefix of at least 3 elements");
    if (cfg.window < 2) throw ParameterError("window must hold at least 2 elements");
    if (!(cfg.tol > 0.0)) throw ParameterError("tol must be positive");
    for (const auto& f : seq) {
        if (f.size() != prob.size()) throw StructuralError("sequence element has the wrong dimension");
        for (double x : f) {
            if (!std::isfinite(x)) throw ParameterError("sequence element is not finite");
        }
    }

    KomlosResult r;
    double sup = 0.0;
    for (const auto& f : seq) sup = std::max(sup, l2_norm(f, prob));
    r.log.push_back("prefix length " + std::to_string(k) + ", window " + std::to_string(cfg.window) +
                    ", sup ||f_n|| = " + fmt(sup));

    // Gram matrices of the sequence and of its offsets from the limit; every
    // window problem is a principal block.
    auto gram_of = [&](const std::vector<std::vector<double>>& v) {
        Eigen::MatrixXd gm(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
        for (std::size_t i = 0; i < k; ++i) {
            for (std::size_t j = 0; j <= i; ++j) {
                gm(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    gm(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = dot(v[i], v[j], prob);
            }
        }
        return gm;
    };
    auto block = [&](const Eigen::MatrixXd& gm, std::size_t n, std::size_t end) {
        const auto len = static_cast<Eigen::Index>(end - n);
        return Eigen::MatrixXd(gm.block(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n), len, len));
    };
    const Eigen::MatrixXd gram = gram_of(seq);

    std::vector<std::vector<double>> g(k);
    r.weights.resize(k);
    for (std::size_t n = 0; n < k; ++n) {
        const std::size_t end = std::min(k, n + cfg.window);
        const Eigen::VectorXd l = wolfe(block(gram, n, end), cfg.max_iterations);
        std::vector<double> w(l.data(), l.data() + l.size());
        g[n] = combine(seq, n, w);
        // Prefer a single element when one already sits within tol/4.
        for (std::size_t i = n; i < end; ++i) {
            if (distance(seq[i], g[n], prob) <= cfg.tol / 4.0) {
                std::fill(w.begin(), w.end(), 0.0);
                w[i - n] = 1.0;
                g[n] = seq[i];
                break;
            }
        }
        r.weights[n] = ConvexEntry{n, std::move(w)};
    }

    r.limit = g[k - 2];
    for (std::size_t n = 0; n < k; ++n) r.g_distance.push_back(distance(g[n], r.limit, prob));

    std::vector<std::size_t> emitted;
    if (r.g_distance[k - 1] <= cfg.tol) emitted.push_back(k - 1);
    for (std::size_t n = k - 1; n-- > 0;) {
        if (r.g_distance[n] > cfg.tol) break;
        emitted.push_back(n);
    }
    std::sort(emitted.begin(), emitted.end());
    r.emitted = std::move(emitted);

    std::vector<std::vector<double>> diffs(k, std::vector<double>(prob.size()));
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t c = 0; c < prob.size(); ++c) diffs[i][c] = seq[i][c] - r.limit[c];
    }
    const Eigen::MatrixXd dgram = gram_of(diffs);
    for (std::size_t n = 0; n < k; ++n) {
        const std::size_t end = std::min(k, n + cfg.window);
        const Eigen::MatrixXd b = block(dgram, n, end);
        const Eigen::VectorXd l = wolfe(b, cfg.max_iterations);
        r.hull_distance.push_back(std::sqrt(std::max(0.0, l.dot(b * l))));
    }

    std::ostringstream os;
    os << "limit from window starting at " << (k - 2) << "; emitted " << r.emitted.size()
       << " indices from " << r.emitted.front() << "; ||g_0 - limit|| = " << fmt(r.g_distance.front());
    r.log.push_back(os.str());
    return r;
}

KomlosResult extract_convex(const std::vector<RandomVariable>& seq, const FilteredSpace& space,
                            const KomlosConfig& cfg) {
    return extract_convex(seq, space.probabilities(), cfg);
}

KomlosMultiResult extract_convex_multi(const std::vector<std::vector<std::vector<double>>>& seqs,
                                       std::span<const double> prob, const KomlosConfig& cfg) {
    if (seqs.empty()) throw ParameterError("no sequences given");
    const std::size_t k = seqs.front().size();
    for (const auto& s : seqs) {
        if (s.size() != k) throw ParameterError("sequences must have equal length");
    }
    const std::size_t m = seqs.size();
    const std::size_t dim = prob.size();
    std::vector<double> stacked_prob(m * dim);
    for (std::size_t j = 0; j < m; ++j) std::copy(prob.begin(), prob.end(), stacked_prob.begin() + j * dim);
    std::vector<std::vector<double>> stacked(k, std::vector<double>(m * dim));
    for (std::size_t n = 0; n < k; ++n) {
        for (std::size_t j = 0; j < m; ++j) {
            if (seqs[j][n].size() != dim) throw StructuralError("sequence element has the wrong dimension");
            std::copy(seqs[j][n].begin(), seqs[j][n].end(), stacked[n].begin() + j * dim);
        }
    }
    KomlosMultiResult out;
    out.combined = extract_convex(stacked, stacked_prob, cfg);
    for (std::size_t j = 0; j < m; ++j) {
        out.limits.emplace_back(out.combined.limit.begin() + j * dim,
                                out.combined.limit.begin() + (j + 1) * dim);
    }
    return out;
}

}  // namespace semimart
