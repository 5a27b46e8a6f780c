#include "semimart/filtered_space.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>

#include "semimart/errors.hpp"

namespace semimart {

namespace {

bool close(double a, double b) {
    return std::abs(a - b) <= kIdentityTol * std::max(1.0, std::abs(a));
}

// Relabels cell ids so that they appear in increasing order of first use.
std::vector<int> renumber(const std::vector<int>& raw, std::size_t label_bound) {
    std::vector<int> map(label_bound, -1);
    std::vector<int> out(raw.size());
    int next = 0;
    for (std::size_t a = 0; a < raw.size(); ++a) {
        const int label = raw[a];
        if (map[label] < 0) map[label] = next++;
        out[a] = map[label];
    }
    return out;
}

}  // namespace

DyadicGrid::DyadicGrid(int level) : level_(level) {
    if (level < 0 || level > 24) {
        throw ParameterError("grid level must be in [0, 24], got " + std::to_string(level));
    }
}

std::vector<double> DyadicGrid::times() const {
    std::vector<double> out(size());
    for (GridIndex j = 0; j <= steps(); ++j) out[j] = time(j);
    return out;
}

FilteredSpace::FilteredSpace(std::vector<double> probabilities, int level,
                             std::vector<std::vector<int>> cell_of)
    : grid_(level), probabilities_(std::move(probabilities)) {
    const std::size_t n = probabilities_.size();
    if (n == 0) throw InvariantError("filtered space needs at least one atom");
    double total = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
        const double p = probabilities_[a];
        if (!(p > 0.0) || !std::isfinite(p)) {
            throw InvariantError("atom " + std::to_string(a) + " has non-positive probability");
        }
        total += p;
    }
    if (std::abs(total - 1.0) > kIdentityTol) {
        std::ostringstream os;
        os.precision(17);
        os << "probabilities sum to " << total << ", expected 1";
        throw InvariantError(os.str());
    }
    if (cell_of.size() != grid_.size()) {
        throw InvariantError("expected one partition per grid time (" +
                             std::to_string(grid_.size()) + "), got " +
                             std::to_string(cell_of.size()));
    }

    cell_of_.reserve(cell_of.size());
    for (auto& raw : cell_of) {
        if (raw.size() != n) throw InvariantError("partition does not cover every atom");
        int bound = 0;
        for (int c : raw) {
            if (c < 0) throw InvariantError("negative cell label");
            bound = std::max(bound, c + 1);
        }
        cell_of_.push_back(renumber(raw, static_cast<std::size_t>(bound)));
    }

    // Refinement: every cell at t lies inside one cell at t-1.
    for (std::size_t t = 1; t < cell_of_.size(); ++t) {
        const auto& now = cell_of_[t];
        const auto& before = cell_of_[t - 1];
        std::vector<int> parent(n, -1);
        for (std::size_t a = 0; a < n; ++a) {
            int& p = parent[now[a]];
            if (p < 0) {
                p = before[a];
            } else if (p != before[a]) {
                throw InvariantError("partition at index " + std::to_string(t) +
                                     " does not refine the partition at index " +
                                     std::to_string(t - 1));
            }
        }
    }

    cell_probability_.resize(cell_of_.size());
    representative_.resize(cell_of_.size());
    for (std::size_t t = 0; t < cell_of_.size(); ++t) {
        const auto& cells = cell_of_[t];
        const int count = *std::max_element(cells.begin(), cells.end()) + 1;
        cell_probability_[t].assign(count, 0.0);
        representative_[t].assign(count, n);
        for (std::size_t a = 0; a < n; ++a) {
            cell_probability_[t][cells[a]] += probabilities_[a];
            if (representative_[t][cells[a]] == n) representative_[t][cells[a]] = a;
        }
    }
}

AdaptedProcess::AdaptedProcess(SpacePtr space, int level, std::vector<std::vector<double>> values)
    : space_(std::move(space)), level_(level), values_(std::move(values)) {
    if (!space_) throw StructuralError("process without a filtered space");
    if (level_ < 0 || level_ > space_->level()) {
        throw ParameterError("process level " + std::to_string(level_) +
                             " outside the space grid (finest level " +
                             std::to_string(space_->level()) + ")");
    }
    if (values_.size() != static_cast<std::size_t>(steps()) + 1) {
        throw InvariantError("process needs " + std::to_string(steps() + 1) +
                             " time slices, got " + std::to_string(values_.size()));
    }
    const GridIndex s = stride();
    for (GridIndex k = 0; k <= steps(); ++k) {
        const auto& slice = values_[k];
        if (slice.size() != space_->atom_count()) {
            throw InvariantError("time slice " + std::to_string(k) + " has wrong atom count");
        }
        for (double v : slice) {
            if (!std::isfinite(v)) {
                throw InvariantError("non-finite value at time slice " + std::to_string(k));
            }
        }
        if (!is_measurable(*space_, slice, k * s)) {
            throw InvariantError("process is not adapted at grid index " + std::to_string(k * s));
        }
    }
}

AdaptedProcess AdaptedProcess::sample(int level) const {
    if (level < 0 || level > level_) {
        throw ParameterError("cannot sample a level-" + std::to_string(level_) +
                             " process at level " + std::to_string(level));
    }
    const GridIndex ratio = GridIndex{1} << (level_ - level);
    std::vector<std::vector<double>> out;
    out.reserve((GridIndex{1} << level) + 1);
    for (GridIndex k = 0; k <= (GridIndex{1} << level); ++k) out.push_back(values_[k * ratio]);
    return AdaptedProcess(space_, level, std::move(out));
}

AdaptedProcess AdaptedProcess::on_finest_grid() const {
    if (level_ == space_->level()) return *this;
    std::vector<std::vector<double>> out;
    out.reserve(space_->grid().size());
    for (GridIndex i = 0; i <= space_->last_index(); ++i) out.push_back(values_[i / stride()]);
    return AdaptedProcess(space_, space_->level(), std::move(out));
}

double AdaptedProcess::sup_norm() const {
    double m = 0.0;
    for (const auto& slice : values_) {
        for (double v : slice) m = std::max(m, std::abs(v));
    }
    return m;
}

StoppingTime::StoppingTime(SpacePtr space, std::vector<GridIndex> values)
    : space_(std::move(space)), values_(std::move(values)) {
    if (!space_) throw StructuralError("stopping time without a filtered space");
    if (values_.size() != space_->atom_count()) {
        throw InvariantError("stopping time has wrong atom count");
    }
    for (GridIndex v : values_) {
        if (v != kNever && (v < 0 || v > space_->last_index())) {
            throw InvariantError("stopping time value " + std::to_string(v) + " off the grid");
        }
    }
}

StoppingTime StoppingTime::constant(SpacePtr space, GridIndex value) {
    const std::size_t n = space->atom_count();
    return StoppingTime(std::move(space), std::vector<GridIndex>(n, value));
}

double StoppingTime::probability_finite() const {
    double p = 0.0;
    for (std::size_t a = 0; a < values_.size(); ++a) {
        if (values_[a] != kNever) p += space_->probability(a);
    }
    return p;
}

StoppingTime StoppingTime::min(const StoppingTime& other) const {
    if (other.space_ != space_) throw StructuralError("stopping times on different spaces");
    std::vector<GridIndex> out(values_.size());
    for (std::size_t a = 0; a < out.size(); ++a) out[a] = std::min(values_[a], other.values_[a]);
    return StoppingTime(space_, std::move(out));
}

std::pair<SpacePtr, AdaptedProcess> build_binary_tree(int level, const InnovationMap& map,
                                                      int max_level) {
    if (level < 0) throw ParameterError("tree level must be non-negative");
    if (level > max_level) {
        std::ostringstream os;
        os << "a level-" << level << " tree has 2^" << (1LL << level)
           << " atoms; full trees are capped at level " << max_level << " ("
           << (1LL << (1LL << max_level)) << " atoms)";
        throw ResourceLimitError(os.str());
    }
    const int steps = 1 << level;
    const std::size_t atoms = std::size_t{1} << steps;

    std::vector<std::vector<int>> cells(steps + 1, std::vector<int>(atoms));
    for (int j = 0; j <= steps; ++j) {
        for (std::size_t a = 0; a < atoms; ++a) cells[j][a] = static_cast<int>(a >> (steps - j));
    }
    auto space = std::make_shared<const FilteredSpace>(
        std::vector<double>(atoms, 1.0 / static_cast<double>(atoms)), level, std::move(cells));

    // One map evaluation per cell; cell c at time j has prefix given by the
    // top j bits of its atoms (bit 0 -> +1).
    std::vector<std::vector<double>> values(steps + 1, std::vector<double>(atoms));
    std::vector<int> prefix;
    for (int j = 0; j <= steps; ++j) {
        const std::size_t count = std::size_t{1} << j;
        const std::size_t width = atoms / count;
        for (std::size_t c = 0; c < count; ++c) {
            prefix.assign(j, 1);
            for (int i = 0; i < j; ++i) {
                if ((c >> (j - 1 - i)) & 1U) prefix[i] = -1;
            }
            const double v = map(prefix);
            std::fill_n(values[j].begin() + static_cast<std::ptrdiff_t>(c * width), width, v);
        }
    }
    AdaptedProcess process(space, level, std::move(values));
    return {std::move(space), std::move(process)};
}

SpacePtr space_from_innovations(int level, std::vector<double> probabilities,
                                const std::vector<std::vector<int>>& innovations) {
    const DyadicGrid grid(level);
    const std::size_t n = innovations.size();
    if (probabilities.size() != n) {
        throw InvariantError("one probability per innovation sequence required");
    }
    const bool deterministic = n > 0 && innovations.front().empty();
    for (const auto& seq : innovations) {
        if (deterministic ? !seq.empty() : seq.size() != static_cast<std::size_t>(grid.steps())) {
            throw InvariantError("innovation sequences must all have length " +
                                 std::to_string(grid.steps()) + " (or all be empty)");
        }
        for (int x : seq) {
            if (x != 1 && x != -1) throw InvariantError("innovations must be +1 or -1");
        }
    }
    std::vector<std::vector<int>> cells(grid.size(), std::vector<int>(n, 0));
    if (!deterministic) {
        for (GridIndex j = 1; j <= grid.steps(); ++j) {
            std::vector<int> raw(n);
            for (std::size_t a = 0; a < n; ++a) {
                raw[a] = 2 * cells[j - 1][a] + (innovations[a][j - 1] == 1 ? 0 : 1);
            }
            cells[j] = renumber(raw, 2 * n);
        }
    }
    return std::make_shared<const FilteredSpace>(std::move(probabilities), level, std::move(cells));
}

SpacePtr deterministic_space(int level) {
    const DyadicGrid grid(level);
    return std::make_shared<const FilteredSpace>(
        std::vector<double>{1.0}, level, std::vector<std::vector<int>>(grid.size(), {0}));
}

double expectation(const FilteredSpace& space, std::span<const double> x) {
    const auto p = space.probabilities();
    return std::inner_product(x.begin(), x.end(), p.begin(), 0.0);
}

RandomVariable conditional_expectation(const FilteredSpace& space, std::span<const double> x,
                                       GridIndex t) {
    if (x.size() != space.atom_count()) throw StructuralError("random variable has wrong size");
    if (t < 0 || t > space.last_index()) throw ParameterError("time index off the grid");
    const auto cells = space.cells_at(t);
    const auto cell_p = space.cell_probabilities(t);
    std::vector<double> sums(cell_p.size(), 0.0);
    for (std::size_t a = 0; a < x.size(); ++a) sums[cells[a]] += space.probability(a) * x[a];
    for (std::size_t c = 0; c < sums.size(); ++c) {
        if (!(cell_p[c] > 0.0)) throw InvariantError("cell with zero probability");
        sums[c] /= cell_p[c];
    }
    RandomVariable out(x.size());
    for (std::size_t a = 0; a < x.size(); ++a) out[a] = sums[cells[a]];
    return out;
}

bool is_measurable(const FilteredSpace& space, std::span<const double> x, GridIndex t) {
    const auto cells = space.cells_at(t);
    const auto reps = space.cell_representatives(t);
    for (std::size_t a = 0; a < x.size(); ++a) {
        if (!close(x[reps[cells[a]]], x[a])) return false;
    }
    return true;
}

bool check_stopping_time(const StoppingTime& tau) {
    const FilteredSpace& space = *tau.space();
    const auto v = tau.values();
    if (std::all_of(v.begin(), v.end(), [&](GridIndex x) { return x == v.front(); })) return true;
    // {tau <= t} is F_t-measurable iff the indicator is constant on time-t cells.
    for (GridIndex t = 0; t <= space.last_index(); ++t) {
        const auto cells = space.cells_at(t);
        const auto reps = space.cell_representatives(t);
        for (std::size_t a = 0; a < space.atom_count(); ++a) {
            const bool here = tau[a] <= t;
            const bool rep = tau[reps[cells[a]]] <= t;
            if (here != rep) return false;
        }
    }
    return true;
}

AdaptedProcess stop_process(const AdaptedProcess& s, const StoppingTime& tau) {
    if (s.space() != tau.space()) throw StructuralError("process and stopping time on different spaces");
    if (!check_stopping_time(tau)) throw PreconditionError("stop_process: argument is not a stopping time");
    const std::size_t n = s.space()->atom_count();
    std::vector<std::vector<double>> out(s.steps() + 1, std::vector<double>(n));
    for (GridIndex k = 0; k <= s.steps(); ++k) {
        const GridIndex fine = k * s.stride();
        for (std::size_t a = 0; a < n; ++a) {
            out[k][a] = s.at_fine(std::min(fine, tau.clamped(a)), a);
        }
    }
    return AdaptedProcess(s.space(), s.level(), std::move(out));
}

}  // namespace semimart
