#pragma once

// Finite filtered probability spaces on a dyadic time grid.
//
// A space is a finite set of atoms with positive weights together with one
// partition of the atoms per grid time. Partitions refine as time advances,
// so a random variable is F_t-measurable iff it is constant on every cell of
// the time-t partition. All objects are immutable once built.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <utility>
#include <vector>

namespace semimart {

// Index into the finest grid of a space: time = index / 2^level.
using GridIndex = int;
inline constexpr GridIndex kNever = std::numeric_limits<GridIndex>::max();

// Identity tolerance used for measurability and sum-to-one checks.
inline constexpr double kIdentityTol = 1e-12;

using RandomVariable = std::vector<double>;

class DyadicGrid {
public:
    explicit DyadicGrid(int level);

    int level() const { return level_; }
    GridIndex steps() const { return GridIndex{1} << level_; }
    std::size_t size() const { return static_cast<std::size_t>(steps()) + 1; }
    double time(GridIndex j) const { return static_cast<double>(j) / steps(); }
    std::vector<double> times() const;

private:
    int level_;
};

class FilteredSpace {
public:
    // `cell_of[t][atom]` labels the cell of `atom` in the partition at grid
    // index t. Labels are renumbered by first appearance. Throws
    // InvariantError unless probabilities are positive and sum to one and
    // partitions refine.
    FilteredSpace(std::vector<double> probabilities, int level,
                  std::vector<std::vector<int>> cell_of);

    std::size_t atom_count() const { return probabilities_.size(); }
    int level() const { return grid_.level(); }
    const DyadicGrid& grid() const { return grid_; }
    GridIndex last_index() const { return grid_.steps(); }

    std::span<const double> probabilities() const { return probabilities_; }
    double probability(std::size_t atom) const { return probabilities_[atom]; }

    int cell_of(GridIndex t, std::size_t atom) const { return cell_of_[t][atom]; }
    std::span<const int> cells_at(GridIndex t) const { return cell_of_[t]; }
    std::size_t cell_count(GridIndex t) const { return cell_probability_[t].size(); }
    std::span<const double> cell_probabilities(GridIndex t) const { return cell_probability_[t]; }
    // First atom (in atom order) of each cell at time t.
    std::span<const std::size_t> cell_representatives(GridIndex t) const {
        return representative_[t];
    }

private:
    DyadicGrid grid_;
    std::vector<double> probabilities_;
    std::vector<std::vector<int>> cell_of_;
    std::vector<std::vector<double>> cell_probability_;
    std::vector<std::vector<std::size_t>> representative_;
};

using SpacePtr = std::shared_ptr<const FilteredSpace>;

// Grid-indexed process sampled on the level-`level` grid of its space
// (level <= space level). Values between grid points follow the
// right-continuous piecewise-constant interpolation.
class AdaptedProcess {
public:
    // values[k] holds the time-k values for every atom. Throws InvariantError
    // on non-finite values or when a time-k slice is not constant on the cells
    // of the partition at the matching finest index.
    AdaptedProcess(SpacePtr space, int level, std::vector<std::vector<double>> values);

    const SpacePtr& space() const { return space_; }
    int level() const { return level_; }
    GridIndex steps() const { return GridIndex{1} << level_; }
    // Number of finest-grid steps per step of this process.
    GridIndex stride() const { return GridIndex{1} << (space_->level() - level_); }

    std::span<const double> at(GridIndex k) const { return values_[k]; }
    double at(GridIndex k, std::size_t atom) const { return values_[k][atom]; }
    // Value at finest-grid index i (interpolated on coarser processes).
    double at_fine(GridIndex i, std::size_t atom) const {
        return values_[i / stride()][atom];
    }
    const std::vector<std::vector<double>>& values() const { return values_; }

    // Restriction to a coarser grid level.
    AdaptedProcess sample(int level) const;
    // The same process on the finest grid of its space (piecewise constant).
    AdaptedProcess on_finest_grid() const;
    double sup_norm() const;

private:
    SpacePtr space_;
    int level_;
    std::vector<std::vector<double>> values_;
};

// Stopping time valued in finest-grid indices or kNever (the symbol infinity).
class StoppingTime {
public:
    StoppingTime(SpacePtr space, std::vector<GridIndex> values);

    static StoppingTime constant(SpacePtr space, GridIndex value);
    static StoppingTime never(SpacePtr space) { return constant(std::move(space), kNever); }

    const SpacePtr& space() const { return space_; }
    GridIndex operator[](std::size_t atom) const { return values_[atom]; }
    std::span<const GridIndex> values() const { return values_; }

    // Value with kNever clamped to the terminal index.
    GridIndex clamped(std::size_t atom) const {
        return values_[atom] == kNever ? space_->last_index() : values_[atom];
    }
    double probability_finite() const;
    StoppingTime min(const StoppingTime& other) const;

private:
    SpacePtr space_;
    std::vector<GridIndex> values_;
};

// Maps an innovation prefix (entries +1/-1, length j) to the process value at
// grid index j.
using InnovationMap = std::function<double(std::span<const int>)>;

inline constexpr int kMaxTreeLevel = 4;

// Full binary innovation tree: 2^(2^level) equally likely sign sequences,
// time-j cells grouping atoms by their first j innovations. Atom order is
// lexicographic with +1 before -1.
std::pair<SpacePtr, AdaptedProcess> build_binary_tree(int level, const InnovationMap& map,
                                                      int max_level = kMaxTreeLevel);

// Filtration generated by innovation sequences (one per atom, all of length
// 2^level, or all empty for a deterministic filtration).
SpacePtr space_from_innovations(int level, std::vector<double> probabilities,
                                const std::vector<std::vector<int>>& innovations);

// Single-atom space with trivial partitions.
SpacePtr deterministic_space(int level);

double expectation(const FilteredSpace& space, std::span<const double> x);

// E[X | F_t]: probability-weighted average over each cell at finest index t.
RandomVariable conditional_expectation(const FilteredSpace& space, std::span<const double> x,
                                       GridIndex t);

// True iff x is constant (to kIdentityTol) on every cell of the partition at t.
bool is_measurable(const FilteredSpace& space, std::span<const double> x, GridIndex t);

bool check_stopping_time(const StoppingTime& tau);

// S^tau: paths frozen at S_tau from tau on. Throws PreconditionError if tau is
// not a stopping time and StructuralError on mismatched spaces.
AdaptedProcess stop_process(const AdaptedProcess& s, const StoppingTime& tau);

}  // namespace semimart
