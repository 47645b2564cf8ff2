#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "spdelab/grid.hpp"
#include "spdelab/rng.hpp"

namespace spdelab {

enum class LevelKind { Interval, UnitInterval, IndexSet };

/// Discretization of the level space (U, lambda): a truncated interval of
/// the real line with Lebesgue measure, the unit interval, or an index set
/// with counting measure.
struct LevelSpec {
    LevelKind kind = LevelKind::Interval;
    double a_min = 0.0;
    double a_max = 1.0;
    int n_cells = 1;

    static LevelSpec interval(double a_min, double a_max, int n_levels);
    static LevelSpec unit_interval(int n_levels);
    static LevelSpec index_set(int n_modes);

    /// Cell width for interval kinds; 1 for the index set.
    double da() const {
        return kind == LevelKind::IndexSet ? 1.0 : (a_max - a_min) / n_cells;
    }
    /// lambda-measure of one cell.
    double cell_measure() const { return da(); }
    double cell_low(int c) const { return a_min + c * da(); }
    double cell_center(int c) const { return a_min + (c + 0.5) * da(); }

    bool operator==(const LevelSpec& o) const {
        return kind == o.kind && a_min == o.a_min && a_max == o.a_max &&
               n_cells == o.n_cells;
    }
};

/// Seeded space-time white noise increments: independent
/// N(0, dt * lambda(cell)) per (step, cell), regenerated bit-identically
/// from (seed, stream_id) by a counter-based generator.
class NoiseField {
public:
    NoiseField() = default;

    int n_steps() const { return n_steps_; }
    double dt() const { return dt_; }
    const LevelSpec& level() const { return level_; }
    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

    double increment(int step, int cell) const {
        return increments_[static_cast<size_t>(step) * level_.n_cells + cell];
    }
    const std::vector<double>& raw() const { return increments_; }

    /// 64-bit identity of this noise realization (seed, stream, shape, dt,
    /// level spec). Coupling checks compare this hash.
    std::uint64_t manifest_hash() const;

    /// Time reversal: increment'(step, cell) = increment(n_steps-1-step, cell).
    NoiseField time_reversed() const;

    friend NoiseField sample_noise(int n_steps, double dt, const LevelSpec& level,
                                   std::uint64_t seed, std::uint64_t stream_id);

private:
    int n_steps_ = 0;
    double dt_ = 0.0;
    LevelSpec level_;
    std::uint64_t seed_ = 0, stream_id_ = 0;
    bool reversed_ = false;
    std::vector<double> increments_;
};

/// Draws the full increment array for (seed, stream_id).
NoiseField sample_noise(int n_steps, double dt, const LevelSpec& level,
                        std::uint64_t seed, std::uint64_t stream_id);

/// Orthonormal basis sampled on the level cells: basis[j][cell].
using LevelBasis = std::vector<std::vector<double>>;

/// First n_modes elements of the Haar system on [0,1], sampled at the cell
/// centers of a unit-interval level spec. Requires n_cells divisible by the
/// finest Haar resolution used.
LevelBasis haar_basis(const LevelSpec& level, int n_modes);

/// Projects the noise onto a CONS of L^2(U, lambda):
/// dB^j_n = sum_cells h_j(a_cell) * increment[n][cell]. The Gram matrix of
/// the basis is checked to be the identity within 1e-8.
std::vector<std::vector<double>> cons_brownian_increments(const NoiseField& noise,
                                                          const LevelBasis& basis);

/// Covariance kernel expanded into modes on a spatial grid (discrete Mercer):
/// phi(x,y) ~ sum_j rho(j,x) rho(j,y). Modes come from the eigendecomposition
/// of the covariance matrix sampled at the grid points.
class RkhsKernel {
public:
    RkhsKernel(std::function<double(double, double)> phi, const GridSpec& grid,
               int n_modes);

    int n_modes() const { return static_cast<int>(modes_.size()); }
    const GridSpec& grid() const { return grid_; }
    double phi(double x, double y) const { return phi_(x, y); }
    /// rho(j, x_i) for grid point i.
    double mode(int j, int i) const { return modes_[j][i]; }
    const std::vector<std::vector<double>>& modes() const { return modes_; }

    /// max_i |phi(x_i,x_i) - sum_j rho(j,x_i)^2|: the reported truncation error.
    double truncation_error() const;

private:
    std::function<double(double, double)> phi_;
    GridSpec grid_;
    std::vector<std::vector<double>> modes_; // [mode][grid point]
};

/// Colored spatial increment at one time step:
/// B(x, dt) = sum_j rho(j,x) * increment[step][j].
GridFunction colored_increment(const RkhsKernel& kernel, const NoiseField& noise,
                               int step);

} // namespace spdelab
