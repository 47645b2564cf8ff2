#pragma once

#include <cstdint>
#include <vector>

#include "spdelab/grid.hpp"

namespace spdelab {

/// Finite atomic measure: list of (position, mass) atoms at one time.
struct AtomicMeasure {
    std::vector<double> positions;
    std::vector<double> masses;
    double time = 0.0;

    size_t size() const { return positions.size(); }
    double total_mass() const;
    /// mu(f) for a callable f.
    template <typename F>
    double integrate(F&& f) const {
        double s = 0.0;
        for (size_t i = 0; i < positions.size(); ++i) s += masses[i] * f(positions[i]);
        return s;
    }
    std::string to_csv() const;
};

/// Time-indexed snapshots of a particle run.
struct MeasurePath {
    std::vector<AtomicMeasure> snapshots;
    double dt_snapshot = 0.0; // spacing between snapshots
    std::uint64_t seed = 0;
    std::uint64_t stream_id = 0;
};

struct ParticleConfig {
    int n_init = 2000;
    double initial_mass = 1.0;         // total mass carried by the system
    double rate_factor = 1.0;          // multiplies the canonical event rate
    double dt = 4e-5;                  // Brownian step and thinning interval
    double horizon = 0.25;             // T
    std::uint64_t seed = 1;
    std::uint64_t stream_id = 0;
    int snapshot_every = 50;           // steps between saved snapshots
    double population_cap_factor = 30.0; // error if count exceeds cap * n_init

    double particle_mass() const { return initial_mass / n_init; }
    void validate_sbm() const;
    void validate_fv() const;
};

/// Critical branching Brownian particles: mass 1/N each, exponential clock
/// of rate N per particle (thinned per dt), offspring 0 or 2 with equal
/// probability. The empirical measure approximates super-Brownian motion.
MeasurePath simulate_sbm_particles(const ParticleConfig& config,
                                   const std::vector<double>& initial_positions);

/// Moran-type resampling: N particles of mass 1/N, each unordered pair
/// resamples at rate 1 (uniform copy direction). Total mass is constant;
/// the empirical measure approximates the Fleming-Viot process.
MeasurePath simulate_fv_particles(const ParticleConfig& config,
                                  const std::vector<double>& initial_positions);

/// Deterministic quantile placement of n points for a target CDF given as a
/// nondecreasing grid function with range (lo, hi): positions at the
/// (i+1/2)/n quantiles. Matches a particle cloud to a solver initial state.
std::vector<double> quantile_positions(const GridFunction& cdf, int n);

enum class CdfConvention {
    SignedFromOrigin, // u(y) = mass((0, y]) for y >= 0, -mass((y, 0]) for y < 0
    FromLeft          // u(y) = mass((-inf, y])
};

/// Distribution function of an atomic measure sampled on a grid.
/// The signed convention integrates from 0 (valid for infinite measures);
/// FromLeft is the probability CDF (finite measures only).
GridFunction empirical_cdf(const AtomicMeasure& m, const GridSpec& grid,
                           CdfConvention convention = CdfConvention::SignedFromOrigin);

/// Generalized inverse u^{-1}(a) = sup{x : u(x) < a} of a nondecreasing grid
/// function, with linear interpolation between bracketing points and clamping
/// to the domain edges. Throws on non-monotone input.
double generalized_inverse(const GridFunction& u, double a);

} // namespace spdelab
