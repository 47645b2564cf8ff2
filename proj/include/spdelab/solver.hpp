#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "spdelab/grid.hpp"
#include "spdelab/heat.hpp"
#include "spdelab/kernels.hpp"
#include "spdelab/noise.hpp"

namespace spdelab {

enum class Scheme { MildEuler, Picard };

struct SolverConfig {
    GridSpec grid;
    double dt = 1e-3;
    int n_steps = 250;
    Scheme scheme = Scheme::MildEuler;
    int picard_iters = 8;
    CoefficientKernel kernel = CoefficientKernel::zero(LevelSpec::unit_interval(1));
    GridFunction initial; // F, must share `grid`
    bool include_laplacian = true;
    int save_every = 10;

    double horizon() const { return dt * n_steps; }
    void validate() const;
};

/// Saved states of one solver run plus the diagnostics the run collected.
struct Trajectory {
    GridSpec grid;
    double dt = 0.0;
    std::vector<int> saved_steps;
    std::vector<GridFunction> states;
    std::uint64_t noise_hash = 0;

    // Diagnostics recorded during the run.
    double sup_norm0_sq = 0.0;            // sup_t ||u_t||_0^2
    double max_range_violation = 0.0;     // max(0, -min u, max u - 1)
    double max_monotonicity_violation = 0.0;

    double time_of(size_t idx) const { return saved_steps[idx] * dt; }
    /// State saved at exactly this step index; throws if not saved.
    const GridFunction& state_at_step(int step) const;
    const GridFunction& final_state() const { return states.back(); }
};

/// One mild-Euler step: inject the multiplicative noise, then take the
/// implicit half-Laplacian step (Lie splitting, noise first).
GridFunction step_mild_euler(const GridFunction& u, const NoiseField& noise,
                             int step, const CoefficientKernel& kernel,
                             const HeatOperator& heat, bool include_laplacian = true);

/// Full mild-Euler run. Throws on NaN/divergence with the step index.
Trajectory solve(const SolverConfig& config, const NoiseField& noise);

struct PicardResult {
    Trajectory trajectory;
    /// sup_t norm0(u^{k+1}_t - u^k_t) after each iteration.
    std::vector<double> contraction;
    bool contraction_warning = false;
};

/// Picard iteration of the mild formulation against the same noise:
/// u^0 = F, u^{k+1}_t = T_t F + stochastic convolution of G(., ., u^k).
PicardResult solve_picard(const SolverConfig& config, const NoiseField& noise);

struct WeakFormResidual {
    std::vector<double> per_step; // residual after each step
    double max_abs = 0.0;
};

/// Residual of the weak-form identity
///   <u_t,f> - <F,f> - int <u_s, Lap f / 2> ds - stochastic terms
/// along a trajectory saved at every step, using the given noise.
/// The caller supplies half_lap_f = Lap f / 2 sampled on the grid (use the
/// analytic Laplacian of the test function). The test function must vanish
/// at the domain boundary.
WeakFormResidual weak_form_residual(const Trajectory& traj, const GridFunction& f,
                                    const GridFunction& half_lap_f,
                                    const NoiseField& noise,
                                    const CoefficientKernel& kernel,
                                    const GridFunction& initial);

} // namespace spdelab
