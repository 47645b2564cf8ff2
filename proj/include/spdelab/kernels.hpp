#pragma once

#include <memory>
#include <vector>

#include "spdelab/grid.hpp"
#include "spdelab/noise.hpp"

namespace spdelab {

/// Pointwise coefficient G(a, y, u) for the indicator kernel of the
/// measure-valued SPDEs: 1 on the level band between 0 and u (either sign).
double g_sbm(double a, double y, double u);

/// Fleming-Viot coefficient G(a, y, u) = 1_{a <= u} - u on the unit interval.
double g_fv(double a, double y, double u);

/// Colored-noise coefficient G(a, y, u) = rho(a, y) sqrt(max(u, 0)).
double g_colored(const RkhsKernel& kernel, int mode, int y_index, double u);

enum class KernelId { Sbm, Fv, Colored, Zero };

/// Noise coefficient of the SPDE together with its level-space geometry and
/// the per-step machinery that turns raw level increments into the
/// multiplicative noise term at each spatial point.
///
/// For the indicator kernels the sum over level cells telescopes to a prefix
/// sum; the cell containing u contributes the covered fraction of its
/// increment, which makes u -> noise term continuous.
class CoefficientKernel {
public:
    static CoefficientKernel sbm(const LevelSpec& level, double holder_k = 2.0);
    static CoefficientKernel fv(int n_levels, double holder_k = 2.0);
    static CoefficientKernel colored(std::shared_ptr<const RkhsKernel> kernel,
                                     double holder_k);
    /// G identically zero (deterministic control runs).
    static CoefficientKernel zero(const LevelSpec& level);

    KernelId id() const { return id_; }
    const LevelSpec& level() const { return level_; }
    double holder_constant() const { return holder_k_; }
    const RkhsKernel* rkhs() const { return rkhs_.get(); }

    double evaluate(double a, int y_index, double y, double u) const;

    /// Precomputed per-step data: prefix sums of the level increments
    /// (indicator kernels) or the colored spatial field.
    struct StepContext {
        std::vector<double> prefix;    // size n_cells+1, prefix[c] = sum_{c'<c} xi
        std::vector<double> colored;   // colored field on the grid
        double total = 0.0;            // sum of all increments this step
    };

    StepContext step_context(const NoiseField& noise, int step) const;

    /// Noise term sum_cells G(a_cell, y, u) * xi[step][cell] at one point.
    /// Throws std::runtime_error if u escapes the covered level band
    /// (Sbm kernel), with the offending value in the message.
    double noise_term(const StepContext& ctx, int y_index, double y, double u) const;

    /// Numeric check data: int_U |G(a,y,u1) - G(a,y,u2)|^2 lambda(da) by
    /// cell-center sums.
    double holder_integral(int y_index, double y, double u1, double u2) const;
    /// int_U |G(a,y,u)|^2 lambda(da) by cell-center sums.
    double growth_integral(int y_index, double y, double u) const;

private:
    CoefficientKernel(KernelId id, LevelSpec level, double holder_k,
                      std::shared_ptr<const RkhsKernel> rkhs);

    /// Linear interpolation of the prefix sum at level value a (the
    /// fractional-cell convention).
    double prefix_at(const StepContext& ctx, double a) const;

    KernelId id_;
    LevelSpec level_;
    double holder_k_;
    std::shared_ptr<const RkhsKernel> rkhs_;
};

/// Level band for the Sbm kernel covering the excursions of u over [0, T],
/// sized from the initial condition with the given headroom factor. A
/// solver run raises an error if u ever escapes the band.
LevelSpec sbm_level_band(const GridFunction& initial, double horizon,
                         double headroom = 1.5, double da = 0.02);

} // namespace spdelab
