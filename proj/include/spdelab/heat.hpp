#pragma once

#include "spdelab/grid.hpp"

namespace spdelab {

/// Gaussian heat kernel p_t(x) = exp(-x^2 / 2t) / sqrt(2 pi t).
/// Throws std::invalid_argument for t <= 0.
double heat_kernel(double t, double x);

/// The operator-norm constant K_t with K_t^2 = int e^{t|z|} p_1(z) dz,
/// computed by adaptive quadrature.
double kt_constant(double t);

/// Brownian semigroup T_t on grid functions, realized as discrete Gaussian
/// convolution with Neumann reflection at the truncated boundary. The rows
/// of the discrete operator are normalized to sum to 1, so constants are
/// invariant and positivity is preserved.
GridFunction apply_semigroup(const GridFunction& f, double t);

/// One backward-Euler step of the half Laplacian: solves
/// (I - (dt/2) D2) g = f with D2 the mirror-Neumann second difference.
/// Constants are exact fixed points; the matrix is an M-matrix, so
/// nonnegativity is preserved.
GridFunction implicit_half_laplacian_step(const GridFunction& f, double dt);

enum class HeatScheme { BackwardEuler, CrankNicolson };

/// Reusable stepper for repeated implicit half-Laplacian steps on one grid
/// and step size (precomputes the tridiagonal bands). Backward Euler solves
/// (I - (dt/2) D2) g = f; Crank-Nicolson solves
/// (I - (dt/4) D2) g = (I + (dt/4) D2) f. Both preserve constants exactly.
class HeatOperator {
public:
    HeatOperator(const GridSpec& spec, double dt,
                 HeatScheme scheme = HeatScheme::BackwardEuler);

    const GridSpec& spec() const { return spec_; }
    double dt() const { return dt_; }
    HeatScheme scheme() const { return scheme_; }

    GridFunction apply(const GridFunction& f) const;
    void apply_in_place(std::vector<double>& values) const;

private:
    GridSpec spec_;
    double dt_;
    HeatScheme scheme_;
    double r_ = 0.0; // dt / (2 dx^2) (BE) or dt / (4 dx^2) (CN)
    std::vector<double> lower_, diag_, upper_;
};

} // namespace spdelab
