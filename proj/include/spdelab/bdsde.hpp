#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "spdelab/kernels.hpp"
#include "spdelab/noise.hpp"
#include "spdelab/solver.hpp"

namespace spdelab {

/// Ensemble of Euler paths of the forward motion X^{t,y}_s = y + B_s - B_t.
class ForwardEnsemble {
public:
    ForwardEnsemble(double t0, double y0, double dt, int n_steps, int n_paths,
                    std::uint64_t seed, std::uint64_t stream_id);

    double t0() const { return t0_; }
    double y0() const { return y0_; }
    double dt() const { return dt_; }
    int n_steps() const { return n_steps_; }
    int n_paths() const { return n_paths_; }
    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

    /// Brownian increment over [s, s+dt] on path p (s = 0..n_steps-1).
    double increment(int p, int s) const {
        return db_[static_cast<size_t>(p) * n_steps_ + s];
    }
    /// Position at knot s (s = 0..n_steps); position(p, 0) == y0 exactly.
    double position(int p, int s) const {
        return x_[static_cast<size_t>(p) * (n_steps_ + 1) + s];
    }

private:
    double t0_, y0_, dt_;
    int n_steps_, n_paths_;
    std::uint64_t seed_, stream_id_;
    std::vector<double> db_, x_;
};

ForwardEnsemble simulate_forward(double t0, double y0, double dt, int n_steps,
                                 int n_paths, std::uint64_t seed,
                                 std::uint64_t stream_id = 0);

/// Regression Monte Carlo solution of the BDSDE: Y and Z on the time knots,
/// per path.
struct BdsdeSolution {
    int n_paths = 0;
    int n_steps = 0;
    double dt = 0.0;
    std::vector<double> y; // [path][knot 0..n_steps]
    std::vector<double> z; // [path][knot 0..n_steps-1]
    double expected_int_z2 = 0.0; // reported E int Z^2 ds

    double y_at(int p, int s) const {
        return y[static_cast<size_t>(p) * (n_steps + 1) + s];
    }
    double z_at(int p, int s) const {
        return z[static_cast<size_t>(p) * n_steps + s];
    }
};

struct BdsdeConfig {
    int basis_degree = 3; // polynomial regression basis 1, x, ..., x^degree
};

/// Solves the BDSDE backward from Y_T = terminal(X_T): at each knot the
/// conditional expectation is a least-squares polynomial regression on X_s,
/// the backward noise enters at the right endpoint, and Z is the regression
/// estimate of E[Y_{s+dt} dB_s]/dt (with martingale control variates).
/// The backward noise must live on a stream distinct from the forward one.
BdsdeSolution solve_bdsde(const std::function<double(double)>& terminal,
                          const CoefficientKernel& kernel,
                          const NoiseField& tilde_noise,
                          const ForwardEnsemble& forward,
                          const BdsdeConfig& config = {});

struct IppResidual {
    double rms = 0.0;
    double scale = 0.0; // RMS of f(y_t) over paths
    double relative() const { return scale > 0.0 ? rms / scale : 0.0; }
};

/// Two-sided evaluation of the Ito-Pardoux-Peng identity for a process
/// driven by a known deterministic field alpha(step, cell) and a given z:
/// simulates y backward and compares f(y_t) against the five-term expansion.
/// Every Monte Carlo path carries its own realization of the pair
/// (backward noise, forward Brownian motion); the backward increments are
/// drawn from (seed, stream_id) on the given level space.
IppResidual ipp_residual(const std::vector<double>& terminal_xi,
                         const std::function<double(int, int)>& alpha,
                         const std::function<double(int, int)>& z, // (step, path)
                         const LevelSpec& level, std::uint64_t seed,
                         std::uint64_t stream_id,
                         const ForwardEnsemble& forward,
                         const std::function<double(double)>& f,
                         const std::function<double(double)>& df,
                         const std::function<double(double)>& d2f,
                         int t_index);

struct RepresentationReport {
    double residual_mean = 0.0;     // mean over paths of the identity residual
    double residual_rms = 0.0;
    double terminal_scale = 0.0;    // RMS of F(X_T)
    double candidate_value = 0.0;   // tilde u_t(y)
    double feynman_kac_gap = 0.0;   // |tilde u_t(y) - mean F(X_T)| (G = 0 control)
    double x1_integral = 0.0;       // int ||tilde u_s||_1^2 ds, reported
    double relative_residual() const {
        return terminal_scale > 0.0 ? std::abs(residual_mean) / terminal_scale : 0.0;
    }
};

struct RepresentationConfig {
    double t = 0.1;
    double y = 0.0;
    int n_paths = 10000;
    std::uint64_t seed = 7;
    std::uint64_t stream_id = 1000;
};

/// Tests the SPDE <-> BDSDE representation: time-reverses the trajectory and
/// its noise, builds the candidate pair Y_s = tilde u_s(X_s),
/// Z_s = grad tilde u_s(X_s), and measures the residual of the BDSDE
/// identity along the forward ensemble. The trajectory must be saved at
/// every step and must match the given noise realization.
RepresentationReport check_representation(const Trajectory& traj,
                                          const GridFunction& initial,
                                          const CoefficientKernel& kernel,
                                          const NoiseField& noise,
                                          const RepresentationConfig& config);

} // namespace spdelab
