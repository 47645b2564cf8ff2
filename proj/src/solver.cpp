#include "spdelab/solver.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace spdelab {

void SolverConfig::validate() const {
    if (!(dt > 0.0)) throw std::invalid_argument("SolverConfig: dt must be > 0");
    if (n_steps < 1) throw std::invalid_argument("SolverConfig: n_steps must be >= 1");
    if (save_every < 1) throw std::invalid_argument("SolverConfig: save_every >= 1");
    if (scheme == Scheme::Picard && picard_iters < 1)
        throw std::invalid_argument("SolverConfig: picard_iters must be >= 1");
    if (!(initial.spec() == grid))
        throw std::invalid_argument("SolverConfig: initial condition grid mismatch");
    if (!initial.all_finite())
        throw std::invalid_argument("SolverConfig: initial condition not finite");
}

const GridFunction& Trajectory::state_at_step(int step) const {
    for (size_t i = 0; i < saved_steps.size(); ++i)
        if (saved_steps[i] == step) return states[i];
    throw std::out_of_range("Trajectory: step " + std::to_string(step) + " not saved");
}

namespace {

void check_finite(const std::vector<double>& v, int step) {
    for (double x : v)
        if (!std::isfinite(x))
            throw std::runtime_error("solver: non-finite state at step " +
                                     std::to_string(step));
}

struct DiagnosticAccumulator {
    const Weight weight;
    double sup_norm0_sq = 0.0;
    double range_violation = 0.0;
    double mono_violation = 0.0;

    explicit DiagnosticAccumulator(const GridSpec& grid)
        : weight(Weight::exponential(grid)) {}

    void observe(const GridFunction& u) {
        double n0 = norm0(u, weight);
        sup_norm0_sq = std::max(sup_norm0_sq, n0 * n0);
        double lo = 0.0, hi = 0.0, mono = 0.0;
        const auto& v = u.values();
        for (size_t i = 0; i < v.size(); ++i) {
            lo = std::min(lo, v[i]);
            hi = std::max(hi, v[i]);
            if (i + 1 < v.size()) mono = std::max(mono, v[i] - v[i + 1]);
        }
        range_violation = std::max(range_violation, std::max(-lo, hi - 1.0));
        mono_violation = std::max(mono_violation, mono);
    }
};

void check_noise_compatible(const SolverConfig& config, const NoiseField& noise) {
    if (noise.n_steps() < config.n_steps)
        throw std::invalid_argument("solver: noise has fewer steps than the run");
    if (noise.dt() != config.dt)
        throw std::invalid_argument("solver: noise dt differs from config dt");
    if (config.kernel.id() != KernelId::Zero && !(noise.level() == config.kernel.level()))
        throw std::invalid_argument("solver: noise level spec does not match kernel");
}

} // namespace

GridFunction step_mild_euler(const GridFunction& u, const NoiseField& noise,
                             int step, const CoefficientKernel& kernel,
                             const HeatOperator& heat, bool include_laplacian) {
    auto ctx = kernel.step_context(noise, step);
    const GridSpec& spec = u.spec();
    std::vector<double> next(u.values());
    for (int i = 0; i < spec.n_points(); ++i)
        next[i] += kernel.noise_term(ctx, i, spec.point(i), u[i]);
    if (include_laplacian) heat.apply_in_place(next);
    return GridFunction(spec, std::move(next));
}

Trajectory solve(const SolverConfig& config, const NoiseField& noise) {
    config.validate();
    check_noise_compatible(config, noise);

    Trajectory traj;
    traj.grid = config.grid;
    traj.dt = config.dt;
    traj.noise_hash = noise.manifest_hash();

    HeatOperator heat(config.grid, config.dt);
    DiagnosticAccumulator diag(config.grid);

    GridFunction u = config.initial;
    diag.observe(u);
    traj.saved_steps.push_back(0);
    traj.states.push_back(u);

    for (int n = 0; n < config.n_steps; ++n) {
        u = step_mild_euler(u, noise, n, config.kernel, heat, config.include_laplacian);
        check_finite(u.values(), n + 1);
        diag.observe(u);
        if ((n + 1) % config.save_every == 0 || n + 1 == config.n_steps) {
            traj.saved_steps.push_back(n + 1);
            traj.states.push_back(u);
        }
    }
    traj.sup_norm0_sq = diag.sup_norm0_sq;
    traj.max_range_violation = diag.range_violation;
    traj.max_monotonicity_violation = diag.mono_violation;
    return traj;
}

PicardResult solve_picard(const SolverConfig& config, const NoiseField& noise) {
    config.validate();
    check_noise_compatible(config, noise);

    const int n_steps = config.n_steps;
    const int n_pts = config.grid.n_points();
    // The Picard scheme realizes the mild-form semigroup with its own
    // (Crank-Nicolson) stepping, so the coupling comparison against the
    // mild-Euler solver contrasts two genuinely different discretizations
    // of the same equation on the same noise.
    HeatOperator heat(config.grid, config.dt, HeatScheme::CrankNicolson);
    Weight w = Weight::exponential(config.grid);

    // Heat flow of F, precomputed once: hF[n] = H^n F.
    std::vector<std::vector<double>> hF(n_steps + 1);
    hF[0] = config.initial.values();
    for (int n = 0; n < n_steps; ++n) {
        hF[n + 1] = hF[n];
        if (config.include_laplacian) heat.apply_in_place(hF[n + 1]);
    }

    // Current iterate at every step; u^0 is constant-in-time F.
    std::vector<std::vector<double>> iter(n_steps + 1, config.initial.values());
    PicardResult result;

    const int sweeps = std::max(1, config.picard_iters);
    for (int k = 0; k < sweeps; ++k) {
        std::vector<std::vector<double>> next(n_steps + 1);
        next[0] = config.initial.values();
        // Stochastic convolution by the recursion S_{n+1} = H(S_n + g_n).
        std::vector<double> conv(n_pts, 0.0);
        for (int n = 0; n < n_steps; ++n) {
            auto ctx = config.kernel.step_context(noise, n);
            for (int i = 0; i < n_pts; ++i)
                conv[i] += config.kernel.noise_term(ctx, i, config.grid.point(i),
                                                    iter[n][i]);
            if (config.include_laplacian) heat.apply_in_place(conv);
            next[n + 1].resize(n_pts);
            for (int i = 0; i < n_pts; ++i) next[n + 1][i] = hF[n + 1][i] + conv[i];
            check_finite(next[n + 1], n + 1);
        }
        double gap = 0.0;
        for (int n = 0; n <= n_steps; ++n) {
            std::vector<double> diff(n_pts);
            for (int i = 0; i < n_pts; ++i) diff[i] = next[n][i] - iter[n][i];
            gap = std::max(gap, norm0(GridFunction(config.grid, std::move(diff)), w));
        }
        result.contraction.push_back(gap);
        iter = std::move(next);
    }
    for (size_t k = 3; k < result.contraction.size(); ++k)
        if (result.contraction[k] >= result.contraction[k - 1])
            result.contraction_warning = true;

    Trajectory traj;
    traj.grid = config.grid;
    traj.dt = config.dt;
    traj.noise_hash = noise.manifest_hash();
    DiagnosticAccumulator diag(config.grid);
    for (int n = 0; n <= n_steps; ++n) {
        GridFunction u(config.grid, iter[n]);
        diag.observe(u);
        if (n == 0 || n % config.save_every == 0 || n == n_steps) {
            traj.saved_steps.push_back(n);
            traj.states.push_back(std::move(u));
        }
    }
    traj.sup_norm0_sq = diag.sup_norm0_sq;
    traj.max_range_violation = diag.range_violation;
    traj.max_monotonicity_violation = diag.mono_violation;
    result.trajectory = std::move(traj);
    return result;
}

WeakFormResidual weak_form_residual(const Trajectory& traj, const GridFunction& f,
                                    const GridFunction& half_lap_f,
                                    const NoiseField& noise,
                                    const CoefficientKernel& kernel,
                                    const GridFunction& initial) {
    const GridSpec& spec = traj.grid;
    if (!(f.spec() == spec) || !(half_lap_f.spec() == spec))
        throw std::invalid_argument("weak_form_residual: test function grid mismatch");
    if (std::fabs(f[0]) > 1e-10 || std::fabs(f[f.size() - 1]) > 1e-10)
        throw std::invalid_argument(
            "weak_form_residual: test function must vanish at the boundary");
    for (size_t i = 0; i < traj.saved_steps.size(); ++i)
        if (traj.saved_steps[i] != static_cast<int>(i))
            throw std::invalid_argument(
                "weak_form_residual: trajectory must be saved at every step");

    const int n_pts = spec.n_points();
    WeakFormResidual out;
    const double f_initial = inner_plain(initial, f);
    double drift_sum = 0.0, noise_sum = 0.0;
    const int n_steps = static_cast<int>(traj.saved_steps.size()) - 1;
    for (int n = 0; n < n_steps; ++n) {
        const GridFunction& u = traj.states[n];
        drift_sum += inner_plain(u, half_lap_f) * traj.dt;
        auto ctx = kernel.step_context(noise, n);
        std::vector<double> g(n_pts);
        for (int i = 0; i < n_pts; ++i)
            g[i] = kernel.noise_term(ctx, i, spec.point(i), u[i]);
        noise_sum += inner_plain(GridFunction(spec, std::move(g)), f);
        double r = inner_plain(traj.states[n + 1], f) - f_initial - drift_sum - noise_sum;
        out.per_step.push_back(r);
        out.max_abs = std::max(out.max_abs, std::fabs(r));
    }
    return out;
}

} // namespace spdelab
