#include "spdelab/bdsde.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "spdelab/linalg.hpp"
#include "spdelab/rng.hpp"

namespace spdelab {

ForwardEnsemble::ForwardEnsemble(double t0, double y0, double dt, int n_steps,
                                 int n_paths, std::uint64_t seed,
                                 std::uint64_t stream_id)
    : t0_(t0), y0_(y0), dt_(dt), n_steps_(n_steps), n_paths_(n_paths),
      seed_(seed), stream_id_(stream_id) {
    if (n_steps < 0 || n_paths < 1)
        throw std::invalid_argument("ForwardEnsemble: bad shape");
    db_.resize(static_cast<size_t>(n_paths) * std::max(n_steps, 1));
    x_.resize(static_cast<size_t>(n_paths) * (n_steps + 1));
    CounterRng rng(seed, stream_id);
    const double sqrt_dt = std::sqrt(dt);
    for (int p = 0; p < n_paths; ++p) {
        x_[static_cast<size_t>(p) * (n_steps + 1)] = y0;
        for (int s = 0; s < n_steps; ++s) {
            double db = sqrt_dt * rng.normal(static_cast<std::uint64_t>(p),
                                             static_cast<std::uint64_t>(s));
            db_[static_cast<size_t>(p) * n_steps_ + s] = db;
            x_[static_cast<size_t>(p) * (n_steps + 1) + s + 1] =
                x_[static_cast<size_t>(p) * (n_steps + 1) + s] + db;
        }
    }
}

ForwardEnsemble simulate_forward(double t0, double y0, double dt, int n_steps,
                                 int n_paths, std::uint64_t seed,
                                 std::uint64_t stream_id) {
    return ForwardEnsemble(t0, y0, dt, n_steps, n_paths, seed, stream_id);
}

namespace {

/// Design matrix of monomials 1, x, ..., x^degree (x centered and scaled for
/// conditioning). A collapsed sample range (e.g. the deterministic start of
/// the forward motion) degrades gracefully to the constant basis.
struct PolyBasis {
    double center = 0.0, scale = 1.0;
    int degree = 3;

    PolyBasis(const std::vector<double>& xs, int deg) : degree(deg) {
        double lo = xs[0], hi = xs[0];
        for (double v : xs) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        center = 0.5 * (lo + hi);
        scale = 0.5 * (hi - lo);
        if (scale < 1e-9 * std::max(1.0, std::fabs(center))) {
            degree = 0;
            scale = 1.0;
        }
    }
    int n_cols() const { return degree + 1; }
    void fill_row(double x, double* row) const {
        double t = (x - center) / scale;
        row[0] = 1.0;
        for (int d = 1; d <= degree; ++d) row[d] = row[d - 1] * t;
    }
    double eval(const std::vector<double>& beta, double x) const {
        double t = (x - center) / scale;
        double acc = 0.0;
        for (int d = degree; d >= 0; --d) acc = acc * t + beta[d];
        return acc;
    }
};

} // namespace

BdsdeSolution solve_bdsde(const std::function<double(double)>& terminal,
                          const CoefficientKernel& kernel,
                          const NoiseField& tilde_noise,
                          const ForwardEnsemble& forward,
                          const BdsdeConfig& config) {
    if (tilde_noise.seed() == forward.seed() &&
        tilde_noise.stream_id() == forward.stream_id())
        throw std::invalid_argument(
            "solve_bdsde: backward noise must use a stream distinct from the "
            "forward Brownian motion");
    if (tilde_noise.n_steps() < forward.n_steps())
        throw std::invalid_argument("solve_bdsde: noise shorter than the run");
    if (tilde_noise.dt() != forward.dt())
        throw std::invalid_argument("solve_bdsde: noise dt mismatch");

    const int n_paths = forward.n_paths();
    const int n_steps = forward.n_steps();
    const double dt = forward.dt();
    const double y0 = forward.y0();

    BdsdeSolution sol;
    sol.n_paths = n_paths;
    sol.n_steps = n_steps;
    sol.dt = dt;
    sol.y.resize(static_cast<size_t>(n_paths) * (n_steps + 1));
    sol.z.assign(static_cast<size_t>(n_paths) * std::max(n_steps, 1), 0.0);

    for (int p = 0; p < n_paths; ++p)
        sol.y[static_cast<size_t>(p) * (n_steps + 1) + n_steps] =
            terminal(forward.position(p, n_steps));

    std::vector<double> xs(n_paths), ynext(n_paths);

    for (int m = n_steps - 1; m >= 0; --m) {
        for (int p = 0; p < n_paths; ++p) {
            xs[p] = forward.position(p, m);
            ynext[p] = sol.y_at(p, m + 1);
        }
        PolyBasis basis(xs, config.basis_degree);
        const int k = basis.n_cols();

        // One joint least-squares fit of Y_{m+1} on the polynomial basis in
        // X_m augmented with the martingale columns phi(X) dB/dt and the Ito
        // columns phi(X)(dB^2/dt - 1). The phi(X) coefficients estimate
        // E[Y_{m+1} | G_m]; the dB-group coefficients are the regression
        // estimate of E[Y_{m+1} dB_m]/dt, i.e. Z_m. The extra groups double
        // as control variates, which keeps the backward error accumulation
        // of the fitted values near the Monte Carlo floor.
        std::vector<double> X(static_cast<size_t>(n_paths) * (3 * k));
        for (int p = 0; p < n_paths; ++p) {
            double* row = &X[static_cast<size_t>(p) * (3 * k)];
            basis.fill_row(xs[p], row);
            double db = forward.increment(p, m);
            double ito = db * db / dt - 1.0;
            for (int c = 0; c < k; ++c) {
                row[k + c] = row[c] * db; // coefficient group recovers Z
                row[2 * k + c] = row[c] * ito;
            }
        }
        std::vector<double> beta = least_squares(X, n_paths, 3 * k, ynext);
        std::vector<double> beta_y(beta.begin(), beta.begin() + k);
        std::vector<double> beta_z(beta.begin() + k, beta.begin() + 2 * k);

        // Backward noise enters at the right endpoint of the cell.
        auto ctx = kernel.step_context(tilde_noise, m);
        for (int p = 0; p < n_paths; ++p) {
            double noise_term = kernel.noise_term(ctx, 0, y0, ynext[p]);
            sol.y[static_cast<size_t>(p) * (n_steps + 1) + m] =
                basis.eval(beta_y, xs[p]) + noise_term;
            sol.z[static_cast<size_t>(p) * n_steps + m] = basis.eval(beta_z, xs[p]);
        }
    }

    double z2 = 0.0;
    for (int p = 0; p < n_paths; ++p)
        for (int s = 0; s < n_steps; ++s) z2 += sol.z_at(p, s) * sol.z_at(p, s) * dt;
    sol.expected_int_z2 = z2 / n_paths;
    return sol;
}

IppResidual ipp_residual(const std::vector<double>& terminal_xi,
                         const std::function<double(int, int)>& alpha,
                         const std::function<double(int, int)>& z,
                         const LevelSpec& level, std::uint64_t seed,
                         std::uint64_t stream_id,
                         const ForwardEnsemble& forward,
                         const std::function<double(double)>& f,
                         const std::function<double(double)>& df,
                         const std::function<double(double)>& d2f,
                         int t_index) {
    const int n_paths = forward.n_paths();
    const int n_steps = forward.n_steps();
    const double dt = forward.dt();
    const int nc = level.n_cells;
    const double meas = level.cell_measure();
    if (static_cast<int>(terminal_xi.size()) != n_paths)
        throw std::invalid_argument("ipp_residual: terminal size mismatch");
    if (t_index < 0 || t_index >= n_steps)
        throw std::invalid_argument("ipp_residual: t_index out of range");

    // The field and its square on the cells, per step.
    std::vector<double> alpha_sq(n_steps, 0.0);
    std::vector<double> alpha_val(static_cast<size_t>(n_steps) * nc);
    for (int s = 0; s < n_steps; ++s)
        for (int c = 0; c < nc; ++c) {
            double a = alpha(s, c);
            alpha_val[static_cast<size_t>(s) * nc + c] = a;
            alpha_sq[s] += a * a * meas;
        }

    const CounterRng rng(seed, stream_id);
    const double sigma = std::sqrt(dt * meas);

    double sq_sum = 0.0, scale_sum = 0.0;
    std::vector<double> y(n_steps + 1), alpha_dw(n_steps);
    for (int p = 0; p < n_paths; ++p) {
        for (int s = 0; s < n_steps; ++s) {
            double acc = 0.0;
            for (int c = 0; c < nc; ++c)
                acc += alpha_val[static_cast<size_t>(s) * nc + c] * sigma *
                       rng.normal(static_cast<std::uint64_t>(p),
                                  static_cast<std::uint64_t>(s) * nc + c);
            alpha_dw[s] = acc;
        }
        y[n_steps] = terminal_xi[p];
        for (int s = n_steps - 1; s >= 0; --s)
            y[s] = y[s + 1] + alpha_dw[s] - z(s, p) * forward.increment(p, s);
        // Right side of the formula: backward terms at right endpoints,
        // forward terms at left endpoints.
        double rhs = f(terminal_xi[p]);
        for (int s = n_steps - 1; s >= t_index; --s) {
            rhs += df(y[s + 1]) * alpha_dw[s];
            rhs -= z(s, p) * df(y[s]) * forward.increment(p, s);
            rhs += 0.5 * d2f(y[s + 1]) * alpha_sq[s] * dt;
            rhs -= 0.5 * z(s, p) * z(s, p) * d2f(y[s]) * dt;
        }
        double lhs = f(y[t_index]);
        sq_sum += (lhs - rhs) * (lhs - rhs);
        scale_sum += lhs * lhs;
    }
    IppResidual out;
    out.rms = std::sqrt(sq_sum / n_paths);
    out.scale = std::sqrt(scale_sum / n_paths);
    return out;
}

RepresentationReport check_representation(const Trajectory& traj,
                                          const GridFunction& initial,
                                          const CoefficientKernel& kernel,
                                          const NoiseField& noise,
                                          const RepresentationConfig& config) {
    if (traj.noise_hash != noise.manifest_hash())
        throw std::invalid_argument(
            "check_representation: trajectory was not produced by this noise "
            "realization (manifest hash mismatch)");
    for (size_t i = 0; i < traj.saved_steps.size(); ++i)
        if (traj.saved_steps[i] != static_cast<int>(i))
            throw std::invalid_argument(
                "check_representation: trajectory must be saved at every step");

    const int n_total = static_cast<int>(traj.saved_steps.size()) - 1;
    const double dt = traj.dt;
    const double T = n_total * dt;
    int t_index = static_cast<int>(std::llround(config.t / dt));
    if (t_index < 0 || t_index >= n_total)
        throw std::invalid_argument("check_representation: t outside the run");

    NoiseField reversed = noise.time_reversed();

    // Backward fields: tilde u_m = u_{n_total - m}; derivative fields for Z.
    auto u_back = [&](int m) -> const GridFunction& {
        return traj.states[n_total - m];
    };
    std::vector<GridFunction> grad_back(n_total + 1);
    for (int m = t_index; m <= n_total; ++m) grad_back[m] = u_back(m).derivative();

    // X_1 integrability diagnostic along the backward solution.
    Weight w = Weight::exponential(traj.grid);
    double x1_int = 0.0;
    for (int m = t_index; m <= n_total; ++m) {
        double n1 = norm1(u_back(m), w);
        x1_int += n1 * n1 * dt;
    }

    const int n_bsteps = n_total - t_index;
    ForwardEnsemble forward(config.t, config.y, dt, n_bsteps, config.n_paths,
                            config.seed, config.stream_id);

    const GridSpec& spec = traj.grid;
    auto nearest_index = [&](double x) {
        int i = static_cast<int>(std::llround((x - spec.x_min) / spec.dx()));
        return std::clamp(i, 0, spec.n_points() - 1);
    };

    std::vector<CoefficientKernel::StepContext> contexts(n_bsteps);
    for (int s = 0; s < n_bsteps; ++s)
        contexts[s] = kernel.step_context(reversed, t_index + s);

    double res_sum = 0.0, res_sq = 0.0, term_sq = 0.0, term_sum = 0.0;
    const double y_t = u_back(t_index).interpolate(config.y);
    for (int p = 0; p < config.n_paths; ++p) {
        // Candidate pair along the path; knot s of the ensemble is backward
        // time t_index + s.
        double terminal = initial.interpolate(forward.position(p, n_bsteps));
        double backward_sum = 0.0, forward_sum = 0.0;
        for (int s = 0; s < n_bsteps; ++s) {
            int m = t_index + s;
            double x_right = forward.position(p, s + 1);
            double y_right = u_back(m + 1).interpolate(x_right);
            backward_sum += kernel.noise_term(contexts[s], nearest_index(x_right),
                                              x_right, y_right);
            double z_left = grad_back[m].interpolate(forward.position(p, s));
            forward_sum += z_left * forward.increment(p, s);
        }
        double y_start = u_back(t_index).interpolate(forward.position(p, 0));
        double residual = y_start - terminal - backward_sum + forward_sum;
        res_sum += residual;
        res_sq += residual * residual;
        term_sq += terminal * terminal;
        term_sum += terminal;
    }

    RepresentationReport rep;
    rep.residual_mean = res_sum / config.n_paths;
    rep.residual_rms = std::sqrt(res_sq / config.n_paths);
    rep.terminal_scale = std::sqrt(term_sq / config.n_paths);
    rep.candidate_value = y_t;
    rep.feynman_kac_gap = std::fabs(y_t - term_sum / config.n_paths);
    rep.x1_integral = x1_int;
    return rep;
}

} // namespace spdelab
