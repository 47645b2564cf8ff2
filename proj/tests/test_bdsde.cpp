#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "spdelab/bdsde.hpp"
#include "spdelab/runner.hpp"
#include "spdelab/stats.hpp"

using namespace spdelab;

TEST_CASE("forward ensemble") {
    SUBCASE("terminal variance is T - t") {
        ForwardEnsemble fwd = simulate_forward(0.0, 0.0, 1e-2, 50, 10000, 51, 0);
        std::vector<double> xt(fwd.n_paths());
        for (int p = 0; p < fwd.n_paths(); ++p) xt[p] = fwd.position(p, 50);
        CHECK(mean(xt) == doctest::Approx(0.0).epsilon(0.05));
        CHECK(variance(xt) == doctest::Approx(0.5).epsilon(0.05));
    }
    SUBCASE("zero steps pins the start") {
        ForwardEnsemble fwd = simulate_forward(0.3, 3.0, 1e-2, 0, 5, 52, 0);
        for (int p = 0; p < 5; ++p) CHECK(fwd.position(p, 0) == 3.0);
    }
    SUBCASE("same seed reproduces the ensemble") {
        ForwardEnsemble a = simulate_forward(0.0, 1.0, 1e-2, 20, 100, 53, 4);
        ForwardEnsemble b = simulate_forward(0.0, 1.0, 1e-2, 20, 100, 53, 4);
        for (int p = 0; p < 100; ++p)
            for (int s = 0; s <= 20; ++s)
                CHECK(a.position(p, s) == b.position(p, s));
    }
}

TEST_CASE("bdsde closed forms with zero kernel") {
    const double T = 0.5;
    const int n_steps = 50, n_paths = 10000;
    const double dt = T / n_steps;
    ForwardEnsemble fwd = simulate_forward(0.0, 0.0, dt, n_steps, n_paths, 54, 1);
    CoefficientKernel none = CoefficientKernel::zero(LevelSpec::unit_interval(1));
    NoiseField tilde = sample_noise(n_steps, dt, none.level(), 54, 2);

    SUBCASE("terminal F(x) = x gives (Y, Z) = (X, 1)") {
        BdsdeSolution sol =
            solve_bdsde([](double x) { return x; }, none, tilde, fwd, {});
        double y_err = 0.0, y_ref = 0.0, z_err = 0.0, z_ref = 0.0;
        for (int p = 0; p < n_paths; ++p) {
            CHECK(sol.y_at(p, n_steps) == fwd.position(p, n_steps)); // exact terminal
            for (int s = 0; s < n_steps; ++s) {
                double x = fwd.position(p, s);
                y_err += (sol.y_at(p, s) - x) * (sol.y_at(p, s) - x);
                y_ref += x * x;
                z_err += (sol.z_at(p, s) - 1.0) * (sol.z_at(p, s) - 1.0);
                z_ref += 1.0;
            }
        }
        CHECK(std::sqrt(y_err / y_ref) < 0.02);
        CHECK(std::sqrt(z_err / z_ref) < 0.02);
    }
    SUBCASE("terminal F(x) = x^2 gives Y = X^2 + (T - s), Z = 2X") {
        BdsdeSolution sol =
            solve_bdsde([](double x) { return x * x; }, none, tilde, fwd, {});
        double y_err = 0.0, y_ref = 0.0, z_err = 0.0, z_ref = 0.0;
        for (int p = 0; p < n_paths; ++p)
            for (int s = 0; s < n_steps; ++s) {
                double x = fwd.position(p, s);
                double ty = x * x + (T - s * dt);
                double tz = 2.0 * x;
                y_err += (sol.y_at(p, s) - ty) * (sol.y_at(p, s) - ty);
                y_ref += ty * ty;
                z_err += (sol.z_at(p, s) - tz) * (sol.z_at(p, s) - tz);
                z_ref += tz * tz;
            }
        CHECK(std::sqrt(y_err / y_ref) < 0.02);
        CHECK(std::sqrt(z_err / z_ref) < 0.02);
    }
    SUBCASE("Y is a discrete martingale: increments have small z-score") {
        BdsdeSolution sol =
            solve_bdsde([](double x) { return x; }, none, tilde, fwd, {});
        double sum = 0.0, sq = 0.0;
        int cnt = 0;
        for (int p = 0; p < n_paths; ++p)
            for (int s = 0; s < n_steps; ++s) {
                double dy = sol.y_at(p, s + 1) - sol.y_at(p, s);
                sum += dy;
                sq += dy * dy;
                ++cnt;
            }
        double z = sum / std::sqrt(sq);
        CHECK(std::fabs(z) < 3.0);
    }
}

TEST_CASE("bdsde coupling and stream separation") {
    const int n_steps = 20, n_paths = 500;
    const double dt = 1e-2;
    ForwardEnsemble fwd = simulate_forward(0.0, 0.0, dt, n_steps, n_paths, 55, 1);
    CoefficientKernel fv = CoefficientKernel::fv(32);
    NoiseField tilde_a = sample_noise(n_steps, dt, fv.level(), 55, 2);
    NoiseField tilde_b = sample_noise(n_steps, dt, fv.level(), 55, 3);
    auto terminal = [](double x) { return normal_cdf(x); };

    BdsdeSolution s1 = solve_bdsde(terminal, fv, tilde_a, fwd, {});
    BdsdeSolution s2 = solve_bdsde(terminal, fv, tilde_a, fwd, {});
    CHECK(s1.y == s2.y); // full coupling is bit-identical
    CHECK(s1.z == s2.z);

    BdsdeSolution s3 = solve_bdsde(terminal, fv, tilde_b, fwd, {});
    CHECK(s1.y != s3.y); // distinct backward noise decouples Y

    // Reusing the forward stream for the backward noise is refused.
    NoiseField clash = sample_noise(n_steps, dt, fv.level(), 55, 1);
    CHECK_THROWS(solve_bdsde(terminal, fv, clash, fwd, {}));
}

TEST_CASE("backward integral convention: right vs left endpoints") {
    // For Y-dependent integrands the two Riemann conventions differ at first
    // order in dt; the gap shrinks when dt is halved.
    auto convention_gap = [](double dt, int n_steps) {
        ForwardEnsemble fwd = simulate_forward(0.0, 0.0, dt, n_steps, 2000, 56, 1);
        CoefficientKernel fv = CoefficientKernel::fv(32);
        NoiseField tilde = sample_noise(n_steps, dt, fv.level(), 56, 2);
        BdsdeSolution sol =
            solve_bdsde([](double x) { return normal_cdf(x); }, fv, tilde, fwd, {});
        double gap = 0.0;
        for (int p = 0; p < fwd.n_paths(); ++p) {
            double right = 0.0, left = 0.0;
            for (int s = 0; s < n_steps; ++s) {
                auto ctx = fv.step_context(tilde, s);
                right += fv.noise_term(ctx, 0, 0.0, sol.y_at(p, s + 1));
                left += fv.noise_term(ctx, 0, 0.0, sol.y_at(p, s));
            }
            gap += std::fabs(right - left);
        }
        return gap / fwd.n_paths();
    };
    double coarse = convention_gap(2e-2, 25);
    double fine = convention_gap(1e-2, 50);
    CHECK(fine < coarse);
}

TEST_CASE("rank-deficient regression raises a helpful error") {
    // Three paths cannot support a cubic basis plus control columns: the
    // normal equations are singular and the solver asks for more paths.
    ForwardEnsemble fwd = simulate_forward(0.0, 1.0, 1e-2, 2, 3, 57, 1);
    CoefficientKernel none = CoefficientKernel::zero(LevelSpec::unit_interval(1));
    NoiseField tilde = sample_noise(2, 1e-2, none.level(), 57, 2);
    CHECK_THROWS_AS(
        static_cast<void>(solve_bdsde([](double x) { return x; }, none, tilde, fwd, {})),
        std::runtime_error);
}

TEST_CASE("ito-pardoux-peng residual") {
    const double T = 0.25;

    SUBCASE("linear f telescopes exactly") {
        const int n_steps = 250, n_paths = 1000;
        const double dt = T / n_steps;
        ForwardEnsemble fwd = simulate_forward(0.0, 0.0, dt, n_steps, n_paths, 58, 1);
        std::vector<double> xi(n_paths);
        for (int p = 0; p < n_paths; ++p) xi[p] = fwd.position(p, n_steps);
        IppResidual res = ipp_residual(
            xi, [](int, int) { return 1.0; }, [](int, int) { return 1.0; },
            LevelSpec::unit_interval(1), 58, 2, fwd,
            [](double x) { return 2.0 * x + 1.0; }, [](double) { return 2.0; },
            [](double) { return 0.0; }, 0);
        CHECK(res.relative() < 1e-12);
        CHECK(res.relative() < 0.02);
    }

    SUBCASE("quadratic f with one noise mode meets the 3% budget") {
        const int n_steps = 250, n_paths = 1000;
        const double dt = T / n_steps;
        auto run = [&](double dt_i, int steps, std::uint64_t stream) {
            ForwardEnsemble fwd =
                simulate_forward(0.0, 0.0, dt_i, steps, n_paths, 59, stream);
            std::vector<double> xi(n_paths);
            for (int p = 0; p < n_paths; ++p) xi[p] = fwd.position(p, steps);
            return ipp_residual(
                xi, [](int, int) { return 1.0; }, [](int, int) { return 0.0; },
                LevelSpec::unit_interval(1), 59, stream + 10, fwd,
                [](double x) { return x * x; }, [](double x) { return 2.0 * x; },
                [](double) { return 2.0; }, 0);
        };
        IppResidual res = run(dt, n_steps, 1);
        CHECK(res.relative() <= 0.03);

        // Refinement: halving dt lowers the residual at order >= 0.5.
        IppResidual res2 = run(dt / 2, 2 * n_steps, 3);
        CHECK(res2.rms < res.rms);
        CHECK(res.rms / res2.rms > std::pow(2.0, 0.4));
    }
}

TEST_CASE("representation check") {
    GridSpec g(-8.0, 8.0, 256);
    GridFunction F = smoothed_mass_cdf(g, 0.0, 0.5, 1.0, CdfConvention::FromLeft);
    const double dt = 1e-3;
    const int n_steps = 250;

    SUBCASE("zero kernel reduces to Feynman-Kac") {
        SolverConfig sc;
        sc.grid = g;
        sc.dt = dt;
        sc.n_steps = n_steps;
        sc.kernel = CoefficientKernel::zero(LevelSpec::unit_interval(1));
        sc.initial = F;
        sc.save_every = 1;
        NoiseField noise = sample_noise(n_steps, dt, sc.kernel.level(), 60, 0);
        Trajectory traj = solve(sc, noise);
        RepresentationConfig rc;
        rc.t = 0.1;
        rc.y = 0.0;
        rc.n_paths = 20000;
        rc.seed = 60;
        rc.stream_id = 9;
        RepresentationReport rep = check_representation(traj, F, sc.kernel, noise, rc);
        CHECK(rep.feynman_kac_gap <= 0.01 * rep.terminal_scale);
        CHECK(std::isfinite(rep.x1_integral));
    }

    SUBCASE("fv kernel residual is small and the hash is enforced") {
        SolverConfig sc;
        sc.grid = g;
        sc.dt = dt;
        sc.n_steps = n_steps;
        sc.kernel = CoefficientKernel::fv(64);
        sc.initial = F;
        sc.save_every = 1;
        NoiseField noise = sample_noise(n_steps, dt, sc.kernel.level(), 61, 0);
        Trajectory traj = solve(sc, noise);
        RepresentationConfig rc;
        rc.t = 0.1;
        rc.y = 0.0;
        rc.n_paths = 4000;
        rc.seed = 61;
        rc.stream_id = 9;
        RepresentationReport rep = check_representation(traj, F, sc.kernel, noise, rc);
        CHECK(std::fabs(rep.residual_mean) <= 0.05 * rep.terminal_scale);
        CHECK(rep.candidate_value == doctest::Approx(traj.states[150].interpolate(0.0)));

        NoiseField wrong = sample_noise(n_steps, dt, sc.kernel.level(), 61, 1);
        CHECK_THROWS(check_representation(traj, F, sc.kernel, wrong, rc));
    }
}
