#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "spdelab/quadrature.hpp"
#include "spdelab/rng.hpp"
#include "spdelab/runner.hpp"
#include "spdelab/verify.hpp"

using namespace spdelab;

namespace {

std::vector<double> cloud(int n, double width = 0.25) {
    std::vector<double> pos(n);
    for (int i = 0; i < n; ++i) pos[i] = width * normal_quantile((i + 0.5) / n);
    return pos;
}

} // namespace

TEST_CASE("mp_check with f = 1 on a particle path") {
    ParticleConfig pc;
    pc.n_init = 200;
    pc.dt = 4e-4;
    pc.horizon = 0.1;
    pc.seed = 41;
    pc.snapshot_every = 25;
    MeasurePath path = simulate_sbm_particles(pc, cloud(200));
    MpReport rep = mp_check(path, TestFunction::constant_one(), MpKind::Sbm);
    // f'' = 0: the increments are exactly the mass increments, and the
    // predicted QV is exactly int mu_s(1) ds.
    for (size_t n = 0; n + 1 < path.snapshots.size(); ++n)
        CHECK(rep.martingale_increments[n] ==
              doctest::Approx(path.snapshots[n + 1].total_mass() -
                              path.snapshots[n].total_mass())
                  .epsilon(1e-12));
    double predicted = 0.0;
    for (size_t n = 0; n + 1 < path.snapshots.size(); ++n)
        predicted += path.snapshots[n].total_mass() * path.dt_snapshot;
    CHECK(rep.predicted_qv == doctest::Approx(predicted).epsilon(1e-12));
}

TEST_CASE("mp_check flags a deterministic path as noise-free") {
    GridSpec g(-8.0, 8.0, 256);
    SolverConfig sc;
    sc.grid = g;
    sc.dt = 1e-3;
    sc.n_steps = 200;
    sc.kernel = CoefficientKernel::zero(LevelSpec::unit_interval(1));
    sc.initial = smoothed_mass_cdf(g, 0.0, 0.25, 1.0, CdfConvention::FromLeft);
    sc.save_every = 10;
    NoiseField noise = sample_noise(200, 1e-3, LevelSpec::unit_interval(1), 42, 0);
    Trajectory traj = solve(sc, noise);
    MpReport rep = mp_check(traj, TestFunction::gaussian_bump(0.0, 1.0), MpKind::Sbm);
    CHECK(rep.ratio < 0.05);
}

TEST_CASE("mp_check ratio near one for SBM particles") {
    const int replicas = 30;
    std::vector<double> ratios(replicas);
    TestFunction bump = TestFunction::gaussian_bump(0.0, 1.0);
    auto init = cloud(500);
    parallel_for(replicas, 2, [&](int r) {
        ParticleConfig pc;
        pc.n_init = 500;
        pc.dt = 1.6e-4;
        pc.horizon = 0.25;
        pc.seed = 43;
        pc.stream_id = r;
        pc.snapshot_every = 60;
        MeasurePath path = simulate_sbm_particles(pc, init);
        ratios[r] = mp_check(path, bump, MpKind::Sbm).ratio;
    });
    double m = mean(ratios);
    CHECK(m > 0.8);
    CHECK(m < 1.2);
}

TEST_CASE("mp_check_fv degenerate cases") {
    SUBCASE("f = 1 is conservative") {
        ParticleConfig pc;
        pc.n_init = 100;
        pc.dt = 4e-4;
        pc.horizon = 0.05;
        pc.seed = 44;
        pc.snapshot_every = 25;
        MeasurePath path = simulate_fv_particles(pc, cloud(100));
        MpReport rep = mp_check(path, TestFunction::constant_one(), MpKind::Fv);
        // mu(1) = 1 up to the rounding of N copies of 1/N.
        CHECK(std::fabs(rep.predicted_qv) < 1e-14);
        CHECK(rep.realized_qv < 1e-25);
        CHECK(rep.ratio == 0.0);
    }
    SUBCASE("single-particle path must NOT pass") {
        // mu(f^2) - mu(f)^2 = 0 for a single atom while the realized QV is
        // the Brownian Ito variation: the checker reports the mismatch.
        MeasurePath path;
        path.dt_snapshot = 1e-2;
        SequentialRng rng(99);
        double x = 0.0;
        for (int s = 0; s <= 100; ++s) {
            AtomicMeasure m;
            m.positions = {x};
            m.masses = {1.0};
            m.time = s * path.dt_snapshot;
            path.snapshots.push_back(m);
            x += std::sqrt(path.dt_snapshot) * rng.normal();
        }
        MpReport rep = mp_check(path, TestFunction::gaussian_bump(0.0, 1.0), MpKind::Fv);
        CHECK(std::isinf(rep.ratio));
    }
}

TEST_CASE("mp_check ratio near one for the Moran model") {
    const int replicas = 30;
    std::vector<double> ratios(replicas);
    TestFunction bump = TestFunction::gaussian_bump(0.0, 1.0);
    auto init = cloud(200);
    parallel_for(replicas, 2, [&](int r) {
        ParticleConfig pc;
        pc.n_init = 200;
        pc.dt = 4e-4;
        pc.horizon = 0.25;
        pc.seed = 45;
        pc.stream_id = r;
        pc.snapshot_every = 25;
        MeasurePath path = simulate_fv_particles(pc, init);
        ratios[r] = mp_check(path, bump, MpKind::Fv).ratio;
    });
    double m = mean(ratios);
    CHECK(m > 0.8);
    CHECK(m < 1.2);
}

TEST_CASE("yw_a values and recursion") {
    CHECK(yw_a(0) == 1.0);
    CHECK(yw_a(1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
    CHECK(yw_a(1) == doctest::Approx(0.3678794).epsilon(1e-6));
    CHECK(yw_a(2) == doctest::Approx(std::exp(-3.0)).epsilon(1e-12));
    CHECK(yw_a(2) == doctest::Approx(0.0497871).epsilon(1e-5));
    for (int k = 1; k <= 10; ++k) {
        CHECK(std::fabs(yw_a(k) - std::exp(-0.5 * k * (k + 1))) <= 1e-10);
        // int_{a_k}^{a_{k-1}} dz/z = k, by quadrature.
        double integral = adaptive_simpson([](double z) { return 1.0 / z; },
                                           yw_a(k), yw_a(k - 1), 1e-12);
        CHECK(integral == doctest::Approx(static_cast<double>(k)).epsilon(1e-10));
    }
}

TEST_CASE("yw family properties") {
    for (int k : {1, 2, 3, 5, 10}) {
        YwFamily fam(k);
        const double L = fam.a_lower(), R = fam.a_upper();

        CHECK(fam.psi_integral() == doctest::Approx(1.0).epsilon(1e-9));
        // Independent mass check by quadrature of psi.
        double mass = adaptive_simpson([&](double z) { return fam.psi(z); }, L, R,
                                       1e-10, 70);
        CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));

        CHECK(fam.psi(L) == 0.0);
        CHECK(fam.psi(R) == 0.0);
        CHECK(fam.psi(0.5 * L) == 0.0);
        CHECK(fam.psi(1.5 * R) == 0.0);

        CHECK(fam.phi(0.0) == 0.0);
        for (double z : {0.3 * R, 0.9 * R, 1.7 * R, 10.0 * R}) {
            CHECK(fam.phi(z) == fam.phi(-z)); // even by construction
            CHECK(fam.phi_prime(z) <= 1.0 + 1e-12);
            CHECK(fam.phi_prime(-z) >= -1.0 - 1e-12);
            double env = z - fam.phi(z);
            CHECK(env >= -1e-12);
            CHECK(env <= R + 1e-12);
        }
        CHECK(fam.phi_prime(R * 1.0001) == doctest::Approx(1.0));
        CHECK(fam.phi_prime(-R * 1.0001) == doctest::Approx(-1.0));

        // 2/(kz) envelope and the second-derivative bound.
        for (int i = 1; i < 3000; ++i) {
            double z = L + (R - L) * i / 3000.0;
            CHECK(fam.psi(z) <= 2.0 / (k * z) * (1.0 + 1e-9));
            CHECK(std::fabs(z) * fam.phi_second(z) <= 2.0 / k + 1e-9);
        }
    }
}

TEST_CASE("yw phi matches numeric double integration of psi") {
    // Oracle for the closed-form piecewise integration: trapezoid cumulative
    // sums of psi on a fine grid.
    for (int k : {1, 2, 4, 7}) {
        YwFamily fam(k);
        const double L = fam.a_lower(), R = fam.a_upper();
        const int n = 200000;
        double h = R / n;
        double Psi = 0.0, Phi = 0.0, prev_psi = fam.psi(0.0);
        int checked = 0;
        for (int i = 1; i <= n; ++i) {
            double z = i * h;
            double cur_psi = fam.psi(z);
            double Psi_next = Psi + 0.5 * (prev_psi + cur_psi) * h;
            Phi += 0.5 * (Psi + Psi_next) * h;
            Psi = Psi_next;
            prev_psi = cur_psi;
            if (i % (n / 10) == 0 && z > L) {
                CHECK(fam.phi(z) == doctest::Approx(Phi).epsilon(1e-6));
                ++checked;
            }
        }
        CHECK(checked >= 5);
    }
}

TEST_CASE("yw construction rejects an invalid request") {
    CHECK_THROWS(YwFamily(0));
}

TEST_CASE("coupling gap") {
    GridSpec g(-8.0, 8.0, 128);
    GridFunction F = smoothed_mass_cdf(g, 0.0, 0.25, 1.0, CdfConvention::FromLeft);
    LevelSpec band = sbm_level_band(F, 0.1, 1.5, 0.05);
    SolverConfig sc;
    sc.grid = g;
    sc.dt = 1e-3;
    sc.n_steps = 100;
    sc.kernel = CoefficientKernel::sbm(band);
    sc.initial = F;
    sc.save_every = 10;
    NoiseField noise = sample_noise(100, 1e-3, band, 46, 0);

    Trajectory a = solve(sc, noise);
    Trajectory b = solve(sc, noise);
    CHECK(coupling_gap(a, b) == 0.0);

    NoiseField other = sample_noise(100, 1e-3, band, 46, 1);
    Trajectory c = solve(sc, other);
    CHECK_THROWS(coupling_gap(a, c)); // decoupled comparison is refused
}

TEST_CASE("law distance") {
    CounterRng rng(47, 0);
    std::vector<double> a(300), b(300);
    for (int i = 0; i < 300; ++i) {
        a[i] = rng.normal(0, i);
        b[i] = rng.normal(1, i);
    }
    SUBCASE("identical samples") {
        LawDistance d = law_distance(a, a);
        CHECK(d.ks.statistic == 0.0);
        CHECK(d.ks.p_value == doctest::Approx(1.0));
    }
    SUBCASE("same law calibrates above 0.01") {
        LawDistance d = law_distance(a, b);
        CHECK(d.ks.p_value > 0.01);
    }
    SUBCASE("shifted law is detected") {
        std::vector<double> c = b;
        for (auto& x : c) x += 1.0;
        LawDistance d = law_distance(a, c);
        CHECK(d.ks.p_value < 1e-6);
    }
    SUBCASE("too few samples raise") {
        std::vector<double> tiny(50, 0.0);
        CHECK_THROWS(law_distance(tiny, a));
    }
}

TEST_CASE("holder modulus") {
    GridSpec g(-8.0, 8.0, 256);

    SUBCASE("smooth deterministic path has spatial exponent near 1") {
        SolverConfig sc;
        sc.grid = g;
        sc.dt = 1e-3;
        sc.n_steps = 100;
        sc.kernel = CoefficientKernel::zero(LevelSpec::unit_interval(1));
        sc.initial = GridFunction::sample(g, [](double x) { return heat_kernel(0.2, x); });
        sc.save_every = 2;
        NoiseField noise = sample_noise(100, 1e-3, LevelSpec::unit_interval(1), 48, 0);
        Trajectory traj = solve(sc, noise);
        HolderReport rep = holder_modulus(traj);
        CHECK(rep.space_defined);
        CHECK(rep.space_exponent > 0.8);
        CHECK(rep.space_exponent < 1.2);
    }
    SUBCASE("constant path reports undefined exponents") {
        Trajectory traj;
        traj.grid = g;
        traj.dt = 1e-3;
        for (int s = 0; s < 8; ++s) {
            traj.saved_steps.push_back(s);
            traj.states.push_back(GridFunction(g, 1.0));
        }
        HolderReport rep = holder_modulus(traj);
        CHECK_FALSE(rep.time_defined);
        CHECK_FALSE(rep.space_defined);
    }
    SUBCASE("sbm trajectory temporal exponent is reported in band") {
        GridFunction F = smoothed_mass_cdf(g, 0.0, 0.25, 1.0, CdfConvention::FromLeft);
        LevelSpec band = sbm_level_band(F, 0.25, 1.5, 0.02);
        SolverConfig sc;
        sc.grid = g;
        sc.dt = 1e-3;
        sc.n_steps = 250;
        sc.kernel = CoefficientKernel::sbm(band);
        sc.initial = F;
        sc.save_every = 1;
        NoiseField noise = sample_noise(250, 1e-3, band, 49, 0);
        Trajectory traj = solve(sc, noise);
        HolderReport rep = holder_modulus(traj);
        CHECK(rep.time_defined);
        CHECK(rep.time_exponent > 0.0);
        CHECK(rep.time_exponent < 0.75);
    }
}
