#include "spdelab/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace spdelab {

TestFunction TestFunction::gaussian_bump(double center, double width) {
    TestFunction t;
    t.id = "gaussian_bump";
    const double w2 = width * width;
    t.f = [center, w2](double x) {
        double s = x - center;
        return std::exp(-0.5 * s * s / w2);
    };
    t.df = [center, w2](double x) {
        double s = x - center;
        return -(s / w2) * std::exp(-0.5 * s * s / w2);
    };
    t.d2f = [center, w2](double x) {
        double s = x - center;
        return (s * s / (w2 * w2) - 1.0 / w2) * std::exp(-0.5 * s * s / w2);
    };
    return t;
}

TestFunction TestFunction::constant_one() {
    TestFunction t;
    t.id = "one";
    t.f = [](double) { return 1.0; };
    t.df = [](double) { return 0.0; };
    t.d2f = [](double) { return 0.0; };
    return t;
}

TestFunction TestFunction::identity() {
    TestFunction t;
    t.id = "identity";
    t.f = [](double x) { return x; };
    t.df = [](double) { return 1.0; };
    t.d2f = [](double) { return 0.0; };
    return t;
}

namespace {

MpReport mp_from_series(const std::vector<double>& mu_f,
                        const std::vector<double>& mu_half_d2f,
                        const std::vector<double>& predicted_rate,
                        const std::vector<double>& interval_dt,
                        const std::string& id) {
    MpReport rep;
    rep.test_function = id;
    double realized = 0.0, predicted = 0.0, sum_dm = 0.0;
    for (size_t n = 0; n + 1 < mu_f.size(); ++n) {
        double dt = interval_dt[n];
        double dm = mu_f[n + 1] - mu_f[n] - mu_half_d2f[n] * dt;
        rep.martingale_increments.push_back(dm);
        realized += dm * dm;
        predicted += predicted_rate[n] * dt;
        sum_dm += dm;
    }
    rep.realized_qv = realized;
    rep.predicted_qv = predicted;
    if (predicted > 0.0)
        rep.ratio = realized / predicted;
    else
        // Degenerate predicted QV: a positive realized QV must not pass.
        rep.ratio = realized > 1e-12 ? std::numeric_limits<double>::infinity() : 0.0;
    rep.mean_z = realized > 0.0 ? sum_dm / std::sqrt(realized) : 0.0;
    return rep;
}

} // namespace

MpReport mp_check(const MeasurePath& path, const TestFunction& f, MpKind kind) {
    if (path.snapshots.size() < 2)
        throw std::invalid_argument("mp_check: need at least two snapshots");
    const size_t n = path.snapshots.size();
    std::vector<double> mu_f(n), mu_half_d2f(n), rate(n), dts(n - 1);
    for (size_t i = 0; i < n; ++i) {
        const AtomicMeasure& m = path.snapshots[i];
        mu_f[i] = m.integrate(f.f);
        mu_half_d2f[i] = 0.5 * m.integrate(f.d2f);
        double mu_f2 = m.integrate([&](double x) { double v = f.f(x); return v * v; });
        rate[i] = kind == MpKind::Sbm ? mu_f2 : mu_f2 - mu_f[i] * mu_f[i];
        if (i > 0) dts[i - 1] = m.time - path.snapshots[i - 1].time;
    }
    return mp_from_series(mu_f, mu_half_d2f, rate, dts, f.id);
}

MpReport mp_check(const Trajectory& traj, const TestFunction& f, MpKind kind) {
    if (traj.states.size() < 2)
        throw std::invalid_argument("mp_check: need at least two saved states");
    const GridSpec& spec = traj.grid;
    if (std::fabs(f.f(spec.x_min)) > 1e-8 || std::fabs(f.f(spec.x_max)) > 1e-8)
        throw std::invalid_argument("mp_check: test function must vanish at the boundary");
    // mu_s(g) read from the distribution function as a Stieltjes sum against
    // du (equivalently -<u, g'> after parts; the cellwise sum needs no extra
    // derivatives of f).
    auto measure_integral = [&](const GridFunction& u, auto&& g) {
        double s = 0.0;
        for (int i = 0; i < spec.n_cells; ++i)
            s += g(spec.point(i) + 0.5 * spec.dx()) * (u[i + 1] - u[i]);
        return s;
    };
    const size_t n = traj.states.size();
    std::vector<double> mu_f(n), mu_half_d2f(n), rate(n), dts(n - 1);
    for (size_t i = 0; i < n; ++i) {
        const GridFunction& u = traj.states[i];
        mu_f[i] = measure_integral(u, f.f);
        mu_half_d2f[i] = 0.5 * measure_integral(u, f.d2f);
        double mu_f2 = measure_integral(u, [&](double x) { double v = f.f(x); return v * v; });
        rate[i] = kind == MpKind::Sbm ? mu_f2 : mu_f2 - mu_f[i] * mu_f[i];
        if (i > 0)
            dts[i - 1] = (traj.saved_steps[i] - traj.saved_steps[i - 1]) * traj.dt;
    }
    return mp_from_series(mu_f, mu_half_d2f, rate, dts, f.id);
}

double yw_a(int k) {
    if (k < 0) throw std::invalid_argument("yw_a: k must be >= 0");
    double a = 1.0;
    for (int j = 1; j <= k; ++j) a *= std::exp(-static_cast<double>(j));
    return a;
}

YwFamily::YwFamily(int k) : k_(k) {
    if (k < 1) throw std::invalid_argument("YwFamily: k must be >= 1");
    a_lo_ = yw_a(k);
    a_hi_ = yw_a(k - 1);
    const double L = a_lo_, R = a_hi_;

    // First choice: triangular hat peaked at the geometric midpoint. When the
    // 2/(kz) envelope rejects it (it does for k >= 3), flatten the profile
    // onto the envelope shape: linear taper up from L, alpha/z in the middle,
    // linear taper down to R, with log-symmetric taper width.
    const double m = std::sqrt(L * R);
    const double h = 2.0 / (R - L);
    bool triangle_ok = true;
    for (int i = 1; i < 2000 && triangle_ok; ++i) {
        double z = L + (R - L) * i / 2000.0;
        double psi = z <= m ? h * (z - L) / (m - L) : h * (R - z) / (R - m);
        if (psi * k * z > 2.0 * (1.0 + 1e-12)) triangle_ok = false;
    }
    if (triangle_ok) {
        Piece rise{L, m, false};
        rise.b = h / (m - L);
        rise.a = -rise.b * L;
        Piece fall{m, R, false};
        fall.b = -h / (R - m);
        fall.a = -fall.b * R;
        pieces_ = {rise, fall};
    } else {
        double s = std::min(std::log(2.0), 0.45 * k);
        double L1 = L * std::exp(s), R1 = R * std::exp(-s);
        double alpha = 1.0 / (k - 2.0 * s + std::sinh(s));
        Piece rise{L, L1, false};
        rise.b = (alpha / L1) / (L1 - L);
        rise.a = -rise.b * L;
        Piece mid{L1, R1, true};
        mid.c = alpha;
        Piece fall{R1, R, false};
        fall.b = -(alpha / R1) / (R - R1);
        fall.a = -fall.b * R;
        pieces_ = {rise, mid, fall};
    }

    // Accumulate Psi and phi at the piece boundaries.
    double Psi = 0.0, Phi = 0.0;
    // phi accumulates over [0, L] first: psi = 0 there, so phi(L) = 0.
    for (auto& p : pieces_) {
        p.Psi0 = Psi;
        p.Phi0 = Phi;
        double z0 = p.z0, z1 = p.z1;
        double dPsi, dPhi;
        if (p.reciprocal) {
            dPsi = p.c * std::log(z1 / z0);
            dPhi = Psi * (z1 - z0) + p.c * (z1 * std::log(z1 / z0) - (z1 - z0));
        } else {
            dPsi = p.a * (z1 - z0) + 0.5 * p.b * (z1 * z1 - z0 * z0);
            double quad = 0.5 * p.a * (z1 - z0) * (z1 - z0);
            double cub = 0.5 * p.b * ((z1 * z1 * z1 - z0 * z0 * z0) / 3.0 -
                                      z0 * z0 * (z1 - z0));
            dPhi = Psi * (z1 - z0) + quad + cub;
        }
        Psi += dPsi;
        Phi += dPhi;
    }
    Psi_end_ = Psi;
    Phi_end_ = Phi;

    if (std::fabs(Psi_end_ - 1.0) > 1e-6)
        throw std::runtime_error("YwFamily: psi normalization failed");
    for (int i = 1; i < 4000; ++i) {
        double z = L + (R - L) * i / 4000.0;
        if (psi(z) * k * z > 2.0 * (1.0 + 1e-9))
            throw std::runtime_error("YwFamily: psi violates the 2/(kz) bound");
    }
}

double YwFamily::psi(double z) const {
    if (z <= a_lo_ || z >= a_hi_) return 0.0;
    for (const auto& p : pieces_)
        if (z >= p.z0 && z <= p.z1)
            return p.reciprocal ? p.c / z : p.a + p.b * z;
    return 0.0;
}

double YwFamily::psi_integral() const { return Psi_end_; }

double YwFamily::cumulative(double y) const {
    if (y <= a_lo_) return 0.0;
    if (y >= a_hi_) return Psi_end_;
    for (const auto& p : pieces_) {
        if (y <= p.z1) {
            if (p.reciprocal) return p.Psi0 + p.c * std::log(y / p.z0);
            return p.Psi0 + p.a * (y - p.z0) + 0.5 * p.b * (y * y - p.z0 * p.z0);
        }
    }
    return Psi_end_;
}

double YwFamily::phi(double z) const {
    double y = std::fabs(z);
    if (y <= a_lo_) return 0.0;
    if (y >= a_hi_) return Phi_end_ + (y - a_hi_) * Psi_end_;
    for (const auto& p : pieces_) {
        if (y <= p.z1) {
            double z0 = p.z0;
            if (p.reciprocal)
                return p.Phi0 + p.Psi0 * (y - z0) +
                       p.c * (y * std::log(y / z0) - (y - z0));
            double quad = 0.5 * p.a * (y - z0) * (y - z0);
            double cub = 0.5 * p.b * ((y * y * y - z0 * z0 * z0) / 3.0 -
                                      z0 * z0 * (y - z0));
            return p.Phi0 + p.Psi0 * (y - z0) + quad + cub;
        }
    }
    return Phi_end_;
}

double YwFamily::phi_prime(double z) const {
    double s = z >= 0.0 ? 1.0 : -1.0;
    return s * cumulative(std::fabs(z));
}

double YwFamily::phi_second(double z) const { return psi(std::fabs(z)); }

double coupling_gap(const Trajectory& a, const Trajectory& b) {
    if (!(a.grid == b.grid))
        throw std::invalid_argument("coupling_gap: trajectories on different grids");
    if (a.noise_hash != b.noise_hash)
        throw std::invalid_argument(
            "coupling_gap: noise manifests differ; the pathwise comparison "
            "requires the identical noise realization");
    if (a.saved_steps != b.saved_steps)
        throw std::invalid_argument("coupling_gap: saved-step cadences differ");
    double gap = 0.0;
    for (size_t s = 0; s < a.states.size(); ++s)
        for (int i = 0; i < a.grid.n_points(); ++i)
            gap = std::max(gap, std::fabs(a.states[s][i] - b.states[s][i]));
    return gap;
}

LawDistance law_distance(const std::vector<double>& samples_a,
                         const std::vector<double>& samples_b) {
    if (samples_a.size() < 100 || samples_b.size() < 100)
        throw std::invalid_argument("law_distance: need >= 100 samples per side");
    LawDistance d;
    d.ks = ks_two_sample(samples_a, samples_b);
    return d;
}

HolderReport holder_modulus(const Trajectory& traj) {
    HolderReport rep;
    const size_t n_snap = traj.states.size();
    const int n_pts = traj.grid.n_points();

    auto rms_time = [&](size_t lag) {
        double s = 0.0;
        size_t cnt = 0;
        for (size_t t = 0; t + lag < n_snap; ++t)
            for (int i = 0; i < n_pts; ++i) {
                double d = traj.states[t + lag][i] - traj.states[t][i];
                s += d * d;
                ++cnt;
            }
        return cnt ? std::sqrt(s / cnt) : 0.0;
    };
    auto rms_space = [&](int lag) {
        double s = 0.0;
        size_t cnt = 0;
        for (size_t t = 0; t < n_snap; ++t)
            for (int i = 0; i + lag < n_pts; ++i) {
                double d = traj.states[t][i + lag] - traj.states[t][i];
                s += d * d;
                ++cnt;
            }
        return cnt ? std::sqrt(s / cnt) : 0.0;
    };

    double snap_dt = n_snap > 1 ? (traj.saved_steps[1] - traj.saved_steps[0]) * traj.dt
                                : traj.dt;
    std::vector<double> log_lag, log_rms;
    for (size_t lag = 1; lag <= 8 && lag * 4 <= n_snap; lag *= 2) {
        double r = rms_time(lag);
        if (r > 0.0) {
            log_lag.push_back(std::log(lag * snap_dt));
            log_rms.push_back(std::log(r));
        }
    }
    if (log_lag.size() >= 2) {
        rep.time_exponent = ols_slope(log_lag, log_rms);
        rep.time_defined = true;
    }
    log_lag.clear();
    log_rms.clear();
    for (int lag = 1; lag <= 8 && lag * 4 <= n_pts; lag *= 2) {
        double r = rms_space(lag);
        if (r > 0.0) {
            log_lag.push_back(std::log(lag * traj.grid.dx()));
            log_rms.push_back(std::log(r));
        }
    }
    if (log_lag.size() >= 2) {
        rep.space_exponent = ols_slope(log_lag, log_rms);
        rep.space_defined = true;
    }
    return rep;
}

} // namespace spdelab
