#pragma once

#include <functional>
#include <string>
#include <vector>

#include "spdelab/particles.hpp"
#include "spdelab/solver.hpp"
#include "spdelab/stats.hpp"

namespace spdelab {

/// C^2 test function with analytic derivatives, vanishing numerically
/// outside a compact region.
struct TestFunction {
    std::string id;
    std::function<double(double)> f;
    std::function<double(double)> df;
    std::function<double(double)> d2f;

    static TestFunction gaussian_bump(double center, double width);
    static TestFunction constant_one();
    static TestFunction identity();
};

/// Martingale-problem check report for one path.
struct MpReport {
    std::string test_function;
    std::vector<double> martingale_increments;
    double realized_qv = 0.0;
    double predicted_qv = 0.0;
    double ratio = 0.0;     // realized / predicted (0 when predicted == 0)
    double mean_z = 0.0;    // sum(dM) / sqrt(realized QV)
};

enum class MpKind { Sbm, Fv };

/// Checks the martingale problem along a particle path: increments of
/// M^f = mu(f) - mu_0(f) - int mu_s(f''/2) ds against the predicted
/// quadratic variation (int mu_s(f^2) ds for Sbm,
/// int (mu_s(f^2) - mu_s(f)^2) ds for Fv).
MpReport mp_check(const MeasurePath& path, const TestFunction& f, MpKind kind);

/// Same check along a solver trajectory; mu_s(g) is read off the
/// distribution function by parts as -<u_s, g'>.
MpReport mp_check(const Trajectory& traj, const TestFunction& f, MpKind kind);

/// a_k of the Yamada-Watanabe construction: a_0 = 1 and
/// int_{a_k}^{a_{k-1}} dz/z = k, i.e. a_k = exp(-k(k+1)/2).
double yw_a(int k);

/// The k-th Yamada-Watanabe mollifier pair: psi_k nonnegative continuous,
/// supported in (a_k, a_{k-1}), unit mass, psi_k(z) <= 2/(k z); and
/// phi_k(z) = int_0^{|z|} int_0^y psi_k(x) dx dy, so that phi_k -> |.|
/// with |z| phi_k''(z) <= 2/k.
class YwFamily {
public:
    explicit YwFamily(int k);

    int k() const { return k_; }
    double a_lower() const { return a_lo_; }  // a_k
    double a_upper() const { return a_hi_; }  // a_{k-1}

    double psi(double z) const;
    double psi_integral() const; // int psi, from the closed-form pieces
    double phi(double z) const;
    double phi_prime(double z) const;   // in [-1, 1], sign(z) outside support
    double phi_second(double z) const;  // psi(|z|)

private:
    struct Piece {
        double z0, z1;
        bool reciprocal;     // psi = c / z on [z0, z1], else linear a + b z
        double a = 0.0, b = 0.0, c = 0.0;
        double Psi0 = 0.0;   // int_0^{z0} psi
        double Phi0 = 0.0;   // phi at z0
    };

    double cumulative(double y) const; // Psi(y) = int_0^y psi

    int k_;
    double a_lo_, a_hi_;
    std::vector<Piece> pieces_;
    double Psi_end_ = 0.0;  // total mass of psi
    double Phi_end_ = 0.0;  // phi(a_{k-1})
};

/// sup over saved (t, y) of |u^A - u^B| between two trajectories driven by
/// the same noise. Throws if grids or noise manifests differ: the pathwise
/// comparison is only meaningful under coupling.
double coupling_gap(const Trajectory& a, const Trajectory& b);

struct LawDistance {
    KsResult ks;
};

/// Two-sample Kolmogorov-Smirnov comparison of scalar observables across
/// replicas (one probe). Requires >= 100 samples per side.
LawDistance law_distance(const std::vector<double>& samples_a,
                         const std::vector<double>& samples_b);

struct HolderReport {
    double time_exponent = 0.0;
    double space_exponent = 0.0;
    bool time_defined = false;
    bool space_defined = false;
};

/// Empirical Holder exponents from log-log regression of RMS increments
/// against lag, in time and in space. Informational only.
HolderReport holder_modulus(const Trajectory& traj);

} // namespace spdelab
