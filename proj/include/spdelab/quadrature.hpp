#pragma once

#include <functional>
#include <vector>

namespace spdelab {

/// Nodes and weights of an n-point Gauss-Legendre rule on [-1, 1].
struct GaussLegendreRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Computes (and caches) the n-point Gauss-Legendre rule via Newton iteration
/// on the Legendre polynomial roots.
const GaussLegendreRule& gauss_legendre(int n);

/// Integrates f over [a, b] with an n-point Gauss-Legendre rule.
double gauss_legendre_integrate(const std::function<double(double)>& f,
                                double a, double b, int n = 64);

/// Adaptive Simpson quadrature with local error control.
/// Throws std::runtime_error if the recursion cannot reach the tolerance.
double adaptive_simpson(const std::function<double(double)>& f,
                        double a, double b, double tol = 1e-12,
                        int max_depth = 60);

/// Composite trapezoid sum of sampled values with spacing dx.
double trapezoid(const std::vector<double>& values, double dx);

} // namespace spdelab
