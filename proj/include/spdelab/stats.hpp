#pragma once

#include <vector>

namespace spdelab {

double mean(const std::vector<double>& v);
double variance(const std::vector<double>& v); // unbiased (n-1)

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
    size_t n_a = 0;
    size_t n_b = 0;
};

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value
/// (Stephens' small-sample correction on the effective sample size).
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Survival function of the Kolmogorov distribution, Q(lambda).
double kolmogorov_q(double lambda);

/// Slope of the least-squares line y = a + b x. Throws if fewer than
/// two distinct x values.
double ols_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Empirical quantile (linear interpolation of order statistics).
double quantile(std::vector<double> v, double q);

} // namespace spdelab
