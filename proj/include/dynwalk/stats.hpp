#pragma once

// Small statistics toolbox shared by estimators and the test harness:
// moments, normal/chi-square/KS tails, confidence intervals, least squares.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace dynwalk::stats {

struct Moments {
  std::size_t n = 0;
  double mean = 0.0;
  double var = 0.0;  // sample variance (n-1 denominator), 0 when n < 2

  double sd() const;
  double se() const;  // standard error of the mean
};

Moments moments(std::span<const double> xs);

double skewness(std::span<const double> xs);
double lag1_autocorr(std::span<const double> xs);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double x) const { return lo <= x && x <= hi; }
  double width() const { return hi - lo; }
};

// Two-sided normal CI for a mean at the given confidence (e.g. 0.99).
Interval mean_ci(const Moments& m, double confidence);

double normal_cdf(double x);
// Inverse standard normal CDF (Acklam's rational approximation + one
// Halley refinement; |error| < 1e-12 over (0,1)).
double normal_quantile(double p);
// z multiplier for a two-sided interval at the given confidence.
double two_sided_z(double confidence);

// Regularized incomplete gamma Q(a,x); chi-square survival function.
double gamma_q(double a, double x);
double chi2_sf(double x, int df);

// Regularized incomplete beta I_x(a,b) and the two-sided Student-t
// multiplier for small batch counts.
double beta_inc(double a, double b, double x);
double two_sided_t(double confidence, int df);

// Kolmogorov asymptotic tail Q(lambda) = 2 sum (-1)^{j-1} exp(-2 j^2 lambda^2).
double kolmogorov_sf(double lambda);

// One-sample KS against a CDF; returns the statistic and asymptotic p-value.
struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};
KsResult ks_test(std::span<const double> xs, const std::function<double(double)>& cdf);
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

// Pearson chi-square against expected counts; df defaults to cells-1.
struct Chi2Result {
  double statistic = 0.0;
  int df = 0;
  double p_value = 1.0;
};
Chi2Result chi2_gof(std::span<const double> observed, std::span<const double> expected,
                    int df_override = -1);

struct LinFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};
LinFit linear_fit(std::span<const double> xs, std::span<const double> ys);

}  // namespace dynwalk::stats
