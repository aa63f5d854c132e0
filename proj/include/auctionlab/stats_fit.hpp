#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace auctionlab::stats {

enum class TailFamily : std::uint8_t { powerlaw, lognormal, exponential, truncated_powerlaw };

const char* to_string(TailFamily f);
int parameter_count(TailFamily f);

/// Continuous maximum-likelihood fit of the tail x >= xmin.
/// params: powerlaw {alpha}; lognormal {mu, sigma}; exponential {lambda};
/// truncated_powerlaw {alpha, lambda}, density ~ x^-alpha exp(-lambda x).
struct TailFit {
  TailFamily family = TailFamily::powerlaw;
  std::vector<double> params;
  double xmin = 0.0;
  std::size_t n_tail = 0;
  std::vector<double> pointwise_loglik;
  double loglik = 0.0;
  double aic = 0.0;
};

/// Minimizes the KS distance between the tail and its power-law fit over
/// the distinct sample values leaving at least `min_tail` points above.
/// Throws too_few_points (fewer than 50 points, or no admissible candidate).
double select_xmin(std::span<const double> sample, std::size_t min_tail = 10);

/// KS distance between {x >= xmin} and the power law with exponent alpha.
double ks_distance_powerlaw(std::span<const double> sorted_tail, double xmin, double alpha);

/// Throws too_few_points (< 10 points at or above xmin), non_positive_value,
/// non_convergence (numeric families).
TailFit fit_tail(std::span<const double> sample, TailFamily family, double xmin);

/// Pointwise conditional log-density of the truncated power law, exposed for
/// checking the lambda -> 0 limit.
std::vector<double> truncated_powerlaw_loglik(std::span<const double> tail, double xmin, double alpha,
                                              double lambda);

enum class VuongCorrection : std::uint8_t { none, aic };

struct VuongResult {
  double statistic = 0.0;
  /// P[Z > statistic]: small values favor the first model.
  double p_value_one_sided = 0.5;
  bool nested = false;
  VuongCorrection correction = VuongCorrection::none;
};

/// Normal-approximation Vuong closeness test, positive statistic favoring
/// `a`. The AIC correction subtracts the parameter-count difference from the
/// summed log-likelihood ratio. Throws mismatched_support.
VuongResult vuong_test(const TailFit& a, const TailFit& b, VuongCorrection correction = VuongCorrection::none);
VuongResult vuong_test(std::span<const double> loglik_a, std::span<const double> loglik_b, int k_a, int k_b,
                       VuongCorrection correction = VuongCorrection::none);

struct PolyFit {
  int degree = 1;
  std::vector<double> coefficients;  // constant term first
  std::vector<double> residuals;
  std::vector<double> pointwise_loglik;  // Gaussian with the MLE variance
  double loglik = 0.0;
  double aic = 0.0;  // k = degree + 2 (coefficients and variance)
};

/// Least squares for degree 1 or 2. Throws invalid_argument, too_few_points
/// (< degree + 2 points), singular_design.
PolyFit fit_polynomial(std::span<const double> xs, std::span<const double> ys, int degree);

struct SlopeFit {
  double a = 0.0;  // prefactor: values ~ a * tau^(2H)
  double H = 0.0;
  double slope = 0.0;
  double slope_stderr = 0.0;
  double p_value = 1.0;  // two-sided t-test of slope = 0
  std::size_t n_used = 0;
};

/// OLS of log(values) on log(taus) after dropping the largest-tau point.
/// Throws too_few_points (< 5 points), non_positive_value.
SlopeFit fit_loglog_slope(std::span<const double> taus, std::span<const double> values);

double normal_sf(double z);
double median(std::vector<double> v);
/// Sample standard deviation (n - 1 denominator), 0 for fewer than 2 values.
double sample_sd(std::span<const double> v);

}  // namespace auctionlab::stats
