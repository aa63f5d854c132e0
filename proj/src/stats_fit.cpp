#include "auctionlab/stats_fit.hpp"

#include <gsl/gsl_cdf.h>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>
#include <gsl/gsl_multimin.h>
#include <gsl/gsl_sf_erf.h>

#include <Eigen/Dense>
#include <array>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include "auctionlab/types.hpp"

namespace auctionlab::stats {

namespace {

constexpr double kLogTwoPi = 1.8378770664093453;
constexpr double kLoglikTolerance = 1e-8;
constexpr double kHuge = 1e300;

struct GslErrorsOff {
  GslErrorsOff() { gsl_set_error_handler_off(); }
};
const GslErrorsOff gsl_errors_off;

std::vector<double> sorted_tail(std::span<const double> sample, double xmin) {
  std::vector<double> tail;
  for (double x : sample) {
    if (!(x > 0.0) || !std::isfinite(x)) throw Error(Errc::non_positive_value, "tail samples must be positive and finite");
    if (x >= xmin) tail.push_back(x);
  }
  std::sort(tail.begin(), tail.end());
  return tail;
}

double powerlaw_alpha(std::span<const double> tail, double xmin) {
  double s = 0.0;
  for (double x : tail) s += std::log(x / xmin);
  if (s <= 0.0) throw Error(Errc::zero_variance, "all tail values equal xmin");
  return 1.0 + static_cast<double>(tail.size()) / s;
}

// Nelder-Mead minimization in two dimensions. Restarts from the incumbent
// until a restart improves the objective by less than kLoglikTolerance.
std::array<double, 2> minimize2(const std::function<double(double, double)>& f, std::array<double, 2> start,
                                std::array<double, 2> step, const char* what) {
  struct Ctx {
    const std::function<double(double, double)>* f;
  } ctx{&f};
  gsl_multimin_function fn;
  fn.n = 2;
  fn.params = &ctx;
  fn.f = [](const gsl_vector* v, void* p) {
    const double y = (*static_cast<Ctx*>(p)->f)(gsl_vector_get(v, 0), gsl_vector_get(v, 1));
    return std::isfinite(y) ? y : kHuge;
  };
  gsl_multimin_fminimizer* m = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, 2);
  gsl_vector* x = gsl_vector_alloc(2);
  gsl_vector* ss = gsl_vector_alloc(2);
  double best = f(start[0], start[1]);
  if (!std::isfinite(best)) best = kHuge;
  bool converged = false;
  for (int restart = 0; restart < 50 && !converged; ++restart) {
    gsl_vector_set(x, 0, start[0]);
    gsl_vector_set(x, 1, start[1]);
    gsl_vector_set(ss, 0, step[0]);
    gsl_vector_set(ss, 1, step[1]);
    gsl_multimin_fminimizer_set(m, &fn, x, ss);
    // stop on a tiny simplex, or when quadrature noise keeps it from
    // shrinking and the minimum has stalled
    double last = gsl_multimin_fminimizer_minimum(m);
    int stalled = 0;
    for (int it = 0; it < 5000 && stalled < 100; ++it) {
      if (gsl_multimin_fminimizer_iterate(m) != GSL_SUCCESS) break;
      if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(m), 1e-8) == GSL_SUCCESS) break;
      const double now = gsl_multimin_fminimizer_minimum(m);
      stalled = last - now > 1e-12 * (1.0 + std::abs(now)) ? 0 : stalled + 1;
      last = std::min(last, now);
    }
    const double value = gsl_multimin_fminimizer_minimum(m);
    converged = best - value < kLoglikTolerance;
    if (value < best) {
      best = value;
      start = {gsl_vector_get(m->x, 0), gsl_vector_get(m->x, 1)};
    }
    step = {std::max(step[0] * 0.5, 1e-3), std::max(step[1] * 0.5, 1e-3)};
  }
  gsl_vector_free(ss);
  gsl_vector_free(x);
  gsl_multimin_fminimizer_free(m);
  if (!converged || best >= kHuge) throw Error(Errc::non_convergence, std::string(what) + " fit did not converge");
  return start;
}

// log of E(z) = integral over u >= 1 of u^-alpha exp(-z u), z > 0, via the
// scaled form exp(-z) * integral over t >= 0 of (1+t)^-alpha exp(-z t).
double log_tpl_normalizer(double alpha, double z) {
  struct P {
    double alpha, z;
  } p{alpha, z};
  gsl_function g;
  g.params = &p;
  g.function = [](double t, void* v) {
    auto* q = static_cast<P*>(v);
    return std::exp(-q->alpha * std::log1p(t) - q->z * t);
  };
  gsl_integration_workspace* w = gsl_integration_workspace_alloc(200);
  double result = 0.0, err = 0.0;
  const int status = gsl_integration_qagiu(&g, 0.0, 0.0, 1e-11, 200, w, &result, &err);
  gsl_integration_workspace_free(w);
  if ((status != GSL_SUCCESS && status != GSL_EROUND) || !(result > 0.0) || !std::isfinite(result)) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  return -z + std::log(result);
}

void finish(TailFit& fit) {
  fit.n_tail = fit.pointwise_loglik.size();
  fit.loglik = std::accumulate(fit.pointwise_loglik.begin(), fit.pointwise_loglik.end(), 0.0);
  fit.aic = 2.0 * parameter_count(fit.family) - 2.0 * fit.loglik;
}

std::vector<double> powerlaw_loglik(std::span<const double> tail, double xmin, double alpha) {
  std::vector<double> out;
  out.reserve(tail.size());
  const double c = std::log(alpha - 1.0) - std::log(xmin);
  for (double x : tail) out.push_back(c - alpha * std::log(x / xmin));
  return out;
}

std::vector<double> lognormal_loglik(std::span<const double> tail, double xmin, double mu, double sigma) {
  const double z0 = (std::log(xmin) - mu) / sigma;
  const double log_q = gsl_sf_log_erfc(z0 / std::sqrt(2.0)) - std::log(2.0);
  std::vector<double> out;
  out.reserve(tail.size());
  for (double x : tail) {
    const double lx = std::log(x);
    const double z = (lx - mu) / sigma;
    out.push_back(-lx - std::log(sigma) - 0.5 * kLogTwoPi - 0.5 * z * z - log_q);
  }
  return out;
}

}  // namespace

const char* to_string(TailFamily f) {
  switch (f) {
    case TailFamily::powerlaw: return "powerlaw";
    case TailFamily::lognormal: return "lognormal";
    case TailFamily::exponential: return "exponential";
    case TailFamily::truncated_powerlaw: return "truncated_powerlaw";
  }
  return "?";
}

int parameter_count(TailFamily f) {
  switch (f) {
    case TailFamily::powerlaw:
    case TailFamily::exponential: return 1;
    case TailFamily::lognormal:
    case TailFamily::truncated_powerlaw: return 2;
  }
  return 0;
}

double ks_distance_powerlaw(std::span<const double> tail, double xmin, double alpha) {
  const auto n = static_cast<double>(tail.size());
  double d = 0.0;
  std::size_t i = 0;
  while (i < tail.size()) {
    std::size_t j = i;
    while (j < tail.size() && tail[j] == tail[i]) ++j;
    const double model = 1.0 - std::pow(tail[i] / xmin, 1.0 - alpha);
    d = std::max({d, std::abs(model - static_cast<double>(i) / n), std::abs(model - static_cast<double>(j) / n)});
    i = j;
  }
  return d;
}

double select_xmin(std::span<const double> sample, std::size_t min_tail) {
  if (sample.size() < 50) throw Error(Errc::too_few_points, "xmin selection needs at least 50 points");
  std::vector<double> x = sorted_tail(sample, 0.0);
  const std::size_t n = x.size();
  // suffix sums of log x
  std::vector<double> suffix(n + 1, 0.0);
  for (std::size_t i = n; i-- > 0;) suffix[i] = suffix[i + 1] + std::log(x[i]);

  double best_d = std::numeric_limits<double>::infinity();
  double best_x = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0 && x[i] == x[i - 1]) continue;
    const std::size_t m = n - i;
    if (m < std::max<std::size_t>(min_tail, 2)) break;
    const double s = suffix[i] - static_cast<double>(m) * std::log(x[i]);
    if (s <= 0.0) continue;
    const double alpha = 1.0 + static_cast<double>(m) / s;
    const double d = ks_distance_powerlaw(std::span<const double>(x).subspan(i), x[i], alpha);
    if (d < best_d) {
      best_d = d;
      best_x = x[i];
    }
  }
  if (!std::isfinite(best_d)) throw Error(Errc::too_few_points, "no admissible xmin (degenerate sample)");
  return best_x;
}

std::vector<double> truncated_powerlaw_loglik(std::span<const double> tail, double xmin, double alpha, double lambda) {
  std::vector<double> out;
  out.reserve(tail.size());
  double log_norm;
  if (lambda == 0.0) {
    if (alpha <= 1.0) throw Error(Errc::invalid_argument, "untruncated power law needs alpha > 1");
    log_norm = -std::log(alpha - 1.0);
  } else {
    log_norm = log_tpl_normalizer(alpha, lambda * xmin);
  }
  const double lx = std::log(xmin);
  for (double x : tail) out.push_back(-alpha * std::log(x / xmin) - lx - lambda * (x - xmin) - lambda * xmin - log_norm);
  return out;
}

TailFit fit_tail(std::span<const double> sample, TailFamily family, double xmin) {
  if (!(xmin > 0.0)) throw Error(Errc::non_positive_value, "xmin must be positive");
  const std::vector<double> tail = sorted_tail(sample, xmin);
  if (tail.size() < 10) throw Error(Errc::too_few_points, "tail fit needs at least 10 points at or above xmin");
  const auto n = static_cast<double>(tail.size());

  TailFit fit;
  fit.family = family;
  fit.xmin = xmin;
  switch (family) {
    case TailFamily::powerlaw: {
      const double alpha = powerlaw_alpha(tail, xmin);
      fit.params = {alpha};
      fit.pointwise_loglik = powerlaw_loglik(tail, xmin, alpha);
      break;
    }
    case TailFamily::exponential: {
      const double excess = std::accumulate(tail.begin(), tail.end(), 0.0) / n - xmin;
      if (!(excess > 0.0)) throw Error(Errc::zero_variance, "all tail values equal xmin");
      const double lambda = 1.0 / excess;
      fit.params = {lambda};
      for (double x : tail) fit.pointwise_loglik.push_back(std::log(lambda) - lambda * (x - xmin));
      break;
    }
    case TailFamily::lognormal: {
      double m = 0.0, m2 = 0.0;
      for (double x : tail) {
        m += std::log(x);
        m2 += std::log(x) * std::log(x);
      }
      m /= n;
      const double sd = std::sqrt(std::max(m2 / n - m * m, 1e-6));
      auto nll = [&](double mu, double log_sigma) {
        const double sigma = std::exp(log_sigma);
        const double z0 = (std::log(xmin) - mu) / sigma;
        const double log_q = gsl_sf_log_erfc(z0 / std::sqrt(2.0)) - std::log(2.0);
        double acc = 0.0;
        for (double x : tail) {
          const double z = (std::log(x) - mu) / sigma;
          acc += 0.5 * z * z;
        }
        return acc + n * (log_sigma + log_q);  // terms constant in (mu, sigma) dropped
      };
      auto p = minimize2(nll, {m, std::log(sd)}, {sd, 0.5}, "lognormal");
      fit.params = {p[0], std::exp(p[1])};
      fit.pointwise_loglik = lognormal_loglik(tail, xmin, p[0], fit.params[1]);
      break;
    }
    case TailFamily::truncated_powerlaw: {
      const double alpha_pl = powerlaw_alpha(tail, xmin);
      const auto pl = powerlaw_loglik(tail, xmin, alpha_pl);
      const double pl_total = std::accumulate(pl.begin(), pl.end(), 0.0);
      double sum_log = 0.0, sum_x = 0.0;
      for (double x : tail) {
        sum_log += std::log(x / xmin);
        sum_x += x - xmin;
      }
      auto nll = [&](double alpha, double log_lambda) {
        const double lambda = std::exp(log_lambda);
        const double z = lambda * xmin;
        const double log_norm = log_tpl_normalizer(alpha, z);
        if (!std::isfinite(log_norm)) return kHuge;
        return alpha * sum_log + lambda * sum_x + n * (std::log(xmin) + z + log_norm);
      };
      const double mean_excess = sum_x / n;
      auto p = minimize2(nll, {alpha_pl, std::log(0.1 / (mean_excess + xmin))}, {0.3, 1.0}, "truncated power law");
      const double lambda = std::exp(p[1]);
      auto ll = truncated_powerlaw_loglik(tail, xmin, p[0], lambda);
      const double total = std::accumulate(ll.begin(), ll.end(), 0.0);
      if (total < pl_total) {
        // supremum reached in the lambda -> 0 limit
        fit.params = {alpha_pl, 0.0};
        fit.pointwise_loglik = pl;
      } else {
        fit.params = {p[0], lambda};
        fit.pointwise_loglik = std::move(ll);
      }
      break;
    }
  }
  finish(fit);
  return fit;
}

VuongResult vuong_test(std::span<const double> la, std::span<const double> lb, int k_a, int k_b,
                       VuongCorrection correction) {
  if (la.size() != lb.size()) throw Error(Errc::mismatched_support, "fits cover different samples");
  if (la.empty()) throw Error(Errc::too_few_points, "Vuong test on an empty sample");
  const auto n = static_cast<double>(la.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < la.size(); ++i) sum += la[i] - lb[i];
  const double mean = sum / n;
  double ss = 0.0;
  for (std::size_t i = 0; i < la.size(); ++i) {
    const double d = la[i] - lb[i] - mean;
    ss += d * d;
  }
  const double sd = std::sqrt(ss / n);
  double numerator = sum;
  if (correction == VuongCorrection::aic) numerator -= static_cast<double>(k_a - k_b);

  VuongResult r;
  r.correction = correction;
  if (sd > 0.0) {
    r.statistic = numerator / (sd * std::sqrt(n));
  } else if (numerator != 0.0) {
    r.statistic = numerator > 0.0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
  } else {
    r.statistic = 0.0;
  }
  r.p_value_one_sided = normal_sf(r.statistic);
  return r;
}

VuongResult vuong_test(const TailFit& a, const TailFit& b, VuongCorrection correction) {
  if (a.xmin != b.xmin || a.n_tail != b.n_tail) throw Error(Errc::mismatched_support, "fits use different xmin");
  VuongResult r = vuong_test(a.pointwise_loglik, b.pointwise_loglik, parameter_count(a.family),
                             parameter_count(b.family), correction);
  auto power_family = [](TailFamily f) {
    return f == TailFamily::powerlaw || f == TailFamily::truncated_powerlaw;
  };
  r.nested = a.family != b.family && power_family(a.family) && power_family(b.family);
  return r;
}

PolyFit fit_polynomial(std::span<const double> xs, std::span<const double> ys, int degree) {
  if (degree != 1 && degree != 2) throw Error(Errc::invalid_argument, "degree must be 1 or 2");
  if (xs.size() != ys.size()) throw Error(Errc::invalid_argument, "xs and ys differ in length");
  const std::size_t n = xs.size();
  if (n < static_cast<std::size_t>(degree) + 2) throw Error(Errc::too_few_points, "too few points for the fit");

  Eigen::MatrixXd X(n, degree + 1);
  Eigen::VectorXd y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double p = 1.0;
    for (int k = 0; k <= degree; ++k) {
      X(static_cast<Eigen::Index>(i), k) = p;
      p *= xs[i];
    }
    y(static_cast<Eigen::Index>(i)) = ys[i];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-12);
  if (qr.rank() < degree + 1) throw Error(Errc::singular_design, "design matrix is rank deficient");
  const Eigen::VectorXd beta = qr.solve(y);
  const Eigen::VectorXd r = y - X * beta;

  PolyFit fit;
  fit.degree = degree;
  fit.coefficients.assign(beta.data(), beta.data() + beta.size());
  fit.residuals.assign(r.data(), r.data() + r.size());
  const double var = std::max(r.squaredNorm() / static_cast<double>(n), 1e-300);
  for (std::size_t i = 0; i < n; ++i) {
    const double e = fit.residuals[i];
    fit.pointwise_loglik.push_back(-0.5 * (kLogTwoPi + std::log(var)) - e * e / (2.0 * var));
  }
  fit.loglik = std::accumulate(fit.pointwise_loglik.begin(), fit.pointwise_loglik.end(), 0.0);
  fit.aic = 2.0 * (degree + 2) - 2.0 * fit.loglik;
  return fit;
}

SlopeFit fit_loglog_slope(std::span<const double> taus, std::span<const double> values) {
  if (taus.size() != values.size()) throw Error(Errc::invalid_argument, "taus and values differ in length");
  if (taus.size() < 5) throw Error(Errc::too_few_points, "log-log fit needs at least 5 points");
  for (std::size_t i = 0; i < taus.size(); ++i) {
    if (!(taus[i] > 0.0) || !(values[i] > 0.0)) throw Error(Errc::non_positive_value, "log-log fit needs positive data");
  }
  const std::size_t drop = static_cast<std::size_t>(std::max_element(taus.begin(), taus.end()) - taus.begin());
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < taus.size(); ++i) {
    if (i == drop) continue;
    lx.push_back(std::log(taus[i]));
    ly.push_back(std::log(values[i]));
  }
  const auto n = static_cast<double>(lx.size());
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx <= 0.0) throw Error(Errc::singular_design, "all taus are equal");
  SlopeFit f;
  f.n_used = lx.size();
  f.slope = sxy / sxx;
  const double intercept = my - f.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double e = ly[i] - intercept - f.slope * lx[i];
    rss += e * e;
  }
  const double dof = n - 2.0;
  f.slope_stderr = std::sqrt(rss / dof / sxx);
  f.a = std::exp(intercept);
  f.H = f.slope / 2.0;
  // relative guard: an exact power law leaves only rounding noise
  if (f.slope_stderr <= 1e-14 * std::max(1.0, std::abs(f.slope))) {
    f.p_value = f.slope == 0.0 ? 1.0 : 0.0;
  } else {
    f.p_value = 2.0 * gsl_cdf_tdist_Q(std::abs(f.slope / f.slope_stderr), dof);
  }
  return f;
}

double normal_sf(double z) {
  if (std::isinf(z)) return z > 0 ? 0.0 : 1.0;
  return gsl_cdf_ugaussian_Q(z);
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

double sample_sd(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace auctionlab::stats
