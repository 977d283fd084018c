// Scalar special functions: Gamma/Beta, generalized binomial coefficients
// and the Mittag-Leffler function with term-wise derivatives.
#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace fracspan {

struct SeriesControl {
  double rel_tol = 1e-15;
  int max_terms = 10000;
};

struct MLParams {
  double alpha = 1.0;  // > 0
  double beta = 1.0;   // > 0
  double lambda = 0.0;
  double a = 0.0;  // initial point
};

namespace detail {

// Lanczos, g = 7, 9 coefficients. Good to ~15 significant digits for x > 0.5.
inline constexpr double kLanczosG = 7.0;
inline constexpr double kLanczos[9] = {
    0.99999999999980993,      676.5203681218851,     -1259.1392167224028,
    771.32342877765313,       -176.61502916214059,   12.507343278686905,
    -0.13857109526572012,     9.9843695780195716e-6, 1.5056327351493116e-7};

inline double lanczos_sum(double x) {
  double s = kLanczos[0];
  for (int i = 1; i < 9; ++i) s += kLanczos[i] / (x + i);
  return s;
}

}  // namespace detail

// log Gamma(x) for x > 0
inline double log_gamma(double x) {
  if (!(x > 0.0)) throw std::domain_error("log_gamma: requires x > 0");
  if (x < 0.5) {
    // reflection in log form; sin(pi x) > 0 on (0, 1/2)
    return std::log(std::numbers::pi / std::sin(std::numbers::pi * x)) -
           log_gamma(1.0 - x);
  }
  const double z = x - 1.0;
  const double t = z + detail::kLanczosG + 0.5;
  return 0.5 * std::log(2.0 * std::numbers::pi) + (z + 0.5) * std::log(t) - t +
         std::log(detail::lanczos_sum(z));
}

// Euler Gamma on its real domain. Throws on nonpositive integers,
// signals overflow above the representable range.
inline double gamma_fn(double x) {
  if (x <= 0.0 && x == std::floor(x))
    throw std::domain_error("gamma_fn: pole at nonpositive integer x=" +
                            std::to_string(x));
  if (x < 0.5) {
    // Gamma(x) = pi / (sin(pi x) Gamma(1-x))
    return std::numbers::pi /
           (std::sin(std::numbers::pi * x) * gamma_fn(1.0 - x));
  }
  if (x > 171.62) return std::numeric_limits<double>::infinity();
  if (x > 100.0) return std::exp(log_gamma(x));  // direct pow would overflow
  const double z = x - 1.0;
  const double t = z + detail::kLanczosG + 0.5;
  return std::sqrt(2.0 * std::numbers::pi) * std::pow(t, z + 0.5) *
         std::exp(-t) * detail::lanczos_sum(z);
}

// Beta(z, w) = Gamma(z) Gamma(w) / Gamma(z+w), z, w > 0
inline double beta_value(double z, double w) {
  if (!(z > 0.0) || !(w > 0.0))
    throw std::domain_error("beta_value: requires z, w > 0");
  return std::exp(log_gamma(z) + log_gamma(w) - log_gamma(z + w));
}

// p (p-1) ... (p-k+1) / k!
inline double binom_general(double p, int k) {
  if (k < 0) throw std::domain_error("binom_general: requires k >= 0");
  double r = 1.0;
  for (int j = 0; j < k; ++j) r *= (p - j) / (j + 1);
  return r;
}

// Plain power series E_{alpha,beta}(z) = sum_j z^j / Gamma(alpha j + beta).
// Guarded radius keeps the summation well inside double range; all uses in
// this project are near the initial point. Terms are accumulated from j=j0.
namespace detail {

// Accumulated in long double: the alternating series at z ~ -5 loses about
// e^{2|z|} of conditioning, which double precision alone cannot absorb.
inline double ml_series(double alpha, double beta, double z,
                        const SeriesControl& ctl, int j0) {
  if (z == 0.0) return (j0 == 0) ? 1.0 / gamma_fn(beta) : 0.0;
  long double sum = 0.0L;
  int small_run = 0;
  const long double lz = std::log(std::abs((long double)z));
  const bool neg = z < 0.0;
  for (int j = j0; j < j0 + ctl.max_terms; ++j) {
    long double term = std::exp(j * lz - std::lgamma((long double)alpha * j + (long double)beta));
    if (neg && (j & 1)) term = -term;
    sum += term;
    if (std::abs((double)term) <
        ctl.rel_tol * std::max(std::abs((double)sum), 1e-300))
      ++small_run;
    else
      small_run = 0;
    if (small_run >= 3) return (double)sum;
  }
  throw std::runtime_error("mittag_leffler: series did not converge within max_terms");
}

}  // namespace detail

inline double mittag_leffler(double alpha, double beta, double z,
                             const SeriesControl& ctl = {}) {
  if (!(alpha > 0.0) || !(beta > 0.0))
    throw std::domain_error("mittag_leffler: requires alpha, beta > 0");
  if (std::abs(z) > 50.0)
    throw std::domain_error("mittag_leffler: |z| exceeds the plain-series guard");
  return detail::ml_series(alpha, beta, z, ctl, 0);
}

// E_{alpha,beta}(z) - 1/Gamma(beta), summed from j=1 to avoid cancellation
// near z = 0.
inline double mittag_leffler_m1(double alpha, double beta, double z,
                                const SeriesControl& ctl = {}) {
  if (!(alpha > 0.0) || !(beta > 0.0))
    throw std::domain_error("mittag_leffler: requires alpha, beta > 0");
  if (std::abs(z) > 50.0)
    throw std::domain_error("mittag_leffler: |z| exceeds the plain-series guard");
  if (z == 0.0) return 0.0;
  return detail::ml_series(alpha, beta, z, ctl, 1);
}

// Term-wise derivative of psi(t) = E_{alpha,1}(lambda (t-a)^alpha):
//   d^order/dt^order psi = sum_j lambda^j (aj)(aj-1)...(aj-order+1)
//                          (t-a)^{alpha j - order} / Gamma(alpha j + 1).
// At t = a the series is evaluated by its surviving terms; if the leading
// surviving term has a negative exponent the derivative blows up there and
// `singular` is set.
inline long double ml_solution_derivative_l(const MLParams& p, double t, int order,
                                            const SeriesControl& ctl = {},
                                            bool* singular = nullptr) {
  if (order < 0) throw std::domain_error("ml_solution_derivative: order >= 0");
  if (t < p.a) throw std::domain_error("ml_solution_derivative: requires t >= a");
  if (singular) *singular = false;
  const long double dt = (long double)t - (long double)p.a;

  if (order == 0) {
    if (p.lambda == 0.0) return 1.0L;
    if (dt == 0.0L) return 1.0L;
    if (std::abs(p.lambda) * std::pow((double)dt, p.alpha) > 50.0)
      throw std::domain_error("ml_solution_derivative: |z| exceeds the plain-series guard");
    // series in long double, summed from j = 0
    const long double lz = std::log(std::abs((long double)p.lambda)) +
                           (long double)p.alpha * std::log(dt);
    const bool neg = p.lambda < 0.0;
    long double sum = 0.0L;
    int small_run = 0;
    for (int j = 0; j < ctl.max_terms; ++j) {
      long double term = std::exp(j * lz - std::lgamma((long double)p.alpha * j + 1.0L));
      if (neg && (j & 1)) term = -term;
      sum += term;
      if (std::abs((double)term) <
          ctl.rel_tol * std::max(std::abs((double)sum), 1e-300))
        ++small_run;
      else
        small_run = 0;
      if (small_run >= 3) return sum;
    }
    throw std::runtime_error("ml_solution_derivative: series did not converge");
  }
  if (p.lambda == 0.0) return 0.0L;

  const long double llam = std::log(std::abs((long double)p.lambda));
  const bool neg = p.lambda < 0.0;

  auto factor = [&](int j) {  // (aj)(aj-1)...(aj-order+1)
    long double fac = 1.0L;
    for (int q = 0; q < order; ++q) fac *= ((long double)p.alpha * j - q);
    return fac;
  };

  if (dt == 0.0L) {
    // exponents alpha j - order increase strictly with j
    long double sum = 0.0L;
    for (int j = 1; p.alpha * j - order <= 0.0; ++j) {
      const long double fac = factor(j);
      if (fac == 0.0L) continue;
      if (p.alpha * j - order < 0.0) {
        if (singular) *singular = true;
        return std::numeric_limits<long double>::infinity();
      }
      long double term = fac * std::exp(j * llam - std::lgamma((long double)p.alpha * j + 1.0L));
      if (neg && (j & 1)) term = -term;
      sum += term;
    }
    return sum;
  }

  const long double ldt = std::log(dt);
  long double sum = 0.0L;
  int small_run = 0;
  for (int j = 1; j <= ctl.max_terms; ++j) {
    const long double e = (long double)p.alpha * j - order;
    const long double fac = factor(j);
    if (fac == 0.0L) continue;
    long double term = fac * std::exp(j * llam + e * ldt -
                                      std::lgamma((long double)p.alpha * j + 1.0L));
    if (neg && (j & 1)) term = -term;
    sum += term;
    if (std::abs((double)term) <
        ctl.rel_tol * std::max(std::abs((double)sum), 1e-300))
      ++small_run;
    else
      small_run = 0;
    if (small_run >= 3) return sum;
  }
  throw std::runtime_error("ml_solution_derivative: series did not converge");
}

inline double ml_solution_derivative(const MLParams& p, double t, int order,
                                     const SeriesControl& ctl = {},
                                     bool* singular = nullptr) {
  return (double)ml_solution_derivative_l(p, t, order, ctl, singular);
}

}  // namespace fracspan
