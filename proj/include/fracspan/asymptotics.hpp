// Boundary-limit extraction: power-law fits in epsilon, the Green boundary
// limit identity, and time-side Mittag-Leffler scaling limits.
#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "green_ball.hpp"
#include "specfun.hpp"

namespace fracspan {

struct FitResult {
  double exponent = 0.0;
  double constant = 0.0;
  double r_squared = 0.0;
  bool exact_zero = false;  // all samples identically zero
  std::vector<std::pair<double, double>> ladder;
};

// Least-squares fit of log|v| against log(eps). Samples must be of one sign;
// all-zero ladders short-circuit to the exact-zero result.
inline FitResult power_fit(const std::vector<std::pair<double, double>>& samples) {
  if (samples.size() < 4)
    throw std::invalid_argument("power_fit: need at least 4 samples");
  for (std::size_t i = 1; i < samples.size(); ++i)
    if (!(samples[i].first < samples[i - 1].first))
      throw std::invalid_argument("power_fit: ladder must be strictly decreasing in eps");

  FitResult fit;
  fit.ladder = samples;
  bool all_zero = true;
  int sign = 0;
  for (auto& [e, v] : samples) {
    if (v != 0.0) {
      all_zero = false;
      const int s = v > 0.0 ? 1 : -1;
      if (sign == 0) sign = s;
      if (s != sign)
        throw std::invalid_argument("power_fit: samples change sign along the ladder");
    }
  }
  if (all_zero) {
    fit.exact_zero = true;
    return fit;
  }
  if (sign == 0 || std::any_of(samples.begin(), samples.end(),
                               [](auto& p) { return p.second == 0.0; }))
    throw std::invalid_argument("power_fit: degenerate ladder with interior zeros");

  const std::size_t n = samples.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (auto& [e, v] : samples) {
    const double X = std::log(e), Y = std::log(std::abs(v));
    sx += X;
    sy += Y;
    sxx += X * X;
    sxy += X * Y;
    syy += Y * Y;
  }
  const double den = n * sxx - sx * sx;
  fit.exponent = (n * sxy - sx * sy) / den;
  const double intercept = (sy - fit.exponent * sx) / n;
  fit.constant = sign * std::exp(intercept);
  const double ss_tot = syy - sy * sy / n;
  double ss_res = 0.0;
  for (auto& [e, v] : samples) {
    const double pred = intercept + fit.exponent * std::log(e);
    const double r = std::log(std::abs(v)) - pred;
    ss_res += r * r;
  }
  fit.r_squared = (ss_tot > 0.0) ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

inline std::vector<double> geometric_ladder(double top = 1e-1, double bottom = 1e-4,
                                            int count = 8) {
  std::vector<double> eps(count);
  for (int i = 0; i < count; ++i)
    eps[i] = top * std::pow(bottom / top, (double)i / (count - 1));
  return eps;
}

// Direct evaluation of int_{B_1} f(z) (1-|z|^2)^s / (s |z-e|^n) dz with the
// |z-e|^{-n} concentration absorbed by node grading toward e.
inline double boundary_limit_integral(const std::function<double(const std::vector<double>&)>& f,
                                      const std::vector<double>& e, double s,
                                      int n) {
  if (n == 1) {
    const double epos = e[0];  // +1 or -1
    std::vector<double> z{0.0};
    // integrate in the distance rho = |z - e|; 1 - z^2 = rho (2 - rho)
    return integrate_ts(
        [&](double, double rho, double rho_c) {
          z[0] = epos > 0 ? 1.0 - rho : -1.0 + rho;
          return f(z) * std::pow(rho * rho_c, s) / (s * rho);
        },
        0.0, 2.0, 1e-11);
  }
  if (n != 2) throw std::invalid_argument("boundary_limit_integral: n <= 2");
  // polar coordinates centered at e: z = e + rho w(theta), inside B_1 iff
  // rho < -2 e.w; then 1-|z|^2 = rho(-2 e.w - rho).
  const int na = 64;
  double total = 0.0;
  std::vector<double> z{0.0, 0.0};
  for (int a = 0; a < na; ++a) {
    const double phi = std::numbers::pi * (a + 0.5) / na;  // inward half-circle
    const double wx = -e[0] * std::sin(phi) - e[1] * std::cos(phi);
    const double wy = -e[1] * std::sin(phi) + e[0] * std::cos(phi);
    const double edotw = e[0] * wx + e[1] * wy;  // = -sin(phi) < 0
    const double rho_exit = -2.0 * edotw;
    total += integrate_ts(
        [&](double rho, double, double db) {
          z[0] = e[0] + rho * wx;
          z[1] = e[1] + rho * wy;
          return f(z) * std::pow(rho * db, s) / (s * rho);
        },
        0.0, rho_exit, 1e-10);
  }
  return total * std::numbers::pi / na;
}

struct BoundaryLimitResult {
  FitResult fit;        // of u(e + eps w) against eps
  double predicted;     // k(n,s) (-2 e.w)^s * integral
};

// Corollary-style boundary limit: fits eps^{-s} u(e + eps w) and compares
// with the direct integral prediction.
inline BoundaryLimitResult green_boundary_limit(
    const std::function<double(const std::vector<double>&)>& f, const Field& u,
    const std::vector<double>& e, const std::vector<double>& w,
    const GreenParams& gp, const std::vector<double>& eps_ladder) {
  double edotw = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) edotw += e[i] * w[i];
  if (!(edotw < 0.0))
    throw std::invalid_argument("green_boundary_limit: need an inward direction e.w < 0");

  // finiteness guard: if |f| grows like |z-e|^{-gamma} with gamma >= s near e,
  // the predicted integral diverges (the Holder hypothesis fails there)
  {
    std::vector<std::pair<double, double>> growth;
    std::vector<double> z(e.size());
    bool any = false;
    for (double d : {2e-2, 1e-2, 5e-3, 2.5e-3, 1.25e-3}) {
      for (std::size_t i = 0; i < e.size(); ++i) z[i] = e[i] * (1.0 - d);
      const double fv = f(z);
      growth.push_back({d, fv});
      if (fv != 0.0) any = true;
    }
    if (any && std::none_of(growth.begin(), growth.end(),
                            [](auto& p) { return p.second == 0.0; })) {
      auto gfit = power_fit(growth);
      if (gfit.exponent <= -gp.ord.s + 1e-2)
        throw std::domain_error(
            "green_boundary_limit: f too singular at e, predicted integral not finite");
    }
  }

  std::vector<std::pair<double, double>> ladder;
  std::vector<double> x(e.size());
  for (double eps : eps_ladder) {
    for (std::size_t i = 0; i < e.size(); ++i) x[i] = e[i] + eps * w[i];
    ladder.push_back({eps, u(x)});
  }
  BoundaryLimitResult res;
  res.fit = power_fit(ladder);
  res.predicted = gp.knorm * std::pow(-2.0 * edotw, gp.ord.s) *
                  boundary_limit_integral(f, e, gp.ord.s, gp.n);
  return res;
}

// Scaling limit of the time factor: for psi(t) = E_{alpha,1}(tbar_star (t-a)^alpha)
// with a = -eps / tbar, tbar = tbar_star^{1/alpha}, the ladder of
// d^ell psi / dt^ell at t=0 carries exponent alpha - ell and constant
// tbar^ell alpha (alpha-1) ... (alpha-ell+1) / Gamma(alpha+1). For ell = 0 the
// limit degenerates to 1 and the ladder tracks psi(0) - 1 instead.
// `constant_limit`, when supplied, receives the Richardson-extrapolated
// constant (the ladder corrections are powers of eps^alpha).
inline FitResult ml_time_scaling(double alpha, double tbar_star, int ell,
                                 const std::vector<double>& eps_ladder,
                                 double* constant_limit = nullptr) {
  if (!(tbar_star > 0.5 && tbar_star < 1.0))
    throw std::domain_error("ml_time_scaling: tbar_star in (1/2,1)");
  if (std::abs(alpha - std::round(alpha)) < 1e-12)
    throw std::domain_error("ml_time_scaling: alpha must be non-integer");
  const double tbar = std::pow(tbar_star, 1.0 / alpha);
  std::vector<std::pair<double, double>> ladder;
  for (double eps : eps_ladder) {
    double v;
    if (ell == 0) {
      v = mittag_leffler_m1(alpha, 1.0, tbar_star * std::pow(eps / tbar, alpha));
    } else {
      MLParams p{alpha, 1.0, tbar_star, -eps / tbar};
      v = ml_solution_derivative(p, 0.0, ell);
    }
    ladder.push_back({eps, v});
  }
  auto fit = power_fit(ladder);
  if (constant_limit) {
    const auto& [e1, v1] = ladder[ladder.size() - 2];
    const auto& [e2, v2] = ladder[ladder.size() - 1];
    const double c1 = v1 * std::pow(e1, ell - alpha);
    const double c2 = v2 * std::pow(e2, ell - alpha);
    const double p1 = std::pow(e1, alpha), p2 = std::pow(e2, alpha);
    *constant_limit = (c2 * p1 - c1 * p2) / (p1 - p2);
  }
  return fit;
}

inline double ml_time_scaling_expected_constant(double alpha, double tbar_star,
                                                int ell) {
  const double tbar = std::pow(tbar_star, 1.0 / alpha);
  double fac = 1.0;
  for (int q = 0; q < ell; ++q) fac *= (alpha - q);
  return std::pow(tbar, ell) * fac / gamma_fn(alpha + 1.0);
}

struct JetProbeResult {
  FitResult fit;          // of the paired values against eps
  double limit_profile;   // integral of the predicted limit against the test fn
};

// Weak-form boundary jet probe in 1d: pairs d^beta phi(e + eps X) against a
// fixed smooth test function on an X-grid (integrating by parts so only phi
// values enter), and compares against the predicted distributional limit
// profile (-1)^beta k s(s-1)...(s-beta+1) e^beta (-e X)_+^{s-beta}.
inline JetProbeResult distributional_jet_probe(
    const std::function<double(double)>& phi, double e, int beta, double s,
    double kstar, const std::vector<double>& eps_ladder) {
  if (beta < 0 || beta > 1)
    throw std::invalid_argument("distributional_jet_probe: beta in {0,1}");
  // test function supported in (lo, hi) on the inward side of the X axis
  const double lo = (e > 0) ? -2.0 : 0.5, hi = (e > 0) ? -0.5 : 2.0;
  auto testfn = [&](double X, int order) -> double {
    const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    const double u = (X - mid) / half;
    if (std::abs(u) >= 1.0) return 0.0;
    const double q = 1.0 - u * u;
    const double base = std::exp(-1.0 / q);
    if (order == 0) return base;
    // first derivative of exp(-1/(1-u^2)) in X
    return base * (-2.0 * u / (q * q)) / half;
  };

  std::vector<std::pair<double, double>> ladder;
  for (double eps : eps_ladder) {
    // int phi^{(beta)}(e+eps X) psi(X) dX = (-eps)^{-beta} int phi(e+eps X) psi^{(beta)}(X) dX
    double v = integrate_gl(
        [&](double X) { return phi(e + eps * X) * testfn(X, beta); }, lo, hi, 96);
    v *= std::pow(-1.0, beta) * std::pow(eps, -(double)beta);
    ladder.push_back({eps, v});
  }

  JetProbeResult out;
  out.fit = power_fit(ladder);
  double fac = 1.0;
  for (int q = 0; q < beta; ++q) fac *= (s - q);
  const double sgn = (beta & 1) ? -1.0 : 1.0;
  out.limit_profile = sgn * kstar * fac * std::pow(e, beta) *
                      integrate_gl(
                          [&](double X) {
                            const double t = -e * X;
                            return (t > 0.0 ? std::pow(t, s - beta) : 0.0) *
                                   testfn(X, 0);
                          },
                          lo, hi, 96);
  return out;
}

}  // namespace fracspan
