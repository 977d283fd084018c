// Quadrature rules: Gauss-Legendre, Gauss-Jacobi (Golub-Welsch) and
// tanh-sinh for integrands with algebraic endpoint singularities.
#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace fracspan {

struct QuadRule {
  std::vector<double> x;  // nodes
  std::vector<double> w;  // weights
};

namespace detail {

inline QuadRule jacobi_rule_impl(int n, double a, double b) {
  if (n < 1) throw std::invalid_argument("quadrature: need n >= 1");
  if (a <= -1.0 || b <= -1.0)
    throw std::invalid_argument("gauss_jacobi: exponents must be > -1");

  Eigen::VectorXd diag(n), sub(std::max(n - 1, 0));
  const double ab = a + b;
  diag(0) = (b - a) / (ab + 2.0);
  for (int k = 1; k < n; ++k) {
    const double q = 2.0 * k + ab;
    diag(k) = (b * b - a * a) / (q * (q + 2.0));
  }
  for (int k = 1; k < n; ++k) {
    const double q = 2.0 * k + ab;
    double bk;
    if (k == 1)
      bk = 4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab) * (2.0 + ab) * (3.0 + ab));
    else
      bk = 4.0 * k * (k + a) * (k + b) * (k + ab) /
           (q * q * (q + 1.0) * (q - 1.0));
    sub(k - 1) = std::sqrt(bk);
  }

  const double mu0 = std::pow(2.0, ab + 1.0) * std::exp(std::lgamma(a + 1.0) +
                     std::lgamma(b + 1.0) - std::lgamma(ab + 2.0));

  QuadRule r;
  r.x.resize(n);
  r.w.resize(n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  if (n <= 400) {
    es.computeFromTridiagonal(diag, sub);
    for (int i = 0; i < n; ++i) {
      r.x[i] = es.eigenvalues()(i);
      const double v0 = es.eigenvectors()(0, i);
      r.w[i] = mu0 * v0 * v0;
    }
    return r;
  }
  // large rules: nodes from the eigenvalues alone, weights through the
  // Christoffel function w_i = 1 / sum_k p_k(x_i)^2 (orthonormal recurrence)
  es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  for (int i = 0; i < n; ++i) {
    const double x = es.eigenvalues()(i);
    double pkm1 = 0.0, pk = 1.0 / std::sqrt(mu0);
    double ssq = pk * pk;
    for (int k = 0; k + 1 < n; ++k) {
      const double pk1 = ((x - diag(k)) * pk - (k > 0 ? sub(k - 1) : 0.0) * pkm1) / sub(k);
      pkm1 = pk;
      pk = pk1;
      ssq += pk * pk;
    }
    r.x[i] = x;
    r.w[i] = 1.0 / ssq;
  }
  return r;
}

}  // namespace detail

// Weight (1-x)^a (1+x)^b on [-1,1]. Rules are cached; cache is mutex guarded.
inline const QuadRule& gauss_jacobi(int n, double a, double b) {
  static std::map<std::tuple<int, long long, long long>, QuadRule> cache;
  static std::mutex mtx;
  const auto key = std::make_tuple(n, (long long)std::llround(a * 1e12),
                                   (long long)std::llround(b * 1e12));
  std::lock_guard<std::mutex> lock(mtx);
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, detail::jacobi_rule_impl(n, a, b)).first;
  return it->second;
}

inline const QuadRule& gauss_legendre(int n) { return gauss_jacobi(n, 0.0, 0.0); }

// integral_{lo}^{hi} f(x) dx, f smooth
template <class F>
double integrate_gl(F&& f, double lo, double hi, int n = 32) {
  const QuadRule& r = gauss_legendre(n);
  const double c = 0.5 * (hi - lo), m = 0.5 * (hi + lo);
  double s = 0.0;
  for (std::size_t i = 0; i < r.x.size(); ++i) s += r.w[i] * f(m + c * r.x[i]);
  return c * s;
}

// integral_0^L t^beta g(t) dt with g smooth; the weight t^beta is absorbed.
template <class G>
double integrate_gj_left(G&& g, double L, double beta, int n = 32) {
  const QuadRule& r = gauss_jacobi(n, 0.0, beta);
  // map t = L (1+x)/2, weight (1+x)^beta -> t^beta (L/2)^beta
  double s = 0.0;
  for (std::size_t i = 0; i < r.x.size(); ++i)
    s += r.w[i] * g(L * 0.5 * (1.0 + r.x[i]));
  return std::pow(L * 0.5, beta) * (L * 0.5) * s;
}

// integral_{lo}^{hi} (hi-t)^alpha g(t) dt with g smooth; weight absorbed.
template <class G>
double integrate_gj_right(G&& g, double lo, double hi, double alpha, int n = 32) {
  const QuadRule& r = gauss_jacobi(n, alpha, 0.0);
  const double c = 0.5 * (hi - lo), m = 0.5 * (hi + lo);
  double s = 0.0;
  for (std::size_t i = 0; i < r.x.size(); ++i) s += r.w[i] * g(m + c * r.x[i]);
  return std::pow(c, alpha) * c * s;
}

namespace detail {

template <class F>
double adapt_rec(F& f, double lo, double hi, double tol, int depth) {
  const double coarse = integrate_gl(f, lo, hi, 8);
  const double fine = integrate_gl(f, lo, hi, 16);
  if (std::abs(fine - coarse) <= tol || depth >= 48) return fine;
  const double mid = 0.5 * (lo + hi);
  return adapt_rec(f, lo, mid, 0.5 * tol, depth + 1) +
         adapt_rec(f, mid, hi, 0.5 * tol, depth + 1);
}

}  // namespace detail

// Adaptive bisection with an 8- vs 16-point Gauss error estimate. Locates
// interior kinks / integrable singularities without being told where they are.
template <class F>
double integrate_adaptive(F&& f, double lo, double hi, double abs_tol = 1e-10) {
  return detail::adapt_rec(f, lo, hi, abs_tol, 0);
}

// tanh-sinh nodes on (0,1). Each node carries its distance to both endpoints
// computed in a cancellation-free way, so integrands may be singular at 0 or 1.
struct TanhSinhRule {
  // x, 1-x, weight
  std::vector<double> x, xc, w;
};

inline const TanhSinhRule& tanh_sinh_rule(int level) {
  static std::map<int, TanhSinhRule> cache;
  static std::mutex mtx;
  std::lock_guard<std::mutex> lock(mtx);
  auto it = cache.find(level);
  if (it != cache.end()) return it->second;

  TanhSinhRule r;
  const double h = 1.0 / (1 << level);
  const double tmax = 3.6;  // exp(-pi/2 sinh 3.6) well above denormal range
  const int jmax = (int)std::floor(tmax / h);
  const double pih = std::numbers::pi / 2.0;
  for (int j = -jmax; j <= jmax; ++j) {
    const double t = j * h;
    const double z = pih * std::sinh(t);
    // x = (1+tanh z)/2, 1-x = 1/(1+exp(2z)), x = 1/(1+exp(-2z))
    const double xm = 1.0 / (1.0 + std::exp(2.0 * z));   // 1-x
    const double xp = 1.0 / (1.0 + std::exp(-2.0 * z));  // x
    const double w = h * pih * std::cosh(t) / (std::cosh(z) * std::cosh(z));
    if (xm <= 0.0 || xp <= 0.0 || w <= 0.0) continue;
    r.x.push_back(xp);
    r.xc.push_back(xm);
    r.w.push_back(0.5 * w);
  }
  return cache.emplace(level, std::move(r)).first->second;
}

// integral_{lo}^{hi} f dx where f(x, x-lo, hi-x) may blow up (integrably) at
// either endpoint. Doubles the level until two estimates agree.
template <class F>
double integrate_ts(F&& f, double lo, double hi, double rel_tol = 1e-12,
                    int max_level = 9, double* err_out = nullptr) {
  const double len = hi - lo;
  double prev = 0.0, cur = 0.0;
  for (int level = 5; level <= max_level; ++level) {
    const TanhSinhRule& r = tanh_sinh_rule(level);
    double s = 0.0;
    for (std::size_t i = 0; i < r.x.size(); ++i) {
      const double da = len * r.x[i];   // x - lo
      const double db = len * r.xc[i];  // hi - x
      s += r.w[i] * f(lo + da, da, db);
    }
    cur = len * s;
    if (level > 5) {
      const double err = std::abs(cur - prev);
      if (err <= rel_tol * std::max(1e-300, std::abs(cur))) {
        if (err_out) *err_out = err;
        return cur;
      }
    }
    prev = cur;
  }
  if (err_out) *err_out = std::abs(cur - prev);
  return cur;
}

}  // namespace fracspan
