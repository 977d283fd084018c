// First Dirichlet eigenpair of (-Delta)^s on the unit ball by Rayleigh-Ritz
// over the Fourier-symbol energy form, the spherical mean, and boundary
// probes of the eigenfunction.
#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "asymptotics.hpp"
#include "quadrature.hpp"
#include "specfun.hpp"

namespace fracspan {

enum class BasisFamily { kJacobi, kMonomial };

// Basis functions (1-|x|^2)_+^s p_i(x) supported in the closed unit ball.
// In 1d the polynomial part is P_{2i}^{(s,s)} (even Jacobi) or even monomials;
// in 2d it is a shifted-Legendre polynomial in r^2.
struct RadialBasis {
  int n = 1;
  double s = 0.5;
  int count = 12;
  BasisFamily family = BasisFamily::kJacobi;
  bool even_only = true;
};

namespace detail {

inline double jacobi_poly(int k, double a, double b, double x) {
  if (k == 0) return 1.0;
  double p0 = 1.0;
  double p1 = 0.5 * (a - b) + 0.5 * (a + b + 2.0) * x;
  for (int m = 2; m <= k; ++m) {
    const double q = 2.0 * m + a + b;
    const double c1 = 2.0 * m * (m + a + b) * (q - 2.0);
    const double c2 = (q - 1.0) * (a * a - b * b);
    const double c3 = (q - 2.0) * (q - 1.0) * q;
    const double c4 = 2.0 * (m + a - 1.0) * (m + b - 1.0) * q;
    const double p2 = ((c2 + c3 * x) * p1 - c4 * p0) / c1;
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

// d^nu/dx^nu P_k^{(a,b)} = Gamma(k+a+b+1+nu)/(2^nu Gamma(k+a+b+1)) P_{k-nu}^{(a+nu,b+nu)}
inline double jacobi_poly_deriv(int k, double a, double b, double x, int nu) {
  if (nu == 0) return jacobi_poly(k, a, b, x);
  if (nu > k) return 0.0;
  double c = 1.0;
  for (int q = 0; q < nu; ++q) c *= 0.5 * (k + a + b + 1.0 + q);
  return c * jacobi_poly(k - nu, a + nu, b + nu, x);
}

// polynomial part of basis element i and its x-derivatives (1d)
inline double basis_poly_1d(const RadialBasis& rb, int i, double x, int nu) {
  const int k = rb.even_only ? 2 * i : i;
  if (rb.family == BasisFamily::kJacobi)
    return jacobi_poly_deriv(k, rb.s, rb.s, x, nu);
  // monomial family x^k
  if (nu > k) return 0.0;
  double c = 1.0;
  for (int q = 0; q < nu; ++q) c *= (k - q);
  return c * std::pow(x, k - nu);
}

// coefficients of r_j with d^j/dx^j (1-x^2)^s = (1-x^2)^{s-j} r_j(x)
inline std::vector<std::vector<double>> boundary_factor_polys(double s, int jmax) {
  std::vector<std::vector<double>> r(jmax + 1);
  r[0] = {1.0};
  for (int j = 0; j < jmax; ++j) {
    const auto& cur = r[j];
    std::vector<double> nxt(cur.size() + 1, 0.0);
    // (1-x^2) r' - 2 (s-j) x r
    for (std::size_t p = 1; p < cur.size(); ++p) {
      nxt[p - 1] += p * cur[p];
      if (p + 1 < nxt.size()) nxt[p + 1] -= p * cur[p];
    }
    for (std::size_t p = 0; p < cur.size(); ++p)
      nxt[p + 1] -= 2.0 * (s - j) * cur[p];
    r[j + 1] = nxt;
  }
  return r;
}

inline double poly_eval(const std::vector<double>& c, double x) {
  double v = 0.0;
  for (std::size_t p = c.size(); p-- > 0;) v = v * x + c[p];
  return v;
}

}  // namespace detail

// basis element value / derivative at a 1d point (zero outside the open ball)
inline double basis_value_1d(const RadialBasis& rb, int i, double x, int nu = 0) {
  if (std::abs(x) >= 1.0) return 0.0;
  static thread_local std::vector<std::vector<double>> rj_cache;
  static thread_local double rj_s = -1.0;
  static thread_local int rj_max = -1;
  if (rj_s != rb.s || rj_max < nu) {
    rj_cache = detail::boundary_factor_polys(rb.s, std::max(nu, 8));
    rj_s = rb.s;
    rj_max = std::max(nu, 8);
  }
  const double q = 1.0 - x * x;
  double v = 0.0;
  double binom = 1.0;
  for (int j = 0; j <= nu; ++j) {
    v += binom * std::pow(q, rb.s - j) * detail::poly_eval(rj_cache[j], x) *
         detail::basis_poly_1d(rb, i, x, nu - j);
    binom *= (double)(nu - j) / (double)(j + 1);
  }
  return v;
}

inline double basis_value_radial(const RadialBasis& rb, int i, double r) {
  if (r >= 1.0) return 0.0;
  const double u = 2.0 * r * r - 1.0;
  return std::pow(1.0 - r * r, rb.s) * detail::jacobi_poly(i, 0.0, 0.0, u);
}

// Energy form E_s(u,v) = (2 pi)^{-n} int |xi|^{2s} Fu conj(Fv) with the
// transforms of the basis functions cached on a panelled radial rule and
// the tail beyond xi_max estimated by last-octave extrapolation.
struct EnergyForm {
  RadialBasis basis;
  double xi_max = 1200.0;
  Eigen::MatrixXd A;      // energy Gram
  Eigen::MatrixXd M;      // L2(B_1) Gram
  double tail_fraction = 0.0;
};

namespace detail {

inline void assemble_1d(EnergyForm& ef) {
  const RadialBasis& rb = ef.basis;
  const int nb = rb.count;
  const double s = rb.s;

  // shared x-rule absorbing (1-x^2)^s; resolves cos(xi x) up to xi_max
  const int nx = std::max(96, (int)(ef.xi_max * 0.55) + 4 * nb + 16);
  const QuadRule& xr = gauss_jacobi(nx, s, s);
  Eigen::MatrixXd Pt(nb, nx);  // basis polynomials, node-major columns
  for (int j = 0; j < nx; ++j)
    for (int i = 0; i < nb; ++i)
      Pt(i, j) = detail::basis_poly_1d(rb, i, xr.x[j], 0);
  Eigen::Map<const Eigen::ArrayXd> xs(xr.x.data(), nx), ws(xr.w.data(), nx);

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(nb, nb);
  Eigen::MatrixXd Aoct = Eigen::MatrixXd::Zero(nb, nb);
  Eigen::VectorXd re(nb), im(nb);
  Eigen::ArrayXd cw(nx), sw(nx);

  const double panel = 0.5 * std::numbers::pi;
  const int npanels = (int)std::ceil(ef.xi_max / panel);
  const QuadRule& pr = gauss_legendre(8);
  for (int p = 0; p < npanels; ++p) {
    const double lo = p * panel, hi = std::min((p + 1) * panel, ef.xi_max);
    for (std::size_t g = 0; g < pr.x.size(); ++g) {
      const double xi = 0.5 * (lo + hi) + 0.5 * (hi - lo) * pr.x[g];
      const double wxi = 0.5 * (hi - lo) * pr.w[g];
      cw = (xi * xs).cos() * ws;
      sw = -(xi * xs).sin() * ws;
      re.noalias() = Pt * cw.matrix();
      im.noalias() = Pt * sw.matrix();
      const double f = wxi * std::pow(xi, 2.0 * s) / std::numbers::pi;
      Eigen::MatrixXd contrib = f * (re * re.transpose() + im * im.transpose());
      A += contrib;
      if (xi > 0.5 * ef.xi_max) Aoct += contrib;
    }
  }
  // geometric tail: the integrand envelope decays like xi^{-2}, so the last
  // octave approximates everything beyond xi_max
  ef.A = A + Aoct;
  ef.tail_fraction = 0.0;
  for (int i = 0; i < nb; ++i)
    ef.tail_fraction = std::max(ef.tail_fraction,
                                std::abs(Aoct(i, i)) / std::max(std::abs(A(i, i)), 1e-300));

  // exact L2 Gram with weight (1-x^2)^{2s}
  const QuadRule& mr = gauss_jacobi(std::max(2 * nb + 8, 32), 2.0 * s, 2.0 * s);
  ef.M = Eigen::MatrixXd::Zero(nb, nb);
  for (std::size_t j = 0; j < mr.x.size(); ++j)
    for (int a = 0; a < nb; ++a)
      for (int b = a; b < nb; ++b)
        ef.M(a, b) += mr.w[j] * detail::basis_poly_1d(rb, a, mr.x[j], 0) *
                      detail::basis_poly_1d(rb, b, mr.x[j], 0);
  ef.M = ef.M.selfadjointView<Eigen::Upper>();
}

inline void assemble_2d(EnergyForm& ef) {
  const RadialBasis& rb = ef.basis;
  const int nb = rb.count;
  const double s = rb.s;

  // radial transform bhat(xi) = 2 pi int_0^1 (1-r^2)^s q(r) J0(xi r) r dr
  //   = pi int_0^1 (1-u)^s q(sqrt u) J0(xi sqrt u) du
  const int nu = std::max(96, (int)(ef.xi_max * 0.6) + 4 * nb + 16);
  const QuadRule& ur = gauss_jacobi(nu, s, 0.0);  // weight (1-u)^s on [0,1] after map
  std::vector<double> unode(nu), uw(nu);
  for (int j = 0; j < nu; ++j) {
    unode[j] = 0.5 * (ur.x[j] + 1.0);
    uw[j] = ur.w[j] * std::pow(0.5, s) * 0.5;
  }
  Eigen::MatrixXd Q(nu, nb);
  for (int j = 0; j < nu; ++j) {
    const double uuu = 2.0 * unode[j] - 1.0;
    for (int i = 0; i < nb; ++i) Q(j, i) = detail::jacobi_poly(i, 0.0, 0.0, uuu);
  }

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(nb, nb);
  Eigen::MatrixXd Aoct = Eigen::MatrixXd::Zero(nb, nb);
  Eigen::VectorXd bh(nb);
  const double panel = 0.5 * std::numbers::pi;
  const int npanels = (int)std::ceil(ef.xi_max / panel);
  const QuadRule& pr = gauss_legendre(8);
  for (int p = 0; p < npanels; ++p) {
    const double lo = p * panel, hi = std::min((p + 1) * panel, ef.xi_max);
    for (std::size_t g = 0; g < pr.x.size(); ++g) {
      const double xi = 0.5 * (lo + hi) + 0.5 * (hi - lo) * pr.x[g];
      const double wxi = 0.5 * (hi - lo) * pr.w[g];
      bh.setZero();
      for (int j = 0; j < nu; ++j) {
        const double bj = std::cyl_bessel_j(0.0, xi * std::sqrt(unode[j])) * uw[j];
        for (int i = 0; i < nb; ++i) bh(i) += bj * Q(j, i);
      }
      bh *= std::numbers::pi;
      const double f = wxi * std::pow(xi, 2.0 * s + 1.0) / (2.0 * std::numbers::pi);
      const Eigen::MatrixXd contrib = f * (bh * bh.transpose());
      A += contrib;
      if (xi > 0.5 * ef.xi_max) Aoct += contrib;
    }
  }
  ef.A = A + Aoct;
  ef.tail_fraction = 0.0;
  for (int i = 0; i < nb; ++i)
    ef.tail_fraction = std::max(ef.tail_fraction,
                                std::abs(Aoct(i, i)) / std::max(std::abs(A(i, i)), 1e-300));

  // M_ab = pi int_0^1 (1-u)^{2s} q_a q_b du
  const QuadRule& mr = gauss_jacobi(std::max(2 * nb + 8, 32), 2.0 * s, 0.0);
  ef.M = Eigen::MatrixXd::Zero(nb, nb);
  for (std::size_t j = 0; j < mr.x.size(); ++j) {
    const double u = 0.5 * (mr.x[j] + 1.0);
    const double w = mr.w[j] * std::pow(0.5, 2.0 * s) * 0.5 * std::numbers::pi;
    const double uuu = 2.0 * u - 1.0;
    for (int a = 0; a < nb; ++a)
      for (int b = a; b < nb; ++b)
        ef.M(a, b) += w * detail::jacobi_poly(a, 0.0, 0.0, uuu) *
                      detail::jacobi_poly(b, 0.0, 0.0, uuu);
  }
  ef.M = ef.M.selfadjointView<Eigen::Upper>();
}

}  // namespace detail

inline EnergyForm make_energy_form(const RadialBasis& rb, double xi_max = 0.0) {
  EnergyForm ef;
  ef.basis = rb;
  ef.xi_max = (xi_max > 0.0) ? xi_max : (rb.n == 1 ? 1200.0 : 600.0);
  if (rb.n == 1)
    detail::assemble_1d(ef);
  else if (rb.n == 2)
    detail::assemble_2d(ef);
  else
    throw std::invalid_argument("make_energy_form: n <= 2 at desk scale");
  return ef;
}

inline double energy(const Eigen::VectorXd& cu, const Eigen::VectorXd& cv,
                     const EnergyForm& ef) {
  return cu.transpose() * ef.A * cv;
}

struct EigenPair {
  double lambda1 = 0.0;
  std::vector<double> coeffs;
  RadialBasis basis;

  double value1d(double x, int nu = 0) const {
    double v = 0.0;
    for (std::size_t i = 0; i < coeffs.size(); ++i)
      v += coeffs[i] * basis_value_1d(basis, (int)i, x, nu);
    return v;
  }
  double value_radial(double r) const {
    double v = 0.0;
    for (std::size_t i = 0; i < coeffs.size(); ++i)
      v += coeffs[i] * basis_value_radial(basis, (int)i, r);
    return v;
  }
  double value(const std::vector<double>& x) const {
    if (basis.n == 1) return value1d(x[0]);
    return value_radial(std::sqrt(norm2(x)));
  }
};

// Smallest eigenpair of A c = lambda M c over the leading nb basis functions.
inline EigenPair first_eigenpair(const EnergyForm& ef, int nb = 0) {
  const int n = (nb > 0) ? nb : (int)ef.A.rows();
  if (n < 4) throw std::invalid_argument("first_eigenpair: need at least 4 basis functions");
  if (n > ef.A.rows()) throw std::invalid_argument("first_eigenpair: basis too small");

  const Eigen::MatrixXd A = ef.A.topLeftCorner(n, n);
  const Eigen::MatrixXd M = ef.M.topLeftCorner(n, n);
  {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> chk(M);
    const double cond = chk.eigenvalues().maxCoeff() /
                        std::max(chk.eigenvalues().minCoeff(), 1e-300);
    if (!(chk.eigenvalues().minCoeff() > 0.0) || cond > 1e12)
      throw std::runtime_error("first_eigenpair: mass matrix ill-conditioned");
  }
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(A, M);
  EigenPair ep;
  ep.basis = ef.basis;
  ep.lambda1 = ges.eigenvalues()(0);
  Eigen::VectorXd v = ges.eigenvectors().col(0);  // M-normalized
  ep.coeffs.assign(v.data(), v.data() + n);
  // sign: positive at the center
  double center = 0.0;
  for (int i = 0; i < n; ++i)
    center += ep.coeffs[i] * (ef.basis.n == 1 ? basis_value_1d(ef.basis, i, 0.0)
                                              : basis_value_radial(ef.basis, i, 0.0));
  if (center < 0.0)
    for (auto& c : ep.coeffs) c = -c;
  return ep;
}

// Independent operator-side discretization (1d, Jacobi family): the energy
// Gram is diagonal in this basis,
//   A_kk = Gamma(2s+k+1)/k! * h_k,  h_k the Jacobi orthogonality norm.
inline Eigen::MatrixXd jacobi_operator_energy_matrix(const RadialBasis& rb) {
  if (rb.n != 1 || rb.family != BasisFamily::kJacobi)
    throw std::invalid_argument("jacobi_operator_energy_matrix: 1d Jacobi basis only");
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(rb.count, rb.count);
  const double s = rb.s;
  for (int i = 0; i < rb.count; ++i) {
    const int k = rb.even_only ? 2 * i : i;
    const double mu = std::exp(log_gamma(2.0 * s + k + 1.0) - log_gamma(k + 1.0));
    const double hk = std::pow(2.0, 2.0 * s + 1.0) /
                      (2.0 * k + 2.0 * s + 1.0) *
                      std::exp(2.0 * log_gamma(k + s + 1.0) -
                               log_gamma(k + 1.0) - log_gamma(k + 2.0 * s + 1.0));
    A(i, i) = mu * hk;
  }
  return A;
}

// rotation average; in 1d the rotation group is the reflection
inline double spherical_mean(const std::function<double(const std::vector<double>&)>& v,
                             const std::vector<double>& x, int angular_nodes = 64) {
  if (x.size() == 1) {
    std::vector<double> xm{-x[0]};
    return 0.5 * (v(x) + v(xm));
  }
  const double r = std::sqrt(norm2(x));
  const double base = std::atan2(x[1], x[0]);
  double s = 0.0;
  std::vector<double> p(2);
  for (int a = 0; a < angular_nodes; ++a) {
    const double th = base + 2.0 * std::numbers::pi * a / angular_nodes;
    p[0] = r * std::cos(th);
    p[1] = r * std::sin(th);
    s += v(p);
  }
  return s / angular_nodes;
}

// Fit of phi(e + eps w) along an inward ray; outward rays must return the
// exact-zero ladder.
inline FitResult eigen_boundary_probe(const EigenPair& ep,
                                      const std::vector<double>& e,
                                      const std::vector<double>& w,
                                      const std::vector<double>& eps_ladder) {
  double edotw = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) edotw += e[i] * w[i];
  std::vector<std::pair<double, double>> ladder;
  std::vector<double> x(e.size());
  for (double eps : eps_ladder) {
    for (std::size_t i = 0; i < e.size(); ++i) x[i] = e[i] + eps * w[i];
    ladder.push_back({eps, ep.value(x)});
  }
  auto fit = power_fit(ladder);
  if (!fit.exact_zero && fit.r_squared < 0.99)
    throw std::runtime_error("eigen_boundary_probe: noisy ladder (R^2 < 0.99)");
  return fit;
}

}  // namespace fracspan
