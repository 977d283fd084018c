#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "fracspan/eigen_ball.hpp"
#include "fracspan/frac_laplacian.hpp"

using namespace fracspan;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {
double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * ((double)(rng() >> 11) * 0x1.0p-53);
}
}  // namespace

TEST_CASE("basis derivatives agree with finite differences") {
  RadialBasis rb;
  rb.s = 0.7;
  rb.count = 6;
  const double h = 1e-5;
  for (int i : {0, 2, 4}) {
    for (double x : {-0.5, 0.0, 0.3, 0.8}) {
      const double fd = (basis_value_1d(rb, i, x + h) - basis_value_1d(rb, i, x - h)) / (2 * h);
      CHECK_THAT(basis_value_1d(rb, i, x, 1), WithinRel(fd, 1e-6));
      const double fd2 = (basis_value_1d(rb, i, x + h) - 2.0 * basis_value_1d(rb, i, x) +
                          basis_value_1d(rb, i, x - h)) / (h * h);
      CHECK(std::abs(basis_value_1d(rb, i, x, 2) - fd2) <
            1e-4 * std::max(1.0, std::abs(fd2)));
    }
  }
}

TEST_CASE("energy form: classical identity and bilinearity") {
  RadialBasis rb;
  rb.s = 1.0;
  rb.count = 6;
  auto ef = make_energy_form(rb);

  // E(u,u) with u = (1-x^2): int_{-1}^{1} |u'|^2 = 8/3
  Eigen::VectorXd c0 = Eigen::VectorXd::Zero(rb.count);
  c0(0) = 1.0;
  CHECK_THAT(energy(c0, c0, ef), WithinRel(8.0 / 3.0, 5e-3));

  Eigen::VectorXd z = Eigen::VectorXd::Zero(rb.count);
  CHECK(energy(z, z, ef) == 0.0);

  std::mt19937_64 rng(5);
  Eigen::VectorXd u(rb.count), v(rb.count), w(rb.count);
  for (int i = 0; i < rb.count; ++i) {
    u(i) = uniform(rng, -1, 1);
    v(i) = uniform(rng, -1, 1);
    w(i) = uniform(rng, -1, 1);
  }
  CHECK_THAT(energy(u + v, w, ef), WithinRel(energy(u, w, ef) + energy(v, w, ef), 1e-10));
  CHECK_THAT(energy(u, v, ef), WithinRel(energy(v, u, ef), 1e-12));
  CHECK(ef.tail_fraction < 0.01);
}

TEST_CASE("fourier energy matrix matches the diagonal operator route") {
  for (double s : {0.5, 1.5}) {
    RadialBasis rb;
    rb.s = s;
    rb.count = 8;
    auto ef = make_energy_form(rb);
    auto Adiag = jacobi_operator_energy_matrix(rb);
    for (int i = 0; i < rb.count; ++i) {
      CHECK_THAT(ef.A(i, i), WithinRel(Adiag(i, i), 2e-3));
      for (int j = 0; j < i; ++j) {
        // off-diagonal entries vanish in exact arithmetic
        CHECK(std::abs(ef.A(i, j)) <
              5e-3 * std::sqrt(Adiag(i, i) * Adiag(j, j)));
      }
    }
  }
}

TEST_CASE("first eigenpair: classical oracle s=1, n=1") {
  RadialBasis rb;
  rb.s = 1.0;
  rb.count = 10;
  auto ef = make_energy_form(rb);
  auto ep = first_eigenpair(ef);
  const double exact = std::numbers::pi * std::numbers::pi / 4.0;
  CHECK_THAT(ep.lambda1, WithinRel(exact, 5e-3));

  // eigenfunction proportional to cos(pi x / 2)
  const double scale = ep.value1d(0.0) / 1.0;
  for (double x : {0.2, 0.5, 0.8}) {
    CHECK_THAT(ep.value1d(x), WithinRel(scale * std::cos(0.5 * std::numbers::pi * x), 1e-3));
  }

  // Rayleigh identity at the returned pair
  Eigen::Map<const Eigen::VectorXd> c(ep.coeffs.data(), rb.count);
  const double ray = energy(c, c, ef) / (c.transpose() * ef.M * c);
  CHECK_THAT(ep.lambda1, WithinRel(ray, 1e-10));
}

TEST_CASE("variational monotonicity and positivity across orders") {
  for (double s : {0.5, 1.0, 1.5}) {
    RadialBasis rb;
    rb.s = s;
    rb.count = 12;
    auto ef = make_energy_form(rb);
    double prev = 1e300;
    for (int nb = 4; nb <= 12; nb += 2) {
      auto ep = first_eigenpair(ef, nb);
      CHECK(ep.lambda1 > 0.0);
      CHECK(ep.lambda1 <= prev + 1e-12);
      prev = ep.lambda1;
    }
  }
}

TEST_CASE("cross-discretization agreement for s = 0.5") {
  RadialBasis rb;
  rb.s = 0.5;
  rb.count = 10;
  auto ef = make_energy_form(rb);
  auto ep = first_eigenpair(ef);

  // independent route: diagonal operator-side Gram on the same mass matrix
  EnergyForm ef2 = ef;
  ef2.A = jacobi_operator_energy_matrix(rb);
  auto ep2 = first_eigenpair(ef2);
  CHECK_THAT(ep.lambda1, WithinRel(ep2.lambda1, 1e-2));

  // a different polynomial family altogether
  RadialBasis rbm = rb;
  rbm.family = BasisFamily::kMonomial;
  rbm.count = 8;
  auto efm = make_energy_form(rbm);
  auto epm = first_eigenpair(efm);
  CHECK_THAT(epm.lambda1, WithinRel(ep.lambda1, 1e-2));
}

TEST_CASE("eigenfunction sign and interior eigen-residual") {
  RadialBasis rb;
  rb.s = 0.5;
  rb.count = 16;
  auto ef = make_energy_form(rb, 4800.0);  // tight Gram for a pointwise check
  auto ep = first_eigenpair(ef);

  double mn = 1e300, mx = -1e300;
  for (double x = -0.999; x <= 0.999; x += 0.011) {
    const double v = ep.value1d(x);
    mn = std::min(mn, v);
    mx = std::max(mx, v);
  }
  CHECK(mx > 0.0);
  CHECK(mn >= -1e-8 * mx);

  // the returned pair satisfies the equation pointwise: independent check
  // through the singular-integral operator
  FracOrder ord = FracOrder::make(0.5);
  FracLapOptions opt;
  opt.support_radius = 1.0;
  opt.kink_radii = {1.0};
  auto phi = [&](const std::vector<double>& p) { return ep.value1d(p[0]); };
  for (double x : {0.0, 0.45}) {
    const double lhs = frac_laplacian_point(phi, {x}, ord, opt);
    const double rhs = ep.lambda1 * ep.value1d(x);
    CHECK_THAT(lhs, WithinRel(rhs, 1e-4));
  }
}

TEST_CASE("two-dimensional eigenvalue: disk oracle s=1") {
  RadialBasis rb;
  rb.n = 2;
  rb.s = 1.0;
  rb.count = 8;
  auto ef = make_energy_form(rb);
  auto ep = first_eigenpair(ef);
  const double j01 = 2.404825557695773;  // first zero of J_0
  CHECK_THAT(ep.lambda1, WithinRel(j01 * j01, 1e-2));
}

TEST_CASE("spherical mean properties") {
  SECTION("1d reflection mean and idempotence") {
    auto v = [](const std::vector<double>& p) { return p[0] + p[0] * p[0]; };
    std::vector<double> x{0.4};
    CHECK_THAT(spherical_mean(v, x), WithinRel(0.16, 1e-13));
    auto vs = [&](const std::vector<double>& p) { return spherical_mean(v, p); };
    CHECK_THAT(spherical_mean(vs, x), WithinRel(spherical_mean(v, x), 1e-13));
  }
  SECTION("2d: radial invariance and odd kill") {
    auto rad = [](const std::vector<double>& p) { return std::cos(norm2(p)); };
    std::vector<double> x{0.3, 0.4};
    CHECK_THAT(spherical_mean(rad, x, 128), WithinRel(rad(x), 1e-12));
    auto odd = [](const std::vector<double>& p) { return p[0]; };
    CHECK_THAT(spherical_mean(odd, x, 128), WithinAbs(0.0, 1e-14));
  }
  SECTION("energy of the mean does not exceed the energy") {
    RadialBasis rb;
    rb.s = 0.6;
    rb.count = 10;
    rb.even_only = false;  // include odd polynomials
    auto ef = make_energy_form(rb);
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 50; ++trial) {
      Eigen::VectorXd c(rb.count);
      for (int i = 0; i < rb.count; ++i) c(i) = uniform(rng, -1.0, 1.0);
      Eigen::VectorXd ce = c;
      for (int i = 1; i < rb.count; i += 2) ce(i) = 0.0;  // reflection mean
      CHECK(energy(ce, ce, ef) <= energy(c, c, ef) + 1e-10);
    }
  }
}

TEST_CASE("boundary probe of the eigenfunction") {
  auto ladder = geometric_ladder(1e-1, 1e-3, 8);

  SECTION("outward rays give the exact zero ladder") {
    RadialBasis rb;
    rb.s = 0.5;
    rb.count = 10;
    auto ep = first_eigenpair(make_energy_form(rb));
    auto fit = eigen_boundary_probe(ep, {1.0}, {1.0}, ladder);
    CHECK(fit.exact_zero);
  }
  SECTION("smooth s=1 case has a simple zero") {
    RadialBasis rb;
    rb.s = 1.0;
    rb.count = 10;
    auto ep = first_eigenpair(make_energy_form(rb));
    auto fit = eigen_boundary_probe(ep, {1.0}, {-1.0}, ladder);
    CHECK_THAT(fit.exponent, WithinAbs(1.0, 0.02));
  }
  SECTION("s=0.5 boundary exponent") {
    RadialBasis rb;
    rb.s = 0.5;
    rb.count = 12;
    auto ep = first_eigenpair(make_energy_form(rb));
    auto fit = eigen_boundary_probe(ep, {1.0}, {-1.0}, ladder);
    CHECK_THAT(fit.exponent, WithinAbs(0.5, 0.02));
  }
}
