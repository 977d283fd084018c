#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "fracspan/green_ball.hpp"

using namespace fracspan;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) {
  const double u = (double)(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

// classical Dirichlet Green function of -d^2/dx^2 on (-1,1)
double classical_green_1d(double x, double y) {
  return 0.5 * ((1.0 - x * y) - std::abs(x - y));
}

}  // namespace

TEST_CASE("r0 ratio") {
  CHECK_THAT(r0_ratio({1.0}, {0.3}), WithinAbs(0.0, 1e-15));
  CHECK_THAT(r0_ratio({0.0}, {0.5}), WithinRel(3.0, 1e-14));  // 1*0.75/0.25
  CHECK_THAT(r0_ratio({0.2}, {-0.6}), WithinRel(r0_ratio({-0.6}, {0.2}), 1e-15));
  CHECK_THROWS_AS(r0_ratio({0.2}, {0.2}), std::domain_error);
}

TEST_CASE("series coefficients respect the binomial bound") {
  for (int n : {1, 2}) {
    auto gp = GreenParams::make(n, 0.7);
    for (int k = 0; k <= gp.kmax; ++k) {
      CHECK(std::abs(gp.ck[k]) <=
            std::pow((double)(n + k + 1), n + 1) / (k + gp.ord.s));
    }
  }
}

TEST_CASE("n=1, s=1 kernel equals the classical Green function") {
  // The algebraic identity |x-y|^2 + (1-x^2)(1-y^2) = (1-xy)^2 turns the
  // eta-integral into ((1-xy) - |x-y|)/2; spot value G(0,0.5) = 0.25.
  auto gp = GreenParams::make(1, 1.0);
  CHECK_THAT(green_kernel({0.0}, {0.5}, gp), WithinRel(0.25, 1e-12));

  std::mt19937_64 rng(777);
  double maxerr = 0.0;
  for (int i = 0; i < 2000; ++i) {
    const double x = uniform(rng, -0.999, 0.999);
    double y = uniform(rng, -0.999, 0.999);
    if (std::abs(x - y) < 1e-8) y = (y > 0 ? y - 0.1 : y + 0.1);
    const double g = green_kernel({x}, {y}, gp, GreenPath::kQuadrature);
    maxerr = std::max(maxerr, std::abs(g - classical_green_1d(x, y)));
  }
  CHECK(maxerr < 1e-10);
}

TEST_CASE("kernel positivity, symmetry, boundary vanishing") {
  std::mt19937_64 rng(402);
  for (double s : {0.5, 1.5, 2.5}) {
    auto gp = GreenParams::make(1, s);
    for (int i = 0; i < 200; ++i) {
      const double x = uniform(rng, -0.99, 0.99);
      double y = uniform(rng, -0.99, 0.99);
      if (std::abs(x - y) < 1e-6) continue;
      const double g = green_kernel({x}, {y}, gp);
      const double gt = green_kernel({y}, {x}, gp);
      CHECK(g >= 0.0);
      CHECK_THAT(g, WithinRel(gt, 1e-12));
    }
    // y approaching the boundary
    const double gb = green_kernel({0.2}, {0.999999}, gp);
    CHECK(gb < green_kernel({0.2}, {0.9}, gp));
    CHECK(green_kernel({0.2}, {1.5}, gp) == 0.0);
  }
}

TEST_CASE("quadrature and series kernel paths agree") {
  std::mt19937_64 rng(31415);
  for (int n : {1, 2}) {
    for (double s : {0.5, 1.5, 2.5}) {
      auto gp = GreenParams::make(n, s);
      double worst = 0.0;
      for (int i = 0; i < 1000; ++i) {
        std::vector<double> x(n), y(n);
        do {
          for (int d = 0; d < n; ++d) {
            x[d] = uniform(rng, -0.75, 0.75);
            y[d] = uniform(rng, -0.75, 0.75);
          }
        } while (norm2(x) >= 1.0 || norm2(y) >= 1.0 || dist(x, y) < 1e-7);
        const double gq = green_kernel(x, y, gp, GreenPath::kQuadrature, 48);
        const double gs = green_kernel(x, y, gp, GreenPath::kSeries, 48);
        worst = std::max(worst, std::abs(gq - gs) / std::max(std::abs(gq), 1e-300));
      }
      INFO("n=" << n << " s=" << s);
      CHECK(worst < 1e-8);
    }
  }
}

TEST_CASE("solve_dirichlet: classical and closed-form fractional oracles") {
  SECTION("f == 0 gives u == 0") {
    auto gp = GreenParams::make(1, 0.5);
    auto u = solve_dirichlet([](const std::vector<double>&) { return 0.0; }, gp);
    CHECK_THAT(u({0.3}), WithinAbs(0.0, 1e-14));
  }

  SECTION("n=1, s=1, f == 1 solves -u'' = 1") {
    auto gp = GreenParams::make(1, 1.0);
    auto u = solve_dirichlet([](const std::vector<double>&) { return 1.0; }, gp);
    for (double x : {0.0, 0.35, -0.8}) {
      CHECK_THAT(u({x}), WithinRel(0.5 * (1.0 - x * x), 1e-8));
    }
    CHECK(u({1.2}) == 0.0);
  }

  SECTION("n=1, fractional s, f == 1 has the closed-form profile") {
    // (-Delta)^s (1-x^2)^s_+ = Gamma(2s+1) on (-1,1)
    for (double s : {0.5, 1.5}) {
      auto gp = GreenParams::make(1, s);
      auto u = solve_dirichlet([](const std::vector<double>&) { return 1.0; }, gp);
      for (double x : {0.0, 0.4, -0.7}) {
        const double expect = std::pow(1.0 - x * x, s) / gamma_fn(2.0 * s + 1.0);
        CHECK_THAT(u({x}), WithinRel(expect, 1e-6));
      }
    }
  }

  SECTION("linearity on the same evaluation scheme") {
    auto gp = GreenParams::make(1, 0.5);
    auto f1 = [](const std::vector<double>& y) { return std::cos(y[0]); };
    auto f2 = [](const std::vector<double>& y) { return y[0] * y[0]; };
    auto mix = [&](const std::vector<double>& y) { return 2.0 * f1(y) - 3.0 * f2(y); };
    auto u1 = solve_dirichlet(f1, gp);
    auto u2 = solve_dirichlet(f2, gp);
    auto um = solve_dirichlet(mix, gp);
    const double got = um({0.25});
    CHECK_THAT(got, WithinRel(2.0 * u1({0.25}) - 3.0 * u2({0.25}), 1e-10));
  }

  SECTION("positivity surrogate: f >= 0 implies u >= 0") {
    auto gp = GreenParams::make(1, 0.5);
    auto u = solve_dirichlet(
        [](const std::vector<double>& y) { return std::max(0.0, 0.5 - y[0] * y[0]); },
        gp);
    for (double x = -0.95; x < 1.0; x += 0.19) CHECK(u({x}) >= 0.0);
  }

  SECTION("n=2, s=1, f == 1 solves -Laplace u = 1 on the disk") {
    auto gp = GreenParams::make(2, 1.0);
    SolveOptions opt;
    opt.angular_nodes = 32;
    auto u = solve_dirichlet([](const std::vector<double>&) { return 1.0; }, gp, opt);
    for (double r : {0.0, 0.5}) {
      CHECK_THAT(u({r, 0.0}), WithinRel(0.25 * (1.0 - r * r), 1e-5));
    }
  }
}

TEST_CASE("boundary bound check") {
  auto gp = GreenParams::make(1, 0.5);
  SECTION("zero data") {
    auto u = solve_dirichlet([](const std::vector<double>&) { return 0.0; }, gp);
    CHECK(boundary_bound_check(u, 0.5, {0.1, 0.01, 0.001}) == 0.0);
  }
  SECTION("bump supported in B_1/2: finite and stabilizing ratio") {
    auto f = [](const std::vector<double>& y) {
      const double q = 0.25 - y[0] * y[0];
      return q > 0.0 ? std::exp(-0.25 / q) : 0.0;
    };
    auto u = solve_dirichlet(f, gp);
    const double v1 = boundary_bound_check(u, 0.5, {0.1});
    const double v2 = boundary_bound_check(u, 0.5, {0.01});
    const double v3 = boundary_bound_check(u, 0.5, {0.001});
    CHECK(std::isfinite(v1));
    CHECK(std::isfinite(v2));
    CHECK(std::isfinite(v3));
    // no blow-up: the d^{-s}-scaled ladder stays of one magnitude
    CHECK(v3 < 2.0 * v1);
    CHECK(v3 > 0.2 * v1);
  }
}

TEST_CASE("poisson kernel basics") {
  FracOrder o05 = FracOrder::make(0.5);
  CHECK(poisson_kernel({0.0}, {2.0}, 1, o05) > 0.0);
  // vanishes like (1-|x|^2)^s at the boundary
  const double v1 = poisson_kernel({0.99}, {2.0}, 1, o05);
  const double v2 = poisson_kernel({0.9999}, {2.0}, 1, o05);
  CHECK(v2 < v1);
  // sign (-1)^m
  FracOrder o15 = FracOrder::make(1.5);
  CHECK(poisson_kernel({0.0}, {2.0}, 1, o15) < 0.0);
  // spot value: gamma * (1) * 3^{-0.5} / 2 at x=0, y=2, s=0.5
  const double expect = poisson_gamma(1, 0.5) * std::pow(3.0, -0.5) / 2.0;
  CHECK_THAT(poisson_kernel({0.0}, {2.0}, 1, o05), WithinRel(expect, 1e-13));
  CHECK_THROWS_AS(poisson_kernel({1.5}, {2.0}, 1, o05), std::domain_error);
  CHECK_THROWS_AS(poisson_kernel({0.0}, {0.5}, 1, o05), std::domain_error);
}

TEST_CASE("harmonic bump: support structure and s-harmonicity") {
  FracOrder ord = FracOrder::make(0.5);

  SECTION("inside B_1 only the kernel integral contributes") {
    // psi_0 vanishes on B_{3/2}, so psi(0.2) is pure integral and positive
    CHECK(harmonic_bump({0.2}, 1, ord) > 0.0);
  }

  SECTION("matches the exterior datum outside B_1") {
    CHECK_THAT(harmonic_bump({2.5}, 1, ord),
               WithinRel(std::exp(-1.0 / 0.25), 1e-12));
    CHECK(harmonic_bump({1.5}, 1, ord) == 0.0);
  }

  SECTION("(-Delta)^{1/2} psi vanishes at interior points") {
    auto psi = [&](const std::vector<double>& p) {
      return harmonic_bump(p, 1, ord);
    };
    FracLapOptions opt;
    opt.support_radius = 3.0;
    opt.kink_radii = {1.0, 2.0, 3.0};
    for (double x : {0.0, 0.4}) {
      const double v = frac_laplacian_point(psi, {x}, ord, opt);
      const double scale = harmonic_bump({x}, 1, ord);
      CHECK(std::abs(v) < 2e-3 * std::abs(scale));
    }
  }
}

TEST_CASE("bracket and auxiliary kernel") {
  // [x,y] >= 1 - |x||y| and [0,y] = 1
  std::mt19937_64 rng(99);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> x{uniform(rng, -0.9, 0.9)}, y{uniform(rng, -0.9, 0.9)};
    CHECK(bracket(x, y) >= 1.0 - std::abs(x[0]) * std::abs(y[0]) - 1e-14);
  }
  CHECK_THAT(bracket({0.0}, {0.77}), WithinRel(1.0, 1e-15));

  auto gp = GreenParams::make(1, 1.5);
  CHECK(std::isfinite(aux_kernel({0.3}, {0.5}, gp)));
  CHECK_THROWS_AS(aux_kernel({0.3}, {0.5}, GreenParams::make(1, 0.5)),
                  std::domain_error);
}

TEST_CASE("auxiliary kernel recursion for s = 1.5") {
  auto gp = GreenParams::make(1, 1.5);
  std::vector<std::pair<double, double>> samples;
  for (double x : {-0.35, -0.15, 0.05, 0.3})
    for (double y : {-0.6, 0.55, 0.7}) samples.push_back({x, y});
  auto fit = recursion_residual(gp, samples);
  CHECK(fit.max_residual < 1e-4);
  CHECK(std::isfinite(fit.C));
}

TEST_CASE("ball quadrature integrates the volume exactly") {
  auto q1 = make_ball_quadrature(1, 32);
  double s1 = 0.0;
  for (double w : q1.weights) s1 += w;
  CHECK_THAT(s1, WithinRel(2.0, 1e-12));

  auto q2 = make_ball_quadrature(2, 24, 48);
  double s2 = 0.0;
  for (double w : q2.weights) {
    CHECK(w > 0.0);
    s2 += w;
  }
  CHECK_THAT(s2, WithinRel(std::numbers::pi, 1e-10));
  for (auto& p : q2.nodes) CHECK(norm2(p) < 1.0);
}
