#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "fracspan/span.hpp"

using namespace fracspan;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("operator spec validation and case selection") {
  auto toy = OperatorSpec::toy_xyt();
  toy.validate();
  CHECK(select_case(toy) == 1);
  CHECK(select_case(OperatorSpec::toy_xt()) == 2);

  OperatorSpec pure_b;
  pure_b.nonlocal.push_back({1.0, 0.5, 1});
  CHECK(select_case(pure_b) == 3);

  OperatorSpec pure_time;
  pure_time.time.push_back({1.0, 0.7});
  CHECK(select_case(pure_time) == 4);

  OperatorSpec classical;  // no fractional component at all
  classical.local.push_back({1.0, {2}});
  classical.nonlocal.push_back({1.0, 1.0, 1});
  CHECK_THROWS_AS(classical.validate(), std::invalid_argument);
}

TEST_CASE("ode kernel solves d^r v = sign v with unit jets") {
  SECTION("first order, sign -1: exponential decay") {
    auto k = ode_kernel(1, -1.0);
    CHECK_THAT(k.value(0.0), WithinRel(1.0, 1e-14));
    CHECK_THAT(k.value(0.7), WithinRel(std::exp(-0.7), 1e-13));
  }
  SECTION("second order, sign +1: v(0)=v'(0)=1 gives e^x") {
    auto k = ode_kernel(2, 1.0);
    for (double x : {-0.5, 0.3, 1.2}) {
      CHECK_THAT(k.value(x), WithinRel(std::exp(x), 1e-13));
      CHECK_THAT(k.deriv(x, 2), WithinRel(k.value(x), 1e-12));  // d2 v = v
    }
  }
  SECTION("all jets at 0 are nonzero") {
    for (double sign : {-1.0, 1.0}) {
      for (int r : {1, 2, 3}) {
        auto k = ode_kernel(r, sign);
        for (int i = 0; i <= 10; ++i) CHECK(std::abs(k.jet0(i)) == 1.0);
      }
    }
  }
  SECTION("second order, sign -1: residual of the ODE along the line") {
    auto k = ode_kernel(2, -1.0);
    for (double x : {0.0, 0.4, 1.1})
      CHECK_THAT(k.deriv(x, 2), WithinRel(-k.value(x), 1e-12));
  }
}

TEST_CASE("case-1 block on the toy operator balances") {
  auto op = OperatorSpec::toy_xyt();
  BlockParams p;
  p.xbar = {{2.4}};
  p.tbar_star = {0.8};
  p.e_sign = {-1.0};
  p.y_mag = {1.0};
  p.eps = 0.05;
  auto blk = build_block(op, 1, p);
  CHECK(std::abs(blk.balance) < 1e-12);
  CHECK(blk.lambda[0] > 0.0);
  CHECK(blk.omega[0] > 0.0);

  // window violations
  BlockParams bad = p;
  bad.xbar = {{5.0}};  // outside (R+1, R+2) = (2, 3)
  CHECK_THROWS_AS(build_block(op, 1, bad), std::invalid_argument);
  bad = p;
  bad.tbar_star = {1.5};
  CHECK_THROWS_AS(build_block(op, 1, bad), std::invalid_argument);
}

TEST_CASE("case 4 without space component is reported unsupported") {
  OperatorSpec op;
  op.time.push_back({1.0, 0.7});
  BlockParams p;
  p.tbar_star = {0.8};
  CHECK_THROWS_WITH(build_block(op, 4, p),
                    Catch::Matchers::ContainsSubstring("out-of-scope"));
}

TEST_CASE("block residual certification (independent operator application)") {
  SECTION("toy case-2 block") {
    auto op = OperatorSpec::toy_xt();
    BlockParams p;
    p.xbar = {{1.6}};
    p.tbar_star = {0.75};
    p.eps = 0.05;
    auto blk = build_block(op, 2, p);
    auto rep = block_residual(blk, 20);
    CHECK(rep.max_rel < 1e-4);
  }
  SECTION("toy case-1 block") {
    auto op = OperatorSpec::toy_xyt();
    BlockParams p;
    p.xbar = {{2.5}};
    p.tbar_star = {0.7};
    p.e_sign = {1.0};
    p.y_mag = {0.8};
    p.eps = 0.05;
    auto blk = build_block(op, 1, p);
    auto rep = block_residual(blk, 20);
    CHECK(rep.max_rel < 1e-4);
  }
}

TEST_CASE("jet matrix shapes and degenerate dictionaries") {
  auto op = OperatorSpec::toy_xt();
  auto blocks = seeded_dictionary(op, 1, 7);
  SECTION("K = 0 gives the nonzero 1x1 value") {
    auto J = jet_matrix(blocks, 0);
    CHECK(J.rows() == 1);
    CHECK(J.cols() == 1);
    CHECK(std::abs(J(0, 0)) > 0.0);
  }
  SECTION("K = 1 row count is 1 + total dimension") {
    auto J = jet_matrix(blocks, 1);
    CHECK(J.rows() == 1 + op.total_dim());
  }
  SECTION("a duplicated block spans one direction") {
    auto two = seeded_dictionary(op, 2, 7, 0.05, /*degenerate=*/true);
    auto J = jet_matrix(two, 1);
    Eigen::BDCSVD<Eigen::MatrixXd> svd(J);
    CHECK(svd.singularValues()(1) < 1e-12 * svd.singularValues()(0));
  }
}

TEST_CASE("span rank on synthetic and constructed dictionaries") {
  SECTION("random full-rank matrix") {
    std::mt19937_64 rng(11);
    Eigen::MatrixXd A(6, 14);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 14; ++j)
        A(i, j) = ((double)(rng() >> 11) * 0x1.0p-53) - 0.5;
    auto r = span_rank(A);
    CHECK(r.rank == 6);
  }
  SECTION("toy operator, K = 2: full rank; degenerate control fails") {
    auto op = OperatorSpec::toy_xyt();
    const int K = 2;
    const int Kp = (int)multi_indices(op.total_dim(), K).size();
    auto blocks = seeded_dictionary(op, 4 * Kp, 42);
    auto r = span_rank(jet_matrix(blocks, K));
    CHECK(r.rank == Kp);
    CHECK(r.smin_ratio > 1e-8);

    auto degen = seeded_dictionary(op, 4 * Kp, 42, 0.05, true);
    auto rd = span_rank(jet_matrix(degen, K));
    CHECK(rd.rank < Kp);
  }
}

TEST_CASE("prescribe_jet solves for unit jets") {
  auto op = OperatorSpec::toy_xt();
  const int K = 3;
  const auto idx = multi_indices(op.total_dim(), K);
  auto blocks = seeded_dictionary(op, 4 * (int)idx.size(), 33);
  auto J = jet_matrix(blocks, K);

  SECTION("value-1 jet at the origin") {
    auto sol = prescribe_jet(J, 0);
    CHECK(sol.residual <= 1e-6);
  }
  SECTION("target derivative reproduced at 1") {
    int target = -1;
    for (std::size_t r = 0; r < idx.size(); ++r)
      if (idx[r] == std::vector<int>{0, 1}) target = (int)r;
    auto sol = prescribe_jet(J, target);
    CHECK(sol.residual <= 1e-6);
    const double got = (J * sol.coeffs)(target);
    CHECK_THAT(got, WithinAbs(1.0, 1e-6));
  }
  SECTION("rank-deficient dictionaries are rejected") {
    auto degen = seeded_dictionary(op, 4 * (int)idx.size(), 33, 0.05, true);
    CHECK_THROWS_AS(prescribe_jet(jet_matrix(degen, K), 0), std::runtime_error);
  }
}

TEST_CASE("rescaling consistency of the monomial closure") {
  // eta^{-gamma} f(T_eta p) = f(p) for the monomial itself
  auto op = OperatorSpec::toy_xt();
  const auto ex = scaling_exponents(op);
  std::vector<int> iota{1, 2};
  double gamma = 0.0;
  for (std::size_t v = 0; v < iota.size(); ++v) gamma += iota[v] * ex[v];
  auto f = monomial_closure(iota);
  const double eta = 0.37;
  std::vector<double> p{0.4, -0.8}, q(2);
  for (int v = 0; v < 2; ++v) q[v] = std::pow(eta, ex[v]) * p[v];
  CHECK_THAT(std::pow(eta, -gamma) * f(q), WithinRel(f(p), 1e-12));
}

TEST_CASE("gamma arithmetic for the mixed toy operator") {
  // op (d2/dx2, D_t^{0.7}), iota = (1;;2): gamma = 1/2 + 2/0.7
  auto op = OperatorSpec::toy_xt();
  const auto ex = scaling_exponents(op);
  std::vector<int> iota{1, 2};
  double gamma = 0.0;
  for (std::size_t v = 0; v < iota.size(); ++v) gamma += iota[v] * ex[v];
  CHECK_THAT(gamma, WithinRel(0.5 + 2.0 / 0.7, 1e-12));
  const double delta = *std::min_element(ex.begin(), ex.end());
  CHECK_THAT(delta, WithinRel(0.5, 1e-12));
  const int K0 = (int)std::ceil((gamma + 1.0) / delta - 1e-12);
  CHECK(K0 * delta - gamma >= 1.0 - 1e-12);
}

TEST_CASE("constant monomial approximant error shrinks with eta") {
  auto op = OperatorSpec::toy_xt();
  MonomialReport rep;
  auto f = monomial_closure({0, 0});
  auto coarse = monomial_approximant(op, {0, 0}, 0, 0.4, &rep);
  CHECK(rep.gamma == 0.0);
  CHECK(rep.jet_residual <= 1e-6);
  const double e_coarse = cl_error_on_ball(coarse, f, 0, 21);
  auto fine = monomial_approximant(op, {0, 0}, 0, 0.05, &rep);
  const double e_fine = cl_error_on_ball(fine, f, 0, 21);
  CHECK(e_fine < e_coarse);
  CHECK(e_fine < 0.05);  // Taylor tail at eta = 0.05 under the kappa >= 1 rate
}

TEST_CASE("monomial approximant error ladder (smoke)") {
  auto op = OperatorSpec::toy_xt();
  MonomialReport rep;
  auto ladder = approximant_ladder(op, {0, 1}, 1, {0.2, 0.1}, &rep, 2027, 21);
  CHECK(rep.K0 == 5);
  CHECK(rep.K == 7);
  CHECK(rep.jet_residual <= 1e-6);
  CHECK(rep.kappa_min >= 1.0 - 1e-12);
  CHECK(ladder[1].cl_error < ladder[0].cl_error);
}

TEST_CASE("polynomial approximant superposition") {
  auto op = OperatorSpec::toy_xt();
  SECTION("zero polynomial gives the zero field") {
    auto pa = polynomial_approximant(op, {{{0, 0}, 0.0}}, 1, 0.2);
    CHECK(pa.value({0.3, 0.2}) == 0.0);
  }
  SECTION("f = 1 + t assembles from its parts") {
    std::vector<std::pair<std::vector<int>, double>> mono{{{0, 0}, 1.0},
                                                          {{0, 1}, 1.0}};
    auto pa = polynomial_approximant(op, mono, 1, 0.15);
    const double got = pa.value({0.2, 0.4});
    CHECK_THAT(got, WithinAbs(1.4, 0.2));
    // superposition: value equals the sum of the parts by construction
    double parts = 0.0;
    for (auto& [w, part] : pa.parts) parts += w * part.value({0.2, 0.4});
    CHECK_THAT(got, WithinRel(parts, 1e-13));
  }
  SECTION("degree cap enforced") {
    CHECK_THROWS_AS(polynomial_approximant(op, {{{0, 5}, 1.0}}, 1, 0.2),
                    std::invalid_argument);
  }
}

TEST_CASE("polynomial fit for the general path") {
  auto f = [](const std::vector<double>& p) { return std::sin(p[1]); };
  auto rep = fit_polynomial(f, 2, 4, 1e-2);
  CHECK(rep.fit_error < 5e-3);  // degree-4 least-squares fit of sin
  CHECK_THROWS_AS(fit_polynomial(f, 2, 1, 1e-6), std::runtime_error);
}

TEST_CASE("time cutoff leaves the unit-ball window untouched") {
  auto u = [](const std::vector<double>& p) { return 1.0 + p[0] + p[1]; };
  std::vector<double> a{-0.4};
  auto cut = time_cutoff(u, 1, a);
  for (double t : {-0.9, 0.0, 0.8}) {
    std::vector<double> p{0.3, t};
    CHECK_THAT(cut(p), WithinRel(u(p), 1e-14));
  }
  CHECK(cut({0.3, 5.0}) == 0.0);
  CHECK(cut({0.3, -4.0}) == 0.0);
}
