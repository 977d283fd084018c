// Constructive engine: Lambda-harmonic building blocks (four construction
// cases), the jet matrix of derivatives at the origin, numerical span rank,
// and the rescaling-based local approximants.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "caputo.hpp"
#include "eigen_ball.hpp"
#include "frac_laplacian.hpp"
#include "green_ball.hpp"
#include "specfun.hpp"

namespace fracspan {

// ---------------------------------------------------------------------------
// operator specification

struct LocalTerm {
  double a = 0.0;
  std::vector<int> r;  // derivative multi-index, one entry per scalar variable
};

struct NonlocalTerm {
  double b = 0.0;
  double s = 0.5;
  int dim = 1;
};

struct TimeTerm {
  double c = 0.0;
  double alpha = 0.7;
};

struct OperatorSpec {
  std::vector<LocalTerm> local;
  std::vector<NonlocalTerm> nonlocal;
  std::vector<TimeTerm> time;

  int x_dim() const {
    int d = 0;
    for (auto& t : local) d += (int)t.r.size();
    return d;
  }
  int y_dim() const {
    int d = 0;
    for (auto& t : nonlocal) d += t.dim;
    return d;
  }
  int t_dim() const { return (int)time.size(); }
  int total_dim() const { return x_dim() + y_dim() + t_dim(); }

  void validate() const {
    bool fractional = false;
    for (auto& t : nonlocal)
      if (t.b != 0.0 && std::abs(t.s - std::round(t.s)) > 1e-12) fractional = true;
    for (auto& t : time)
      if (t.c != 0.0 && std::abs(t.alpha - std::round(t.alpha)) > 1e-12)
        fractional = true;
    if (!fractional)
      throw std::invalid_argument(
          "OperatorSpec: needs at least one genuinely fractional term");
    if (local.size() > 2 || nonlocal.size() > 2 || time.size() > 2)
      throw std::invalid_argument("OperatorSpec: at most 2 terms per kind at desk scale");
    for (auto& t : local) {
      if (t.r.empty() || t.r.size() > 2)
        throw std::invalid_argument("OperatorSpec: local blocks have dimension 1 or 2");
      int total = 0;
      for (int q : t.r) total += q;
      if (total < 1) throw std::invalid_argument("OperatorSpec: local order |r| >= 1");
    }
    for (auto& t : nonlocal) {
      if (t.dim < 1 || t.dim > 2)
        throw std::invalid_argument("OperatorSpec: nonlocal blocks have dimension 1 or 2");
      if (!(t.s > 0.0)) throw std::invalid_argument("OperatorSpec: s > 0");
    }
    for (auto& t : time)
      if (!(t.alpha > 0.0)) throw std::invalid_argument("OperatorSpec: alpha > 0");
  }

  // d2/dx2 + (-Delta_y)^{1/2} + D_t^{0.7}, dimensions 1+1+1
  static OperatorSpec toy_xyt() {
    OperatorSpec op;
    op.local.push_back({1.0, {2}});
    op.nonlocal.push_back({1.0, 0.5, 1});
    op.time.push_back({1.0, 0.7});
    return op;
  }
  // d2/dx2 + D_t^{0.7}, dimensions 1+1
  static OperatorSpec toy_xt() {
    OperatorSpec op;
    op.local.push_back({1.0, {2}});
    op.time.push_back({1.0, 0.7});
    return op;
  }
};

// construction case of the block recipe
inline int select_case(const OperatorSpec& op) {
  bool has_a = false, has_b = false, has_c = false;
  for (auto& t : op.local) has_a |= (t.a != 0.0);
  for (auto& t : op.nonlocal) has_b |= (t.b != 0.0);
  for (auto& t : op.time) has_c |= (t.c != 0.0);
  if (has_a && has_b) return 1;
  if (has_a && has_c) return 2;
  if (!has_a && has_b) return 3;
  if (!has_a && has_c) return 4;
  throw std::invalid_argument("select_case: empty operator");
}

// ---------------------------------------------------------------------------
// one-dimensional factor solving d^r v = sign * v with unit jet data

struct OdeKernel {
  int r = 1;
  double sign = -1.0;

  // jets at 0: d^q v(0) = sign^{floor(q/r)}; never zero
  double jet0(int order) const { return std::pow(sign, order / r); }

  // state (v, v', ..., v^{(r-1)}) at x via the companion-matrix exponential
  std::vector<long double> state(double x) const {
    std::vector<long double> out(r, 1.0L), cur(r, 1.0L);
    // out = sum_k x^k C^k y0 / k!
    for (int k = 1; k < 220; ++k) {
      std::vector<long double> nxt(r);
      for (int i = 0; i + 1 < r; ++i) nxt[i] = cur[i + 1];
      nxt[r - 1] = (long double)sign * cur[0];
      for (int i = 0; i < r; ++i) nxt[i] *= (long double)x / k;
      long double mag = 0.0L;
      for (int i = 0; i < r; ++i) {
        out[i] += nxt[i];
        mag = std::max(mag, std::abs(nxt[i]));
      }
      cur = nxt;
      if ((double)mag < 1e-21 * std::max(1.0, std::abs((double)out[0])) && k > 4) break;
    }
    return out;
  }

  double value(double x) const { return (double)state(x)[0]; }
  long double deriv_l(double x, int order) const {
    const auto st = state(x);
    const int q = order / r, rem = order % r;
    return std::pow((long double)sign, q) * st[rem];
  }
  double deriv(double x, int order) const { return (double)deriv_l(x, order); }
};

inline OdeKernel ode_kernel(int r, double sign) {
  if (r < 1) throw std::invalid_argument("ode_kernel: order >= 1");
  OdeKernel k;
  k.r = r;
  k.sign = sign;
  return k;
}

// ---------------------------------------------------------------------------
// cached first eigenpairs (1d, high-accuracy energy form)

inline const EigenPair& cached_eigenpair_1d(double s) {
  static std::map<long long, std::unique_ptr<EigenPair>> cache;
  static std::mutex mtx;
  const long long key = (long long)std::llround(s * 1e12);
  std::lock_guard<std::mutex> lock(mtx);
  auto it = cache.find(key);
  if (it == cache.end()) {
    RadialBasis rb;
    rb.s = s;
    rb.count = 16;
    auto ef = make_energy_form(rb, 4800.0);
    auto ep = std::make_unique<EigenPair>(first_eigenpair(ef));
    it = cache.emplace(key, std::move(ep)).first;
  }
  return *it->second;
}

// ---------------------------------------------------------------------------
// building blocks

struct BlockParams {
  std::vector<std::vector<double>> xbar;  // per local term, one per scalar var
  std::vector<double> tbar_star;          // per time term
  std::vector<double> e_sign;             // per nonlocal term (1d blocks)
  std::vector<double> y_mag;              // |Y_j|, with e_j . Y_j < 0 enforced
  double eps = 0.05;
};

namespace detail {

inline double smoothstep01(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const double f1 = std::exp(-1.0 / t), f2 = std::exp(-1.0 / (1.0 - t));
  return f1 / (f1 + f2);
}

// 1 for |x| <= r1, 0 for |x| >= r0
inline double radial_cutoff(double rad, double r1, double r0) {
  return smoothstep01((r0 - rad) / (r0 - r1));
}

}  // namespace detail

struct BuildingBlock {
  int case_tag = 1;
  OperatorSpec op;
  BlockParams prm;
  bool flipped = false;  // operator multiplied by -1 before the recipe

  // derived data
  std::vector<double> lambda;   // per nonlocal term (eigenvalue used)
  std::vector<double> omega;    // per nonlocal term
  std::vector<MLParams> psi;    // per time term (empty entries unused)
  std::vector<double> tbar;     // per time term
  bool exp_time = false;        // case-3 variant without time terms in Lambda
  bool bump_y = false;          // case-3 variant with bump y-factors
  std::vector<OdeKernel> xker;  // per scalar x variable
  std::vector<double> xscale;   // xbar per scalar x variable (flattened)

  double balance = 0.0;  // construction identity residue (algebraic)

  // factor jets at the origin -------------------------------------------------
  double x_jet(int scalar_idx, int order) const {
    if (case_tag == 3 || case_tag == 4)
      return std::pow(xscale[scalar_idx], order);  // exponential cutoff
    return std::pow(xscale[scalar_idx], order) * xker[scalar_idx].jet0(order);
  }

  double t_jet(int h, int order) const {
    if (exp_time) return std::pow(tbar[h], order);
    return ml_solution_derivative(psi[h], 0.0, order);
  }

  double y_jet(int j, int order) const {
    const auto& nt = op.nonlocal[j];
    const double w = omega[j];
    const double p = (prm.e_sign[j] * w - prm.eps * prm.e_sign[j] * prm.y_mag[j]);
    if (bump_y) {
      // high-order central differences of the bump profile
      FracOrder ord = FracOrder::make(nt.s);
      auto f = [&](double z) { return harmonic_bump({z}, 1, ord); };
      const double h = 1e-2;
      switch (order) {
        case 0: return f(p);
        case 1: return (f(p - 2*h) - 8*f(p - h) + 8*f(p + h) - f(p + 2*h)) / (12*h);
        case 2: return (-f(p - 2*h) + 16*f(p - h) - 30*f(p) + 16*f(p + h) - f(p + 2*h)) / (12*h*h);
        case 3: return (f(p - 2*h) - 2*f(p - h) + 2*f(p + h) - f(p + 2*h)) / (2*h*h*h);
        default:
          throw std::invalid_argument("building block: bump jets up to order 3");
      }
    }
    const EigenPair& ep = cached_eigenpair_1d(nt.s);
    return std::pow(w, -order) * ep.value1d(p / w, order);
  }

  // derivative of the full product at the origin
  double jet(const std::vector<int>& iota) const {
    double v = 1.0;
    int pos = 0;
    for (std::size_t i = 0; i < xscale.size(); ++i, ++pos) v *= x_jet((int)i, iota[pos]);
    for (std::size_t j = 0; j < op.nonlocal.size(); ++j, ++pos) v *= y_jet((int)j, iota[pos]);
    for (std::size_t h = 0; h < op.time.size(); ++h, ++pos) v *= t_jet((int)h, iota[pos]);
    return v;
  }

  // factor values (used by the rescaled approximant) --------------------------
  // extended precision: the prescribed-jet combinations can carry large
  // coefficients, and the cancellation budget at small eta needs the margin
  long double x_factor_l(double xv, int scalar_idx, int order = 0) const {
    if (case_tag == 3 || case_tag == 4) {
      // exp(xbar . x) with a far cutoff; derivatives at desk points are plain
      const long double cut = detail::radial_cutoff(std::abs(xv), 4.0, 8.0);
      return std::pow((long double)xscale[scalar_idx], order) *
             std::exp((long double)xscale[scalar_idx] * xv) * cut;
    }
    const long double cut = detail::radial_cutoff(std::abs(xv), 1.5, 3.0);
    return std::pow((long double)xscale[scalar_idx], order) *
           xker[scalar_idx].deriv_l(xscale[scalar_idx] * xv, order) * cut;
  }
  double x_factor(double xv, int scalar_idx, int order = 0) const {
    return (double)x_factor_l(xv, scalar_idx, order);
  }

  double y_factor(double yv, int j) const {
    const auto& nt = op.nonlocal[j];
    const double arg = yv + prm.e_sign[j] * omega[j] -
                       prm.eps * prm.e_sign[j] * prm.y_mag[j];
    if (bump_y) {
      FracOrder ord = FracOrder::make(nt.s);
      return harmonic_bump({arg}, 1, ord);
    }
    const EigenPair& ep = cached_eigenpair_1d(nt.s);
    return ep.value1d(arg / omega[j]);
  }

  long double t_factor_l(double tv, int h, int order = 0) const {
    if (exp_time) {
      // e^{tbar t} above -1, degree-(k-1) Taylor polynomial below
      const int k = (int)std::floor(op.time[h].alpha) + 1;
      const long double tb = tbar[h];
      if (tv >= -1.0) {
        long double v = std::exp(tb * tv);
        for (int q = 0; q < order; ++q) v *= tb;
        return v;
      }
      long double v = 0.0L;
      for (int i = order; i < k; ++i) {
        long double c = std::exp(-tb) * std::pow(tb, (long double)i);
        long double fact = 1.0L;
        for (int q = 1; q <= i - order; ++q) fact *= q;
        v += c * std::pow((long double)tv + 1.0L, (long double)(i - order)) / fact;
      }
      return v;
    }
    const MLParams& p = psi[h];
    if (tv < p.a) return order == 0 ? 1.0L : 0.0L;  // constant extension
    return ml_solution_derivative_l(p, tv, order);
  }
  double t_factor(double tv, int h, int order = 0) const {
    return (double)t_factor_l(tv, h, order);
  }

  // full product; coordinates packed as (x..., y..., t...)
  double value(const std::vector<double>& xyz) const {
    double v = 1.0;
    int pos = 0;
    for (std::size_t i = 0; i < xscale.size(); ++i, ++pos) v *= x_factor(xyz[pos], (int)i);
    for (std::size_t j = 0; j < op.nonlocal.size(); ++j, ++pos) v *= y_factor(xyz[pos], (int)j);
    for (std::size_t h = 0; h < op.time.size(); ++h, ++pos) v *= t_factor(xyz[pos], (int)h);
    return v;
  }
};

namespace detail {

inline double draw_uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * ((double)(rng() >> 11) * 0x1.0p-53);
}

inline void flip_operator(OperatorSpec& op) {
  for (auto& t : op.local) t.a = -t.a;
  for (auto& t : op.nonlocal) t.b = -t.b;
  for (auto& t : op.time) t.c = -t.c;
}

}  // namespace detail

// Assembles a Lambda_{-infty}-harmonic product block for the given case.
// Parameter windows follow the construction recipe; violations throw.
inline BuildingBlock build_block(const OperatorSpec& op_in, int case_tag,
                                 const BlockParams& prm) {
  OperatorSpec op = op_in;
  op.validate();
  BuildingBlock blk;
  blk.case_tag = case_tag;
  blk.prm = prm;

  // y-factor blocks above dimension 1 are outside the desk recipe
  for (auto& nt : op.nonlocal)
    if (nt.dim != 1)
      throw std::invalid_argument("build_block: nonlocal blocks of dimension 1 only");

  auto count_scalars = [&]() {
    int d = 0;
    for (auto& t : op.local) d += (int)t.r.size();
    return d;
  };

  if (case_tag == 1 || case_tag == 2) {
    // reorder so the pivot coefficients sit where the recipe wants them
    auto apos = std::find_if(op.local.begin(), op.local.end(),
                             [](auto& t) { return t.a != 0.0; });
    if (apos == op.local.end())
      throw std::invalid_argument("build_block: cases 1-2 need a local term");
    std::iter_swap(op.local.begin(), apos);

    if (case_tag == 1) {
      auto bpos = std::find_if(op.nonlocal.begin(), op.nonlocal.end(),
                               [](auto& t) { return t.b != 0.0; });
      if (bpos == op.nonlocal.end())
        throw std::invalid_argument("build_block: case 1 needs a nonlocal term");
      std::rotate(bpos, bpos + 1, op.nonlocal.end());  // pivot goes last
      if (op.nonlocal.back().b < 0.0) {
        detail::flip_operator(op);
        blk.flipped = true;
      }
    } else {
      auto cpos = std::find_if(op.time.begin(), op.time.end(),
                               [](auto& t) { return t.c != 0.0; });
      if (cpos == op.time.end())
        throw std::invalid_argument("build_block: case 2 needs a time term");
      std::rotate(cpos, cpos + 1, op.time.end());
      if (op.time.back().c < 0.0) {
        detail::flip_operator(op);
        blk.flipped = true;
      }
    }

    // window radius R
    const int M = (int)op.nonlocal.size();
    const int l = (int)op.time.size();
    const int jmax = (case_tag == 1) ? M - 1 : M;
    double budget = 0.0;
    for (int j = 0; j < jmax; ++j)
      budget += std::abs(op.nonlocal[j].b) * cached_eigenpair_1d(op.nonlocal[j].s).lambda1;
    if (case_tag == 1)
      for (auto& t : op.time) budget += std::abs(t.c);
    else
      for (int h = 0; h + 1 < l; ++h) budget += std::abs(op.time[h].c);
    int r1 = 0;
    for (int q : op.local[0].r) r1 += q;
    const double R = std::pow(budget / std::abs(op.local[0].a), 1.0 / r1);

    // windows
    if (prm.xbar.size() != op.local.size())
      throw std::invalid_argument("build_block: xbar shape mismatch");
    for (std::size_t i = 0; i < op.local.size(); ++i) {
      if (prm.xbar[i].size() != op.local[i].r.size())
        throw std::invalid_argument("build_block: xbar shape mismatch");
      for (double xb : prm.xbar[i])
        if (!(xb > R + 1.0 && xb < R + 2.0))
          throw std::invalid_argument("build_block: xbar outside its window (R+1, R+2)");
    }
    if ((int)prm.tbar_star.size() != l)
      throw std::invalid_argument("build_block: tbar_star shape mismatch");
    for (double ts : prm.tbar_star)
      if (!(ts > 0.5 && ts < 1.0))
        throw std::invalid_argument("build_block: tbar_star outside (1/2, 1)");

    // balance: lambda of the pivot factor
    double ax = 0.0;
    for (std::size_t i = 0; i < op.local.size(); ++i) {
      double pw = 1.0;
      for (std::size_t q = 0; q < op.local[i].r.size(); ++q)
        pw *= std::pow(prm.xbar[i][q], op.local[i].r[q]);
      ax += std::abs(op.local[i].a) * pw;
    }

    blk.lambda.resize(M);
    blk.omega.assign(M, 1.0);
    for (int j = 0; j < jmax; ++j) blk.lambda[j] = cached_eigenpair_1d(op.nonlocal[j].s).lambda1;

    if (case_tag == 1) {
      double rest = 0.0;
      for (int j = 0; j < M - 1; ++j) rest += op.nonlocal[j].b * blk.lambda[j];
      for (int h = 0; h < l; ++h) rest += op.time[h].c * prm.tbar_star[h];
      const double lamM = (ax - rest) / op.nonlocal[M - 1].b;
      if (!(lamM > 0.0)) throw std::runtime_error("build_block: lambda_M <= 0");
      blk.lambda[M - 1] = lamM;
      const double lam_star = cached_eigenpair_1d(op.nonlocal[M - 1].s).lambda1;
      blk.omega[M - 1] = std::pow(lam_star / lamM, 0.5 / op.nonlocal[M - 1].s);
      // Mittag-Leffler factors with plain eigenvalue tbar_star
      blk.psi.resize(l);
      blk.tbar.resize(l);
      for (int h = 0; h < l; ++h) {
        blk.tbar[h] = std::pow(prm.tbar_star[h], 1.0 / op.time[h].alpha);
        blk.psi[h] = MLParams{op.time[h].alpha, 1.0, prm.tbar_star[h],
                              -prm.eps / blk.tbar[h]};
      }
      blk.balance = -ax + rest + op.nonlocal[M - 1].b * lamM;
    } else {
      double rest = 0.0;
      for (int j = 0; j < M; ++j) rest += op.nonlocal[j].b * blk.lambda[j];
      for (int h = 0; h + 1 < l; ++h) rest += op.time[h].c * prm.tbar_star[h];
      const double lam = (ax - rest) / (op.time[l - 1].c * prm.tbar_star[l - 1]);
      if (!(lam > 0.0)) throw std::runtime_error("build_block: lambda <= 0");
      blk.psi.resize(l);
      blk.tbar.resize(l);
      for (int h = 0; h < l; ++h) {
        blk.tbar[h] = std::pow(prm.tbar_star[h], 1.0 / op.time[h].alpha);
        const double scale = (h == l - 1) ? lam * prm.tbar_star[h] : prm.tbar_star[h];
        blk.psi[h] = MLParams{op.time[h].alpha, 1.0, scale, -prm.eps / blk.tbar[h]};
      }
      blk.balance = -ax + rest + op.time[l - 1].c * lam * prm.tbar_star[l - 1];
    }

    // x-factors
    blk.xker.reserve(count_scalars());
    blk.xscale.reserve(count_scalars());
    for (std::size_t i = 0; i < op.local.size(); ++i) {
      const double abar = (op.local[i].a != 0.0) ? (op.local[i].a > 0 ? 1.0 : -1.0) : 1.0;
      for (std::size_t q = 0; q < op.local[i].r.size(); ++q) {
        const double sgn = (q == 0) ? -abar : 1.0;
        blk.xker.push_back(ode_kernel(op.local[i].r[q], sgn));
        blk.xscale.push_back(prm.xbar[i][q]);
      }
    }
  } else if (case_tag == 3) {
    bool has_c = false;
    for (auto& t : op.time) has_c |= (t.c != 0.0);
    const int M = (int)op.nonlocal.size();
    const int l = (int)op.time.size();

    if (has_c) {
      // SC-va1: scaled pivot eigenvalue balances the time terms
      auto cpos = std::find_if(op.time.begin(), op.time.end(),
                               [](auto& t) { return t.c != 0.0; });
      std::rotate(op.time.begin(), cpos, cpos + 1);
      auto bpos = std::find_if(op.nonlocal.begin(), op.nonlocal.end(),
                               [](auto& t) { return t.b != 0.0; });
      if (bpos == op.nonlocal.end())
        throw std::invalid_argument("build_block: case 3 needs a nonlocal term");
      std::rotate(bpos, bpos + 1, op.nonlocal.end());
      if (op.nonlocal.back().b > 0.0) {
        detail::flip_operator(op);
        blk.flipped = true;
      }
      double budget = 0.0;
      for (int j = 0; j < M - 1; ++j)
        budget += std::abs(op.nonlocal[j].b) * cached_eigenpair_1d(op.nonlocal[j].s).lambda1;
      const double R = budget / std::abs(op.time[0].c);
      if ((int)prm.tbar_star.size() != l)
        throw std::invalid_argument("build_block: tbar_star shape mismatch");
      for (double ts : prm.tbar_star)
        if (!(ts > R + 1.0 && ts < R + 2.0))
          throw std::invalid_argument("build_block: tbar_star outside (R+1, R+2)");

      blk.lambda.resize(M);
      blk.omega.assign(M, 1.0);
      double rest = 0.0;
      for (int j = 0; j < M - 1; ++j) {
        blk.lambda[j] = cached_eigenpair_1d(op.nonlocal[j].s).lambda1;
        rest += op.nonlocal[j].b * blk.lambda[j];
      }
      double csum = 0.0;
      for (int h = 0; h < l; ++h) csum += std::abs(op.time[h].c) * prm.tbar_star[h];
      const double lamM = (-rest - csum) / op.nonlocal[M - 1].b;
      if (!(lamM > 0.0)) throw std::runtime_error("build_block: lambda_M <= 0");
      blk.lambda[M - 1] = lamM;
      const double lam_star = cached_eigenpair_1d(op.nonlocal[M - 1].s).lambda1;
      blk.omega[M - 1] = std::pow(lam_star / lamM, 0.5 / op.nonlocal[M - 1].s);
      blk.psi.resize(l);
      blk.tbar.resize(l);
      for (int h = 0; h < l; ++h) {
        const double cbar = (op.time[h].c != 0.0) ? (op.time[h].c > 0 ? 1.0 : -1.0) : 1.0;
        blk.tbar[h] = std::pow(prm.tbar_star[h], 1.0 / op.time[h].alpha);
        blk.psi[h] = MLParams{op.time[h].alpha, 1.0, cbar * prm.tbar_star[h],
                              -prm.eps / blk.tbar[h]};
      }
      blk.balance = rest + op.nonlocal[M - 1].b * lamM + csum;
    } else {
      // SC-va2: s-harmonic bump factors, exponential time factors
      blk.bump_y = true;
      blk.exp_time = true;
      blk.lambda.assign(M, 0.0);
      blk.omega.assign(M, 1.0);
      blk.tbar = prm.tbar_star;  // reused as the exponential rates, in (1,2)
      for (double tb : blk.tbar)
        if (!(tb > 1.0 && tb < 2.0))
          throw std::invalid_argument("build_block: exponential rates outside (1,2)");
      blk.balance = 0.0;
    }

    // exponential x-cutoff rates (free parameters)
    for (std::size_t i = 0; i < op.local.size(); ++i)
      for (std::size_t q = 0; q < op.local[i].r.size(); ++q)
        blk.xscale.push_back(prm.xbar.empty() ? 1.0 : prm.xbar[i][q]);
  } else {
    throw std::invalid_argument(
        "build_block: case 4 needs the out-of-scope time kernel; "
        "only operators with a space-fractional or local component are supported");
  }

  // initial points must stay in (-2, 0)
  for (double tb : blk.tbar)
    if (!blk.exp_time && !(prm.eps / tb < 2.0))
      throw std::invalid_argument("build_block: initial point left (-2, 0)");

  // nonlocal windows: e on the scaled sphere, e.Y < 0
  if (prm.e_sign.size() != op.nonlocal.size() || prm.y_mag.size() != op.nonlocal.size())
    throw std::invalid_argument("build_block: nonlocal parameter shape mismatch");
  for (std::size_t j = 0; j < op.nonlocal.size(); ++j) {
    if (std::abs(prm.e_sign[j]) != 1.0)
      throw std::invalid_argument("build_block: e_sign must be +-1");
    if (!(prm.y_mag[j] > 0.0))
      throw std::invalid_argument("build_block: need e.Y < 0");
    const double inside = std::abs(prm.e_sign[j] * blk.omega[j] -
                                   prm.eps * prm.e_sign[j] * prm.y_mag[j]);
    if (!(inside < blk.omega[j]))
      throw std::invalid_argument("build_block: evaluation point left the ball");
  }

  blk.op = op;
  return blk;
}

// Window radius R of the free-parameter boxes, derived the same way the
// recipe inside build_block derives it.
inline double window_radius(const OperatorSpec& op, int case_tag) {
  auto skip_last_nonzero = [](auto begin, auto end, auto coef, auto weight) {
    double budget = 0.0;
    bool skipped = false;
    for (auto it = std::make_reverse_iterator(end);
         it != std::make_reverse_iterator(begin); ++it) {
      if (!skipped && coef(*it) != 0.0) {
        skipped = true;
        continue;
      }
      budget += std::abs(coef(*it)) * weight(*it);
    }
    return budget;
  };
  auto lam = [](const NonlocalTerm& t) { return cached_eigenpair_1d(t.s).lambda1; };
  auto one = [](const TimeTerm&) { return 1.0; };
  auto bco = [](const NonlocalTerm& t) { return t.b; };
  auto cco = [](const TimeTerm& t) { return t.c; };

  if (case_tag == 1 || case_tag == 2) {
    double a1 = 0.0;
    int r1 = 0;
    for (auto& t : op.local)
      if (t.a != 0.0 && a1 == 0.0) {
        a1 = t.a;
        for (int q : t.r) r1 += q;
      }
    double budget = 0.0;
    if (case_tag == 1) {
      budget = skip_last_nonzero(op.nonlocal.begin(), op.nonlocal.end(), bco, lam);
      for (auto& t : op.time) budget += std::abs(t.c);
    } else {
      for (auto& t : op.nonlocal) budget += std::abs(t.b) * lam(t);
      budget += skip_last_nonzero(op.time.begin(), op.time.end(), cco, one);
    }
    return std::pow(budget / std::abs(a1), 1.0 / r1);
  }
  if (case_tag == 3) {
    bool has_c = false;
    double c1 = 0.0;
    for (auto& t : op.time)
      if (t.c != 0.0) {
        has_c = true;
        if (c1 == 0.0) c1 = t.c;
      }
    if (!has_c) return 0.0;  // SC-va2: rates live in (1,2)
    const double budget =
        skip_last_nonzero(op.nonlocal.begin(), op.nonlocal.end(), bco, lam);
    return budget / std::abs(c1);
  }
  return 0.0;
}

// deterministic seeded dictionary; `degenerate` repeats one parameter draw
inline std::vector<BuildingBlock> seeded_dictionary(const OperatorSpec& op,
                                                    int count, std::uint64_t seed,
                                                    double eps = 0.05,
                                                    bool degenerate = false) {
  const int case_tag = select_case(op);
  std::mt19937_64 rng(seed);
  std::vector<BuildingBlock> blocks;
  {
    OperatorSpec probe = op;
    probe.validate();
  }
  const double R = window_radius(op, case_tag);
  bool has_c = false;
  for (auto& t : op.time) has_c |= (t.c != 0.0);

  BlockParams frozen;
  bool have_frozen = false;
  for (int b = 0; b < count; ++b) {
    bool placed = false;
    for (int attempt = 0; attempt < 64 && !placed; ++attempt) {
      BlockParams p;
      p.eps = eps;
      for (auto& t : op.local) {
        std::vector<double> xb;
        for (std::size_t q = 0; q < t.r.size(); ++q) {
          const double u = detail::draw_uniform(rng, 0.02, 0.98);
          if (case_tag == 1 || case_tag == 2)
            xb.push_back(R + 1.0 + u);
          else
            xb.push_back(0.5 + u);  // free exponential rates
        }
        p.xbar.push_back(xb);
      }
      for (std::size_t h = 0; h < op.time.size(); ++h) {
        const double u = detail::draw_uniform(rng, 0.02, 0.98);
        if (case_tag == 1 || case_tag == 2)
          p.tbar_star.push_back(0.5 + 0.5 * u);
        else if (has_c)
          p.tbar_star.push_back(R + 1.0 + u);
        else
          p.tbar_star.push_back(1.0 + u);
      }
      for (std::size_t j = 0; j < op.nonlocal.size(); ++j) {
        p.e_sign.push_back(detail::draw_uniform(rng, 0.0, 1.0) < 0.5 ? -1.0 : 1.0);
        p.y_mag.push_back(detail::draw_uniform(rng, 0.5, 1.5));
      }
      try {
        const BlockParams& use = (degenerate && have_frozen) ? frozen : p;
        blocks.push_back(build_block(op, case_tag, use));
        if (!have_frozen) {
          frozen = p;
          have_frozen = true;
        }
        placed = true;
      } catch (const std::exception&) {
        // window or sign violation for this draw: try again
      }
    }
    if (!placed)
      throw std::runtime_error("seeded_dictionary: parameter draws kept failing");
  }
  return blocks;
}

// ---------------------------------------------------------------------------
// jet matrix, rank, prescription

inline std::vector<std::vector<int>> multi_indices(int dim, int K) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(dim, 0);
  // graded lexicographic
  std::function<void(int, int)> rec = [&](int pos, int left) {
    if (pos == dim - 1) {
      cur[pos] = left;
      out.push_back(cur);
      return;
    }
    for (int q = left; q >= 0; --q) {
      cur[pos] = q;
      rec(pos + 1, left - q);
    }
  };
  for (int total = 0; total <= K; ++total) rec(0, total);
  return out;
}

inline Eigen::MatrixXd jet_matrix(const std::vector<BuildingBlock>& blocks, int K) {
  if (blocks.empty()) throw std::invalid_argument("jet_matrix: no blocks");
  const int dim = blocks.front().op.total_dim();
  const auto idx = multi_indices(dim, K);
  Eigen::MatrixXd J((int)idx.size(), (int)blocks.size());
  for (std::size_t b = 0; b < blocks.size(); ++b)
    for (std::size_t r = 0; r < idx.size(); ++r)
      J((int)r, (int)b) = blocks[b].jet(idx[r]);
  return J;
}

struct RankResult {
  int rank = 0;
  double smin_ratio = 0.0;  // sigma_min / sigma_max after column normalization
};

inline RankResult span_rank(const Eigen::MatrixXd& J, double tol = 1e-8) {
  if (J.cols() < J.rows())
    throw std::invalid_argument("span_rank: needs at least as many columns as rows");
  Eigen::MatrixXd Jn = J;
  for (int c = 0; c < Jn.cols(); ++c) {
    const double m = Jn.col(c).cwiseAbs().maxCoeff();
    if (m > 0.0) Jn.col(c) /= m;
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(Jn);
  const auto& sv = svd.singularValues();
  RankResult res;
  res.smin_ratio = sv(sv.size() - 1) / sv(0);
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > tol * sv(0)) ++res.rank;
  return res;
}

struct JetSolve {
  Eigen::VectorXd coeffs;
  double residual = 0.0;  // max-norm jet mismatch
};

// Minimum-norm least-squares solve J c = e_target with column equilibration.
// The factorization runs in extended precision: the prescribed-jet systems of
// the rescaling construction are Vandermonde-like and genuinely stiff.
inline JetSolve prescribe_jet(const Eigen::MatrixXd& J, int target_row,
                              double tol = 1e-6) {
  using MatL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  using VecL = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
  MatL Jl = J.cast<long double>();
  VecL scale(Jl.cols());
  for (int c = 0; c < Jl.cols(); ++c) {
    const long double m = Jl.col(c).cwiseAbs().maxCoeff();
    scale(c) = (m > 0.0L) ? 1.0L / m : 1.0L;
    Jl.col(c) *= scale(c);
  }
  VecL rhs = VecL::Zero(J.rows());
  rhs(target_row) = 1.0L;
  Eigen::CompleteOrthogonalDecomposition<MatL> cod(Jl);
  VecL chat = cod.solve(rhs);
  JetSolve out;
  VecL cl = scale.asDiagonal() * chat;
  out.coeffs = cl.cast<double>();
  out.residual = (double)(J.cast<long double>() * cl - rhs).cwiseAbs().maxCoeff();
  if (out.residual > tol)
    throw std::runtime_error("prescribe_jet: jet matrix is rank deficient");
  return out;
}

// ---------------------------------------------------------------------------
// independent residual oracle: apply the operator factorwise

struct ResidualReport {
  double max_rel = 0.0;
  double scale = 0.0;
};

inline ResidualReport block_residual(const BuildingBlock& blk, int nsamples = 20,
                                     std::uint64_t seed = 17) {
  std::mt19937_64 rng(seed);
  const auto& op = blk.op;
  const int nx = (int)blk.xscale.size();
  const int ny = (int)op.nonlocal.size();
  const int nt = (int)op.time.size();
  ResidualReport rep;

  for (int s = 0; s < nsamples; ++s) {
    std::vector<double> pt(nx + ny + nt);
    for (int i = 0; i < nx; ++i) pt[i] = detail::draw_uniform(rng, -0.05, 0.05);
    for (int j = 0; j < ny; ++j) pt[nx + j] = detail::draw_uniform(rng, -0.01, 0.01);
    for (int h = 0; h < nt; ++h) pt[nx + ny + h] = detail::draw_uniform(rng, 0.0, 0.1);

    // factor values at the sample
    std::vector<double> xv(nx), yv(ny), tv(nt);
    for (int i = 0; i < nx; ++i) xv[i] = blk.x_factor(pt[i], i);
    for (int j = 0; j < ny; ++j) yv[j] = blk.y_factor(pt[nx + j], j);
    for (int h = 0; h < nt; ++h) tv[h] = blk.t_factor(pt[nx + ny + h], h);
    auto product_except_x = [&](int skip) {
      double v = 1.0;
      for (int i = 0; i < nx; ++i)
        if (i != skip) v *= xv[i];
      for (double q : yv) v *= q;
      for (double q : tv) v *= q;
      return v;
    };

    double total = 0.0, scale = 0.0;

    // local terms: analytic derivatives of the ODE kernels
    int scalar0 = 0;
    for (auto& lt : op.local) {
      double term = lt.a;
      if (lt.a != 0.0) {
        double dv = 1.0;
        for (std::size_t q = 0; q < lt.r.size(); ++q)
          dv *= blk.x_factor(pt[scalar0 + (int)q], scalar0 + (int)q, lt.r[q]);
        // remaining factors
        double rest = 1.0;
        for (int i = 0; i < nx; ++i) {
          bool in_block = (i >= scalar0 && i < scalar0 + (int)lt.r.size());
          if (!in_block) rest *= xv[i];
        }
        for (double q : yv) rest *= q;
        for (double q : tv) rest *= q;
        term *= dv * rest;
        total += term;
        scale = std::max(scale, std::abs(term));
      }
      scalar0 += (int)lt.r.size();
    }

    // nonlocal terms: singular-integral operator applied to the y-factor
    for (int j = 0; j < ny; ++j) {
      if (op.nonlocal[j].b == 0.0) continue;
      const double w = blk.omega[j];
      FracOrder ord = FracOrder::make(op.nonlocal[j].s);
      FracLapOptions opt;
      if (blk.bump_y) {
        opt.support_radius = 3.0;
        opt.kink_radii = {1.0, 2.0, 3.0};
      } else {
        opt.support_radius = w;
        opt.kink_radii = {w};
      }
      const double shift = blk.prm.e_sign[j] * w - blk.prm.eps * blk.prm.e_sign[j] * blk.prm.y_mag[j];
      auto yfun = [&](double z) { return blk.y_factor(z - shift, j); };
      const double lap = frac_laplacian_point_1d(yfun, pt[nx + j] + shift, ord, opt);
      double rest = 1.0;
      for (int i = 0; i < nx; ++i) rest *= xv[i];
      for (int q = 0; q < ny; ++q)
        if (q != j) rest *= yv[q];
      for (double q : tv) rest *= q;
      const double term = op.nonlocal[j].b * lap * rest;
      total += term;
      scale = std::max(scale, std::abs(term));
    }

    // time terms: Caputo quadrature on the Mittag-Leffler factor
    for (int h = 0; h < nt; ++h) {
      if (op.time[h].c == 0.0) continue;
      if (blk.exp_time) continue;  // no time terms in Lambda for this variant
      const MLParams& mp = blk.psi[h];
      auto cp = CaputoParams::make(mp.alpha, mp.a);
      const double cap = caputo_derivative(ml_solution_fn(mp), cp, pt[nx + ny + h], 96);
      double rest = 1.0;
      for (int i = 0; i < nx; ++i) rest *= xv[i];
      for (double q : yv) rest *= q;
      for (int q = 0; q < nt; ++q)
        if (q != h) rest *= tv[q];
      const double term = op.time[h].c * cap * rest;
      total += term;
      scale = std::max(scale, std::abs(term));
    }

    (void)product_except_x;
    if (scale > 0.0)
      rep.max_rel = std::max(rep.max_rel, std::abs(total) / scale);
    rep.scale = std::max(rep.scale, scale);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// rescaled local approximants

// anisotropic scaling exponents, one per scalar coordinate:
// 1/r for local variables, 1/(2s) for nonlocal ones, 1/alpha for time
inline std::vector<double> scaling_exponents(const OperatorSpec& op) {
  std::vector<double> ex;
  for (auto& t : op.local)
    for (int q : t.r) ex.push_back(1.0 / q);
  for (auto& t : op.nonlocal) {
    for (int d = 0; d < t.dim; ++d) ex.push_back(1.0 / (2.0 * t.s));
  }
  for (auto& t : op.time) ex.push_back(1.0 / t.alpha);
  return ex;
}

struct Approximant {
  OperatorSpec op;
  std::vector<BuildingBlock> blocks;
  Eigen::VectorXd coeffs;
  std::vector<double> scale_exp;
  double eta = 0.1;
  double gamma = 0.0;

  double value(const std::vector<double>& p) const {
    std::vector<double> q(p.size());
    for (std::size_t v = 0; v < p.size(); ++v)
      q[v] = std::pow(eta, scale_exp[v]) * p[v];
    long double total = 0.0L;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      const BuildingBlock& blk = blocks[b];
      const int nx = (int)blk.xscale.size();
      const int ny = (int)blk.op.nonlocal.size();
      long double prod = coeffs((int)b);
      int pos = 0;
      for (int i = 0; i < nx; ++i, ++pos) prod *= blk.x_factor_l(q[pos], i);
      for (int j = 0; j < ny; ++j, ++pos) prod *= (long double)blk.y_factor(q[pos], j);
      for (std::size_t h = 0; h < blk.op.time.size(); ++h, ++pos)
        prod *= blk.t_factor_l(q[pos], (int)h);
      total += prod;
    }
    return (double)(std::pow((long double)eta, (long double)-gamma) * total);
  }

  // separable evaluation on a tensor grid (axes already include ghosts);
  // long double accumulation keeps the inter-block cancellation clean
  std::vector<long double> values_on_grid(const std::vector<std::vector<double>>& axes) const {
    const int N = (int)axes.size();
    std::vector<int> sz(N);
    int total = 1;
    for (int v = 0; v < N; ++v) {
      sz[v] = (int)axes[v].size();
      total *= sz[v];
    }
    std::vector<long double> out(total, 0.0L);
    const long double pref = std::pow((long double)eta, (long double)-gamma);
    std::vector<std::vector<long double>> fax(N);
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      const BuildingBlock& blk = blocks[b];
      const int nx = (int)blk.xscale.size();
      const int ny = (int)blk.op.nonlocal.size();
      for (int v = 0; v < N; ++v) {
        fax[v].resize(sz[v]);
        for (int g = 0; g < sz[v]; ++g) {
          const double q = std::pow(eta, scale_exp[v]) * axes[v][g];
          if (v < nx)
            fax[v][g] = blk.x_factor_l(q, v);
          else if (v < nx + ny)
            fax[v][g] = (long double)blk.y_factor(q, v - nx);
          else
            fax[v][g] = blk.t_factor_l(q, v - nx - ny);
        }
      }
      const long double cb = pref * (long double)coeffs((int)b);
      for (int idx = 0; idx < total; ++idx) {
        int rem = idx;
        long double prod = cb;
        for (int v = N - 1; v >= 0; --v) {
          prod *= fax[v][rem % sz[v]];
          rem /= sz[v];
        }
        out[idx] += prod;
      }
    }
    return out;
  }
};

// max over the unit ball of all derivatives up to order ell, measured on a
// pts-per-axis grid with 4th-order central differences
inline double cl_error_on_ball(const Approximant& approx,
                               const std::function<double(const std::vector<double>&)>& f,
                               int ell, int pts = 41) {
  const int N = (int)approx.scale_exp.size();
  const double h = 2.0 / (pts - 1);
  const int ghost = 2 * ell;
  std::vector<std::vector<double>> axes(N);
  for (int v = 0; v < N; ++v)
    for (int g = -ghost; g < pts + ghost; ++g)
      axes[v].push_back(-1.0 + g * h);
  const int npts = pts + 2 * ghost;

  std::vector<long double> diff = approx.values_on_grid(axes);
  {
    std::vector<double> p(N);
    const int total = (int)diff.size();
    for (int idx = 0; idx < total; ++idx) {
      int rem = idx;
      for (int v = N - 1; v >= 0; --v) {
        p[v] = axes[v][rem % npts];
        rem /= npts;
      }
      diff[idx] -= (long double)f(p);
    }
  }

  // 4th-order stencils for derivative orders 0..2
  static const std::vector<std::vector<double>> stencils = {
      {1.0},
      {1.0 / 12, -8.0 / 12, 0.0, 8.0 / 12, -1.0 / 12},
      {-1.0 / 12, 16.0 / 12, -30.0 / 12, 16.0 / 12, -1.0 / 12}};

  const auto betas = multi_indices(N, ell);
  double worst = 0.0;
  std::vector<int> gi(N);
  std::function<void(int)> walk = [&](int v) {
    if (v == N) {
      double r2 = 0.0;
      for (int q = 0; q < N; ++q) {
        const double c = -1.0 + (gi[q] - ghost) * h;
        r2 += c * c;
      }
      if (r2 > 1.0) return;
      for (const auto& beta : betas) {
        int order = 0;
        for (int q : beta) order += q;
        if (order > ell) continue;
        // tensor stencil application
        long double acc = 0.0L;
        std::vector<int> off(N, 0);
        std::function<void(int, long double)> conv = [&](int q, long double wgt) {
          if (q == N) {
            int idx = 0;
            for (int u = 0; u < N; ++u) idx = idx * npts + (gi[u] + off[u]);
            acc += wgt * diff[idx];
            return;
          }
          const auto& st = stencils[beta[q]];
          const int half = ((int)st.size() - 1) / 2;
          for (int k = 0; k < (int)st.size(); ++k) {
            if (st[k] == 0.0) continue;
            off[q] = k - half;
            conv(q + 1, wgt * (long double)st[k]);
          }
          off[q] = 0;
        };
        conv(0, 1.0L);
        acc /= std::pow((long double)h, (long double)order);
        worst = std::max(worst, (double)std::abs(acc));
      }
      return;
    }
    for (gi[v] = ghost; gi[v] < ghost + (int)std::round((2.0) / h) + 1; ++gi[v]) walk(v + 1);
  };
  walk(0);
  return worst;
}

struct MonomialReport {
  std::vector<int> iota;
  double gamma = 0.0;
  double delta = 0.0;
  int K0 = 0;
  int K = 0;
  int Kprime = 0;
  double jet_residual = 0.0;
  double kappa_min = 0.0;  // K0*delta - gamma, the >= 1 ledger entry
};

inline std::function<double(const std::vector<double>&)> monomial_closure(
    const std::vector<int>& iota) {
  return [iota](const std::vector<double>& p) {
    double v = 1.0, fact = 1.0;
    for (std::size_t q = 0; q < iota.size(); ++q) {
      for (int k = 0; k < iota[q]; ++k) v *= p[q];
      for (int k = 2; k <= iota[q]; ++k) fact *= k;
    }
    return v / fact;
  };
}

// Dictionary on a parameter product grid: the jet matrix then carries
// near-separable columns, which keeps the prescribed-jet solve tame. Block
// epsilons are drawn with their time factor so every initial point sits well
// below the rescaled evaluation box for eta <= eta_max.
inline std::vector<BuildingBlock> grid_dictionary(const OperatorSpec& op,
                                                  int per_axis, std::uint64_t seed,
                                                  double eta_max) {
  const int case_tag = select_case(op);
  if (case_tag != 1 && case_tag != 2)
    throw std::invalid_argument("grid_dictionary: recipe cases 1 and 2 only");
  const double R = window_radius(op, case_tag);
  std::mt19937_64 rng(seed);
  auto U = [&](double lo, double hi) { return detail::draw_uniform(rng, lo, hi); };

  double eps_floor = 0.3;
  for (auto& t : op.time)
    eps_floor = std::max(eps_floor, 1.5 * std::pow(eta_max, 1.0 / t.alpha));

  struct XNode {
    std::vector<std::vector<double>> xbar;
    std::vector<double> e_sign, y_mag;
  };
  struct TNode {
    std::vector<double> tbar_star;
    double eps;
  };
  std::vector<XNode> xnodes;
  std::vector<TNode> tnodes;
  for (int i = 0; i < per_axis; ++i) {
    XNode xn;
    for (auto& t : op.local) {
      std::vector<double> xb;
      for (std::size_t q = 0; q < t.r.size(); ++q) xb.push_back(R + 1.0 + U(0.02, 0.98));
      xn.xbar.push_back(xb);
    }
    for (std::size_t j = 0; j < op.nonlocal.size(); ++j) {
      xn.e_sign.push_back(U(0.0, 1.0) < 0.5 ? -1.0 : 1.0);
      xn.y_mag.push_back(U(0.5, 1.5));
    }
    xnodes.push_back(xn);
  }
  for (int i = 0; i < per_axis; ++i) {
    TNode tn;
    double tbar_min = 1.0;
    for (auto& t : op.time) {
      const double ts = 0.5 + 0.5 * U(0.04, 0.96);
      tn.tbar_star.push_back(ts);
      tbar_min = std::min(tbar_min, std::pow(ts, 1.0 / t.alpha));
    }
    tn.eps = std::min(U(eps_floor, std::max(eps_floor + 0.05, 0.9)), 1.2 * tbar_min);
    if (tn.eps < eps_floor) tn.eps = eps_floor;
    tnodes.push_back(tn);
  }

  std::vector<BuildingBlock> blocks;
  for (auto& xn : xnodes) {
    for (auto& tn : tnodes) {
      BlockParams p;
      p.xbar = xn.xbar;
      p.e_sign = xn.e_sign;
      p.y_mag = xn.y_mag;
      p.tbar_star = tn.tbar_star;
      p.eps = tn.eps;
      blocks.push_back(build_block(op, case_tag, p));
    }
  }
  return blocks;
}

// Approximant of the normalized monomial (x,y,t)^iota / iota! by the scaled
// prescribed-jet combination. `eta_max` lets a whole eta ladder share the
// same kernel function (the construction fixes the blocks first and then
// shrinks eta).
inline Approximant monomial_approximant(const OperatorSpec& op,
                                        const std::vector<int>& iota, int ell,
                                        double eta, MonomialReport* report = nullptr,
                                        std::uint64_t seed = 2027,
                                        double eta_max = 0.0) {
  op.validate();
  const auto ex = scaling_exponents(op);
  if (iota.size() != ex.size())
    throw std::invalid_argument("monomial_approximant: multi-index shape mismatch");
  if (!(eta > 0.0 && eta < 1.0))
    throw std::invalid_argument("monomial_approximant: eta in (0,1)");
  if (eta_max <= 0.0) eta_max = eta;

  double gamma = 0.0;
  int abs_iota = 0;
  for (std::size_t v = 0; v < iota.size(); ++v) {
    gamma += iota[v] * ex[v];
    abs_iota += iota[v];
  }
  const double delta = *std::min_element(ex.begin(), ex.end());
  const int K0 = (int)std::ceil((gamma + 1.0) / delta - 1e-12);
  const int K = K0 + abs_iota + ell;

  const auto idx = multi_indices((int)ex.size(), K);
  const int Kprime = (int)idx.size();
  const int per_axis = std::max(8, (int)std::ceil(2.0 * std::sqrt((double)Kprime)));
  auto blocks = grid_dictionary(op, per_axis, seed, eta_max);
  auto J = jet_matrix(blocks, K);
  int target = -1;
  for (std::size_t r = 0; r < idx.size(); ++r)
    if (idx[r] == iota) target = (int)r;
  auto solve = prescribe_jet(J, target);

  Approximant a;
  a.op = op;
  a.blocks = std::move(blocks);
  a.coeffs = solve.coeffs;
  a.scale_exp = ex;
  a.eta = eta;
  a.gamma = gamma;
  if (report) {
    report->iota = iota;
    report->gamma = gamma;
    report->delta = delta;
    report->K0 = K0;
    report->K = K;
    report->Kprime = Kprime;
    report->jet_residual = solve.residual;
    report->kappa_min = K0 * delta - gamma;
  }
  return a;
}

// One dictionary, one jet solve, the whole eta ladder.
struct LadderPoint {
  double eta;
  double cl_error;
};

inline std::vector<LadderPoint> approximant_ladder(
    const OperatorSpec& op, const std::vector<int>& iota, int ell,
    const std::vector<double>& etas, MonomialReport* report = nullptr,
    std::uint64_t seed = 2027, int pts = 41) {
  const double eta_max = *std::max_element(etas.begin(), etas.end());
  Approximant a = monomial_approximant(op, iota, ell, eta_max, report, seed, eta_max);
  auto f = monomial_closure(iota);
  std::vector<LadderPoint> out;
  for (double eta : etas) {
    a.eta = eta;
    out.push_back({eta, cl_error_on_ball(a, f, ell, pts)});
  }
  return out;
}

// Superposition over the monomials of a polynomial. Coefficients are given
// against plain monomials x^iota (the normalizing iota! is absorbed here).
struct PolynomialApproximant {
  std::vector<std::pair<double, Approximant>> parts;  // (weight, monomial part)
  double value(const std::vector<double>& p) const {
    double v = 0.0;
    for (auto& [w, a] : parts) v += w * a.value(p);
    return v;
  }
};

inline PolynomialApproximant polynomial_approximant(
    const OperatorSpec& op,
    const std::vector<std::pair<std::vector<int>, double>>& monomials, int ell,
    double eta, int max_degree = 4, std::uint64_t seed = 2027) {
  PolynomialApproximant pa;
  for (auto& [iota, coef] : monomials) {
    int deg = 0;
    double fact = 1.0;
    for (int q : iota) {
      deg += q;
      for (int k = 2; k <= q; ++k) fact *= k;
    }
    if (deg > max_degree)
      throw std::invalid_argument("polynomial_approximant: degree above the cap");
    if (coef == 0.0) continue;
    pa.parts.push_back({coef * fact,
                        monomial_approximant(op, iota, ell, eta, nullptr, seed)});
  }
  return pa;
}

struct GeneralFitReport {
  double fit_error = 0.0;  // C^0 distance of the polynomial fit on the grid
  std::vector<std::pair<std::vector<int>, double>> monomials;
};

// Least-squares polynomial surrogate on a ball grid, then the polynomial
// construction. Stands in for the polynomial-density step of the argument.
inline GeneralFitReport fit_polynomial(
    const std::function<double(const std::vector<double>&)>& f, int N,
    int degree, double fit_tol, int pts = 13) {
  const auto idx = multi_indices(N, degree);
  std::vector<std::vector<double>> nodes;
  std::vector<int> gi(N, 0);
  const double h = 2.0 / (pts - 1);
  std::function<void(int)> walk = [&](int v) {
    if (v == N) {
      double r2 = 0.0;
      std::vector<double> p(N);
      for (int q = 0; q < N; ++q) {
        p[q] = -1.0 + gi[q] * h;
        r2 += p[q] * p[q];
      }
      if (r2 <= 1.0) nodes.push_back(p);
      return;
    }
    for (gi[v] = 0; gi[v] < pts; ++gi[v]) walk(v + 1);
  };
  walk(0);

  Eigen::MatrixXd V((int)nodes.size(), (int)idx.size());
  Eigen::VectorXd rhs((int)nodes.size());
  for (std::size_t r = 0; r < nodes.size(); ++r) {
    rhs((int)r) = f(nodes[r]);
    for (std::size_t c = 0; c < idx.size(); ++c) {
      double v = 1.0;
      for (int q = 0; q < N; ++q)
        for (int k = 0; k < idx[c][q]; ++k) v *= nodes[r][q];
      V((int)r, (int)c) = v;
    }
  }
  Eigen::VectorXd coef = V.colPivHouseholderQr().solve(rhs);
  GeneralFitReport rep;
  rep.fit_error = (V * coef - rhs).cwiseAbs().maxCoeff();
  if (rep.fit_error > fit_tol)
    throw std::runtime_error("fit_polynomial: grid fit misses the requested tolerance");
  for (std::size_t c = 0; c < idx.size(); ++c)
    rep.monomials.push_back({idx[c], coef((int)c)});
  return rep;
}

// smooth time cutoffs: 1 on [lo1, 1], supported in [lo0, 3]
inline std::function<double(const std::vector<double>&)> time_cutoff(
    const std::function<double(const std::vector<double>&)>& u, int n_space,
    const std::vector<double>& a) {
  double amin = 0.0;
  for (double ah : a) amin = std::min(amin, ah);
  const double lo1 = amin - 1.0, lo0 = amin - 2.0;
  return [u, n_space, na = (int)a.size(), lo0, lo1](const std::vector<double>& p) {
    double v = u(p);
    for (int h = 0; h < na; ++h) {
      const double t = p[n_space + h];
      const double rise = detail::smoothstep01((t - lo0) / (lo1 - lo0));
      const double fall = detail::smoothstep01((3.0 - t) / 1.0);
      v *= rise * fall;
    }
    return v;
  };
}

}  // namespace fracspan
