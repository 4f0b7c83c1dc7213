#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <string>

#include "npiv/welfare.hpp"

using namespace npiv;

namespace {

// Noiseless least-squares fit of y = f(x) on a price interval; any function
// inside the cubic span is reproduced to machine precision.
NpivFit univariate_fit(const std::function<double(double)>& f, double lo, double hi) {
  const int n = 80;
  Dataset d;
  d.y.resize(n);
  d.x.resize(n, 1);
  d.w.resize(n, 1);
  d.x.col(0) = linspace(lo, hi, n);
  d.w = d.x;
  for (int i = 0; i < n; ++i) d.y(i) = f(d.x(i, 0));
  const BasisSpec s{BasisFamily::BSpline, 4, lo, hi, 4};
  return fit_npiv(d, AnyBasisSpec{s}, AnyBasisSpec{s});
}

// Noiseless tensor fit of q = f(price, income) over a rectangle.
NpivFit tensor_fit(const std::function<double(double, double)>& f, double plo, double phi,
                   double ylo, double yhi) {
  const int g = 20;
  const Eigen::VectorXd ps = linspace(plo, phi, g);
  const Eigen::VectorXd ys = linspace(ylo, yhi, g);
  Dataset d;
  d.y.resize(g * g);
  d.x.resize(g * g, 2);
  d.w.resize(g * g, 2);
  int r = 0;
  for (int i = 0; i < g; ++i)
    for (int j = 0; j < g; ++j, ++r) {
      d.x(r, 0) = ps(i);
      d.x(r, 1) = ys(j);
      d.y(r) = f(ps(i), ys(j));
    }
  d.w = d.x;
  const TensorBasisSpec t{BasisSpec{BasisFamily::BSpline, 4, plo, phi, 4},
                          BasisSpec{BasisFamily::BSpline, 4, ylo, yhi, 4}};
  return fit_npiv(d, AnyBasisSpec{t}, AnyBasisSpec{t});
}

PricePath unit_path(double income = 10.0) {
  PricePath p;
  p.p0 = 0.5;
  p.p1 = 1.5;
  p.income = income;
  return p;
}

}  // namespace

TEST_CASE("ode solver integrates polynomial demand exactly") {
  PricePath path;
  path.p0 = 0.0;
  path.p1 = 1.0;
  path.steps = 100;
  const CsSolution sol =
      solve_cs_ode([](double, double p, double) { return p * p; }, path);
  CHECK(sol.t.size() == 101);
  CHECK(sol.cs == sol.s(0));
  CHECK(sol.s(100) == 0.0);
  // surplus of q = p^2 over a unit price rise is 1/3, and the scheme is
  // exact on polynomial integrands of this degree.
  CHECK(sol.cs == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  PricePath bad = path;
  bad.steps = 0;
  CHECK_THROWS_AS(solve_cs_ode([](double, double, double) { return 0.0; }, bad), InputError);
}

TEST_CASE("constant demand yields the rectangle surplus and zero loss") {
  const NpivFit fit = univariate_fit([](double) { return 3.0; }, 0.0, 2.0);
  const PricePath path = unit_path();
  CHECK(cs_functional(fit, path) == doctest::Approx(3.0).epsilon(1e-8));
  CHECK(dwl_functional(fit, path) == doctest::Approx(0.0).scale(1.0).epsilon(1e-8));
}

TEST_CASE("linear demand reproduces the textbook integral") {
  const NpivFit fit = univariate_fit([](double p) { return 4.0 * p - 2.0; }, 0.0, 2.0);
  const PricePath path = unit_path();
  // integral of (4p - 2) from 0.5 to 1.5.
  CHECK(cs_functional(fit, path) == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(dwl_functional(fit, path) ==
        doctest::Approx(2.0 - 1.0 * 4.0).epsilon(1e-8));  // rectangle 1 * h(1.5) = 4

  // Income never enters an income-independent fit.
  PricePath rich = path;
  rich.income = 1e6;
  CHECK(cs_functional(fit, rich) == cs_functional(fit, path));
}

TEST_CASE("pure income-effect demand matches its exponential closed form") {
  const NpivFit fit = tensor_fit([](double, double y) { return y; }, 0.0, 2.0, 0.0, 20.0);
  const PricePath path = unit_path(10.0);
  const double exact = 10.0 * (1.0 - std::exp(path.p0 - path.p1));
  CHECK(cs_functional(fit, path) == doctest::Approx(exact).epsilon(1e-8));

  const WelfareEstimate est = welfare_estimate(fit, path);
  CHECK(est.cs == doctest::Approx(exact).epsilon(1e-8));
  CHECK_FALSE(est.clamped);

  // Deadweight loss is surplus net of the terminal revenue rectangle.
  Eigen::MatrixXd endpoint(1, 2);
  endpoint << path.p1, path.income;
  const double rect = (path.p1 - path.p0) * fit.predict(endpoint)(0);
  CHECK(est.dwl == doctest::Approx(est.cs - rect).epsilon(1e-12));
  CHECK(dwl_functional(fit, path) == doctest::Approx(est.cs - rect).epsilon(1e-12));
}

TEST_CASE("surplus gradient agrees with central differences") {
  const NpivFit fit = tensor_fit(
      [](double p, double y) { return 2.0 + 0.5 * y - 0.8 * p; }, 0.0, 2.0, 0.0, 20.0);
  const PricePath path = unit_path(10.0);
  const CsSolution sol = solve_cs_ode(
      [&](double, double p, double inc) {
        Eigen::RowVectorXd x(2);
        x << p, inc;
        return eval_basis(fit.psi, x).dot(fit.coeffs);
      },
      path);
  const Eigen::VectorXd grad = cs_gradient(fit, path, sol);
  REQUIRE(grad.size() == fit.coeffs.size());

  for (int j = 0; j < grad.size(); j += 3) {
    const double eps = 1e-4;
    NpivFit up = fit, dn = fit;
    up.coeffs(j) += eps;
    dn.coeffs(j) -= eps;
    const double fd = (cs_functional(up, path) - cs_functional(dn, path)) / (2.0 * eps);
    CHECK(grad(j) == doctest::Approx(fd).epsilon(1e-3).scale(std::max(1.0, std::abs(fd))));
  }

  CsSolution short_sol = sol;
  short_sol.s.conservativeResize(10);
  CHECK_THROWS_AS(cs_gradient(fit, path, short_sol), InputError);
}

TEST_CASE("paths leaving the income rectangle fail loudly or clamp") {
  // Constant demand 30 drains compensated income below the fitted rectangle.
  const NpivFit fit = tensor_fit([](double, double) { return 30.0; }, 0.0, 2.0, 0.0, 20.0);
  const PricePath path = unit_path(10.0);

  bool threw = false;
  try {
    (void)cs_functional(fit, path);
  } catch (const InputError& e) {
    threw = true;
    const std::string msg = e.what();
    CHECK(msg.find("leaves the basis interval") != std::string::npos);
    CHECK(msg.find("at t = ") != std::string::npos);
  }
  CHECK(threw);

  PricePath clamped = path;
  clamped.clamp_income = true;
  const WelfareEstimate est = welfare_estimate(fit, clamped);
  CHECK(est.clamped);
  // Clamping cannot change a demand with no income slope.
  CHECK(est.cs == doctest::Approx(30.0).epsilon(1e-8));
}

TEST_CASE("welfare of a null price change is zero with no t statistics") {
  const NpivFit fit = univariate_fit([](double p) { return 1.0 + p; }, 0.0, 2.0);
  PricePath path = unit_path();
  path.p1 = path.p0;
  const WelfareEstimate est = welfare_estimate(fit, path);
  CHECK(est.cs == 0.0);
  CHECK(est.dwl == 0.0);
  CHECK(est.sd_cs == 0.0);
  CHECK_FALSE(est.t_cs.has_value());
  CHECK_FALSE(est.t_dwl.has_value());
}

TEST_CASE("custom parametrizations of the same endpoints agree") {
  const NpivFit fit = univariate_fit([](double p) { return 4.0 * p - 2.0; }, 0.0, 2.0);
  PricePath curved = unit_path();
  // Quadratic reparameterization of the same segment.
  curved.p = [](double t) { return 0.5 + t * t; };
  curved.dp = [](double t) { return 2.0 * t; };
  CHECK(cs_functional(fit, curved) == doctest::Approx(2.0).epsilon(1e-6));

  const WelfareEstimate est = welfare_estimate(fit, unit_path());
  CHECK(est.t_cs.has_value());  // nonzero noise floor still yields a finite sd
}
