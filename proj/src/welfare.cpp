#include "npiv/welfare.hpp"

#include <cmath>
#include <string>

#include "npiv/inference.hpp"

namespace npiv {

namespace {

// Demand evaluated from a fitted function. A univariate fit ignores income
// (income-independent demand); a tensor fit checks/clamps the income
// coordinate before evaluating.
struct FittedDemand {
  const NpivFit& fit;
  bool clamp = false;
  mutable bool clamped_any = false;

  bool tensor() const { return std::holds_alternative<TensorBasisSpec>(fit.psi); }

  double income_coord(double t, double inc) const {
    const auto& spec = std::get<TensorBasisSpec>(fit.psi).b;
    if (inc >= spec.lo && inc <= spec.hi) return inc;
    if (!clamp)
      throw InputError("compensated income " + std::to_string(inc) +
                       " leaves the basis interval [" + std::to_string(spec.lo) + ", " +
                       std::to_string(spec.hi) + "] at t = " + std::to_string(t));
    clamped_any = true;
    return std::min(std::max(inc, spec.lo), spec.hi);
  }

  Eigen::VectorXd basis_at(double t, double p, double inc, std::array<int, 2> deriv) const {
    if (!tensor()) {
      Eigen::RowVectorXd x(1);
      x << p;
      if (deriv[1] > 0) return Eigen::VectorXd::Zero(fit.coeffs.size());
      return eval_basis(fit.psi, x, deriv);
    }
    Eigen::RowVectorXd x(2);
    x << p, income_coord(t, inc);
    return eval_basis(fit.psi, x, deriv);
  }

  double value(double t, double p, double inc) const {
    return basis_at(t, p, inc, {0, 0}).dot(fit.coeffs);
  }

  // Partial derivative with respect to income; identically zero for
  // income-independent demand.
  double d_income(double t, double p, double inc) const {
    if (!tensor()) return 0.0;
    return basis_at(t, p, inc, {0, 1}).dot(fit.coeffs);
  }
};

void validate_path(const PricePath& path) {
  if (path.steps < 1) throw InputError("solver step count must be >= 1");
}

}  // namespace

CsSolution solve_cs_ode(const std::function<double(double, double, double)>& demand,
                        const PricePath& path) {
  validate_path(path);
  const int m = path.steps;
  CsSolution sol;
  sol.t.resize(m + 1);
  sol.s.resize(m + 1);
  for (int i = 0; i <= m; ++i) sol.t(i) = static_cast<double>(i) / m;
  sol.s(m) = 0.0;

  auto f = [&](double t, double s) { return -demand(t, path.price(t), path.income - s) * path.dprice(t); };

  const double h = -1.0 / static_cast<double>(m);  // backward in t
  for (int i = m; i > 0; --i) {
    const double t = sol.t(i);
    const double s = sol.s(i);
    const double k1 = f(t, s);
    const double k2 = f(t + h / 2.0, s + h / 2.0 * k1);
    const double k3 = f(t + h / 2.0, s + h / 2.0 * k2);
    const double k4 = f(t + h, s + h * k3);
    sol.s(i - 1) = s + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  if (!sol.s.allFinite()) throw NumericError("surplus solution diverged");
  sol.cs = sol.s(0);
  return sol;
}

double cs_functional(const NpivFit& fit, const PricePath& path) {
  FittedDemand d{fit, path.clamp_income};
  return solve_cs_ode([&](double t, double p, double inc) { return d.value(t, p, inc); }, path)
      .cs;
}

double dwl_functional(const NpivFit& fit, const PricePath& path) {
  FittedDemand d{fit, path.clamp_income};
  const double cs =
      solve_cs_ode([&](double t, double p, double inc) { return d.value(t, p, inc); }, path).cs;
  return cs - (path.p1 - path.p0) * d.value(1.0, path.p1, path.income);
}

Eigen::VectorXd cs_gradient(const NpivFit& fit, const PricePath& path, const CsSolution& sol) {
  validate_path(path);
  if (sol.s.size() != path.steps + 1)
    throw InputError("solution grid does not match the path step count");
  FittedDemand d{fit, path.clamp_income};
  const int m = path.steps;
  const double dt = 1.0 / static_cast<double>(m);

  // inner exponent: cumulative trapezoid of d2_demand(p(v), inc(v)) p'(v)
  Eigen::VectorXd g(m + 1);
  for (int i = 0; i <= m; ++i) {
    const double t = sol.t(i);
    g(i) = d.d_income(t, path.price(t), path.income - sol.s(i)) * path.dprice(t);
  }
  Eigen::VectorXd cum = Eigen::VectorXd::Zero(m + 1);
  for (int i = 1; i <= m; ++i) cum(i) = cum(i - 1) + dt * (g(i - 1) + g(i)) / 2.0;

  Eigen::VectorXd acc = Eigen::VectorXd::Zero(fit.coeffs.size());
  for (int i = 0; i <= m; ++i) {
    const double t = sol.t(i);
    const double weight = (i == 0 || i == m) ? 0.5 : 1.0;
    const Eigen::VectorXd psi =
        d.basis_at(t, path.price(t), path.income - sol.s(i), {0, 0});
    acc += weight * std::exp(-cum(i)) * path.dprice(t) * psi;
  }
  return acc * dt;
}

Eigen::VectorXd dwl_gradient(const NpivFit& fit, const PricePath& path,
                             const CsSolution& sol) {
  FittedDemand d{fit, path.clamp_income};
  return cs_gradient(fit, path, sol) +
         (path.p1 - path.p0) * d.basis_at(1.0, path.p1, path.income, {0, 0});
}

WelfareEstimate welfare_estimate(const NpivFit& fit, const PricePath& path,
                                 const WelfareOptions& opt) {
  FittedDemand d{fit, path.clamp_income};
  const CsSolution sol =
      solve_cs_ode([&](double t, double p, double inc) { return d.value(t, p, inc); }, path);

  WelfareEstimate est;
  est.cs = sol.cs;
  est.dwl = sol.cs - (path.p1 - path.p0) * d.value(1.0, path.p1, path.income);
  est.d_cs = cs_gradient(fit, path, sol);
  est.d_dwl = est.d_cs + (path.p1 - path.p0) * d.basis_at(1.0, path.p1, path.income, {0, 0});
  est.sd_cs = sieve_sd(fit, est.d_cs);
  est.sd_dwl = sieve_sd(fit, est.d_dwl);
  est.clamped = d.clamped_any;
  if (est.sd_cs > 0.0 && std::isfinite(est.sd_cs))
    est.t_cs = t_statistic(est.cs, opt.null_cs, est.sd_cs, fit.n);
  if (est.sd_dwl > 0.0 && std::isfinite(est.sd_dwl))
    est.t_dwl = t_statistic(est.dwl, opt.null_dwl, est.sd_dwl, fit.n);
  return est;
}

}  // namespace npiv
