#pragma once

#include <Eigen/Dense>

#include <functional>
#include <optional>

#include "npiv/estimator.hpp"

namespace npiv {

// Price path p(t) from p0 = p(0) to p1 = p(1) at fixed income, with the
// number of fixed-size solver steps. Custom parametrizations supply both the
// path and its derivative; the default is the linear path.
struct PricePath {
  double p0 = 0.0;
  double p1 = 1.0;
  double income = 0.0;
  int steps = 1000;
  std::function<double(double)> p;
  std::function<double(double)> dp;
  // Clamp the compensated income into the basis interval instead of erroring
  // when the solution path leaves it.
  bool clamp_income = false;

  double price(double t) const { return p ? p(t) : p0 + t * (p1 - p0); }
  double dprice(double t) const { return dp ? dp(t) : p1 - p0; }
};

// Compensating-expenditure solution S along the path: S(1) = 0 and
// dS/dt = -demand(p(t), income - S(t)) p'(t), integrated backward with the
// classical fixed-step fourth-order Runge-Kutta scheme. s(i) approximates
// S(i/steps); the surplus of the price change is s(0).
struct CsSolution {
  Eigen::VectorXd t;
  Eigen::VectorXd s;
  double cs = 0.0;
};

// demand(t, price, compensated_income) -> quantity. The t argument lets
// wrappers report where the solution path failed.
CsSolution solve_cs_ode(const std::function<double(double, double, double)>& demand,
                        const PricePath& path);

// Plug-in surplus of the fitted demand function.
double cs_functional(const NpivFit& fit, const PricePath& path);

// Surplus minus the revenue rectangle (p1 - p0) * fitted_demand(p1, income).
double dwl_functional(const NpivFit& fit, const PricePath& path);

// Gradient of the surplus functional with respect to the basis coefficients:
// d[j] = int_0^1 psi_j(p(t), income - S(t))
//            * exp(-int_0^t d2_demand(p(v), income - S(v)) p'(v) dv) p'(t) dt,
// accumulated by the trapezoid rule on the solver grid (cumulative trapezoid
// for the inner exponent).
Eigen::VectorXd cs_gradient(const NpivFit& fit, const PricePath& path, const CsSolution& sol);

// cs_gradient plus (p1 - p0) * psi(p1, income).
Eigen::VectorXd dwl_gradient(const NpivFit& fit, const PricePath& path, const CsSolution& sol);

struct WelfareEstimate {
  double cs = 0.0;
  double dwl = 0.0;
  double sd_cs = 0.0;   // sandwich sd, unscaled (divide by sqrt(n) for an SE)
  double sd_dwl = 0.0;
  std::optional<double> t_cs;   // vs. the configured nulls; absent when sd degenerates
  std::optional<double> t_dwl;
  Eigen::VectorXd d_cs;
  Eigen::VectorXd d_dwl;
  bool clamped = false;  // income was clamped somewhere along the path
};

struct WelfareOptions {
  double null_cs = 0.0;
  double null_dwl = 0.0;
};

WelfareEstimate welfare_estimate(const NpivFit& fit, const PricePath& path,
                                 const WelfareOptions& opt = {});

}  // namespace npiv
