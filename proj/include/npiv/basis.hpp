#pragma once

#include <Eigen/Dense>

#include <array>
#include <variant>
#include <vector>

#include "npiv/errors.hpp"

namespace npiv {

enum class BasisFamily { BSpline, Legendre, Cosine };

// One univariate sieve basis on a fixed interval [lo, hi].
//
//  - BSpline: order-`order` splines (piecewise polynomials of degree order-1)
//    on evenly spaced interior knots; dim = order + #interior knots. The
//    functions form a partition of unity on [lo, hi].
//  - Legendre: polynomials orthonormal with respect to the uniform
//    *probability* measure on [lo, hi].
//  - Cosine: {1, sqrt(2) cos(k pi u)} with u the affine map of x onto [0, 1];
//    also orthonormal under the uniform probability measure.
//
// Evaluation strictly refuses points outside [lo, hi].
struct BasisSpec {
  BasisFamily family = BasisFamily::BSpline;
  int dim = 4;
  double lo = 0.0;
  double hi = 1.0;
  int order = 4;  // B-spline order; ignored by the other families

  int min_dim() const { return family == BasisFamily::BSpline ? order : 1; }
};

// Extended knot sequence for order-r splines with n_interior evenly spaced
// interior knots: r copies of lo, the interior knots, r copies of hi
// (length n_interior + 2r).
std::vector<double> knot_vector(int order, int n_interior, double lo, double hi);

// Dimensions usable in a nested ladder of sieve spaces, intersected with
// [j_lo, j_hi]. For B-splines the interior-knot counts 0, 1, 3, 7, 15, ...
// double the number of knot intervals at each step so consecutive spaces are
// nested; every integer dimension qualifies for the other two families.
std::vector<int> admissible_dims(const BasisSpec& proto, int j_lo, int j_hi);

// Smallest nested-ladder dimension >= at_least (error if none below `cap`).
int next_admissible_dim(const BasisSpec& proto, int at_least, int cap = 1 << 20);

// Values (or deriv-th derivatives) of all dim basis functions at x.
Eigen::VectorXd eval_basis(const BasisSpec& s, double x, int deriv = 0);

// Rows = eval_basis at each xs entry.
Eigen::MatrixXd design_matrix(const BasisSpec& s, const Eigen::VectorXd& xs, int deriv = 0);

// Empirical second-moment matrix D'D/n of the design at xs.
Eigen::MatrixXd gram(const BasisSpec& s, const Eigen::VectorXd& xs);

// sup over the grid of the l1 norm of the basis vector. The grid must include
// both endpoints of the basis interval, where the maximum typically sits.
double xi_sup_l1(const BasisSpec& s, const Eigen::VectorXd& grid);

// Squared sup-norm growth proxy used by the dimension-selection rule:
// dim for local bases (splines, cosines), dim^2 for global polynomials.
double zeta_sq(const BasisSpec& proto, int dim);

// Bivariate tensor-product basis: eval(x1, x2) = eval_a(x1) (x) eval_b(x2)
// (Kronecker order: entry p*b.dim + q equals a_p(x1) * b_q(x2)).
struct TensorBasisSpec {
  BasisSpec a;
  BasisSpec b;

  int dim() const { return a.dim * b.dim; }
};

Eigen::VectorXd eval_basis(const TensorBasisSpec& s, double x1, double x2, int d1 = 0,
                           int d2 = 0);
Eigen::MatrixXd design_matrix(const TensorBasisSpec& s, const Eigen::MatrixXd& xs, int d1 = 0,
                              int d2 = 0);

// A regressor/instrument basis that is either univariate or a 2-d tensor.
using AnyBasisSpec = std::variant<BasisSpec, TensorBasisSpec>;

int basis_dim(const AnyBasisSpec& s);
int basis_coords(const AnyBasisSpec& s);  // 1 or 2

// xs is n x coords; deriv holds the per-coordinate derivative orders.
Eigen::MatrixXd design_matrix(const AnyBasisSpec& s, const Eigen::MatrixXd& xs,
                              std::array<int, 2> deriv = {0, 0});
Eigen::VectorXd eval_basis(const AnyBasisSpec& s, const Eigen::RowVectorXd& x,
                           std::array<int, 2> deriv = {0, 0});

}  // namespace npiv
