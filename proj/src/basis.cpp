#include "npiv/basis.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace npiv {

namespace {

void validate(const BasisSpec& s) {
  if (!(s.hi > s.lo)) throw InputError("basis interval is empty: [lo, hi] with hi <= lo");
  if (s.family == BasisFamily::BSpline && s.order < 1)
    throw InputError("B-spline order must be >= 1");
  if (s.dim < s.min_dim())
    throw InputError("basis dim " + std::to_string(s.dim) + " below the family minimum " +
                     std::to_string(s.min_dim()));
}

void check_in_domain(const BasisSpec& s, double x) {
  if (!(x >= s.lo && x <= s.hi))
    throw InputError("evaluation point " + std::to_string(x) + " outside basis interval [" +
                     std::to_string(s.lo) + ", " + std::to_string(s.hi) + "]");
}

// B-spline values / derivatives at x for all J functions on the extended knot
// sequence t (length J + order). The order-q recursion uses the convention
// 1/0 := 0 at coincident knots; the right endpoint belongs to the last
// non-degenerate knot interval.
Eigen::VectorXd bspline_eval(const std::vector<double>& t, int order, int J, double x,
                             int deriv) {
  const int L = static_cast<int>(t.size());
  const double hi = t.back();
  std::vector<double> N(static_cast<size_t>(L - 1), 0.0);
  for (int j = 0; j + 1 < L; ++j) {
    const bool inside = (t[j] <= x && x < t[j + 1]);
    const bool at_right_end = (x == hi && t[j] < t[j + 1] && t[j + 1] == hi);
    N[j] = (inside || at_right_end) ? 1.0 : 0.0;
  }
  // raise the order to order - deriv on values
  const int q0 = order - deriv;
  for (int q = 2; q <= q0; ++q) {
    for (int j = 0; j + q < L; ++j) {
      double acc = 0.0;
      if (t[j + q - 1] > t[j]) acc += (x - t[j]) / (t[j + q - 1] - t[j]) * N[j];
      if (t[j + q] > t[j + 1]) acc += (t[j + q] - x) / (t[j + q] - t[j + 1]) * N[j + 1];
      N[j] = acc;
    }
  }
  // each differentiation step maps order q-1 values to order q derivatives
  for (int i = 1; i <= deriv; ++i) {
    const int q = q0 + i;
    for (int j = 0; j + q < L; ++j) {
      double a = (t[j + q - 1] > t[j]) ? N[j] / (t[j + q - 1] - t[j]) : 0.0;
      double b = (t[j + q] > t[j + 1]) ? N[j + 1] / (t[j + q] - t[j + 1]) : 0.0;
      N[j] = (q - 1) * (a - b);
    }
  }
  Eigen::VectorXd out(J);
  for (int j = 0; j < J; ++j) out(j) = N[j];
  return out;
}

// Values and derivatives (in the rescaled variable tt on [-1,1]) of the
// classical Legendre polynomials P_0..P_{J-1}. P(k, i) = d^i P_k / dtt^i.
// Differentiating (k+1) P_{k+1} = (2k+1) tt P_k - k P_{k-1} i times gives
// (k+1) P_{k+1}^(i) = (2k+1)(tt P_k^(i) + i P_k^(i-1)) - k P_{k-1}^(i).
Eigen::MatrixXd legendre_table(int J, int deriv, double tt) {
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(J, deriv + 1);
  P(0, 0) = 1.0;
  if (J > 1) {
    P(1, 0) = tt;
    if (deriv >= 1) P(1, 1) = 1.0;
  }
  for (int k = 1; k + 1 < J; ++k) {
    for (int i = 0; i <= deriv; ++i) {
      const double lead = tt * P(k, i) + (i > 0 ? i * P(k, i - 1) : 0.0);
      P(k + 1, i) = ((2.0 * k + 1.0) * lead - k * P(k - 1, i)) / (k + 1.0);
    }
  }
  return P;
}

}  // namespace

std::vector<double> knot_vector(int order, int n_interior, double lo, double hi) {
  if (order < 1) throw InputError("B-spline order must be >= 1");
  if (n_interior < 0) throw InputError("interior knot count must be >= 0");
  if (!(hi > lo)) throw InputError("knot interval is empty");
  std::vector<double> t;
  t.reserve(static_cast<size_t>(n_interior + 2 * order));
  for (int i = 0; i < order; ++i) t.push_back(lo);
  for (int i = 1; i <= n_interior; ++i)
    t.push_back(lo + (hi - lo) * static_cast<double>(i) / (n_interior + 1));
  for (int i = 0; i < order; ++i) t.push_back(hi);
  return t;
}

std::vector<int> admissible_dims(const BasisSpec& proto, int j_lo, int j_hi) {
  std::vector<int> dims;
  if (proto.family == BasisFamily::BSpline) {
    if (proto.order < 1) throw InputError("B-spline order must be >= 1");
    for (long m = 0; proto.order + m <= j_hi; m = 2 * m + 1) {
      const int j = proto.order + static_cast<int>(m);
      if (j >= j_lo) dims.push_back(j);
    }
  } else {
    for (int j = std::max(1, j_lo); j <= j_hi; ++j) dims.push_back(j);
  }
  return dims;
}

int next_admissible_dim(const BasisSpec& proto, int at_least, int cap) {
  if (proto.family != BasisFamily::BSpline) return std::max(1, at_least);
  for (long m = 0; proto.order + m <= cap; m = 2 * m + 1) {
    const int j = proto.order + static_cast<int>(m);
    if (j >= at_least) return j;
  }
  throw InputError("no nested basis dimension >= " + std::to_string(at_least) +
                   " below cap " + std::to_string(cap));
}

Eigen::VectorXd eval_basis(const BasisSpec& s, double x, int deriv) {
  validate(s);
  if (deriv < 0) throw InputError("derivative order must be >= 0");
  check_in_domain(s, x);
  switch (s.family) {
    case BasisFamily::BSpline: {
      if (deriv > s.order - 1)
        throw InputError("B-spline derivative order must be <= order-1");
      const auto t = knot_vector(s.order, s.dim - s.order, s.lo, s.hi);
      return bspline_eval(t, s.order, s.dim, x, deriv);
    }
    case BasisFamily::Legendre: {
      const double tt = 2.0 * (x - s.lo) / (s.hi - s.lo) - 1.0;
      const Eigen::MatrixXd P = legendre_table(s.dim, deriv, tt);
      const double chain = std::pow(2.0 / (s.hi - s.lo), deriv);
      Eigen::VectorXd out(s.dim);
      for (int k = 0; k < s.dim; ++k) out(k) = std::sqrt(2.0 * k + 1.0) * P(k, deriv) * chain;
      return out;
    }
    case BasisFamily::Cosine: {
      const double u = (x - s.lo) / (s.hi - s.lo);
      Eigen::VectorXd out(s.dim);
      out(0) = (deriv == 0) ? 1.0 : 0.0;
      const double sqrt2 = std::numbers::sqrt2;
      for (int k = 1; k < s.dim; ++k) {
        const double freq = k * std::numbers::pi;
        out(k) = sqrt2 * std::pow(freq / (s.hi - s.lo), deriv) *
                 std::cos(freq * u + deriv * std::numbers::pi / 2.0);
      }
      return out;
    }
  }
  throw InputError("unknown basis family");
}

Eigen::MatrixXd design_matrix(const BasisSpec& s, const Eigen::VectorXd& xs, int deriv) {
  Eigen::MatrixXd D(xs.size(), s.dim);
  for (Eigen::Index i = 0; i < xs.size(); ++i) D.row(i) = eval_basis(s, xs(i), deriv);
  return D;
}

Eigen::MatrixXd gram(const BasisSpec& s, const Eigen::VectorXd& xs) {
  if (xs.size() == 0) throw InputError("gram needs at least one point");
  const Eigen::MatrixXd D = design_matrix(s, xs);
  return D.transpose() * D / static_cast<double>(xs.size());
}

double xi_sup_l1(const BasisSpec& s, const Eigen::VectorXd& grid) {
  if (grid.size() < 2) throw InputError("xi_sup_l1 grid needs at least two points");
  const double tol = 1e-9 * (s.hi - s.lo);
  if (std::abs(grid.minCoeff() - s.lo) > tol || std::abs(grid.maxCoeff() - s.hi) > tol)
    throw InputError("xi_sup_l1 grid must include both interval endpoints");
  double best = 0.0;
  for (Eigen::Index i = 0; i < grid.size(); ++i)
    best = std::max(best, eval_basis(s, std::min(std::max(grid(i), s.lo), s.hi))
                              .cwiseAbs()
                              .sum());
  return best;
}

double zeta_sq(const BasisSpec& proto, int dim) {
  if (dim < 1) throw InputError("zeta_sq needs dim >= 1");
  return proto.family == BasisFamily::Legendre ? static_cast<double>(dim) * dim
                                               : static_cast<double>(dim);
}

Eigen::VectorXd eval_basis(const TensorBasisSpec& s, double x1, double x2, int d1, int d2) {
  const Eigen::VectorXd va = eval_basis(s.a, x1, d1);
  const Eigen::VectorXd vb = eval_basis(s.b, x2, d2);
  Eigen::VectorXd out(s.dim());
  for (int p = 0; p < s.a.dim; ++p)
    for (int q = 0; q < s.b.dim; ++q) out(p * s.b.dim + q) = va(p) * vb(q);
  return out;
}

Eigen::MatrixXd design_matrix(const TensorBasisSpec& s, const Eigen::MatrixXd& xs, int d1,
                              int d2) {
  if (xs.cols() != 2) throw InputError("tensor basis expects 2-column points");
  Eigen::MatrixXd D(xs.rows(), s.dim());
  for (Eigen::Index i = 0; i < xs.rows(); ++i)
    D.row(i) = eval_basis(s, xs(i, 0), xs(i, 1), d1, d2);
  return D;
}

int basis_dim(const AnyBasisSpec& s) {
  return std::visit([](const auto& b) {
    if constexpr (std::is_same_v<std::decay_t<decltype(b)>, BasisSpec>)
      return b.dim;
    else
      return b.dim();
  }, s);
}

int basis_coords(const AnyBasisSpec& s) {
  return std::holds_alternative<BasisSpec>(s) ? 1 : 2;
}

Eigen::MatrixXd design_matrix(const AnyBasisSpec& s, const Eigen::MatrixXd& xs,
                              std::array<int, 2> deriv) {
  if (const auto* uni = std::get_if<BasisSpec>(&s)) {
    if (xs.cols() != 1) throw InputError("univariate basis expects 1-column points");
    if (deriv[1] != 0)
      throw InputError("second-coordinate derivative requested from a univariate basis");
    return design_matrix(*uni, xs.col(0), deriv[0]);
  }
  return design_matrix(std::get<TensorBasisSpec>(s), xs, deriv[0], deriv[1]);
}

Eigen::VectorXd eval_basis(const AnyBasisSpec& s, const Eigen::RowVectorXd& x,
                           std::array<int, 2> deriv) {
  if (const auto* uni = std::get_if<BasisSpec>(&s)) {
    if (x.size() != 1) throw InputError("univariate basis expects a scalar point");
    if (deriv[1] != 0)
      throw InputError("second-coordinate derivative requested from a univariate basis");
    return eval_basis(*uni, x(0), deriv[0]);
  }
  if (x.size() != 2) throw InputError("tensor basis expects a 2-coordinate point");
  return eval_basis(std::get<TensorBasisSpec>(s), x(0), x(1), deriv[0], deriv[1]);
}

}  // namespace npiv
