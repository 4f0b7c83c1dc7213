#include "npiv/estimator.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace npiv {

namespace {

struct GramRoot {
  Eigen::MatrixXd inv_sqrt;
  double lambda_min = 0.0;
};

// Inverse symmetric square root of a Gram matrix, with a relative floor on
// the spectrum so near-singular designs fail loudly instead of silently.
GramRoot gram_inv_sqrt(const Eigen::MatrixXd& G, const char* what) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
  if (es.info() != Eigen::Success)
    throw NumericError(std::string(what) + " Gram eigendecomposition failed");
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double lmax = ev(ev.size() - 1);
  const double tol =
      std::numeric_limits<double>::epsilon() * static_cast<double>(G.rows()) * std::max(lmax, 0.0);
  if (!(ev(0) > tol))
    throw NumericError(std::string(what) +
                       " Gram matrix numerically singular (lambda_min = " +
                       std::to_string(ev(0)) + ")");
  return {es.eigenvectors() * ev.cwiseSqrt().cwiseInverse().asDiagonal() *
              es.eigenvectors().transpose(),
          ev(0)};
}

struct WhitenedCore {
  Eigen::MatrixXd rpsi_inv;  // G_psi^{-1/2}
  Eigen::MatrixXd rb_inv;    // G_b^{-1/2}
  Eigen::MatrixXd u, v;      // thin SVD of the whitened cross matrix
  Eigen::VectorXd sv;        // descending
  double e_min = 0.0;
  bool identical = false;    // B == Psi elementwise
};

WhitenedCore whiten(const Eigen::MatrixXd& Psi, const Eigen::MatrixXd& B,
                    const FitOptions& opt) {
  const Eigen::Index n = Psi.rows();
  const Eigen::Index J = Psi.cols();
  const Eigen::Index K = B.cols();
  if (n == 0 || J == 0 || K == 0) throw InputError("empty design matrix");
  if (B.rows() != n) throw InputError("regressor and instrument designs disagree on n");
  if (K < J)
    throw InputError("instrument dimension K = " + std::to_string(K) +
                     " below regressor dimension J = " + std::to_string(J));
  if (!Psi.allFinite() || !B.allFinite()) throw InputError("non-finite design entries");

  WhitenedCore core;
  core.identical = (K == J) && (Psi.array() == B.array()).all();

  const Eigen::MatrixXd g_psi = Psi.transpose() * Psi / static_cast<double>(n);
  const GramRoot psi_root = gram_inv_sqrt(g_psi, "regressor");
  core.e_min = psi_root.lambda_min;
  core.rpsi_inv = psi_root.inv_sqrt;

  if (core.identical) {
    // B == Psi makes the whitened cross matrix the identity analytically;
    // short-circuit so tau_hat is exactly 1 and the fit collapses to least
    // squares without roundoff from a second decomposition.
    core.rb_inv = core.rpsi_inv;
    core.u = Eigen::MatrixXd::Identity(J, J);
    core.v = Eigen::MatrixXd::Identity(J, J);
    core.sv = Eigen::VectorXd::Ones(J);
    return core;
  }

  const Eigen::MatrixXd g_b = B.transpose() * B / static_cast<double>(n);
  core.rb_inv = gram_inv_sqrt(g_b, "instrument").inv_sqrt;

  const Eigen::MatrixXd S = B.transpose() * Psi / static_cast<double>(n);
  const Eigen::MatrixXd M = core.rb_inv * S * core.rpsi_inv;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw NumericError("whitened cross matrix SVD failed");
  core.u = svd.matrixU();
  core.v = svd.matrixV();
  core.sv = svd.singularValues();

  const double rel =
      opt.rank_rel_tol > 0
          ? opt.rank_rel_tol
          : std::numeric_limits<double>::epsilon() * static_cast<double>(std::max(K, J));
  const double cut = rel * core.sv(0);
  if (!(core.sv(J - 1) > cut))
    throw NumericError("whitened cross matrix rank deficient: smallest singular value " +
                       std::to_string(core.sv(J - 1)) + " at or below cutoff " +
                       std::to_string(cut));
  return core;
}

}  // namespace

Eigen::VectorXd NpivFit::predict(const Eigen::MatrixXd& points,
                                 std::array<int, 2> deriv) const {
  return design_matrix(psi, points, deriv) * coeffs;
}

NpivFit fit_design(const Eigen::VectorXd& y, const Eigen::MatrixXd& Psi,
                   const Eigen::MatrixXd& B, const FitOptions& opt) {
  const Eigen::Index n = y.size();
  if (Psi.rows() != n) throw InputError("y and regressor design disagree on n");
  if (!y.allFinite()) throw InputError("non-finite outcome entries");

  const WhitenedCore core = whiten(Psi, B, opt);
  const Eigen::Index J = Psi.cols();

  NpivFit fit;
  fit.n = n;
  fit.whitened_sv = core.sv;
  fit.tau_hat = 1.0 / core.sv(J - 1);
  fit.e_hat = core.e_min;
  // pinv(M) = V diag(1/s) U'
  const Eigen::MatrixXd pinv_m =
      core.v * core.sv.cwiseInverse().asDiagonal() * core.u.transpose();
  fit.proj = core.rpsi_inv * pinv_m * core.rb_inv;
  const Eigen::MatrixXd vs = core.v * core.sv.cwiseInverse().asDiagonal();
  fit.bread = core.rpsi_inv * vs * vs.transpose() * core.rpsi_inv;
  fit.coeffs = fit.proj * (B.transpose() * y / static_cast<double>(n));
  fit.residuals = y - Psi * fit.coeffs;
  fit.s_hat = B.transpose() * Psi / static_cast<double>(n);
  fit.g_b = B.transpose() * B / static_cast<double>(n);
  fit.b_design = B;
  return fit;
}

double tau_hat_design(const Eigen::MatrixXd& Psi, const Eigen::MatrixXd& B,
                      const FitOptions& opt) {
  const WhitenedCore core = whiten(Psi, B, opt);
  return 1.0 / core.sv(Psi.cols() - 1);
}

double e_hat_design(const Eigen::MatrixXd& Psi) {
  if (Psi.rows() == 0 || Psi.cols() == 0) throw InputError("empty design matrix");
  const Eigen::MatrixXd g = Psi.transpose() * Psi / static_cast<double>(Psi.rows());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
  if (es.info() != Eigen::Success) throw NumericError("regressor Gram eigendecomposition failed");
  return es.eigenvalues()(0);
}

NpivFit fit_npiv(const Dataset& data, const AnyBasisSpec& psi, const AnyBasisSpec& b,
                 const FitOptions& opt) {
  if (data.y.size() != data.x.rows() || data.y.size() != data.w.rows())
    throw InputError("dataset columns disagree on n");
  if (data.x.cols() != basis_coords(psi))
    throw InputError("regressor basis coordinate count does not match x columns");
  if (data.w.cols() != basis_coords(b))
    throw InputError("instrument basis coordinate count does not match w columns");
  NpivFit fit = fit_design(data.y, design_matrix(psi, data.x), design_matrix(b, data.w), opt);
  fit.psi = psi;
  fit.b = b;
  return fit;
}

double tau_hat(const Dataset& data, const AnyBasisSpec& psi, const AnyBasisSpec& b,
               const FitOptions& opt) {
  return tau_hat_design(design_matrix(psi, data.x), design_matrix(b, data.w), opt);
}

double sup_distance(const Eigen::VectorXd& f, const Eigen::VectorXd& g) {
  if (f.size() != g.size() || f.size() == 0) throw InputError("sup_distance size mismatch");
  return (f - g).cwiseAbs().maxCoeff();
}

double l2_distance(const Eigen::VectorXd& f, const Eigen::VectorXd& g, double range_length) {
  if (f.size() != g.size() || f.size() == 0) throw InputError("l2_distance size mismatch");
  if (!(range_length > 0)) throw InputError("l2_distance needs a positive range length");
  return std::sqrt((f - g).squaredNorm() * range_length / static_cast<double>(f.size()));
}

Eigen::VectorXd linspace(double a, double b, int count) {
  if (count < 2) throw InputError("linspace needs at least two points");
  Eigen::VectorXd out(count);
  for (int i = 0; i < count; ++i)
    out(i) = a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1);
  out(count - 1) = b;
  return out;
}

}  // namespace npiv
