#pragma once

#include <Eigen/Dense>

#include "npiv/basis.hpp"
#include "npiv/errors.hpp"

namespace npiv {

// One sample: outcome y (n), regressors x (n x d), instruments w (n x d_w).
struct Dataset {
  Eigen::VectorXd y;
  Eigen::MatrixXd x;
  Eigen::MatrixXd w;

  long n() const { return y.size(); }
};

struct FitOptions {
  // Singular values of the whitened cross matrix at or below
  // rank_rel_tol * s_max are treated as zero. Non-positive means the default
  // machine-eps * max(K, J).
  double rank_rel_tol = -1.0;
};

// Series two-stage least squares fit: regressors expanded in `psi` (dim J),
// instruments in `b` (dim K >= J). Coefficients solve the projected normal
// equations via an SVD of the doubly whitened cross-moment matrix
// M = G_b^{-1/2} (B'Psi/n) G_psi^{-1/2}, so
//   coeffs = G_psi^{-1/2} pinv(M) G_b^{-1/2} (B'y/n).
struct NpivFit {
  AnyBasisSpec psi;
  AnyBasisSpec b;
  Eigen::VectorXd coeffs;       // J
  Eigen::VectorXd residuals;    // n
  Eigen::MatrixXd b_design;     // n x K, kept for variance and bootstrap work
  Eigen::MatrixXd s_hat;        // K x J cross moment B'Psi/n
  Eigen::MatrixXd g_b;          // K x K instrument second-moment matrix
  Eigen::MatrixXd proj;         // J x K: [S'G_b^-1 S]^-1 S'G_b^-1 (coeffs = proj * B'y/n)
  Eigen::MatrixXd bread;        // J x J: [S'G_b^-1 S]^-1
  Eigen::VectorXd whitened_sv;  // singular values of M, descending
  double tau_hat = 1.0;         // 1 / smallest singular value of M
  double e_hat = 0.0;           // lambda_min of the regressor second-moment matrix
  long n = 0;

  // Fitted function (or derivative) at the given points (rows).
  Eigen::VectorXd predict(const Eigen::MatrixXd& points,
                          std::array<int, 2> deriv = {0, 0}) const;

  double residual_sd() const { return std::sqrt(residuals.squaredNorm() / n); }
};

// Matrix-level entry points (used directly by tests and diagnostics).
NpivFit fit_design(const Eigen::VectorXd& y, const Eigen::MatrixXd& Psi,
                   const Eigen::MatrixXd& B, const FitOptions& opt = {});
double tau_hat_design(const Eigen::MatrixXd& Psi, const Eigen::MatrixXd& B,
                      const FitOptions& opt = {});
double e_hat_design(const Eigen::MatrixXd& Psi);

// Basis-level entry point.
NpivFit fit_npiv(const Dataset& data, const AnyBasisSpec& psi, const AnyBasisSpec& b,
                 const FitOptions& opt = {});

// Measure of instrument strength for a basis pair on a sample:
// reciprocal of the smallest singular value of the whitened cross matrix
// (equivalently of the smallest canonical correlation between the two
// design-column spaces). Always >= 1; equals 1 exactly when B == Psi.
double tau_hat(const Dataset& data, const AnyBasisSpec& psi, const AnyBasisSpec& b,
               const FitOptions& opt = {});

// Grid distances between two value vectors.
double sup_distance(const Eigen::VectorXd& f, const Eigen::VectorXd& g);
// Quadrature L2 distance with uniform weight (range/#points per point).
double l2_distance(const Eigen::VectorXd& f, const Eigen::VectorXd& g, double range_length);

// points[i] = a + i*(b-a)/(count-1); exact endpoints.
Eigen::VectorXd linspace(double a, double b, int count);

}  // namespace npiv
