#include <doctest.h>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "npiv/inference.hpp"
#include "npiv/rng.hpp"

using namespace npiv;

namespace {

Dataset noisy_sample(long n, std::uint64_t seed) {
  SplitRng rng = SplitRng::root(seed);
  Dataset d;
  d.y.resize(n);
  d.x.resize(n, 1);
  d.w.resize(n, 1);
  for (long i = 0; i < n; ++i) {
    const double w = rng.uniform01();
    const double x = std::min(1.0, std::max(0.0, w + 0.1 * (rng.uniform01() - 0.5)));
    d.w(i, 0) = w;
    d.x(i, 0) = x;
    d.y(i) = std::cos(2.0 * x) + 0.3 * rng.normal();
  }
  return d;
}

NpivFit spline_fit(const Dataset& d, int dim) {
  const BasisSpec s{BasisFamily::BSpline, dim, 0.0, 1.0, 4};
  return fit_npiv(d, AnyBasisSpec{s}, AnyBasisSpec{s});
}

Eigen::MatrixXd grid_points(double lo, double hi, int count) {
  Eigen::MatrixXd pts(count, 1);
  pts.col(0) = linspace(lo, hi, count);
  return pts;
}

}  // namespace

TEST_CASE("multiplier weights match their two-point law and moments") {
  const double s5 = std::sqrt(5.0);
  const double low = -(s5 - 1.0) / 2.0;
  const double high = (s5 + 1.0) / 2.0;
  const double p_low = (s5 + 1.0) / (2.0 * s5);

  // The documented two-point law is exactly mean-zero, variance-one.
  CHECK(p_low * low + (1.0 - p_low) * high == doctest::Approx(0.0).scale(1.0).epsilon(1e-15));
  CHECK(p_low * low * low + (1.0 - p_low) * high * high ==
        doctest::Approx(1.0).epsilon(1e-15));

  SplitRng rng = SplitRng::root(404);
  const long n = 200000;
  const Eigen::VectorXd w = draw_weights(WeightLaw::Mammen, n, rng);
  long n_low = 0;
  for (long i = 0; i < n; ++i) {
    const bool is_low = w(i) == doctest::Approx(low).epsilon(1e-15);
    const bool is_high = w(i) == doctest::Approx(high).epsilon(1e-15);
    CHECK((is_low || is_high));
    n_low += is_low;
  }
  CHECK(static_cast<double>(n_low) / n == doctest::Approx(p_low).epsilon(0.01));
  CHECK(w.mean() == doctest::Approx(0.0).scale(1.0).epsilon(0.01));
  CHECK(w.squaredNorm() / n == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("all multiplier laws are standardized") {
  SplitRng rng = SplitRng::root(405);
  const long n = 200000;
  for (WeightLaw law : {WeightLaw::Mammen, WeightLaw::Rademacher, WeightLaw::Gaussian,
                        WeightLaw::RecenteredExponential}) {
    const Eigen::VectorXd w = draw_weights(law, n, rng);
    CHECK(w.mean() == doctest::Approx(0.0).scale(1.0).epsilon(0.015));
    CHECK(w.squaredNorm() / n == doctest::Approx(1.0).epsilon(0.02));
  }
  SplitRng r2 = SplitRng::root(1);
  const Eigen::VectorXd rad = draw_weights(WeightLaw::Rademacher, 1000, r2);
  for (long i = 0; i < rad.size(); ++i) CHECK(std::abs(rad(i)) == 1.0);
  const Eigen::VectorXd rex = draw_weights(WeightLaw::RecenteredExponential, 1000, r2);
  CHECK(rex.minCoeff() > -1.0);
  CHECK_THROWS_AS(draw_weights(WeightLaw::Mammen, 0, r2), InputError);
}

TEST_CASE("bootstrap draws are reproducible byte for byte") {
  const Dataset d = noisy_sample(300, 12);
  const NpivFit fit = spline_fit(d, 5);
  const Eigen::MatrixXd pts = grid_points(0.05, 0.95, 30);

  BootstrapConfig cfg;
  cfg.reps = 50;
  cfg.seed = 99;
  const std::vector<double> a = score_bootstrap_sup(fit, pts, cfg);
  const std::vector<double> b = score_bootstrap_sup(fit, pts, cfg);
  CHECK(a == b);

  // A nested substream behaves like any other fixed stream.
  BootstrapConfig nested = cfg;
  nested.stream = SplitRng::root(99).split(3);
  const std::vector<double> c = score_bootstrap_sup(fit, pts, nested);
  const std::vector<double> e = score_bootstrap_sup(fit, pts, nested);
  CHECK(c == e);
  CHECK(a != c);

  for (double s : a) CHECK(s >= 0.0);
}

TEST_CASE("bootstrap quantile is the ceiling order statistic") {
  std::vector<double> sups;
  for (int i = 100; i >= 1; --i) sups.push_back(static_cast<double>(i));
  CHECK(bootstrap_quantile(sups, 0.90) == 90.0);
  CHECK(bootstrap_quantile(sups, 0.95) == 95.0);
  CHECK(bootstrap_quantile(sups, 0.949) == 95.0);  // ceil(94.9)
  CHECK(bootstrap_quantile(sups, 0.99) == 99.0);
  CHECK(bootstrap_quantile(sups, 0.005) == 1.0);

  CHECK_THROWS_AS(bootstrap_quantile({}, 0.9), InputError);
  CHECK_THROWS_AS(bootstrap_quantile(sups, 0.0), InputError);
  CHECK_THROWS_AS(bootstrap_quantile(sups, 1.0), InputError);
}

TEST_CASE("bands are centered at the fit with level-monotone widths") {
  const Dataset d = noisy_sample(400, 21);
  const NpivFit fit = spline_fit(d, 5);
  const Eigen::MatrixXd pts = grid_points(0.05, 0.95, 40);

  BootstrapConfig cfg;
  cfg.reps = 200;
  cfg.seed = 5;
  const UniformBand band = uniform_band(fit, pts, cfg);

  CHECK((band.center - fit.predict(pts)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(band.sd.minCoeff() > 0.0);
  REQUIRE(band.crit.size() == 3);
  CHECK(band.crit[0] <= band.crit[1]);
  CHECK(band.crit[1] <= band.crit[2]);
  CHECK(band.crit[0] > 0.0);
  for (Eigen::Index g = 0; g < pts.rows(); ++g) {
    CHECK(band.lo(0, g) == band.center(g) - band.crit[0] * band.sd(g));
    CHECK(band.hi(2, g) == band.center(g) + band.crit[2] * band.sd(g));
    CHECK(band.lo(2, g) <= band.lo(0, g));
    CHECK(band.hi(0, g) <= band.hi(2, g));
  }

  // The center always lies inside its own band; a huge shift never does.
  CHECK(band_covers(band, band.center, 0));
  Eigen::VectorXd far = band.center;
  far(7) += 1e6;
  CHECK_FALSE(band_covers(band, far, 2));
  CHECK_THROWS_AS(band_covers(band, band.center.head(3).eval(), 0), InputError);
  CHECK_THROWS_AS(band_covers(band, band.center, 9), InputError);
}

TEST_CASE("forced zero weights collapse the critical values") {
  const Dataset d = noisy_sample(200, 33);
  const NpivFit fit = spline_fit(d, 4);
  const Eigen::MatrixXd pts = grid_points(0.1, 0.9, 11);

  BootstrapConfig cfg;
  cfg.reps = 20;
  cfg.weight_override = [](SplitRng&, Eigen::VectorXd& w) { w.setZero(); };
  const UniformBand band = uniform_band(fit, pts, cfg);
  for (double c : band.crit) CHECK(c == 0.0);
}

TEST_CASE("degenerate grid points are flagged and excluded") {
  // Hand-built fit: residuals vanish on the observations that carry the
  // left end of the interval, so the variance at t = 0 is exactly zero.
  NpivFit fit;
  fit.psi = BasisSpec{BasisFamily::BSpline, 4, 0.0, 1.0, 4};
  fit.b = fit.psi;
  fit.n = 4;
  fit.coeffs = Eigen::VectorXd::Ones(4);
  fit.residuals = (Eigen::VectorXd(4) << 0.0, 0.0, 1.0, 1.0).finished();
  fit.b_design = Eigen::MatrixXd::Identity(4, 4);
  fit.proj = Eigen::MatrixXd::Identity(4, 4);

  Eigen::MatrixXd pts(2, 1);
  pts << 0.0, 1.0;
  BootstrapConfig cfg;
  cfg.reps = 30;
  const UniformBand band = uniform_band(fit, pts, cfg);
  CHECK(band.any_degenerate);
  CHECK(band.degenerate[0] == 1);
  CHECK(band.degenerate[1] == 0);
  // Coverage ignores the degenerate point entirely.
  Eigen::VectorXd truth = band.center;
  truth(0) += 1e9;
  CHECK(band_covers(band, truth, 0));

  // All-zero residuals leave no usable point at all.
  fit.residuals.setZero();
  CHECK_THROWS_AS(uniform_band(fit, pts, cfg), NumericError);

  // Infinite critical values cover everything, degenerate or not.
  UniformBand wide = band;
  wide.crit.assign(wide.crit.size(), std::numeric_limits<double>::infinity());
  Eigen::VectorXd wild = Eigen::VectorXd::Constant(2, 1e12);
  CHECK(band_covers(wide, wild, 0));
}

TEST_CASE("sandwich standard deviations match a from-scratch computation") {
  const Dataset d = noisy_sample(500, 47);
  const NpivFit fit = spline_fit(d, 5);

  // Re-derive the projected normal equations and the sandwich directly from
  // the raw designs, without the whitened-SVD route the estimator takes.
  const BasisSpec s{BasisFamily::BSpline, 5, 0.0, 1.0, 4};
  const Eigen::MatrixXd Psi = design_matrix(s, d.x.col(0));
  const Eigen::MatrixXd B = design_matrix(s, d.w.col(0));
  const double n = static_cast<double>(d.n());
  const Eigen::MatrixXd S = B.transpose() * Psi / n;
  const Eigen::MatrixXd GbInv = (B.transpose() * B / n).inverse();
  const Eigen::MatrixXd proj = (S.transpose() * GbInv * S).inverse() * S.transpose() * GbInv;
  const Eigen::VectorXd coeffs = proj * (B.transpose() * d.y / n);
  const Eigen::VectorXd resid = d.y - Psi * coeffs;
  Eigen::MatrixXd Om = Eigen::MatrixXd::Zero(5, 5);
  for (long i = 0; i < d.n(); ++i)
    Om += resid(i) * resid(i) * B.row(i).transpose() * B.row(i);
  Om /= n;

  CHECK((fit.coeffs - coeffs).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((omega_hat(fit) - Om).cwiseAbs().maxCoeff() < 1e-10);

  const Eigen::VectorXd at = eval_basis(fit.psi, (Eigen::RowVectorXd(1) << 0.5).finished());
  const Eigen::VectorXd g = proj.transpose() * at;
  const double oracle = std::sqrt((g.transpose() * Om * g).value());
  CHECK(sieve_sd(fit, at) == doctest::Approx(oracle).epsilon(1e-8));

  CHECK_THROWS_AS(sieve_sd(fit, Eigen::VectorXd::Ones(3)), InputError);
}

TEST_CASE("t statistics scale the estimate gap by root n over sd") {
  CHECK(t_statistic(1.5, 1.0, 2.0, 400) == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(t_statistic(1.0, 1.5, 2.0, 400) == doctest::Approx(-5.0).epsilon(1e-15));
  CHECK_THROWS_AS(t_statistic(1.0, 0.0, 0.0, 100), NumericError);
}

TEST_CASE("band construction validates its inputs") {
  const Dataset d = noisy_sample(150, 3);
  const NpivFit fit = spline_fit(d, 4);
  const Eigen::MatrixXd pts = grid_points(0.1, 0.9, 5);

  BootstrapConfig cfg;
  cfg.reps = 0;
  CHECK_THROWS_AS(uniform_band(fit, pts, cfg), InputError);
  cfg.reps = 10;
  cfg.levels = {};
  CHECK_THROWS_AS(uniform_band(fit, pts, cfg), InputError);
  cfg.levels = {1.5};
  CHECK_THROWS_AS(uniform_band(fit, pts, cfg), InputError);
  cfg.levels = {0.9};
  CHECK_THROWS_AS(uniform_band(fit, Eigen::MatrixXd(0, 1), cfg), InputError);
  CHECK_NOTHROW(uniform_band(fit, pts, cfg));
}
