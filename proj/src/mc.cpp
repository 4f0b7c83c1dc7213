#include "npiv/mc.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numbers>
#include <string>
#include <thread>

namespace npiv {

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double median_of(std::vector<double> v) {
  if (v.empty()) throw NumericError("median of an empty sample");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

void check_failure_budget(int failures, int reps, double budget) {
  if (failures > budget * reps)
    throw NumericError(std::to_string(failures) + " of " + std::to_string(reps) +
                       " replications failed, above the failure budget");
}

}  // namespace

double mc_truth(McDesign design, double x) {
  if (design == McDesign::Linear) return 4.0 * x - 2.0;
  const double arg = std::log(std::abs(6.0 * x - 3.0) + 1.0);
  const double sgn = (x > 0.5) - (x < 0.5);
  return arg * sgn;
}

Dataset simulate_design(McDesign design, long n, SplitRng& rng) {
  if (n < 1) throw InputError("sample size must be >= 1");
  Dataset data;
  data.y.resize(n);
  data.x.resize(n, 1);
  data.w.resize(n, 1);
  const double rho_uv = 0.5;
  const double resid_sd = std::sqrt(1.0 - rho_uv * rho_uv);
  for (long i = 0; i < n; ++i) {
    const double z1 = rng.normal();
    const double z2 = rng.normal();
    const double z3 = rng.normal();
    const double u = z1;
    const double v_star = rho_uv * z1 + resid_sd * z2;
    const double w_star = z3;
    const double x_star = w_star + v_star;
    data.x(i, 0) = normal_cdf(x_star / std::numbers::sqrt2);
    data.w(i, 0) = normal_cdf(w_star);
    data.y(i) = mc_truth(design, data.x(i, 0)) + u;
  }
  return data;
}

void parallel_for(int items, int threads, const std::function<void(int)>& work) {
  int t = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  t = std::max(1, std::min(t, items));
  if (t == 1) {
    for (int i = 0; i < items; ++i) work(i);
    return;
  }
  std::mutex err_mutex;
  std::exception_ptr first_error;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(t));
  for (int tid = 0; tid < t; ++tid) {
    pool.emplace_back([&, tid]() {
      try {
        for (int i = tid; i < items; i += t) work(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

McTableResult run_table_mc(const McTableConfig& cfg) {
  if (cfg.reps < 1) throw InputError("replication count must be >= 1");
  // The selection comparison keeps its own (central-range) grid; only the
  // basis interval is pinned to the unit interval, the known support of the
  // simulated regressor and instrument.
  SelectConfig sel = cfg.select;
  sel.domain = std::make_pair(0.0, 1.0);

  // Losses are evaluated on a separate, typically wider, grid.
  const Eigen::VectorXd grid = linspace(cfg.loss_range.first, cfg.loss_range.second,
                                        cfg.loss_grid_points);
  Eigen::VectorXd truth(grid.size());
  for (Eigen::Index i = 0; i < grid.size(); ++i) truth(i) = mc_truth(cfg.design, grid(i));
  const double range_len = cfg.loss_range.second - cfg.loss_range.first;
  Eigen::MatrixXd loss_points(grid.size(), 1);
  loss_points.col(0) = grid;

  McTableResult out;
  out.reps = cfg.reps;
  out.records.assign(static_cast<size_t>(cfg.reps), {});

  const SplitRng root = SplitRng::root(cfg.seed);
  parallel_for(cfg.reps, cfg.threads, [&](int r) {
    McRepRecord& rec = out.records[static_cast<size_t>(r)];
    try {
      SplitRng rng = root.split(static_cast<std::uint64_t>(r));
      const Dataset data = simulate_design(cfg.design, cfg.n, rng);
      const SelectResult sr = select_dimension(data, cfg.ladder, sel);

      double best_sup = std::numeric_limits<double>::infinity();
      double best_l2 = std::numeric_limits<double>::infinity();
      double sel_sup = 0.0, sel_l2 = 0.0;
      for (std::size_t i = 0; i < sr.candidates.size(); ++i) {
        const Eigen::VectorXd on_loss_grid = sr.candidates[i].fit.predict(loss_points);
        const double se = sup_distance(on_loss_grid, truth);
        const double le = l2_distance(on_loss_grid, truth, range_len);
        if (se < best_sup) {
          best_sup = se;
          rec.j_sup_oracle = sr.candidates[i].j;
        }
        if (le < best_l2) {
          best_l2 = le;
          rec.j_l2_oracle = sr.candidates[i].j;
        }
        if (static_cast<int>(i) == sr.selected) {
          sel_sup = se;
          sel_l2 = le;
        }
      }
      rec.j_hat = sr.j_hat();
      rec.j_max_hat = sr.j_max_hat;
      rec.sup_err = sel_sup;
      rec.l2_err = sel_l2;
      rec.sup_ratio = sel_sup / best_sup;
      rec.l2_ratio = sel_l2 / best_l2;
    } catch (const std::exception&) {
      rec.failed = true;
    }
  });

  std::vector<double> sup_errs, l2_errs;
  double sum_sr = 0.0, sum_lr = 0.0, sum_se = 0.0, sum_le = 0.0;
  for (const auto& rec : out.records) {
    if (rec.failed) {
      ++out.failures;
      continue;
    }
    sum_sr += rec.sup_ratio;
    sum_lr += rec.l2_ratio;
    sum_se += rec.sup_err;
    sum_le += rec.l2_err;
    sup_errs.push_back(rec.sup_err);
    l2_errs.push_back(rec.l2_err);
  }
  check_failure_budget(out.failures, cfg.reps, cfg.failure_budget);
  const double ok = static_cast<double>(cfg.reps - out.failures);
  out.mean_sup_ratio = sum_sr / ok;
  out.mean_l2_ratio = sum_lr / ok;
  out.mean_sup_err = sum_se / ok;
  out.mean_l2_err = sum_le / ok;
  out.median_sup_err = median_of(sup_errs);
  out.median_l2_err = median_of(l2_errs);
  return out;
}

McCoverageResult run_coverage_mc(const McCoverageConfig& cfg) {
  if (cfg.reps < 1) throw InputError("replication count must be >= 1");
  if (cfg.levels.empty()) throw InputError("no confidence levels requested");
  SelectConfig sel = cfg.select;
  sel.domain = std::make_pair(0.0, 1.0);  // known support of the simulated design

  const Eigen::VectorXd grid = linspace(cfg.band_range.first, cfg.band_range.second,
                                        cfg.band_grid_points);
  Eigen::VectorXd truth(grid.size());
  for (Eigen::Index i = 0; i < grid.size(); ++i) truth(i) = mc_truth(cfg.design, grid(i));
  Eigen::MatrixXd points(grid.size(), 1);
  points.col(0) = grid;

  const std::size_t nlev = cfg.levels.size();
  std::vector<std::uint8_t> covered(static_cast<size_t>(cfg.reps) * nlev, 0);
  std::vector<double> crits(static_cast<size_t>(cfg.reps) * nlev, 0.0);
  std::vector<std::uint8_t> failed(static_cast<size_t>(cfg.reps), 0);

  const SplitRng root = SplitRng::root(cfg.seed);
  parallel_for(cfg.reps, cfg.threads, [&](int r) {
    try {
      SplitRng rng = root.split(static_cast<std::uint64_t>(r));
      const Dataset data = simulate_design(cfg.design, cfg.n, rng);
      const SelectResult sr = select_dimension(data, cfg.ladder, sel);

      BootstrapConfig bc;
      bc.reps = cfg.boot_reps;
      bc.law = cfg.law;
      bc.levels = cfg.levels;
      bc.stream = root.split(static_cast<std::uint64_t>(r));
      const NpivFit& band_fit =
          cfg.band_at_max_dim ? sr.candidates.back().fit : sr.fit();
      const UniformBand band = uniform_band(band_fit, points, bc);
      for (std::size_t li = 0; li < nlev; ++li) {
        covered[static_cast<size_t>(r) * nlev + li] = band_covers(band, truth, li) ? 1 : 0;
        crits[static_cast<size_t>(r) * nlev + li] = band.crit[li];
      }
    } catch (const std::exception&) {
      failed[static_cast<size_t>(r)] = 1;
    }
  });

  McCoverageResult out;
  out.levels = cfg.levels;
  out.reps = cfg.reps;
  out.coverage.assign(nlev, 0.0);
  out.mean_crit.assign(nlev, 0.0);
  for (int r = 0; r < cfg.reps; ++r) {
    if (failed[static_cast<size_t>(r)]) {
      ++out.failures;
      continue;
    }
    for (std::size_t li = 0; li < nlev; ++li) {
      out.coverage[li] += covered[static_cast<size_t>(r) * nlev + li];
      out.mean_crit[li] += crits[static_cast<size_t>(r) * nlev + li];
    }
  }
  check_failure_budget(out.failures, cfg.reps, cfg.failure_budget);
  const double ok = static_cast<double>(cfg.reps - out.failures);
  for (std::size_t li = 0; li < nlev; ++li) {
    out.coverage[li] /= ok;
    out.mean_crit[li] /= ok;
  }
  return out;
}

}  // namespace npiv
