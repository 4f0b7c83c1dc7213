// Command-line frontend: fit, select, band, welfare, and the two simulation
// subcommands. Exit codes: 0 success, 2 input error, 3 numerical failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "npiv/adaptive.hpp"
#include "npiv/io.hpp"
#include "npiv/mc.hpp"
#include "npiv/welfare.hpp"

namespace {

using nlohmann::json;

struct GlobalOpts {
  std::uint64_t seed = 1;
  int grid_points = 1000;
  std::vector<double> grid_range;  // two values when set
  int threads = 0;
  std::string out;
};

npiv::BasisFamily parse_family(const std::string& name) {
  if (name == "bspline") return npiv::BasisFamily::BSpline;
  if (name == "legendre") return npiv::BasisFamily::Legendre;
  if (name == "cosine") return npiv::BasisFamily::Cosine;
  throw npiv::InputError("unknown basis family '" + name + "'");
}

npiv::WeightLaw parse_law(const std::string& name) {
  if (name == "mammen") return npiv::WeightLaw::Mammen;
  if (name == "rademacher") return npiv::WeightLaw::Rademacher;
  if (name == "gaussian") return npiv::WeightLaw::Gaussian;
  if (name == "exponential") return npiv::WeightLaw::RecenteredExponential;
  throw npiv::InputError("unknown weight law '" + name + "'");
}

npiv::McDesign parse_design(const std::string& name) {
  if (name == "linear") return npiv::McDesign::Linear;
  if (name == "nonlinear") return npiv::McDesign::Nonlinear;
  throw npiv::InputError("unknown simulation design '" + name + "'");
}

std::optional<std::pair<double, double>> range_of(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  if (v.size() != 2 || !(v[1] > v[0]))
    throw npiv::InputError("--grid-range expects two increasing values");
  return std::make_pair(v[0], v[1]);
}

void emit(const GlobalOpts& g, const json& j) {
  if (g.out.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    npiv::RunRecord rec{j.at("command").get<std::string>(), j.at("config"), j.at("summary")};
    npiv::write_run_record(g.out, rec);
    std::cout << "wrote " << g.out << "\n";
  }
}

struct BasisOpts {
  std::string psi_family = "bspline";
  int psi_order = 4;
  int psi_dim = 5;
  std::string b_family = "bspline";
  int b_order = 4;
  int b_dim = 5;

  void attach(CLI::App* cmd) {
    cmd->add_option("--psi-family", psi_family, "regressor basis family")
        ->check(CLI::IsMember({"bspline", "legendre", "cosine"}));
    cmd->add_option("--psi-order", psi_order, "regressor B-spline order");
    cmd->add_option("--psi-dim", psi_dim, "regressor basis dimension");
    cmd->add_option("--b-family", b_family, "instrument basis family")
        ->check(CLI::IsMember({"bspline", "legendre", "cosine"}));
    cmd->add_option("--b-order", b_order, "instrument B-spline order");
    cmd->add_option("--b-dim", b_dim, "instrument basis dimension");
  }
};

struct SelectOpts {
  std::string k_rule = "same";
  std::string sigma_bar = "1";
  double growth_a = 0.1;
  int dim_cap = 200;

  void attach(CLI::App* cmd) {
    cmd->add_option("--k-rule", k_rule, "instrument dimension rule")
        ->check(CLI::IsMember({"same", "double"}));
    cmd->add_option("--sigma-bar", sigma_bar,
                    "noise scale for the comparison threshold, or 'estimate'");
    cmd->add_option("--growth-a", growth_a, "constant in the feasibility rule");
    cmd->add_option("--dim-cap", dim_cap, "hard cap for the feasibility scan");
  }

  npiv::SelectConfig to_config(const GlobalOpts& g) const {
    npiv::SelectConfig cfg;
    cfg.k_rule = k_rule == "double" ? npiv::KRule::Double : npiv::KRule::Same;
    if (sigma_bar == "estimate") {
      cfg.estimate_sigma = true;
    } else {
      try {
        cfg.sigma_bar = std::stod(sigma_bar);
      } catch (const std::exception&) {
        throw npiv::InputError("--sigma-bar expects a number or 'estimate'");
      }
    }
    cfg.growth_a = growth_a;
    cfg.dim_cap = dim_cap;
    cfg.grid_points = g.grid_points;
    cfg.grid_range = range_of(g.grid_range);
    return cfg;
  }
};

json candidates_json(const npiv::SelectResult& sr) {
  json arr = json::array();
  for (const auto& c : sr.candidates)
    arr.push_back({{"j", c.j},
                   {"k", c.k},
                   {"tau_hat", c.tau},
                   {"e_hat", c.e_min},
                   {"xi", c.xi},
                   {"v_sup", c.v_sup}});
  return arr;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"sieve instrumental-variables regression tool"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOpts g;
  app.add_option("--seed", g.seed, "root RNG seed")->capture_default_str();
  app.add_option("--grid-points", g.grid_points, "evaluation grid size")->capture_default_str();
  app.add_option("--grid-range", g.grid_range, "evaluation range lo hi")->expected(2);
  app.add_option("--threads", g.threads, "worker threads (0 = hardware)")->capture_default_str();
  app.add_option("--out", g.out, "output file (JSON record; CSV for band)");

  // ---- fit ----------------------------------------------------------------
  auto* fit_cmd = app.add_subcommand("fit", "fit one sieve IV regression");
  std::string fit_data;
  BasisOpts fit_basis;
  fit_cmd->add_option("--data", fit_data, "dataset CSV")->required();
  fit_basis.attach(fit_cmd);
  fit_cmd->callback([&]() {
    const npiv::Dataset data = npiv::load_csv(fit_data);
    if (data.x.cols() != 1 || data.w.cols() != 1)
      throw npiv::InputError("fit expects univariate x and w columns");
    const double pad = 1e-9;
    npiv::BasisSpec psi{parse_family(fit_basis.psi_family), fit_basis.psi_dim,
                        data.x.minCoeff() - pad, data.x.maxCoeff() + pad, fit_basis.psi_order};
    npiv::BasisSpec b{parse_family(fit_basis.b_family), fit_basis.b_dim,
                      data.w.minCoeff() - pad, data.w.maxCoeff() + pad, fit_basis.b_order};
    const npiv::NpivFit fit = npiv::fit_npiv(data, psi, b);
    json coeffs = json::array();
    for (Eigen::Index i = 0; i < fit.coeffs.size(); ++i) coeffs.push_back(fit.coeffs(i));
    emit(g, json{{"command", "fit"},
                 {"config",
                  {{"data", fit_data},
                   {"psi_family", fit_basis.psi_family},
                   {"psi_dim", fit_basis.psi_dim},
                   {"b_family", fit_basis.b_family},
                   {"b_dim", fit_basis.b_dim}}},
                 {"summary",
                  {{"n", fit.n},
                   {"j", npiv::basis_dim(fit.psi)},
                   {"k", npiv::basis_dim(fit.b)},
                   {"tau_hat", fit.tau_hat},
                   {"e_hat", fit.e_hat},
                   {"residual_sd", fit.residual_sd()},
                   {"coeffs", coeffs}}}});
  });

  // ---- select ---------------------------------------------------------------
  auto* sel_cmd = app.add_subcommand("select", "data-driven sieve dimension choice");
  std::string sel_data;
  BasisOpts sel_basis;
  SelectOpts sel_opts;
  sel_cmd->add_option("--data", sel_data, "dataset CSV")->required();
  sel_basis.attach(sel_cmd);
  sel_opts.attach(sel_cmd);
  sel_cmd->callback([&]() {
    const npiv::Dataset data = npiv::load_csv(sel_data);
    npiv::SieveLadder ladder{
        npiv::BasisSpec{parse_family(sel_basis.psi_family), 0, 0, 1, sel_basis.psi_order},
        npiv::BasisSpec{parse_family(sel_basis.b_family), 0, 0, 1, sel_basis.b_order}};
    const npiv::SelectResult sr =
        npiv::select_dimension(data, ladder, sel_opts.to_config(g));
    emit(g, json{{"command", "select"},
                 {"config",
                  {{"data", sel_data},
                   {"psi_family", sel_basis.psi_family},
                   {"b_family", sel_basis.b_family},
                   {"k_rule", sel_opts.k_rule},
                   {"sigma_bar", sel_opts.sigma_bar},
                   {"growth_a", sel_opts.growth_a}}},
                 {"summary",
                  {{"n", data.n()},
                   {"j_min", sr.j_min},
                   {"j_trip", sr.j_trip},
                   {"j_max_hat", sr.j_max_hat},
                   {"capped", sr.capped},
                   {"scan_error", sr.scan_error},
                   {"sigma_bar_used", sr.sigma_bar_used},
                   {"j_hat", sr.j_hat()},
                   {"candidates", candidates_json(sr)}}}});
  });

  // ---- band -----------------------------------------------------------------
  auto* band_cmd = app.add_subcommand("band", "uniform confidence band (CSV output)");
  std::string band_data, band_law = "mammen";
  BasisOpts band_basis;
  SelectOpts band_sel;
  int band_boot = 1000;
  int band_points = 100;
  std::vector<double> band_levels = {0.90, 0.95, 0.99};
  band_cmd->add_option("--data", band_data, "dataset CSV")->required();
  band_basis.attach(band_cmd);
  band_sel.attach(band_cmd);
  band_cmd->add_option("--boot-reps", band_boot, "bootstrap draws")->capture_default_str();
  band_cmd->add_option("--band-points", band_points, "band grid size")->capture_default_str();
  band_cmd->add_option("--levels", band_levels, "confidence levels")->expected(-1);
  band_cmd->add_option("--weights", band_law, "multiplier law")
      ->check(CLI::IsMember({"mammen", "rademacher", "gaussian", "exponential"}));
  band_cmd->callback([&]() {
    const npiv::Dataset data = npiv::load_csv(band_data);
    npiv::SieveLadder ladder{
        npiv::BasisSpec{parse_family(band_basis.psi_family), 0, 0, 1, band_basis.psi_order},
        npiv::BasisSpec{parse_family(band_basis.b_family), 0, 0, 1, band_basis.b_order}};
    const npiv::SelectResult sr =
        npiv::select_dimension(data, ladder, band_sel.to_config(g));
    auto range = range_of(g.grid_range);
    const double lo = range ? range->first : sr.grid.minCoeff();
    const double hi = range ? range->second : sr.grid.maxCoeff();
    Eigen::MatrixXd points(band_points, 1);
    points.col(0) = npiv::linspace(lo, hi, band_points);
    npiv::BootstrapConfig bc;
    bc.reps = band_boot;
    bc.law = parse_law(band_law);
    bc.seed = g.seed;
    bc.levels = band_levels;
    const npiv::UniformBand band = npiv::uniform_band(sr.fit(), points, bc);
    const std::string path = g.out.empty() ? "band.csv" : g.out;
    npiv::write_band_csv(path, band);
    std::cout << "wrote " << path << " (j_hat = " << sr.j_hat() << ")\n";
    if (band.any_degenerate)
      std::cerr << "warning: some grid points had degenerate variance and were skipped\n";
  });

  // ---- welfare ----------------------------------------------------------------
  auto* wel_cmd = app.add_subcommand("welfare", "surplus and deadweight loss of a price change");
  std::string wel_data, wel_family = "bspline";
  int wel_order = 4, wel_dim_p = 5, wel_dim_y = 3;
  std::string welb_family = "bspline";
  int welb_order = 4, welb_dim1 = 5, welb_dim2 = 3;
  double wel_p0 = 0.0, wel_p1 = 1.0, wel_income = 0.0;
  int wel_steps = 1000;
  bool wel_clamp = false, wel_income_indep = false;
  wel_cmd->add_option("--data", wel_data, "dataset CSV with x1 = price, x2 = income")
      ->required();
  wel_cmd->add_option("--psi-family", wel_family, "regressor basis family")
      ->check(CLI::IsMember({"bspline", "legendre", "cosine"}));
  wel_cmd->add_option("--psi-order", wel_order, "regressor B-spline order");
  wel_cmd->add_option("--psi-dim-p", wel_dim_p, "price-coordinate dimension");
  wel_cmd->add_option("--psi-dim-y", wel_dim_y, "income-coordinate dimension");
  wel_cmd->add_option("--b-family", welb_family, "instrument basis family")
      ->check(CLI::IsMember({"bspline", "legendre", "cosine"}));
  wel_cmd->add_option("--b-order", welb_order, "instrument B-spline order");
  wel_cmd->add_option("--b-dim-1", welb_dim1, "first instrument coordinate dimension");
  wel_cmd->add_option("--b-dim-2", welb_dim2, "second instrument coordinate dimension");
  wel_cmd->add_option("--p0", wel_p0, "initial price")->required();
  wel_cmd->add_option("--p1", wel_p1, "final price")->required();
  wel_cmd->add_option("--income", wel_income, "income level")->required();
  wel_cmd->add_option("--steps", wel_steps, "solver steps")->capture_default_str();
  wel_cmd->add_flag("--clamp-income", wel_clamp,
                    "clamp the compensated income into the basis interval");
  wel_cmd->add_flag("--income-independent", wel_income_indep,
                    "treat demand as a function of price only");
  wel_cmd->callback([&]() {
    const npiv::Dataset data = npiv::load_csv(wel_data);
    const double pad = 1e-9;
    auto coord_spec = [&](const Eigen::VectorXd& col, const std::string& fam, int order,
                          int dim) {
      return npiv::BasisSpec{parse_family(fam), dim, col.minCoeff() - pad,
                             col.maxCoeff() + pad, order};
    };
    npiv::AnyBasisSpec psi, b;
    if (wel_income_indep) {
      if (data.x.cols() != 1)
        throw npiv::InputError("--income-independent expects a single x column (price)");
      psi = coord_spec(data.x.col(0), wel_family, wel_order, wel_dim_p);
    } else {
      if (data.x.cols() != 2)
        throw npiv::InputError("welfare expects x1 = price and x2 = income columns");
      psi = npiv::TensorBasisSpec{
          coord_spec(data.x.col(0), wel_family, wel_order, wel_dim_p),
          coord_spec(data.x.col(1), wel_family, wel_order, wel_dim_y)};
    }
    if (data.w.cols() == 1) {
      b = coord_spec(data.w.col(0), welb_family, welb_order, welb_dim1);
    } else if (data.w.cols() == 2) {
      b = npiv::TensorBasisSpec{coord_spec(data.w.col(0), welb_family, welb_order, welb_dim1),
                                coord_spec(data.w.col(1), welb_family, welb_order, welb_dim2)};
    } else {
      throw npiv::InputError("welfare expects one or two instrument columns");
    }
    const npiv::NpivFit fit = npiv::fit_npiv(data, psi, b);
    npiv::PricePath path;
    path.p0 = wel_p0;
    path.p1 = wel_p1;
    path.income = wel_income;
    path.steps = wel_steps;
    path.clamp_income = wel_clamp;
    const npiv::WelfareEstimate est = npiv::welfare_estimate(fit, path);
    json summary{{"cs", est.cs},
                 {"dwl", est.dwl},
                 {"sd_cs", est.sd_cs},
                 {"sd_dwl", est.sd_dwl},
                 {"se_cs", est.sd_cs / std::sqrt(static_cast<double>(fit.n))},
                 {"se_dwl", est.sd_dwl / std::sqrt(static_cast<double>(fit.n))},
                 {"clamped", est.clamped}};
    summary["t_cs"] = est.t_cs ? json(*est.t_cs) : json(nullptr);
    summary["t_dwl"] = est.t_dwl ? json(*est.t_dwl) : json(nullptr);
    emit(g, json{{"command", "welfare"},
                 {"config",
                  {{"data", wel_data},
                   {"p0", wel_p0},
                   {"p1", wel_p1},
                   {"income", wel_income},
                   {"steps", wel_steps},
                   {"income_independent", wel_income_indep}}},
                 {"summary", summary}});
  });

  // ---- mc-lepski ---------------------------------------------------------------
  auto* mcl_cmd = app.add_subcommand("mc-lepski", "selection-quality simulation table");
  std::string mcl_design = "linear";
  long mcl_n = 1000;
  int mcl_reps = 1000;
  BasisOpts mcl_basis;
  SelectOpts mcl_sel;
  mcl_cmd->add_option("--design", mcl_design, "simulation design")
      ->check(CLI::IsMember({"linear", "nonlinear"}));
  mcl_cmd->add_option("--n", mcl_n, "sample size")->capture_default_str();
  mcl_cmd->add_option("--reps", mcl_reps, "replications")->capture_default_str();
  mcl_basis.attach(mcl_cmd);
  mcl_sel.attach(mcl_cmd);
  mcl_cmd->callback([&]() {
    npiv::McTableConfig cfg;
    cfg.design = parse_design(mcl_design);
    cfg.n = mcl_n;
    cfg.reps = mcl_reps;
    cfg.ladder = npiv::SieveLadder{
        npiv::BasisSpec{parse_family(mcl_basis.psi_family), 0, 0, 1, mcl_basis.psi_order},
        npiv::BasisSpec{parse_family(mcl_basis.b_family), 0, 0, 1, mcl_basis.b_order}};
    cfg.select = mcl_sel.to_config(g);
    cfg.select.grid_range.reset();  // selection keeps its default comparison grid
    cfg.seed = g.seed;
    cfg.threads = g.threads;
    cfg.loss_grid_points = g.grid_points;
    if (auto r = range_of(g.grid_range)) cfg.loss_range = *r;
    const npiv::McTableResult res = npiv::run_table_mc(cfg);
    const json out_json{
        {"command", "mc-lepski"},
        {"config",
         {{"design", mcl_design},
          {"n", cfg.n},
          {"reps", cfg.reps},
          {"seed", cfg.seed},
          {"psi_family", mcl_basis.psi_family},
          {"psi_order", mcl_basis.psi_order},
          {"b_family", mcl_basis.b_family},
          {"b_order", mcl_basis.b_order},
          {"k_rule", mcl_sel.k_rule},
          {"sigma_bar", mcl_sel.sigma_bar},
          {"loss_range", {cfg.loss_range.first, cfg.loss_range.second}},
          {"loss_grid_points", cfg.loss_grid_points}}},
        {"summary",
         {{"mean_sup_ratio", res.mean_sup_ratio},
          {"mean_l2_ratio", res.mean_l2_ratio},
          {"mean_sup_err", res.mean_sup_err},
          {"mean_l2_err", res.mean_l2_err},
          {"median_sup_err", res.median_sup_err},
          {"median_l2_err", res.median_l2_err},
          {"failures", res.failures}}}};
    if (!g.out.empty()) {
      npiv::write_table_csv(g.out + ".csv", res);
      npiv::RunRecord rec{"mc-lepski", out_json.at("config"), out_json.at("summary")};
      npiv::write_run_record(g.out + ".json", rec);
      std::cout << "wrote " << g.out << ".csv and " << g.out << ".json\n";
    }
    std::cout << out_json.at("summary").dump(2) << "\n";
  });

  // ---- mc-coverage ---------------------------------------------------------------
  auto* mcc_cmd = app.add_subcommand("mc-coverage", "band-coverage simulation");
  std::string mcc_design = "nonlinear", mcc_law = "mammen";
  long mcc_n = 1000;
  int mcc_reps = 250, mcc_boot = 500, mcc_points = 100;
  std::vector<double> mcc_levels = {0.90, 0.95, 0.99};
  BasisOpts mcc_basis;
  SelectOpts mcc_sel;
  mcc_cmd->add_option("--design", mcc_design, "simulation design")
      ->check(CLI::IsMember({"linear", "nonlinear"}));
  mcc_cmd->add_option("--n", mcc_n, "sample size")->capture_default_str();
  mcc_cmd->add_option("--reps", mcc_reps, "replications")->capture_default_str();
  mcc_cmd->add_option("--boot-reps", mcc_boot, "bootstrap draws")->capture_default_str();
  mcc_cmd->add_option("--band-points", mcc_points, "band grid size")->capture_default_str();
  mcc_cmd->add_option("--levels", mcc_levels, "confidence levels")->expected(-1);
  mcc_cmd->add_option("--weights", mcc_law, "multiplier law")
      ->check(CLI::IsMember({"mammen", "rademacher", "gaussian", "exponential"}));
  mcc_basis.attach(mcc_cmd);
  mcc_sel.attach(mcc_cmd);
  mcc_cmd->callback([&]() {
    npiv::McCoverageConfig cfg;
    cfg.design = parse_design(mcc_design);
    cfg.n = mcc_n;
    cfg.reps = mcc_reps;
    cfg.ladder = npiv::SieveLadder{
        npiv::BasisSpec{parse_family(mcc_basis.psi_family), 0, 0, 1, mcc_basis.psi_order},
        npiv::BasisSpec{parse_family(mcc_basis.b_family), 0, 0, 1, mcc_basis.b_order}};
    cfg.select = mcc_sel.to_config(g);
    cfg.select.grid_range.reset();  // selection keeps its default comparison grid
    cfg.seed = g.seed;
    cfg.threads = g.threads;
    cfg.boot_reps = mcc_boot;
    cfg.law = parse_law(mcc_law);
    cfg.levels = mcc_levels;
    cfg.band_grid_points = mcc_points;
    if (auto r = range_of(g.grid_range)) cfg.band_range = *r;
    const npiv::McCoverageResult res = npiv::run_coverage_mc(cfg);
    json cov = json::array();
    for (std::size_t i = 0; i < res.levels.size(); ++i) {
      cov.push_back({{"level", res.levels[i]},
                     {"coverage", res.coverage[i]},
                     {"mean_crit", res.mean_crit[i]}});
    }
    const json out_json{{"command", "mc-coverage"},
                        {"config",
                         {{"design", mcc_design},
                          {"n", cfg.n},
                          {"reps", cfg.reps},
                          {"boot_reps", cfg.boot_reps},
                          {"seed", cfg.seed},
                          {"weights", mcc_law},
                          {"band_points", cfg.band_grid_points},
                          {"band_range", {cfg.band_range.first, cfg.band_range.second}}}},
                        {"summary", {{"levels", cov}, {"failures", res.failures}}}};
    if (!g.out.empty()) {
      npiv::RunRecord rec{"mc-coverage", out_json.at("config"), out_json.at("summary")};
      npiv::write_run_record(g.out, rec);
      std::cout << "wrote " << g.out << "\n";
    }
    std::cout << out_json.at("summary").dump(2) << "\n";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const npiv::InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const npiv::NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
