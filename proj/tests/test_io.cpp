#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "npiv/io.hpp"

using namespace npiv;

namespace {

std::string tmp_path(const std::string& name) {
  return std::string(NPIV_TEST_TMPDIR) + "/" + name;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) out.push_back(line);
  return out;
}

bool message_contains(const std::function<void()>& fn, const std::string& needle) {
  try {
    fn();
  } catch (const std::exception& e) {
    return std::string(e.what()).find(needle) != std::string::npos;
  }
  return false;
}

}  // namespace

TEST_CASE("datasets load with strict headers and exact values") {
  const std::string path = tmp_path("ok.csv");
  write_file(path, "y,x1,w1\n1.5,0.25,0.5\n-2.0,0.75,0.125\n");
  const Dataset d = load_csv(path);
  CHECK(d.n() == 2);
  CHECK(d.x.cols() == 1);
  CHECK(d.w.cols() == 1);
  CHECK(d.y(0) == 1.5);
  CHECK(d.y(1) == -2.0);
  CHECK(d.x(1, 0) == 0.75);
  CHECK(d.w(1, 0) == 0.125);

  const std::string multi = tmp_path("multi.csv");
  write_file(multi, "y,x1,x2,w1\n1,0.1,0.2,0.3\n2,0.4,0.5,0.6\n");
  const Dataset m = load_csv(multi);
  CHECK(m.x.cols() == 2);
  CHECK(m.w.cols() == 1);
  CHECK(m.x(0, 1) == 0.2);
}

TEST_CASE("dataset loader names the offending row and column") {
  const std::string bad_cell = tmp_path("badcell.csv");
  write_file(bad_cell, "y,x1,w1\n1,2,3\n1,oops,3\n");
  CHECK(message_contains([&] { (void)load_csv(bad_cell); }, "row 3"));
  CHECK(message_contains([&] { (void)load_csv(bad_cell); }, "oops"));

  const std::string nonfinite = tmp_path("nan.csv");
  write_file(nonfinite, "y,x1,w1\n1,2,3\nnan,2,3\n");
  CHECK(message_contains([&] { (void)load_csv(nonfinite); }, "row 3"));
  CHECK(message_contains([&] { (void)load_csv(nonfinite); }, "non-finite"));

  const std::string inf_cell = tmp_path("inf.csv");
  write_file(inf_cell, "y,x1,w1\n1,inf,3\n");
  CHECK_THROWS_AS((void)load_csv(inf_cell), InputError);

  const std::string short_row = tmp_path("short.csv");
  write_file(short_row, "y,x1,w1\n1,2,3\n1,2\n");
  CHECK(message_contains([&] { (void)load_csv(short_row); }, "row 3"));
}

TEST_CASE("dataset loader rejects malformed headers") {
  const auto expect_input_error = [&](const std::string& name, const std::string& content) {
    const std::string p = tmp_path(name);
    write_file(p, content);
    CHECK_THROWS_AS((void)load_csv(p), InputError);
  };
  expect_input_error("noy.csv", "z,x1,w1\n1,2,3\n");
  expect_input_error("nox.csv", "y,w1\n1,2\n");
  expect_input_error("now.csv", "y,x1\n1,2\n");
  expect_input_error("extra.csv", "y,x1,w1,q\n1,2,3,4\n");
  expect_input_error("gap.csv", "y,x1,x3,w1\n1,2,3,4\n");
  expect_input_error("empty.csv", "");
  expect_input_error("norows.csv", "y,x1,w1\n");
  CHECK_THROWS_AS((void)load_csv(tmp_path("missing-file.csv")), InputError);
}

TEST_CASE("band tables carry one low/high pair per level") {
  UniformBand band;
  band.points.resize(3, 1);
  band.points << 0.1, 0.2, 0.3;
  band.center.resize(3);
  band.center << 1.0, 2.0, 3.0;
  band.sd.resize(3);
  band.sd << 0.1, 0.1, 0.2;
  band.levels = {0.90, 0.95, 0.99};
  band.crit = {1.0, 2.0, 3.0};
  band.degenerate = {0, 0, 0};

  const std::string path = tmp_path("band.csv");
  write_band_csv(path, band);
  const std::vector<std::string> lines = lines_of(slurp(path));
  REQUIRE(lines.size() == 4);
  CHECK(lines[0] == "t,center,sd,lo90,hi90,lo95,hi95,lo99,hi99");

  // First data row: center 1, sd 0.1, crits 1/2/3.
  std::stringstream row(lines[1]);
  std::string cell;
  std::vector<double> vals;
  while (std::getline(row, cell, ',')) vals.push_back(std::stod(cell));
  REQUIRE(vals.size() == 9);
  CHECK(vals[0] == 0.1);
  CHECK(vals[1] == 1.0);
  CHECK(vals[2] == 0.1);
  CHECK(vals[3] == doctest::Approx(0.9));   // 1 - 1*0.1
  CHECK(vals[4] == doctest::Approx(1.1));
  CHECK(vals[5] == doctest::Approx(0.8));   // 1 - 2*0.1
  CHECK(vals[7] == doctest::Approx(0.7));   // 1 - 3*0.1
  CHECK(vals[8] == doctest::Approx(1.3));

  CHECK_THROWS_AS(write_band_csv("/nonexistent-dir/band.csv", band), InputError);
}

TEST_CASE("replication tables round-trip through their CSV layout") {
  McTableResult res;
  res.reps = 2;
  McRepRecord r1;
  r1.j_hat = 5;
  r1.j_max_hat = 7;
  r1.j_sup_oracle = 5;
  r1.j_l2_oracle = 4;
  r1.sup_err = 0.25;
  r1.l2_err = 0.125;
  r1.sup_ratio = 1.0;
  r1.l2_ratio = 1.5;
  McRepRecord r2;
  r2.failed = true;
  res.records = {r1, r2};

  const std::string path = tmp_path("table.csv");
  write_table_csv(path, res);
  const std::vector<std::string> lines = lines_of(slurp(path));
  REQUIRE(lines.size() == 3);
  CHECK(lines[0] ==
        "rep,failed,j_hat,j_max_hat,j_sup_oracle,j_l2_oracle,sup_err,l2_err,sup_ratio,l2_ratio");
  CHECK(lines[1].substr(0, 2) == "0,");
  CHECK(lines[1].find(",5,7,5,4,") != std::string::npos);
  CHECK(lines[2].substr(0, 4) == "1,1,");
}

TEST_CASE("run records survive a JSON round trip losslessly") {
  RunRecord rec;
  rec.command = "mc-lepski";
  rec.config = nlohmann::json{{"design", "linear"},
                              {"n", 1000},
                              {"loss_range", {0.05, 0.95}},
                              {"nested", {{"a", 1}, {"b", "text"}}}};
  rec.summary = nlohmann::json{{"mean_sup_ratio", 1.0125}, {"failures", 0}};

  const nlohmann::json j = to_json(rec);
  const RunRecord back = run_record_from_json(j);
  CHECK(back.command == rec.command);
  CHECK(back.config == rec.config);
  CHECK(back.summary == rec.summary);
  CHECK(to_json(back) == j);

  const std::string path = tmp_path("record.json");
  write_run_record(path, rec);
  const nlohmann::json reread = nlohmann::json::parse(slurp(path));
  CHECK(run_record_from_json(reread).config == rec.config);

  CHECK_THROWS_AS(run_record_from_json(nlohmann::json{{"command", "x"}}), std::exception);
}

TEST_CASE("doubles are formatted so they parse back bit-for-bit") {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 12345.678901234567, -2.5e17, 0.0,
                   0.05, 0.4262251234567891, 6.3212055882855765}) {
    const std::string s = format_double(v);
    CHECK(std::stod(s) == v);
  }
}
