#include "npiv/io.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace npiv {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    // trim surrounding whitespace
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_cell(const std::string& cell, long row, std::size_t col) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(cell, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != cell.size() || cell.empty())
    throw InputError("row " + std::to_string(row) + ", column " + std::to_string(col + 1) +
                     ": cannot parse '" + cell + "' as a number");
  if (!std::isfinite(v))
    throw InputError("row " + std::to_string(row) + ", column " + std::to_string(col + 1) +
                     ": non-finite value");
  return v;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Dataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open dataset file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw InputError("dataset file is empty: " + path);
  const std::vector<std::string> header = split_csv_line(line);
  if (header.empty() || header[0] != "y")
    throw InputError("dataset header must start with column 'y'");
  std::size_t col = 1;
  int d = 0;
  while (col < header.size() && header[col] == "x" + std::to_string(d + 1)) {
    ++d;
    ++col;
  }
  int dw = 0;
  while (col < header.size() && header[col] == "w" + std::to_string(dw + 1)) {
    ++dw;
    ++col;
  }
  if (d == 0) throw InputError("dataset header needs at least one regressor column x1");
  if (dw == 0) throw InputError("dataset header needs at least one instrument column w1");
  if (col != header.size())
    throw InputError("unexpected dataset column '" + header[col] + "'");

  std::vector<std::vector<double>> rows;
  long row_number = 1;  // header is row 1
  while (std::getline(in, line)) {
    ++row_number;
    if (line.empty() || line == "\r") continue;
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw InputError("row " + std::to_string(row_number) + ": expected " +
                       std::to_string(header.size()) + " cells, found " +
                       std::to_string(cells.size()));
    std::vector<double> vals(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c)
      vals[c] = parse_cell(cells[c], row_number, c);
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw InputError("dataset has no data rows");

  Dataset data;
  const auto n = static_cast<Eigen::Index>(rows.size());
  data.y.resize(n);
  data.x.resize(n, d);
  data.w.resize(n, dw);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& vals = rows[static_cast<size_t>(i)];
    data.y(i) = vals[0];
    for (int c = 0; c < d; ++c) data.x(i, c) = vals[static_cast<size_t>(1 + c)];
    for (int c = 0; c < dw; ++c) data.w(i, c) = vals[static_cast<size_t>(1 + d + c)];
  }
  return data;
}

void write_band_csv(const std::string& path, const UniformBand& band) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open output file: " + path);
  out << "t";
  for (Eigen::Index c = 1; c < band.points.cols(); ++c) out << ",t" << (c + 1);
  out << ",center,sd";
  for (double lv : band.levels) {
    const int pct = static_cast<int>(std::lround(lv * 100));
    out << ",lo" << pct << ",hi" << pct;
  }
  out << "\n";
  for (Eigen::Index g = 0; g < band.points.rows(); ++g) {
    for (Eigen::Index c = 0; c < band.points.cols(); ++c)
      out << (c ? "," : "") << format_double(band.points(g, c));
    out << "," << format_double(band.center(g)) << "," << format_double(band.sd(g));
    for (std::size_t li = 0; li < band.levels.size(); ++li)
      out << "," << format_double(band.lo(li, g)) << "," << format_double(band.hi(li, g));
    out << "\n";
  }
}

void write_table_csv(const std::string& path, const McTableResult& result) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open output file: " + path);
  out << "rep,failed,j_hat,j_max_hat,j_sup_oracle,j_l2_oracle,sup_err,l2_err,sup_ratio,l2_ratio\n";
  for (std::size_t r = 0; r < result.records.size(); ++r) {
    const McRepRecord& rec = result.records[r];
    out << r << "," << (rec.failed ? 1 : 0) << "," << rec.j_hat << "," << rec.j_max_hat << ","
        << rec.j_sup_oracle << "," << rec.j_l2_oracle << "," << format_double(rec.sup_err)
        << "," << format_double(rec.l2_err) << "," << format_double(rec.sup_ratio) << ","
        << format_double(rec.l2_ratio) << "\n";
  }
}

nlohmann::json to_json(const RunRecord& rec) {
  return nlohmann::json{{"command", rec.command}, {"config", rec.config},
                        {"summary", rec.summary}};
}

RunRecord run_record_from_json(const nlohmann::json& j) {
  RunRecord rec;
  rec.command = j.at("command").get<std::string>();
  rec.config = j.at("config");
  rec.summary = j.at("summary");
  return rec;
}

void write_run_record(const std::string& path, const RunRecord& rec) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open output file: " + path);
  out << to_json(rec).dump(2) << "\n";
}

}  // namespace npiv
