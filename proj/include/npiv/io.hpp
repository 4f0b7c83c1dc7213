#pragma once

#include <json.hpp>

#include <string>

#include "npiv/estimator.hpp"
#include "npiv/inference.hpp"
#include "npiv/mc.hpp"

namespace npiv {

// Loads a dataset from CSV with header y, x1..xd, w1..wdw (in that order).
// Non-numeric or non-finite cells are rejected with the offending row number.
Dataset load_csv(const std::string& path);

// Band table: t (one column per coordinate), center, sd, then lo/hi columns
// per level.
void write_band_csv(const std::string& path, const UniformBand& band);

// Per-replication records of a selection-quality run.
void write_table_csv(const std::string& path, const McTableResult& result);

// A run record ties a command name and its configuration to the summary it
// produced, for reproducibility. JSON round-trips losslessly.
struct RunRecord {
  std::string command;
  nlohmann::json config;
  nlohmann::json summary;
};

nlohmann::json to_json(const RunRecord& rec);
RunRecord run_record_from_json(const nlohmann::json& j);
void write_run_record(const std::string& path, const RunRecord& rec);

// Full-precision decimal formatting used by every CSV writer (round-trips
// doubles exactly, so identical runs produce identical bytes).
std::string format_double(double v);

}  // namespace npiv
