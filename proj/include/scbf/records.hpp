#pragma once

// Result records and their CSV / JSON emission. Numbers are written with 17 significant
// digits so every emitted value re-reads to the same double.

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace scbf {

struct SeriesPoint {
  std::string series;
  double t = 0.0;
  double value = 0.0;
  double stderr = 0.0;
  bool operator==(const SeriesPoint&) const = default;
};

struct Verdict {
  std::string name;
  bool pass = false;
  double margin = 0.0;  // positive = slack, negative = shortfall
  std::string detail;
  bool operator==(const Verdict&) const = default;
};

struct MetricsRecord {
  std::string experiment;
  std::string command;
  std::vector<SeriesPoint> series;
  std::vector<std::pair<std::string, double>> constants;  // emission order = insertion order
  std::vector<Verdict> verdicts;
  double wall_seconds = 0.0;  // kept out of the metric files so they stay reproducible

  void add(const std::string& series_name, double t, double value, double se = 0.0) {
    series.push_back({series_name, t, value, se});
  }
  void constant(const std::string& name, double v) { constants.emplace_back(name, v); }
  void verdict(const std::string& name, bool pass, double margin, const std::string& detail = "") {
    verdicts.push_back({name, pass, margin, detail});
  }
  bool pass() const;

  nlohmann::ordered_json to_json() const;
  static MetricsRecord from_json(const nlohmann::ordered_json& j);
  /// Compares everything except wall-clock time.
  bool operator==(const MetricsRecord& o) const;
};

/// %.17g; non-finite values become "nan", "inf", "-inf".
std::string format_number(double v);
/// JSON text with every number at 17 significant digits (non-finite numbers as strings).
std::string dump_json(const nlohmann::ordered_json& j, int indent = 1);

std::string records_csv(const MetricsRecord& r);

/// Writes <experiment>.csv per record (records.csv with only the header when there are none),
/// records.json (array) and run_meta.json (wall-clock data). Throws Error naming the path on IO failure.
void emit_records(const std::vector<MetricsRecord>& records, const std::filesystem::path& dir,
                  const std::vector<std::string>& formats);
std::vector<MetricsRecord> read_records_json(const std::filesystem::path& file);

}  // namespace scbf
