#include "scbf/records.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "scbf/errors.hpp"

namespace scbf {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr const char* kCsvHeader = "series,t,value,stderr\n";

// Inverse of format_number for values that went through JSON.
double read_number(const ordered_json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (s == "nan") return std::nan("");
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
  }
  throw Error("expected a number in record, got " + j.dump());
}

bool same_number(double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); }

void write_json(std::ostream& os, const ordered_json& j, int indent, int depth) {
  auto newline = [&](int d) {
    if (indent < 0) return;
    os << '\n' << std::string(std::size_t(indent * d), ' ');
  };
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        os << "{}";
        return;
      }
      os << '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) os << ',';
        first = false;
        newline(depth + 1);
        os << json(it.key()).dump() << (indent < 0 ? ":" : ": ");
        write_json(os, it.value(), indent, depth + 1);
      }
      newline(depth);
      os << '}';
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        os << "[]";
        return;
      }
      os << '[';
      bool first = true;
      for (const auto& e : j) {
        if (!first) os << ',';
        first = false;
        newline(depth + 1);
        write_json(os, e, indent, depth + 1);
      }
      newline(depth);
      os << ']';
      return;
    }
    case json::value_t::number_float: {
      double v = j.get<double>();
      if (std::isfinite(v))
        os << format_number(v);
      else
        os << '"' << format_number(v) << '"';
      return;
    }
    default:
      os << j.dump();
  }
}

void write_file(const std::filesystem::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error("cannot open " + file.string() + " for writing");
  out << text;
  if (!out) throw Error("write failed for " + file.string());
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s(buf);
  // keep a marker that this is a float so the JSON reader returns a double
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

std::string dump_json(const ordered_json& j, int indent) {
  std::ostringstream os;
  write_json(os, j, indent, 0);
  return os.str();
}

bool MetricsRecord::pass() const {
  for (const auto& v : verdicts)
    if (!v.pass) return false;
  return true;
}

ordered_json MetricsRecord::to_json() const {
  ordered_json j;
  j["experiment"] = experiment;
  j["command"] = command;
  ordered_json c = ordered_json::object();
  for (const auto& [k, v] : constants) c[k] = v;
  j["constants"] = c;
  ordered_json s = ordered_json::array();
  for (const auto& p : series) s.push_back({{"series", p.series}, {"t", p.t}, {"value", p.value}, {"stderr", p.stderr}});
  j["series"] = s;
  ordered_json vs = ordered_json::array();
  for (const auto& v : verdicts)
    vs.push_back({{"name", v.name}, {"pass", v.pass}, {"margin", v.margin}, {"detail", v.detail}});
  j["verdicts"] = vs;
  j["pass"] = pass();
  return j;
}

MetricsRecord MetricsRecord::from_json(const ordered_json& j) {
  MetricsRecord r;
  r.experiment = j.at("experiment");
  r.command = j.at("command");
  for (auto it = j.at("constants").begin(); it != j.at("constants").end(); ++it)
    r.constants.emplace_back(it.key(), read_number(it.value()));
  for (const auto& p : j.at("series"))
    r.series.push_back({p.at("series"), read_number(p.at("t")), read_number(p.at("value")), read_number(p.at("stderr"))});
  for (const auto& v : j.at("verdicts")) r.verdicts.push_back({v.at("name"), v.at("pass"), read_number(v.at("margin")), v.at("detail")});
  return r;
}

bool MetricsRecord::operator==(const MetricsRecord& o) const {
  if (experiment != o.experiment || command != o.command || verdicts.size() != o.verdicts.size() ||
      series.size() != o.series.size() || constants.size() != o.constants.size())
    return false;
  for (std::size_t i = 0; i < constants.size(); ++i)
    if (constants[i].first != o.constants[i].first || !same_number(constants[i].second, o.constants[i].second))
      return false;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto &a = series[i], &b = o.series[i];
    if (a.series != b.series || !same_number(a.t, b.t) || !same_number(a.value, b.value) ||
        !same_number(a.stderr, b.stderr))
      return false;
  }
  for (std::size_t i = 0; i < verdicts.size(); ++i) {
    const auto &a = verdicts[i], &b = o.verdicts[i];
    if (a.name != b.name || a.pass != b.pass || !same_number(a.margin, b.margin) || a.detail != b.detail) return false;
  }
  return true;
}

std::string records_csv(const MetricsRecord& r) {
  std::string out = kCsvHeader;
  for (const auto& p : r.series) {
    std::string name = p.series;
    if (name.find_first_of(",\"\n") != std::string::npos) {
      std::string q = "\"";
      for (char ch : name) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
      name = q + "\"";
    }
    out += name + "," + format_number(p.t) + "," + format_number(p.value) + "," + format_number(p.stderr) + "\n";
  }
  return out;
}

void emit_records(const std::vector<MetricsRecord>& records, const std::filesystem::path& dir,
                  const std::vector<std::string>& formats) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory " + dir.string() + ": " + ec.message());
  auto wants = [&](const char* f) {
    for (const auto& x : formats)
      if (x == f) return true;
    return false;
  };
  if (wants("csv")) {
    if (records.empty()) write_file(dir / "records.csv", kCsvHeader);
    for (const auto& r : records) write_file(dir / (r.experiment + ".csv"), records_csv(r));
  }
  if (wants("json")) {
    ordered_json arr = ordered_json::array();
    for (const auto& r : records) arr.push_back(r.to_json());
    write_file(dir / "records.json", dump_json(arr) + "\n");
  }
  ordered_json meta = ordered_json::array();
  for (const auto& r : records) meta.push_back({{"experiment", r.experiment}, {"wall_seconds", r.wall_seconds}});
  write_file(dir / "run_meta.json", dump_json(meta) + "\n");
}

std::vector<MetricsRecord> read_records_json(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error("cannot read " + file.string());
  std::vector<MetricsRecord> out;
  try {
    // ordered_json keeps the constants in file order
    ordered_json arr = ordered_json::parse(in);
    for (const auto& r : arr) out.push_back(MetricsRecord::from_json(r));
  } catch (const json::exception& e) {
    throw Error("malformed records file " + file.string() + ": " + e.what());
  }
  return out;
}

}  // namespace scbf
