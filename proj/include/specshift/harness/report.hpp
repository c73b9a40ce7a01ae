#pragma once

#include <nlohmann/json.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "specshift/format.hpp"
#include "specshift/harness/registry.hpp"
#include "specshift/verdict.hpp"

namespace specshift::harness {

struct CheckRecord {
  std::string tag;
  std::string fixture;
  double value = 0.0;
  double bound = 0.0;  // bound or oracle the value is held against
  Verdict verdict = Verdict::Info;
};

inline CheckRecord make_record(std::string tag, std::string fixture, double value, double bound, Verdict v) {
  lookup_tag(tag);
  return {std::move(tag), std::move(fixture), value, bound, v};
}

// value <= bound decides pass/fail.
inline CheckRecord bounded(std::string tag, std::string fixture, double value, double bound) {
  return make_record(std::move(tag), std::move(fixture), value, bound, check(value <= bound));
}

// A plot series: fixed header, numeric rows.
struct Series {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

struct Summary {
  std::size_t pass = 0, info = 0, fail = 0;
};

struct VerificationReport {
  std::string name;
  std::vector<CheckRecord> records;
  std::map<std::string, Series> series;
  std::map<std::string, std::pair<double, std::size_t>> constants;
  nlohmann::json metadata = nlohmann::json::object();

  void add(CheckRecord r) { records.push_back(std::move(r)); }
  void append(const VerificationReport& o) {
    records.insert(records.end(), o.records.begin(), o.records.end());
    for (const auto& [k, s] : o.series) {
      auto& mine = series[k];
      if (mine.header.empty()) mine.header = s.header;
      mine.rows.insert(mine.rows.end(), s.rows.begin(), s.rows.end());
    }
  }

  Summary summary() const {
    Summary s;
    for (const auto& r : records) {
      if (r.verdict == Verdict::Pass) ++s.pass;
      else if (r.verdict == Verdict::Info) ++s.info;
      else ++s.fail;
    }
    return s;
  }
  bool ok() const { return summary().fail == 0; }
};

inline std::string csv_body(const VerificationReport& r) {
  std::string s = "tag,fixture,value,bound,verdict\n";
  for (const auto& c : r.records) {
    s += c.tag + ',' + c.fixture + ',' + format_double(c.value) + ',' + format_double(c.bound) + ',' +
         to_string(c.verdict) + '\n';
  }
  return s;
}

inline std::string series_csv(const Series& s) {
  std::string out;
  for (std::size_t i = 0; i < s.header.size(); ++i) out += (i ? "," : "") + s.header[i];
  out += '\n';
  for (const auto& row : s.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + format_double(row[i]);
    out += '\n';
  }
  return out;
}

inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline nlohmann::json sidecar(const VerificationReport& r) {
  const auto s = r.summary();
  nlohmann::json j = r.metadata;
  j["report"] = r.name;
  j["written_at"] = utc_timestamp();
  j["summary"] = {{"pass", s.pass}, {"info", s.info}, {"fail", s.fail}};
  auto c = nlohmann::json::object();
  for (const auto& [k, v] : r.constants) c[k] = {{"supremum", v.first}, {"samples", v.second}};
  j["constants"] = c;
  auto kinds = nlohmann::json::array();
  for (const auto& [k, _] : r.series) kinds.push_back(k);
  j["series"] = kinds;
  return j;
}

// <dir>/<name>.csv and the <dir>/<name>.json sidecar. Timestamps go only in the sidecar.
inline std::filesystem::path write_report(const VerificationReport& r, const std::filesystem::path& dir) {
  const auto csv = dir / (r.name + ".csv");
  write_atomic(csv, csv_body(r));
  write_atomic(dir / (r.name + ".json"), sidecar(r).dump(2) + "\n");
  return csv;
}

// kind: ssf -> (lambda, eta); bound-margin -> (fixture, abs_trace, bound);
// growth -> (x, abs_eta, envelope); bump -> (x, phi).
inline std::filesystem::path emit_plotdata(const VerificationReport& r, const std::string& kind,
                                           const std::filesystem::path& dir) {
  auto it = r.series.find(kind);
  if (it == r.series.end()) throw std::out_of_range("report '" + r.name + "' has no series '" + kind + "'");
  const auto path = dir / (r.name + "." + kind + ".csv");
  write_atomic(path, series_csv(it->second));
  return path;
}

inline void emit_all_plotdata(const VerificationReport& r, const std::filesystem::path& dir) {
  for (const auto& [k, _] : r.series) emit_plotdata(r, k, dir);
}

}  // namespace specshift::harness
