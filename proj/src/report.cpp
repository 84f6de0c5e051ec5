#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <tuple>

#include "simo/montecarlo.hpp"

namespace simo {

namespace {

constexpr const char* kHeader = "ebn0_db,metric,path,value,trials,seed";

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& field, const std::string& context) {
  char* end = nullptr;
  const double v = std::strtod(field.c_str(), &end);
  if (field.empty() || end != field.c_str() + field.size()) {
    throw std::runtime_error(context + ": bad number '" + field + "'");
  }
  return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

}  // namespace

void SimulationReport::sort() {
  std::stable_sort(rows.begin(), rows.end(), [](const ReportRow& a, const ReportRow& b) {
    // nullopt compares below any path index
    return std::tie(a.ebn0_db, a.metric, a.path) < std::tie(b.ebn0_db, b.metric, b.path);
  });
}

std::optional<double> SimulationReport::value(double ebn0_db, const std::string& metric,
                                              std::optional<int> path) const {
  for (const auto& r : rows) {
    if (r.ebn0_db == ebn0_db && r.metric == metric && r.path == path) return r.value;
  }
  return std::nullopt;
}

bool SimulationReport::has_failure_flag() const {
  return std::any_of(rows.begin(), rows.end(), [](const ReportRow& r) { return r.metric == metric::kFailureFlag; });
}

void write_report_csv(const SimulationReport& report, const std::filesystem::path& path) {
  SimulationReport sorted = report;
  sorted.sort();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << kHeader << '\n';
  for (const auto& r : sorted.rows) {
    out << format_double(r.ebn0_db) << ',' << r.metric << ',' << (r.path ? std::to_string(*r.path) : "") << ','
        << format_double(r.value) << ',' << r.trials << ',' << r.seed << '\n';
  }
  out.flush();
  if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
}

SimulationReport read_report_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line) || line != kHeader) {
    throw std::runtime_error(path.string() + ": missing or unexpected header");
  }
  SimulationReport report;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string ctx = path.string() + ":" + std::to_string(lineno);
    const auto f = split(line, ',');
    if (f.size() != 6) throw std::runtime_error(ctx + ": expected 6 fields");
    ReportRow r;
    r.ebn0_db = parse_double(f[0], ctx);
    r.metric = f[1];
    if (!f[2].empty()) r.path = static_cast<int>(parse_double(f[2], ctx));
    r.value = parse_double(f[3], ctx);
    r.trials = std::stol(f[4]);
    r.seed = std::stoull(f[5]);
    report.rows.push_back(std::move(r));
  }
  return report;
}

std::vector<double> parse_ebn0_range(const std::string& text) {
  const auto bad = [&] { return ConfigError("invalid Eb/N0 specification '" + text + "'"); };
  const auto num = [&](const std::string& s) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || std::isnan(v)) throw bad();
    return v;
  };

  if (text.find(':') != std::string::npos) {
    const auto parts = split(text, ':');
    if (parts.size() != 3) throw bad();
    const double start = num(parts[0]);
    const double step = num(parts[1]);
    const double stop = num(parts[2]);
    if (!std::isfinite(start) || !std::isfinite(stop) || !(step > 0) || stop < start) throw bad();
    std::vector<double> out;
    const auto n = static_cast<long>(std::floor((stop - start) / step + 1e-9));
    for (long i = 0; i <= n; ++i) out.push_back(start + static_cast<double>(i) * step);
    return out;
  }
  std::vector<double> out;
  for (const auto& s : split(text, ',')) out.push_back(num(s));
  if (out.empty()) throw bad();
  return out;
}

}  // namespace simo
