#include "gsv/report.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace gsv {
namespace {

constexpr const char* kRawHeader =
    "method,scenario,rep,abstained,failed,feasible,objective,test_cvar,robust_lhs,delta_selected,norm2,"
    "outcome,runtime_seconds";
constexpr const char* kSummaryHeader =
    "method,scenario,reps,selected,abstained,failed,feasibility,objective,test_cvar,robust_lhs,delta,"
    "runtime_median_s,abstention_rate";

std::string csv_number(double v) { return std::isnan(v) ? std::string() : fmt::format("{:.17g}", v); }

double parse_number(const std::string& s) {
  if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument("CSV: malformed number '" + s + "'");
  return v;
}

std::size_t parse_count(const std::string& s) {
  std::size_t used = 0;
  const unsigned long long v = std::stoull(s, &used);
  if (used != s.size()) throw std::invalid_argument("CSV: malformed integer '" + s + "'");
  return static_cast<std::size_t>(v);
}

bool parse_flag(const std::string& s) {
  if (s == "1") return true;
  if (s == "0") return false;
  throw std::invalid_argument("CSV: expected 0 or 1, got '" + s + "'");
}

// Free text goes into a single unquoted field.
std::string sanitize(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return s;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::vector<std::vector<std::string>> read_table(std::istream& in, const char* header, std::size_t width) {
  std::string line;
  if (!std::getline(in, line) || line != header) throw std::invalid_argument("CSV: unexpected header");
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != width) throw std::invalid_argument("CSV: wrong field count in '" + line + "'");
    rows.push_back(std::move(cells));
  }
  return rows;
}

}  // namespace

ReportFormat parse_report_format(std::string_view name) {
  if (name == "markdown" || name == "md") return ReportFormat::markdown;
  if (name == "csv") return ReportFormat::csv;
  throw std::invalid_argument("unknown report format '" + std::string(name) + "'");
}

void write_raw_csv(std::ostream& out, const std::vector<ReplicationResult>& rows) {
  out << kRawHeader << '\n';
  for (const auto& r : rows)
    out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{:.17g}\n", method_name(r.method), r.scenario, r.rep,
                       r.abstained ? 1 : 0, r.failed ? 1 : 0, r.feasible ? 1 : 0, csv_number(r.objective),
                       csv_number(r.test_cvar), csv_number(r.robust_lhs), csv_number(r.delta_selected),
                       csv_number(r.norm2), sanitize(r.outcome), r.runtime_seconds);
}

std::vector<ReplicationResult> read_raw_csv(std::istream& in) {
  std::vector<ReplicationResult> out;
  for (const auto& c : read_table(in, kRawHeader, 13)) {
    ReplicationResult r;
    r.method = parse_method(c[0]);
    r.scenario = static_cast<int>(parse_count(c[1]));
    r.rep = parse_count(c[2]);
    r.abstained = parse_flag(c[3]);
    r.failed = parse_flag(c[4]);
    r.feasible = parse_flag(c[5]);
    r.objective = parse_number(c[6]);
    r.test_cvar = parse_number(c[7]);
    r.robust_lhs = parse_number(c[8]);
    r.delta_selected = parse_number(c[9]);
    r.norm2 = parse_number(c[10]);
    r.outcome = c[11];
    r.runtime_seconds = parse_number(c[12]);
    out.push_back(std::move(r));
  }
  return out;
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& summary) {
  out << kSummaryHeader << '\n';
  for (const auto& s : summary)
    out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{}\n", method_name(s.method), s.scenario, s.reps,
                       s.selected, s.abstained, s.failed, csv_number(s.feasibility), csv_number(s.objective),
                       csv_number(s.test_cvar), csv_number(s.robust_lhs), csv_number(s.delta),
                       csv_number(s.runtime_median), csv_number(s.abstention_rate));
}

std::vector<SummaryRow> read_summary_csv(std::istream& in) {
  std::vector<SummaryRow> out;
  for (const auto& c : read_table(in, kSummaryHeader, 13)) {
    SummaryRow s;
    s.method = parse_method(c[0]);
    s.scenario = static_cast<int>(parse_count(c[1]));
    s.reps = parse_count(c[2]);
    s.selected = parse_count(c[3]);
    s.abstained = parse_count(c[4]);
    s.failed = parse_count(c[5]);
    s.feasibility = parse_number(c[6]);
    s.objective = parse_number(c[7]);
    s.test_cvar = parse_number(c[8]);
    s.robust_lhs = parse_number(c[9]);
    s.delta = parse_number(c[10]);
    s.runtime_median = parse_number(c[11]);
    s.abstention_rate = parse_number(c[12]);
    out.push_back(s);
  }
  return out;
}

std::string markdown_number(double v) { return std::isnan(v) ? std::string("n/a") : fmt::format("{:.4g}", v); }

void write_summary_markdown(std::ostream& out, const std::vector<SummaryRow>& summary,
                            std::optional<double> gamma) {
  if (summary.empty()) throw std::invalid_argument("summary is empty");
  out << "# Benchmark summary\n\n";
  if (gamma) out << fmt::format("Risk budget gamma = {}\n\n", markdown_number(*gamma));
  out << "Means over replications that selected a portfolio; runtime is the median over all completed "
         "replications.\n";
  for (int scenario : {1, 2}) {
    bool any = false;
    for (const auto& s : summary) any = any || s.scenario == scenario;
    if (!any) continue;
    out << fmt::format("\n## Scenario {} ({})\n\n", scenario, scenario == 1 ? "no shift" : "shift");
    out << "| Method | Scenario | Feas. | Obj. | CVaR | LHS | δ | Runtime (s) | Abst. | R |\n";
    out << "|---|---|---|---|---|---|---|---|---|---|\n";
    for (const auto& s : summary) {
      if (s.scenario != scenario) continue;
      out << fmt::format("| {} | {} | {} | {} | {} | {} | {} | {} | {} | {} |\n", method_display(s.method),
                         s.scenario, markdown_number(s.feasibility), markdown_number(s.objective),
                         markdown_number(s.test_cvar), markdown_number(s.robust_lhs), markdown_number(s.delta),
                         markdown_number(s.runtime_median), markdown_number(s.abstention_rate), s.reps);
    }
  }
  std::size_t failed = 0;
  for (const auto& s : summary) failed += s.failed;
  if (failed) out << fmt::format("\n{} failed replication(s) excluded.\n", failed);
}

std::filesystem::path emit_report(const std::filesystem::path& dir, const std::vector<SummaryRow>& summary,
                                  ReportFormat format, std::optional<double> gamma) {
  if (summary.empty()) throw std::invalid_argument("summary is empty; nothing to report");
  std::filesystem::create_directories(dir);
  const auto path = dir / (format == ReportFormat::markdown ? "summary.md" : "summary.csv");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  if (format == ReportFormat::markdown) write_summary_markdown(out, summary, gamma);
  else write_summary_csv(out, summary);
  out.flush();
  if (!out) throw std::runtime_error("write failed for " + path.string());
  return path;
}

}  // namespace gsv
