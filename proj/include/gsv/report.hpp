#pragma once

// Serialization of replication rows (raw.csv) and the summary table
// (summary.md, summary.csv).
//
// raw.csv header:
//   method,scenario,rep,abstained,failed,feasible,objective,test_cvar,
//   robust_lhs,delta_selected,norm2,outcome,runtime_seconds
// summary.csv header:
//   method,scenario,reps,selected,abstained,failed,feasibility,objective,
//   test_cvar,robust_lhs,delta,runtime_median_s,abstention_rate
//
// Reals are written with 17 significant digits in CSV and 4 in markdown;
// quantities that are undefined (abstained rows, empty aggregates) are empty
// CSV fields and "n/a" in markdown.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gsv/bench.hpp"

namespace gsv {

enum class ReportFormat { markdown, csv };

ReportFormat parse_report_format(std::string_view name);

void write_raw_csv(std::ostream& out, const std::vector<ReplicationResult>& rows);
std::vector<ReplicationResult> read_raw_csv(std::istream& in);

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& summary);
std::vector<SummaryRow> read_summary_csv(std::istream& in);

/// Columns: Method, Scenario, Feas., Obj., CVaR, LHS, δ, Runtime (s),
/// Abst., R. One table per scenario.
void write_summary_markdown(std::ostream& out, const std::vector<SummaryRow>& summary,
                            std::optional<double> gamma);

/// The cell text used for a real in markdown.
std::string markdown_number(double v);

/// Writes summary.md or summary.csv under `dir`. Throws before touching the
/// filesystem if the summary is empty.
std::filesystem::path emit_report(const std::filesystem::path& dir, const std::vector<SummaryRow>& summary,
                                  ReportFormat format, std::optional<double> gamma);

}  // namespace gsv
