#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "activeseg/metrics.hpp"

namespace activeseg {

/// One evaluated test case.
struct CaseRow {
    std::string case_id;
    std::string strategy;
    std::size_t iteration = 0;
    MetricSet metrics;
};

/// Shortest text that reads back to the same double (%.17g).
std::string format_real(double x);

inline constexpr const char* cases_csv_header = "case_id,strategy,iteration,dice,rve_pct,msd_mm,hd_mm,undefined_flags";
inline constexpr const char* summary_csv_header =
    "strategy,iteration,metric,mean,sd,p05_or_p95,p_value_vs_best,n,excluded";

std::string cases_csv(const std::vector<CaseRow>& rows);
/// Throws ParseError naming the line and column on malformed input.
std::vector<CaseRow> parse_cases_csv(const std::string& text);

struct SummaryRow {
    std::string strategy;
    std::size_t iteration = 0;
    Metric metric = Metric::dice;
    std::optional<MetricSummary> summary; // empty when no case had the metric defined
    std::size_t excluded = 0;
    std::optional<double> p_value_vs_best;
};

/// Rows sharing an iteration (and the same converged/iteration-capped phase,
/// marked by a "_converged" strategy suffix) are compared with each other.
/// The best strategy per metric has the highest mean Dice or the lowest mean
/// of the other metrics (ties: lexicographically first name); every other
/// strategy gets a paired Wilcoxon p-value against it over the cases where
/// both have the metric defined. The best row itself, and comparisons with
/// too few pairs, carry no p-value.
std::vector<SummaryRow> summarize_cases(const std::vector<CaseRow>& rows);
std::string summary_csv(const std::vector<SummaryRow>& rows);

} // namespace activeseg
