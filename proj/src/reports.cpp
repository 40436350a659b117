#include "activeseg/reports.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <map>
#include <sstream>

#include "activeseg/error.hpp"

namespace activeseg {

std::string format_real(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

namespace {

std::string metric_cell(const MetricSet& m, Metric metric) {
    double v = 0.0;
    return metric_value(m, metric, v) ? format_real(v) : "NA";
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        out.push_back(line.substr(start, comma - start));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

double parse_double(const std::string& s, const std::string& where) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) throw ParseError(where, "not a number: '" + s + "'");
    return v;
}

unsigned parse_flags(const std::string& s, const std::string& where) {
    unsigned flags = 0;
    if (s.empty()) return flags;
    for (const std::string& f : [&] {
             std::vector<std::string> parts;
             std::stringstream in(s);
             std::string p;
             while (std::getline(in, p, '|')) parts.push_back(p);
             return parts;
         }()) {
        if (f == "rve") flags |= rve_undefined;
        else if (f == "msd") flags |= msd_undefined;
        else if (f == "hd") flags |= hd_undefined;
        else throw ParseError(where, "unknown flag '" + f + "'");
    }
    return flags;
}

bool is_converged(const std::string& strategy) {
    static const std::string suffix = "_converged";
    return strategy.size() > suffix.size() && strategy.compare(strategy.size() - suffix.size(), suffix.size(), suffix) == 0;
}

} // namespace

std::string cases_csv(const std::vector<CaseRow>& rows) {
    std::string out = std::string(cases_csv_header) + "\n";
    for (const CaseRow& r : rows) {
        out += r.case_id + "," + r.strategy + "," + std::to_string(r.iteration);
        for (Metric m : all_metrics) out += "," + metric_cell(r.metrics, m);
        out += "," + r.metrics.flag_string() + "\n";
    }
    return out;
}

std::vector<CaseRow> parse_cases_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != cases_csv_header) throw ParseError("line 1", "expected header " + std::string(cases_csv_header));
    std::vector<CaseRow> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::string where = "line " + std::to_string(lineno);
        const auto cells = split_line(line);
        if (cells.size() != 8) throw ParseError(where, "expected 8 columns");
        CaseRow r;
        r.case_id = cells[0];
        r.strategy = cells[1];
        if (r.case_id.empty() || r.strategy.empty()) throw ParseError(where, "empty case id or strategy");
        const auto [ptr, ec] = std::from_chars(cells[2].data(), cells[2].data() + cells[2].size(), r.iteration);
        if (ec != std::errc() || ptr != cells[2].data() + cells[2].size() || cells[2].empty())
            throw ParseError(where + " iteration", "not an integer");
        r.metrics.undefined = parse_flags(cells[7], where + " undefined_flags");
        r.metrics.dice = parse_double(cells[3], where + " dice");
        const std::pair<double*, MetricFlag> rest[] = {
            {&r.metrics.rve, rve_undefined}, {&r.metrics.msd, msd_undefined}, {&r.metrics.hd, hd_undefined}};
        for (std::size_t c = 0; c < 3; ++c) {
            const std::string& cell = cells[4 + c];
            const std::string col = where + " " + metric_name(all_metrics[c + 1]);
            if (r.metrics.defined(rest[c].second)) {
                *rest[c].first = parse_double(cell, col);
            } else if (cell != "NA") {
                throw ParseError(col, "flagged undefined but holds a value");
            }
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

std::vector<SummaryRow> summarize_cases(const std::vector<CaseRow>& rows) {
    // Strategies in first-appearance order within each comparison group.
    using GroupKey = std::pair<std::size_t, bool>;
    std::vector<std::pair<std::string, std::size_t>> order;
    std::map<std::pair<std::string, std::size_t>, std::vector<const CaseRow*>> by_arm;
    for (const CaseRow& r : rows) {
        const auto key = std::make_pair(r.strategy, r.iteration);
        if (!by_arm.count(key)) order.push_back(key);
        by_arm[key].push_back(&r);
    }

    std::vector<SummaryRow> out;
    for (const auto& key : order) {
        const GroupKey group{key.second, is_converged(key.first)};
        for (Metric m : all_metrics) {
            // Per-case values of every strategy in the group for this metric.
            auto values_of = [&](const std::pair<std::string, std::size_t>& arm) {
                std::map<std::string, double> vals;
                for (const CaseRow* r : by_arm.at(arm)) {
                    double v = 0.0;
                    if (metric_value(r->metrics, m, v)) vals[r->case_id] = v;
                }
                return vals;
            };
            auto mean_of = [](const std::map<std::string, double>& vals) {
                double s = 0.0;
                for (const auto& [_, v] : vals) s += v;
                return s / static_cast<double>(vals.size());
            };

            std::optional<std::pair<std::string, std::size_t>> best;
            double best_mean = 0.0;
            for (const auto& other : order) {
                if (GroupKey{other.second, is_converged(other.first)} != group) continue;
                const auto vals = values_of(other);
                if (vals.empty()) continue;
                const double mean = mean_of(vals);
                const bool better = !best || (m == Metric::dice ? mean > best_mean : mean < best_mean) ||
                                    (mean == best_mean && other.first < best->first);
                if (better) {
                    best = other;
                    best_mean = mean;
                }
            }

            SummaryRow row;
            row.strategy = key.first;
            row.iteration = key.second;
            row.metric = m;
            const auto mine = values_of(key);
            row.excluded = by_arm.at(key).size() - mine.size();
            if (!mine.empty()) {
                std::vector<double> v;
                for (const auto& [_, x] : mine) v.push_back(x);
                row.summary = summarize_values(v, row.excluded);
            }
            if (best && *best != key && !mine.empty()) {
                const auto theirs = values_of(*best);
                std::vector<double> a, b;
                for (const auto& [id, x] : mine) {
                    const auto it = theirs.find(id);
                    if (it == theirs.end()) continue;
                    a.push_back(x);
                    b.push_back(it->second);
                }
                try {
                    row.p_value_vs_best = wilcoxon_signed_rank(a, b).p_value;
                } catch (const InsufficientDataError&) {
                }
            }
            out.push_back(std::move(row));
        }
    }
    return out;
}

std::string summary_csv(const std::vector<SummaryRow>& rows) {
    std::string out = std::string(summary_csv_header) + "\n";
    for (const SummaryRow& r : rows) {
        out += r.strategy + "," + std::to_string(r.iteration) + "," + metric_name(r.metric) + ",";
        if (r.summary) {
            const double tail = r.metric == Metric::dice ? r.summary->p05 : r.summary->p95;
            out += format_real(r.summary->mean) + "," + format_real(r.summary->sd) + "," + format_real(tail) + ",";
        } else {
            out += "NA,NA,NA,";
        }
        out += (r.p_value_vs_best ? format_real(*r.p_value_vs_best) : std::string("NA")) + ",";
        out += std::to_string(r.summary ? r.summary->count : 0) + "," + std::to_string(r.excluded) + "\n";
    }
    return out;
}

} // namespace activeseg
