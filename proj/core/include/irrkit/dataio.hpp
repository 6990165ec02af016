#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "irrkit/agreement.hpp"
#include "irrkit/assessment.hpp"
#include "irrkit/evalmetrics.hpp"
#include "irrkit/reliability.hpp"

namespace irrkit::dataio {

// Input error carrying the source name and a 1-based line number (0 when the
// error is not tied to a single line).
class ParseError : public std::runtime_error {
public:
    ParseError(std::string source, std::size_t line, const std::string& message);
    const std::string& source() const noexcept { return source_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::string source_;
    std::size_t line_;
};

enum class Format { csv, json, markdown };
std::optional<Format> format_from_string(std::string_view text);
std::string_view to_string(Format format);

// ----- parsers -----

// Tab-separated with header `session	topic	assessor	doc	relevance`;
// one judgment per line. Duplicate (session, topic, assessor, doc) cells and
// malformed lines raise ParseError. Categories are the union of observed
// labels and {0, 1}, shared by every set of the dataset.
Dataset parse_assessments(std::istream& in, const std::string& source = "<stream>");

// Six-column TREC convention `topic Q0 doc rank score tag`, whitespace
// separated; the Q0 column is accepted and ignored. Ranks per (tag, topic)
// must form 1..m.
std::vector<evalmetrics::RankedRun> parse_runs(std::istream& in,
                                               const std::string& source = "<stream>");

struct TopicEntry {
    std::string id;
    std::string title;
    std::string description;
};
// Tab-separated with header `id	title	description`; unique ids.
std::vector<TopicEntry> parse_topics(std::istream& in, const std::string& source = "<stream>");

// Tab-separated with header `session	service`.
SessionServices parse_availability(std::istream& in, const std::string& source = "<stream>");

// Pre-scored agreement records. Accepts either the JSON written by
// write_agreement_records or a tab-separated replay file with header
// `session	topic	n	alpha	kappa` where `NA` marks an unreported value.
std::vector<agreement::AgreementRecord> parse_agreement(std::istream& in,
                                                        const std::string& source = "<stream>");

evalmetrics::PrecisionReport parse_precision_report(std::istream& in,
                                                    const std::string& source = "<stream>");
reliability::FilterOutcome parse_filter_outcome(std::istream& in,
                                                const std::string& source = "<stream>");
reliability::CleaningOutcome parse_cleaning_log(std::istream& in,
                                                const std::string& source = "<stream>");
reliability::StudyReport parse_study_json(std::istream& in,
                                          const std::string& source = "<stream>");

// ----- writers -----

// Inverse of parse_assessments; rows sorted by (session, topic), assessor
// order, document order.
void write_assessments(const Dataset& dataset, std::ostream& out);

void write_agreement_records(std::span<const agreement::AgreementRecord> records,
                             Format format, std::ostream& out);
void write_filter_outcome(const reliability::FilterOutcome& outcome,
                          const SessionServices& availability,
                          Format format, std::ostream& out);
void write_cleaning_log(const reliability::CleaningOutcome& outcome, std::ostream& out);
void write_precision_report(const evalmetrics::PrecisionReport& report,
                            Format format, std::ostream& out);

struct RmsReport {
    int k = 10;
    std::string original_variant;
    std::string filtered_variant;
    std::map<std::string, std::optional<double>> per_service;
    std::vector<std::string> services;  // column order
};
RmsReport make_rms_report(const evalmetrics::PrecisionReport& original,
                          const evalmetrics::PrecisionReport& filtered);
void write_rms_report(const RmsReport& report, Format format, std::ostream& out);

// Renders the composite study: agreement grid with marginal averages,
// correlations, precision grids with avg/RMS rows. Markdown shows display
// rounding (3 decimals for agreement, 2 for precision); CSV and JSON carry
// full precision, and JSON adds reason codes and the thresholds used.
void write_study(const reliability::StudyReport& report, Format format, std::ostream& out,
                 std::span<const TopicEntry> topic_legend = {});

// ----- display formatting -----

// Half-away-from-zero at `decimals` after snapping binary noise at 1e-12;
// magnitudes below one drop the leading zero (".535", "-.018").
std::string format_score(double value, int decimals);
// Same rounding, leading zero kept ("7.5", "0.500").
std::string format_decimal(double value, int decimals);
// Shortest decimal form that parses back to exactly the same double.
std::string format_full(double value);

}  // namespace irrkit::dataio
