#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "irrkit/agreement.hpp"
#include "irrkit/assessment.hpp"
#include "irrkit/evalmetrics.hpp"

namespace irrkit::reliability {

struct ReliabilityThresholds {
    double kappa_min = 0.4;
    double alpha_min = 0.1;
    double max_missing_rate = 0.05;
    int pool_depth = 10;
};

enum class Measure { kappa, alpha };
std::string_view to_string(Measure measure);
std::optional<Measure> measure_from_string(std::string_view text);

enum class DropReason { below_threshold, undefined_score };
std::string_view to_string(DropReason reason);

// ----- assessor cleaning -----

struct AssessorDrop {
    SetKey set;
    std::string assessor;
    double missing_rate = 0.0;
};

struct CleaningOutcome {
    Dataset cleaned;
    std::vector<AssessorDrop> dropped_assessors;
    std::vector<SetKey> emptied_sets;  // sets that lost every assessor
    double max_missing_rate = 0.05;
    int pool_depth = 10;
};

// Pool per (session, topic): the pooled documents of the runs whose service
// is available in the session. Throws std::invalid_argument when a set's
// topic has no contributing run at all.
std::map<SetKey, evalmetrics::PooledList> pools_for(const Dataset& dataset,
                                                    std::span<const evalmetrics::RankedRun> runs,
                                                    const SessionServices& availability,
                                                    int pool_depth);

// Drops an assessor iff missing cells / pool size strictly exceeds
// max_missing_rate. Missing cells are pool documents the assessor left
// unjudged. Throws std::invalid_argument when a set has no pool.
CleaningOutcome clean_assessors(const Dataset& dataset,
                                const std::map<SetKey, evalmetrics::PooledList>& pools,
                                double max_missing_rate);

// ----- threshold filtering -----

struct FilterOutcome {
    Measure measure = Measure::kappa;
    double threshold = 0.0;
    std::vector<SetKey> kept;
    struct DroppedSet {
        SetKey key;
        DropReason reason = DropReason::below_threshold;
    };
    std::vector<DroppedSet> dropped;
};

// Keeps a set iff the chosen measure is defined and >= threshold; undefined
// scores drop with reason undefined_score.
FilterOutcome filter_sets(std::span<const agreement::AgreementRecord> records,
                          Measure measure, double threshold);

// (topic, service) cells that keep at least one contributing session after a
// filter: a cell survives iff some kept (session, topic) has the service
// available.
std::set<std::pair<std::string, std::string>> surviving_cells(
    std::span<const SetKey> kept,
    std::span<const std::string> services,
    const SessionServices& availability);

// ----- agreement aggregation (per-session / per-topic grid) -----

// Topic x session grid of agreement records with marginal averages.
struct AgreementTable {
    std::vector<std::string> sessions;  // ascending
    std::vector<std::string> topics;    // natural ascending
    std::map<SetKey, agreement::AgreementRecord> cells;

    struct Averages {
        std::optional<double> n;
        std::optional<double> alpha;
        std::optional<double> kappa;
    };
    // Means over defined entries only; absent when nothing is defined.
    Averages session_average(const std::string& session) const;
    Averages topic_average(const std::string& topic) const;
    Averages overall_average() const;  // grand mean over all cells
};

AgreementTable make_agreement_table(std::span<const agreement::AgreementRecord> records);

// Pearson kappa-vs-alpha, per session (over that session's topics) and on
// the per-topic average columns.
struct CorrelationSet {
    std::map<std::string, agreement::ScoreResult> per_session;
    agreement::ScoreResult averages =
        agreement::ScoreResult::undefined(agreement::UndefinedReason::no_pairable_values);
};
CorrelationSet kappa_alpha_correlations(const AgreementTable& table);

// ----- end-to-end study -----

struct StudyOptions {
    ReliabilityThresholds thresholds;
    int k = 10;
    bool use_kappa = true;
    bool use_alpha = true;
};

struct StudyReport {
    ReliabilityThresholds thresholds;
    int k = 10;
    std::vector<AssessorDrop> dropped_assessors;
    std::vector<SetKey> emptied_sets;
    std::vector<agreement::AgreementRecord> records;  // sorted by key
    CorrelationSet correlations;
    std::optional<FilterOutcome> kappa_filter;
    std::optional<FilterOutcome> alpha_filter;
    evalmetrics::PrecisionReport unfiltered;
    std::optional<evalmetrics::PrecisionReport> kappa_filtered;
    std::optional<evalmetrics::PrecisionReport> alpha_filtered;
    std::map<std::string, std::optional<double>> rms_kappa;  // per service
    std::map<std::string, std::optional<double>> rms_alpha;
};

// Cleaning, scoring, filtering, precision grids and RMS rows in one pass.
// Deterministic: identical inputs produce identical reports.
StudyReport run_study(const Dataset& assessments,
                      std::span<const evalmetrics::RankedRun> runs,
                      const SessionServices& availability,
                      const StudyOptions& options);

}  // namespace irrkit::reliability
