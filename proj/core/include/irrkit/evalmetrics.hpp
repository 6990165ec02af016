#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "irrkit/assessment.hpp"

namespace irrkit::evalmetrics {

struct RunEntry {
    std::string doc;
    int rank = 0;
    double score = 0.0;
};

// One service's ordered result list for a topic (TREC-style run).
class RankedRun {
public:
    // Entries must carry contiguous ranks 1..m and duplicate-free documents;
    // throws std::invalid_argument otherwise. Entries may be given in any
    // order and are stored sorted by rank.
    RankedRun(std::string service, std::string topic, std::vector<RunEntry> ranking);

    const std::string& service() const noexcept { return service_; }
    const std::string& topic() const noexcept { return topic_; }
    const std::vector<RunEntry>& ranking() const noexcept { return ranking_; }
    std::size_t size() const noexcept { return ranking_.size(); }

private:
    std::string service_;
    std::string topic_;
    std::vector<RunEntry> ranking_;
};

// Union of each run's top-`depth` documents, duplicates removed.
struct PooledList {
    std::string topic;
    std::vector<std::string> documents;        // natural ascending, unique
    std::vector<std::string> source_services;  // first-seen order
    int depth = 0;
};

// All runs must share one topic; depth >= 1. Throws std::invalid_argument.
PooledList build_pool(std::span<const RankedRun> runs, int depth);

// |top-k of run in relevant| / k. Unjudged documents count as not relevant;
// a ranking shorter than k keeps denominator k.
double precision_at_k(const RankedRun& run, const std::set<std::string>& relevant, int k);

// Topic x service grid of p@k values for one judgment variant. Absent cells
// are topics dropped by filtering or services absent from every retained
// session.
struct PrecisionReport {
    std::string variant;  // "unfiltered" | "kappa-filtered" | "alpha-filtered"
    int k = 10;
    std::vector<std::string> topics;    // row order, natural ascending
    std::vector<std::string> services;  // column order, first-seen run order
    std::map<std::pair<std::string, std::string>, double> cells;

    std::optional<double> cell(const std::string& topic, const std::string& service) const;
};

// Arithmetic mean of the present cells in one service column; absent when
// the column is empty.
std::optional<double> mean_over_topics(const PrecisionReport& report,
                                       const std::string& service);

// cell(topic, service) = mean over every assessor of every set in
// `assessments` (all retained sessions pooled) of p@k against that
// assessor's relevant documents. A (session, service) pair contributes only
// when the availability table lists it and a run exists for the topic.
PrecisionReport per_topic_precision(const Dataset& assessments,
                                    std::span<const RankedRun> runs,
                                    const SessionServices& availability,
                                    int k,
                                    std::string variant,
                                    std::vector<std::string> topic_universe = {},
                                    std::vector<std::string> service_universe = {});

// RMS error over the positions where both lists carry a value; absent when
// no position is shared.
std::optional<double> rms_error(std::span<const std::optional<double>> original,
                                std::span<const std::optional<double>> filtered);
std::optional<double> rms_error(std::span<const double> original,
                                std::span<const double> filtered);

// Per-service RMS between two reports over their common topics.
std::optional<double> rms_error(const PrecisionReport& original,
                                const PrecisionReport& filtered,
                                const std::string& service);
std::map<std::string, std::optional<double>> rms_errors(const PrecisionReport& original,
                                                        const PrecisionReport& filtered);

}  // namespace irrkit::evalmetrics
