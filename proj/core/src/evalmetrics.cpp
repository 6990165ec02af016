#include "irrkit/evalmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

namespace irrkit::evalmetrics {

RankedRun::RankedRun(std::string service, std::string topic, std::vector<RunEntry> ranking)
    : service_(std::move(service)), topic_(std::move(topic)), ranking_(std::move(ranking)) {
    if (service_.empty() || topic_.empty())
        throw std::invalid_argument("run needs a service tag and a topic");
    std::sort(ranking_.begin(), ranking_.end(),
              [](const RunEntry& a, const RunEntry& b) { return a.rank < b.rank; });
    std::unordered_set<std::string> seen;
    for (std::size_t i = 0; i < ranking_.size(); ++i) {
        if (ranking_[i].rank != static_cast<int>(i) + 1)
            throw std::invalid_argument("run " + service_ + "/" + topic_ +
                                        ": ranks must form 1..m");
        if (ranking_[i].doc.empty() || !seen.insert(ranking_[i].doc).second)
            throw std::invalid_argument("run " + service_ + "/" + topic_ +
                                        ": duplicate document " + ranking_[i].doc);
    }
}

PooledList build_pool(std::span<const RankedRun> runs, int depth) {
    if (depth < 1) throw std::invalid_argument("pool depth must be >= 1");
    if (runs.empty()) throw std::invalid_argument("pool needs at least one run");

    PooledList pool;
    pool.topic = runs.front().topic();
    pool.depth = depth;
    std::set<std::string> documents;
    for (const auto& run : runs) {
        if (run.topic() != pool.topic)
            throw std::invalid_argument("pool runs mix topics " + pool.topic + " and " +
                                        run.topic());
        pool.source_services.push_back(run.service());
        const std::size_t take = std::min<std::size_t>(run.size(), static_cast<std::size_t>(depth));
        for (std::size_t i = 0; i < take; ++i) documents.insert(run.ranking()[i].doc);
    }
    pool.documents.assign(documents.begin(), documents.end());
    std::sort(pool.documents.begin(), pool.documents.end(), natural_less);
    return pool;
}

double precision_at_k(const RankedRun& run, const std::set<std::string>& relevant, int k) {
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    const std::size_t take = std::min<std::size_t>(run.size(), static_cast<std::size_t>(k));
    std::size_t hits = 0;
    for (std::size_t i = 0; i < take; ++i) {
        if (relevant.contains(run.ranking()[i].doc)) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(k);
}

std::optional<double> PrecisionReport::cell(const std::string& topic,
                                            const std::string& service) const {
    const auto it = cells.find({topic, service});
    if (it == cells.end()) return std::nullopt;
    return it->second;
}

std::optional<double> mean_over_topics(const PrecisionReport& report,
                                       const std::string& service) {
    std::vector<double> values;
    for (const auto& topic : report.topics) {
        if (const auto v = report.cell(topic, service)) values.push_back(*v);
    }
    if (values.empty()) return std::nullopt;
    std::sort(values.begin(), values.end());
    const double sum = std::accumulate(values.begin(), values.end(), 0.0);
    return sum / static_cast<double>(values.size());
}

PrecisionReport per_topic_precision(const Dataset& assessments,
                                    std::span<const RankedRun> runs,
                                    const SessionServices& availability,
                                    int k,
                                    std::string variant,
                                    std::vector<std::string> topic_universe,
                                    std::vector<std::string> service_universe) {
    if (k < 1) throw std::invalid_argument("k must be >= 1");

    PrecisionReport report;
    report.variant = std::move(variant);
    report.k = k;

    if (topic_universe.empty()) {
        report.topics = assessments.topics();
    } else {
        report.topics = std::move(topic_universe);
    }
    if (service_universe.empty()) {
        for (const auto& run : runs) {
            if (std::find(report.services.begin(), report.services.end(), run.service()) ==
                report.services.end())
                report.services.push_back(run.service());
        }
    } else {
        report.services = std::move(service_universe);
    }

    std::map<std::pair<std::string, std::string>, const RankedRun*> run_index;
    for (const auto& run : runs) run_index[{run.service(), run.topic()}] = &run;

    for (const auto& topic : report.topics) {
        for (const auto& service : report.services) {
            const auto run_it = run_index.find({service, topic});
            if (run_it == run_index.end()) continue;

            std::vector<double> precisions;
            for (const auto& set : assessments.sets) {
                if (set.topic() != topic) continue;
                if (!availability.available(set.session(), service)) continue;
                for (std::size_t a = 0; a < set.assessor_count(); ++a)
                    precisions.push_back(
                        precision_at_k(*run_it->second, set.relevant_documents(a), k));
            }
            if (precisions.empty()) continue;
            std::sort(precisions.begin(), precisions.end());
            const double sum = std::accumulate(precisions.begin(), precisions.end(), 0.0);
            report.cells[{topic, service}] = sum / static_cast<double>(precisions.size());
        }
    }
    return report;
}

std::optional<double> rms_error(std::span<const std::optional<double>> original,
                                std::span<const std::optional<double>> filtered) {
    if (original.size() != filtered.size())
        throw std::invalid_argument("rms inputs differ in length");
    std::vector<double> squares;
    for (std::size_t i = 0; i < original.size(); ++i) {
        if (!original[i] || !filtered[i]) continue;
        const double diff = *original[i] - *filtered[i];
        squares.push_back(diff * diff);
    }
    if (squares.empty()) return std::nullopt;
    std::sort(squares.begin(), squares.end());
    const double sum = std::accumulate(squares.begin(), squares.end(), 0.0);
    return std::sqrt(sum / static_cast<double>(squares.size()));
}

std::optional<double> rms_error(std::span<const double> original,
                                std::span<const double> filtered) {
    std::vector<std::optional<double>> o(original.begin(), original.end());
    std::vector<std::optional<double>> f(filtered.begin(), filtered.end());
    return rms_error(std::span<const std::optional<double>>(o),
                     std::span<const std::optional<double>>(f));
}

std::optional<double> rms_error(const PrecisionReport& original,
                                const PrecisionReport& filtered,
                                const std::string& service) {
    if (original.k != filtered.k)
        throw std::invalid_argument("rms reports disagree on k");
    std::vector<std::optional<double>> o, f;
    std::vector<std::string> topics = original.topics;
    for (const auto& t : filtered.topics) {
        if (std::find(topics.begin(), topics.end(), t) == topics.end()) topics.push_back(t);
    }
    std::sort(topics.begin(), topics.end(), natural_less);
    for (const auto& topic : topics) {
        o.push_back(original.cell(topic, service));
        f.push_back(filtered.cell(topic, service));
    }
    return rms_error(std::span<const std::optional<double>>(o),
                     std::span<const std::optional<double>>(f));
}

std::map<std::string, std::optional<double>> rms_errors(const PrecisionReport& original,
                                                        const PrecisionReport& filtered) {
    std::map<std::string, std::optional<double>> out;
    for (const auto& service : original.services)
        out[service] = rms_error(original, filtered, service);
    return out;
}

}  // namespace irrkit::evalmetrics
