#include "irrkit/reliability.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <stdexcept>

#include "irrkit/evalmetrics.hpp"

namespace irrkit::reliability {

using agreement::AgreementRecord;
using agreement::ScoreResult;
using agreement::UndefinedReason;

std::string_view to_string(Measure measure) {
    return measure == Measure::kappa ? "kappa" : "alpha";
}

std::optional<Measure> measure_from_string(std::string_view text) {
    if (text == "kappa") return Measure::kappa;
    if (text == "alpha") return Measure::alpha;
    return std::nullopt;
}

std::string_view to_string(DropReason reason) {
    return reason == DropReason::below_threshold ? "below-threshold" : "undefined-score";
}

std::map<SetKey, evalmetrics::PooledList> pools_for(const Dataset& dataset,
                                                    std::span<const evalmetrics::RankedRun> runs,
                                                    const SessionServices& availability,
                                                    int pool_depth) {
    std::map<SetKey, evalmetrics::PooledList> pools;
    for (const auto& set : dataset.sets) {
        std::vector<evalmetrics::RankedRun> contributing;
        for (const auto& run : runs) {
            if (run.topic() != set.topic()) continue;
            if (!availability.available(set.session(), run.service())) continue;
            contributing.push_back(run);
        }
        if (contributing.empty())
            throw std::invalid_argument("no pool for assessment set " + set.key().label() +
                                        ": no contributing run for the topic");
        pools.emplace(set.key(), evalmetrics::build_pool(contributing, pool_depth));
    }
    return pools;
}

CleaningOutcome clean_assessors(const Dataset& dataset,
                                const std::map<SetKey, evalmetrics::PooledList>& pools,
                                double max_missing_rate) {
    if (max_missing_rate < 0.0 || max_missing_rate > 1.0)
        throw std::invalid_argument("max missing rate must lie in [0, 1]");

    CleaningOutcome outcome;
    outcome.max_missing_rate = max_missing_rate;
    for (const auto& set : dataset.sets) {
        const auto it = pools.find(set.key());
        if (it == pools.end())
            throw std::invalid_argument("no pool for assessment set " + set.key().label());
        const auto& pool_docs = it->second.documents;
        if (pool_docs.empty())
            throw std::invalid_argument("empty pool for assessment set " + set.key().label());

        // position of each pool document in the set, if judged at all
        std::map<std::string, std::size_t> doc_index;
        for (std::size_t d = 0; d < set.document_count(); ++d)
            doc_index.emplace(set.documents()[d], d);

        std::vector<std::size_t> keep;
        for (std::size_t a = 0; a < set.assessor_count(); ++a) {
            std::size_t missing = 0;
            for (const auto& doc : pool_docs) {
                const auto pos = doc_index.find(doc);
                if (pos == doc_index.end() || !set.cell(a, pos->second)) ++missing;
            }
            const double rate =
                static_cast<double>(missing) / static_cast<double>(pool_docs.size());
            if (rate > max_missing_rate) {
                outcome.dropped_assessors.push_back({set.key(), set.assessors()[a], rate});
            } else {
                keep.push_back(a);
            }
        }
        if (keep.empty()) {
            outcome.emptied_sets.push_back(set.key());
        } else if (keep.size() == set.assessor_count()) {
            outcome.cleaned.sets.push_back(set);
        } else {
            outcome.cleaned.sets.push_back(set.with_assessors(keep));
        }
    }
    outcome.cleaned.sort_sets();
    return outcome;
}

FilterOutcome filter_sets(std::span<const AgreementRecord> records, Measure measure,
                          double threshold) {
    FilterOutcome outcome;
    outcome.measure = measure;
    outcome.threshold = threshold;
    for (const auto& record : records) {
        const ScoreResult& score = measure == Measure::kappa ? record.kappa : record.alpha;
        if (!score.has_value()) {
            outcome.dropped.push_back({record.key(), DropReason::undefined_score});
        } else if (score.value() >= threshold) {
            outcome.kept.push_back(record.key());
        } else {
            outcome.dropped.push_back({record.key(), DropReason::below_threshold});
        }
    }
    return outcome;
}

std::set<std::pair<std::string, std::string>> surviving_cells(
    std::span<const SetKey> kept,
    std::span<const std::string> services,
    const SessionServices& availability) {
    std::set<std::pair<std::string, std::string>> cells;
    for (const auto& key : kept) {
        for (const auto& service : services) {
            if (availability.available(key.session, service)) cells.insert({key.topic, service});
        }
    }
    return cells;
}

AgreementTable make_agreement_table(std::span<const AgreementRecord> records) {
    AgreementTable table;
    for (const auto& record : records) {
        if (!table.cells.emplace(record.key(), record).second)
            throw std::invalid_argument("duplicate agreement record for set " +
                                        record.key().label());
        if (std::find(table.sessions.begin(), table.sessions.end(), record.session) ==
            table.sessions.end())
            table.sessions.push_back(record.session);
        if (std::find(table.topics.begin(), table.topics.end(), record.topic) ==
            table.topics.end())
            table.topics.push_back(record.topic);
    }
    std::sort(table.sessions.begin(), table.sessions.end());
    std::sort(table.topics.begin(), table.topics.end(), natural_less);
    return table;
}

namespace {

struct Accumulator {
    double sum = 0.0;
    std::size_t count = 0;
    void add(double v) {
        sum += v;
        ++count;
    }
    std::optional<double> mean() const {
        if (count == 0) return std::nullopt;
        return sum / static_cast<double>(count);
    }
};

AgreementTable::Averages averages_over(
    const AgreementTable& table,
    const std::function<bool(const SetKey&)>& include) {
    Accumulator n, alpha, kappa;
    for (const auto& session : table.sessions) {
        for (const auto& topic : table.topics) {
            const auto it = table.cells.find(SetKey{session, topic});
            if (it == table.cells.end() || !include(it->first)) continue;
            const AgreementRecord& r = it->second;
            n.add(static_cast<double>(r.assessor_count));
            if (r.alpha) alpha.add(r.alpha.value());
            if (r.kappa) kappa.add(r.kappa.value());
        }
    }
    return {n.mean(), alpha.mean(), kappa.mean()};
}

}  // namespace

AgreementTable::Averages AgreementTable::session_average(const std::string& session) const {
    return averages_over(*this, [&](const SetKey& k) { return k.session == session; });
}

AgreementTable::Averages AgreementTable::topic_average(const std::string& topic) const {
    return averages_over(*this, [&](const SetKey& k) { return k.topic == topic; });
}

AgreementTable::Averages AgreementTable::overall_average() const {
    return averages_over(*this, [](const SetKey&) { return true; });
}

CorrelationSet kappa_alpha_correlations(const AgreementTable& table) {
    CorrelationSet out;
    for (const auto& session : table.sessions) {
        std::vector<double> alphas, kappas;
        for (const auto& topic : table.topics) {
            const auto it = table.cells.find(SetKey{session, topic});
            if (it == table.cells.end()) continue;
            const AgreementRecord& r = it->second;
            if (!r.alpha || !r.kappa) continue;
            alphas.push_back(r.alpha.value());
            kappas.push_back(r.kappa.value());
        }
        if (alphas.size() < 2) {
            out.per_session[session] =
                ScoreResult::undefined(UndefinedReason::no_pairable_values);
        } else {
            out.per_session[session] = agreement::pearson_correlation(kappas, alphas);
        }
    }

    std::vector<double> avg_alphas, avg_kappas;
    for (const auto& topic : table.topics) {
        const auto avg = table.topic_average(topic);
        if (!avg.alpha || !avg.kappa) continue;
        avg_alphas.push_back(*avg.alpha);
        avg_kappas.push_back(*avg.kappa);
    }
    if (avg_alphas.size() < 2) {
        out.averages = ScoreResult::undefined(UndefinedReason::no_pairable_values);
    } else {
        out.averages = agreement::pearson_correlation(avg_kappas, avg_alphas);
    }
    return out;
}

StudyReport run_study(const Dataset& assessments,
                      std::span<const evalmetrics::RankedRun> runs,
                      const SessionServices& availability,
                      const StudyOptions& options) {
    StudyReport report;
    report.thresholds = options.thresholds;
    report.k = options.k;

    const auto pools = pools_for(assessments, runs, availability, options.thresholds.pool_depth);
    CleaningOutcome cleaning =
        clean_assessors(assessments, pools, options.thresholds.max_missing_rate);
    cleaning.pool_depth = options.thresholds.pool_depth;
    report.dropped_assessors = std::move(cleaning.dropped_assessors);
    report.emptied_sets = std::move(cleaning.emptied_sets);
    const Dataset& cleaned = cleaning.cleaned;

    for (const auto& set : cleaned.sets) report.records.push_back(agreement::score_set(set));
    report.correlations = kappa_alpha_correlations(make_agreement_table(report.records));

    const std::vector<std::string> topic_universe = cleaned.topics();
    report.unfiltered = evalmetrics::per_topic_precision(cleaned, runs, availability, options.k,
                                                         "unfiltered", topic_universe);

    const auto filtered_variant = [&](Measure measure, double threshold, const char* variant,
                                      std::optional<FilterOutcome>& outcome_slot,
                                      std::optional<evalmetrics::PrecisionReport>& report_slot,
                                      std::map<std::string, std::optional<double>>& rms_slot) {
        FilterOutcome outcome = filter_sets(report.records, measure, threshold);
        const Dataset kept = cleaned.subset(outcome.kept);
        report_slot = evalmetrics::per_topic_precision(kept, runs, availability, options.k,
                                                       variant, topic_universe);
        rms_slot = evalmetrics::rms_errors(report.unfiltered, *report_slot);
        outcome_slot = std::move(outcome);
    };

    if (options.use_kappa)
        filtered_variant(Measure::kappa, options.thresholds.kappa_min, "kappa-filtered",
                         report.kappa_filter, report.kappa_filtered, report.rms_kappa);
    if (options.use_alpha)
        filtered_variant(Measure::alpha, options.thresholds.alpha_min, "alpha-filtered",
                         report.alpha_filter, report.alpha_filtered, report.rms_alpha);

    return report;
}

}  // namespace irrkit::reliability
