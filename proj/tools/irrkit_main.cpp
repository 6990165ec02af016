// irrkit command line: assessment cleaning, agreement scoring, threshold
// filtering, precision evaluation and the end-to-end reliability study.
//
// Exit codes: 0 success, 1 input or validation error, 2 usage error.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "irrkit/dataio.hpp"
#include "irrkit/reliability.hpp"
#include "irrkit/synthgen.hpp"

using namespace irrkit;

namespace {

dataio::Format parse_format(const std::string& text) {
    const auto format = dataio::format_from_string(text);
    if (!format) throw std::invalid_argument("unknown format '" + text + "'");
    return *format;
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    return in;
}

// Writes through a buffer so a failed run cannot leave a half-written file.
void deliver(const std::string& out_path, const std::string& payload) {
    if (out_path.empty()) {
        std::cout << payload;
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    out << payload;
    if (!out) throw std::runtime_error("write to " + out_path + " failed");
}

Dataset load_assessments(const std::string& path) {
    auto in = open_input(path);
    return dataio::parse_assessments(in, path);
}

std::vector<evalmetrics::RankedRun> load_runs(const std::string& path) {
    auto in = open_input(path);
    return dataio::parse_runs(in, path);
}

SessionServices load_availability(const std::string& path) {
    if (path.empty()) return SessionServices{};
    auto in = open_input(path);
    return dataio::parse_availability(in, path);
}

std::vector<dataio::TopicEntry> load_topics(const std::string& path) {
    if (path.empty()) return {};
    auto in = open_input(path);
    return dataio::parse_topics(in, path);
}

std::vector<reliability::Measure> parse_measures(const std::string& text) {
    std::vector<reliability::Measure> measures;
    std::stringstream stream(text);
    std::string token;
    while (std::getline(stream, token, ',')) {
        const auto measure = reliability::measure_from_string(token);
        if (!measure) throw std::invalid_argument("unknown measure '" + token + "'");
        if (std::find(measures.begin(), measures.end(), *measure) == measures.end())
            measures.push_back(*measure);
    }
    if (measures.empty()) throw std::invalid_argument("no measure given");
    return measures;
}

struct CleanOptions {
    std::string assessments, runs, availability, out, log;
    double max_missing = 0.05;
    int pool_depth = 10;
};

void run_clean(const CleanOptions& opt) {
    const Dataset data = load_assessments(opt.assessments);
    const auto runs = load_runs(opt.runs);
    const auto availability = load_availability(opt.availability);
    const auto pools = reliability::pools_for(data, runs, availability, opt.pool_depth);
    auto outcome = reliability::clean_assessors(data, pools, opt.max_missing);
    outcome.pool_depth = opt.pool_depth;

    std::ostringstream payload;
    dataio::write_assessments(outcome.cleaned, payload);
    deliver(opt.out, payload.str());

    if (!opt.log.empty()) {
        std::ostringstream log;
        dataio::write_cleaning_log(outcome, log);
        deliver(opt.log, log.str());
    }
    std::cerr << "clean: dropped " << outcome.dropped_assessors.size() << " assessor(s), "
              << outcome.emptied_sets.size() << " set(s) emptied\n";
}

struct AgreeOptions {
    std::string assessments, out, format = "markdown";
};

void run_agree(const AgreeOptions& opt) {
    const Dataset data = load_assessments(opt.assessments);
    std::vector<agreement::AgreementRecord> records;
    for (const auto& set : data.sets) records.push_back(agreement::score_set(set));
    std::ostringstream payload;
    dataio::write_agreement_records(records, parse_format(opt.format), payload);
    deliver(opt.out, payload.str());
}

struct FilterOptions {
    std::string agreement, availability, out, format = "markdown", measures = "kappa";
    double kappa_min = 0.4;
    double alpha_min = 0.1;
};

void run_filter(const FilterOptions& opt) {
    auto in = open_input(opt.agreement);
    const auto records = dataio::parse_agreement(in, opt.agreement);
    const auto measures = parse_measures(opt.measures);
    if (measures.size() != 1)
        throw std::invalid_argument("filter takes exactly one measure per invocation");
    const auto measure = measures.front();
    const double threshold =
        measure == reliability::Measure::kappa ? opt.kappa_min : opt.alpha_min;
    const auto outcome = reliability::filter_sets(records, measure, threshold);
    const auto availability = load_availability(opt.availability);

    std::ostringstream payload;
    dataio::write_filter_outcome(outcome, availability, parse_format(opt.format), payload);
    deliver(opt.out, payload.str());
}

struct EvalOptions {
    std::string assessments, runs, availability, filter, out, format = "markdown";
    int k = 10;
};

void run_eval(const EvalOptions& opt) {
    const Dataset data = load_assessments(opt.assessments);
    const auto runs = load_runs(opt.runs);
    const auto availability = load_availability(opt.availability);

    const std::vector<std::string> topic_universe = data.topics();
    Dataset selected = data;
    std::string variant = "unfiltered";
    if (!opt.filter.empty()) {
        auto in = open_input(opt.filter);
        const auto outcome = dataio::parse_filter_outcome(in, opt.filter);
        selected = data.subset(outcome.kept);
        variant = std::string(reliability::to_string(outcome.measure)) + "-filtered";
    }
    const auto report = evalmetrics::per_topic_precision(selected, runs, availability, opt.k,
                                                         variant, topic_universe);
    std::ostringstream payload;
    dataio::write_precision_report(report, parse_format(opt.format), payload);
    deliver(opt.out, payload.str());
}

struct DiffOptions {
    std::string original, filtered, out, format = "markdown";
};

void run_diff(const DiffOptions& opt) {
    auto in_original = open_input(opt.original);
    auto in_filtered = open_input(opt.filtered);
    const auto original = dataio::parse_precision_report(in_original, opt.original);
    const auto filtered = dataio::parse_precision_report(in_filtered, opt.filtered);
    if (original.k != filtered.k)
        throw std::invalid_argument("precision reports disagree on k");
    const auto report = dataio::make_rms_report(original, filtered);
    std::ostringstream payload;
    dataio::write_rms_report(report, parse_format(opt.format), payload);
    deliver(opt.out, payload.str());
}

struct SimulateOptions {
    synthgen::SimulationConfig config;
    std::string out;
};

void run_simulate(const SimulateOptions& opt) {
    const Dataset data = synthgen::generate(opt.config);
    std::ostringstream payload;
    dataio::write_assessments(data, payload);
    deliver(opt.out, payload.str());
}

struct ReportOptions {
    std::string records, clean_log, kappa_filter, alpha_filter;
    std::string unfiltered, kappa_precision, alpha_precision;
    std::string topics, out, format = "markdown";
};

void run_report(const ReportOptions& opt) {
    reliability::StudyReport study;

    auto records_in = open_input(opt.records);
    study.records = dataio::parse_agreement(records_in, opt.records);
    study.correlations =
        reliability::kappa_alpha_correlations(reliability::make_agreement_table(study.records));

    if (!opt.clean_log.empty()) {
        auto in = open_input(opt.clean_log);
        auto cleaning = dataio::parse_cleaning_log(in, opt.clean_log);
        study.dropped_assessors = std::move(cleaning.dropped_assessors);
        study.emptied_sets = std::move(cleaning.emptied_sets);
        study.thresholds.max_missing_rate = cleaning.max_missing_rate;
        study.thresholds.pool_depth = cleaning.pool_depth;
    }

    auto unfiltered_in = open_input(opt.unfiltered);
    study.unfiltered = dataio::parse_precision_report(unfiltered_in, opt.unfiltered);
    study.k = study.unfiltered.k;

    const auto load_filter = [](const std::string& path) -> std::optional<reliability::FilterOutcome> {
        if (path.empty()) return std::nullopt;
        auto in = open_input(path);
        return dataio::parse_filter_outcome(in, path);
    };
    study.kappa_filter = load_filter(opt.kappa_filter);
    study.alpha_filter = load_filter(opt.alpha_filter);
    if (study.kappa_filter) study.thresholds.kappa_min = study.kappa_filter->threshold;
    if (study.alpha_filter) study.thresholds.alpha_min = study.alpha_filter->threshold;

    const auto load_precision =
        [](const std::string& path) -> std::optional<evalmetrics::PrecisionReport> {
        if (path.empty()) return std::nullopt;
        auto in = open_input(path);
        return dataio::parse_precision_report(in, path);
    };
    study.kappa_filtered = load_precision(opt.kappa_precision);
    study.alpha_filtered = load_precision(opt.alpha_precision);
    if (study.kappa_filtered)
        study.rms_kappa = evalmetrics::rms_errors(study.unfiltered, *study.kappa_filtered);
    if (study.alpha_filtered)
        study.rms_alpha = evalmetrics::rms_errors(study.unfiltered, *study.alpha_filtered);

    const auto legend = load_topics(opt.topics);
    std::ostringstream payload;
    dataio::write_study(study, parse_format(opt.format), payload, legend);
    deliver(opt.out, payload.str());
}

struct StudyOptionsCli {
    std::string assessments, runs, availability, topics, out, format = "markdown";
    std::string measures = "kappa,alpha";
    reliability::StudyOptions options;
};

void run_study_cmd(const StudyOptionsCli& opt) {
    const Dataset data = load_assessments(opt.assessments);
    const auto runs = load_runs(opt.runs);
    const auto availability = load_availability(opt.availability);
    const auto legend = load_topics(opt.topics);

    reliability::StudyOptions options = opt.options;
    const auto measures = parse_measures(opt.measures);
    options.use_kappa = std::find(measures.begin(), measures.end(),
                                  reliability::Measure::kappa) != measures.end();
    options.use_alpha = std::find(measures.begin(), measures.end(),
                                  reliability::Measure::alpha) != measures.end();

    const auto report = reliability::run_study(data, runs, availability, options);
    std::ostringstream payload;
    dataio::write_study(report, parse_format(opt.format), payload, legend);
    deliver(opt.out, payload.str());
}

const char* kFormatHelp = "Output format: csv, json or markdown";

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Inter-assessor reliability toolkit for retrieval evaluation"};
    app.require_subcommand(1);
    app.set_config("--config", "", "INI config merged with lowest precedence");

    CleanOptions clean;
    auto* clean_cmd = app.add_subcommand(
        "clean", "Drop assessors whose missing rate exceeds the threshold");
    clean_cmd->add_option("--assessments", clean.assessments, "Assessments TSV")->required();
    clean_cmd->add_option("--runs", clean.runs, "Runs file (pool construction)")->required();
    clean_cmd->add_option("--availability", clean.availability, "Session/service table");
    clean_cmd->add_option("--max-missing", clean.max_missing, "Missing-rate threshold")
        ->capture_default_str();
    clean_cmd->add_option("--pool-depth", clean.pool_depth, "Pool depth per run")
        ->capture_default_str();
    clean_cmd->add_option("--out", clean.out, "Cleaned assessments destination");
    clean_cmd->add_option("--log", clean.log, "Cleaning log (JSON) destination");

    AgreeOptions agree;
    auto* agree_cmd =
        app.add_subcommand("agree", "Score agreement coefficients per assessment set");
    agree_cmd->add_option("--assessments", agree.assessments, "Assessments TSV")->required();
    agree_cmd->add_option("--format", agree.format, kFormatHelp)->capture_default_str();
    agree_cmd->add_option("--out", agree.out, "Destination");

    FilterOptions filter;
    auto* filter_cmd =
        app.add_subcommand("filter", "Keep sets whose score meets the threshold");
    filter_cmd->add_option("--agreement", filter.agreement, "Scored records (TSV or JSON)")
        ->required();
    filter_cmd->add_option("--measures", filter.measures, "Measure to filter on: kappa or alpha")
        ->capture_default_str();
    filter_cmd->add_option("--kappa-min", filter.kappa_min, "Kappa threshold")
        ->capture_default_str();
    filter_cmd->add_option("--alpha-min", filter.alpha_min, "Alpha threshold")
        ->capture_default_str();
    filter_cmd->add_option("--availability", filter.availability, "Session/service table");
    filter_cmd->add_option("--format", filter.format, kFormatHelp)->capture_default_str();
    filter_cmd->add_option("--out", filter.out, "Destination");

    EvalOptions eval;
    auto* eval_cmd = app.add_subcommand("eval", "Precision@k per topic and service");
    eval_cmd->add_option("--assessments", eval.assessments, "Assessments TSV")->required();
    eval_cmd->add_option("--runs", eval.runs, "Runs file")->required();
    eval_cmd->add_option("--availability", eval.availability, "Session/service table");
    eval_cmd->add_option("--filter", eval.filter, "Filter outcome JSON restricting the sets");
    eval_cmd->add_option("--k", eval.k, "Precision cutoff")->capture_default_str();
    eval_cmd->add_option("--format", eval.format, kFormatHelp)->capture_default_str();
    eval_cmd->add_option("--out", eval.out, "Destination");

    DiffOptions diff;
    auto* diff_cmd =
        app.add_subcommand("diff", "RMS error between two precision reports");
    diff_cmd->add_option("--original", diff.original, "Baseline precision report (JSON)")
        ->required();
    diff_cmd->add_option("--filtered", diff.filtered, "Filtered precision report (JSON)")
        ->required();
    diff_cmd->add_option("--format", diff.format, kFormatHelp)->capture_default_str();
    diff_cmd->add_option("--out", diff.out, "Destination");

    SimulateOptions simulate;
    auto* simulate_cmd = app.add_subcommand(
        "simulate", "Generate a synthetic campaign with controlled noise");
    simulate_cmd->add_option("--seed", simulate.config.seed, "Generator seed")
        ->capture_default_str();
    simulate_cmd->add_option("--assessors", simulate.config.assessors, "Assessors per set")
        ->capture_default_str();
    simulate_cmd->add_option("--docs", simulate.config.documents, "Documents per topic")
        ->capture_default_str();
    simulate_cmd->add_option("--prevalence", simulate.config.prevalence,
                             "Probability a document is truly relevant")
        ->capture_default_str();
    simulate_cmd->add_option("--error", simulate.config.error_rate,
                             "Probability an assessor flips the true label")
        ->capture_default_str();
    simulate_cmd->add_option("--missing-rate", simulate.config.missing_rate,
                             "Probability a cell is missing")
        ->capture_default_str();
    simulate_cmd->add_option("--sessions", simulate.config.sessions, "Sessions to generate")
        ->capture_default_str();
    simulate_cmd->add_option("--topic-count", simulate.config.topics, "Topics per session")
        ->capture_default_str();
    simulate_cmd->add_option("--out", simulate.out, "Destination");

    ReportOptions report;
    auto* report_cmd =
        app.add_subcommand("report", "Assemble a composite study report from parts");
    report_cmd->add_option("--records", report.records, "Agreement records (TSV or JSON)")
        ->required();
    report_cmd->add_option("--clean-log", report.clean_log, "Cleaning log JSON");
    report_cmd->add_option("--kappa-filter", report.kappa_filter, "Kappa filter outcome JSON");
    report_cmd->add_option("--alpha-filter", report.alpha_filter, "Alpha filter outcome JSON");
    report_cmd->add_option("--unfiltered", report.unfiltered, "Unfiltered precision JSON")
        ->required();
    report_cmd->add_option("--kappa-precision", report.kappa_precision,
                           "Kappa-filtered precision JSON");
    report_cmd->add_option("--alpha-precision", report.alpha_precision,
                           "Alpha-filtered precision JSON");
    report_cmd->add_option("--topics", report.topics, "Topic metadata TSV");
    report_cmd->add_option("--format", report.format, kFormatHelp)->capture_default_str();
    report_cmd->add_option("--out", report.out, "Destination");

    StudyOptionsCli study;
    auto* study_cmd = app.add_subcommand(
        "study", "Full pipeline: clean, score, filter, evaluate and compare");
    study_cmd->add_option("--assessments", study.assessments, "Assessments TSV")->required();
    study_cmd->add_option("--runs", study.runs, "Runs file")->required();
    study_cmd->add_option("--availability", study.availability, "Session/service table");
    study_cmd->add_option("--topics", study.topics, "Topic metadata TSV");
    study_cmd->add_option("--kappa-min", study.options.thresholds.kappa_min, "Kappa threshold")
        ->capture_default_str();
    study_cmd->add_option("--alpha-min", study.options.thresholds.alpha_min, "Alpha threshold")
        ->capture_default_str();
    study_cmd
        ->add_option("--max-missing", study.options.thresholds.max_missing_rate,
                     "Missing-rate threshold for cleaning")
        ->capture_default_str();
    study_cmd->add_option("--k", study.options.k, "Precision cutoff")->capture_default_str();
    study_cmd->add_option("--pool-depth", study.options.thresholds.pool_depth, "Pool depth")
        ->capture_default_str();
    study_cmd->add_option("--measures", study.measures, "Filters to apply: kappa,alpha")
        ->capture_default_str();
    study_cmd->add_option("--format", study.format, kFormatHelp)->capture_default_str();
    study_cmd->add_option("--out", study.out, "Destination");

    clean_cmd->callback([&] { run_clean(clean); });
    agree_cmd->callback([&] { run_agree(agree); });
    filter_cmd->callback([&] { run_filter(filter); });
    eval_cmd->callback([&] { run_eval(eval); });
    diff_cmd->callback([&] { run_diff(diff); });
    simulate_cmd->callback([&] { run_simulate(simulate); });
    report_cmd->callback([&] { run_report(report); });
    study_cmd->callback([&] { run_study_cmd(study); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "irrkit: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
