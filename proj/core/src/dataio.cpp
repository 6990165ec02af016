#include "irrkit/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <tuple>

#include <json.hpp>

namespace irrkit::dataio {

using agreement::AgreementRecord;
using agreement::ScoreResult;
using agreement::UndefinedReason;
using evalmetrics::PrecisionReport;
using evalmetrics::RankedRun;
using evalmetrics::RunEntry;
using reliability::AgreementTable;
using reliability::FilterOutcome;
using reliability::Measure;
using reliability::StudyReport;
using json = nlohmann::ordered_json;

ParseError::ParseError(std::string source, std::size_t line, const std::string& message)
    : std::runtime_error(line > 0 ? source + ":" + std::to_string(line) + ": " + message
                                  : source + ": " + message),
      source_(std::move(source)),
      line_(line) {}

std::optional<Format> format_from_string(std::string_view text) {
    if (text == "csv") return Format::csv;
    if (text == "json") return Format::json;
    if (text == "markdown" || text == "md") return Format::markdown;
    return std::nullopt;
}

std::string_view to_string(Format format) {
    switch (format) {
        case Format::csv: return "csv";
        case Format::json: return "json";
        case Format::markdown: return "markdown";
    }
    return "unknown";
}

// ----- low-level text helpers -----

namespace {

std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find('\t', start);
        if (pos == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return fields;
}

std::vector<std::string> split_whitespace(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        const std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
        if (i > start) fields.push_back(line.substr(start, i - start));
    }
    return fields;
}

long long parse_int(const std::string& token, const std::string& source, std::size_t line,
                    const char* what) {
    long long value = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size())
        throw ParseError(source, line, std::string(what) + " is not an integer: '" + token + "'");
    return value;
}

double parse_double(const std::string& token, const std::string& source, std::size_t line,
                    const char* what) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size())
        throw ParseError(source, line, std::string(what) + " is not a number: '" + token + "'");
    return value;
}

std::string csv_field(const std::string& text) {
    if (text.find_first_of(",\"\n") == std::string::npos) return text;
    std::string quoted = "\"";
    for (const char c : text) {
        if (c == '"') quoted += "\"\"";
        else quoted += c;
    }
    quoted += '"';
    return quoted;
}

std::string md_field(const std::string& text) {
    std::string out;
    for (const char c : text) {
        if (c == '|') out += "\\|";
        else out += c;
    }
    return out;
}

constexpr long long kPow10[] = {1LL,
                                10LL,
                                100LL,
                                1000LL,
                                10000LL,
                                100000LL,
                                1000000LL,
                                10000000LL,
                                100000000LL,
                                1000000000LL,
                                10000000000LL,
                                100000000000LL,
                                1000000000000LL};

// Half away from zero at `decimals` after snapping accumulated binary noise
// at the 12th decimal, so a mean that is 0.545 minus one ulp still prints
// as .55.
std::string format_rounded(double value, int decimals, bool keep_leading_zero) {
    if (decimals < 0 || decimals > 9 || !(std::fabs(value) < 1e6) || std::isnan(value)) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.*f", std::max(decimals, 0), value);
        return buf;
    }
    const bool negative = value < 0.0;
    const long long pico = std::llround(std::fabs(value) * 1e12);
    const long long unit = kPow10[12 - decimals];
    const long long scaled = (pico + unit / 2) / unit;
    const long long integral = scaled / kPow10[decimals];
    const long long fractional = scaled % kPow10[decimals];

    std::string out;
    if (negative && scaled != 0) out += '-';
    if (integral != 0 || keep_leading_zero) out += std::to_string(integral);
    if (decimals > 0) {
        char buf[24];
        std::snprintf(buf, sizeof buf, ".%0*lld", decimals, fractional);
        out += buf;
    }
    return out;
}

}  // namespace

std::string format_score(double value, int decimals) {
    return format_rounded(value, decimals, false);
}

std::string format_decimal(double value, int decimals) {
    return format_rounded(value, decimals, true);
}

std::string format_full(double value) {
    for (const int precision : {15, 16, 17}) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.*g", precision, value);
        if (std::strtod(buf, nullptr) == value) return buf;
    }
    return "0";  // unreachable for finite doubles
}

// ----- parsers -----

namespace {

std::string read_header(std::istream& in, const std::string& source, const char* expected) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError(source, 1, "missing header line");
    line = strip_cr(line);
    if (line != expected)
        throw ParseError(source, 1,
                         "header must be '" + std::string(expected) + "', got '" + line + "'");
    return line;
}

}  // namespace

Dataset parse_assessments(std::istream& in, const std::string& source) {
    read_header(in, source, "session\ttopic\tassessor\tdoc\trelevance");

    struct SetDraft {
        std::vector<std::string> assessors;  // first-seen order
        std::set<std::string, NaturalLess> documents;
        std::map<std::pair<std::string, std::string>, int> cells;  // (assessor, doc)
    };
    std::map<SetKey, SetDraft> drafts;
    std::set<int> labels;

    std::string raw;
    std::size_t line_no = 1;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = strip_cr(raw);
        const auto fields = split_tabs(line);
        if (fields.size() != 5)
            throw ParseError(source, line_no,
                             "expected 5 tab-separated fields, got " +
                                 std::to_string(fields.size()));
        for (const auto& f : fields) {
            if (f.empty()) throw ParseError(source, line_no, "empty field");
        }
        const long long relevance = parse_int(fields[4], source, line_no, "relevance");
        if (relevance < 0) throw ParseError(source, line_no, "relevance must be non-negative");

        const SetKey key{fields[0], fields[1]};
        SetDraft& draft = drafts[key];
        if (std::find(draft.assessors.begin(), draft.assessors.end(), fields[2]) ==
            draft.assessors.end())
            draft.assessors.push_back(fields[2]);
        draft.documents.insert(fields[3]);
        if (!draft.cells.emplace(std::pair{fields[2], fields[3]}, static_cast<int>(relevance))
                 .second)
            throw ParseError(source, line_no,
                             "duplicate judgment for (" + key.label() + ", " + fields[2] + ", " +
                                 fields[3] + ")");
        labels.insert(static_cast<int>(relevance));
    }
    if (drafts.empty()) throw ParseError(source, 0, "no judgments found");

    // One campaign-wide category regime: the observed labels plus the binary
    // pair, so unanimous sets still carry a two-label universe.
    labels.insert(0);
    labels.insert(1);
    const std::vector<int> categories(labels.begin(), labels.end());

    Dataset dataset;
    for (const auto& [key, draft] : drafts) {
        const std::vector<std::string> documents(draft.documents.begin(), draft.documents.end());
        std::vector<std::optional<int>> cells(draft.assessors.size() * documents.size());
        for (std::size_t a = 0; a < draft.assessors.size(); ++a) {
            for (std::size_t d = 0; d < documents.size(); ++d) {
                const auto it = draft.cells.find({draft.assessors[a], documents[d]});
                if (it != draft.cells.end()) cells[a * documents.size() + d] = it->second;
            }
        }
        dataset.sets.emplace_back(key.session, key.topic, draft.assessors, documents, categories,
                                  std::move(cells));
    }
    return dataset;
}

std::vector<RankedRun> parse_runs(std::istream& in, const std::string& source) {
    struct Group {
        std::vector<std::pair<RunEntry, std::size_t>> entries;  // entry, line
        std::size_t order;
    };
    std::map<std::pair<std::string, std::string>, Group> groups;  // (tag, topic)
    std::size_t next_order = 0;

    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = strip_cr(raw);
        const auto fields = split_whitespace(line);
        if (fields.empty()) throw ParseError(source, line_no, "blank line");
        if (fields.size() != 6)
            throw ParseError(source, line_no,
                             "expected 6 whitespace-separated fields `topic Q0 doc rank score "
                             "tag`, got " +
                                 std::to_string(fields.size()));
        RunEntry entry;
        entry.doc = fields[2];
        entry.rank = static_cast<int>(parse_int(fields[3], source, line_no, "rank"));
        entry.score = parse_double(fields[4], source, line_no, "score");
        auto& group = groups[{fields[5], fields[0]}];
        if (group.entries.empty()) group.order = next_order++;
        group.entries.push_back({std::move(entry), line_no});
    }
    if (groups.empty()) throw ParseError(source, 0, "no run lines found");

    std::vector<const std::pair<const std::pair<std::string, std::string>, Group>*> ordered;
    for (const auto& item : groups) ordered.push_back(&item);
    std::sort(ordered.begin(), ordered.end(),
              [](const auto* a, const auto* b) { return a->second.order < b->second.order; });

    std::vector<RankedRun> runs;
    for (const auto* item : ordered) {
        const auto& [key, group] = *item;
        auto entries = group.entries;
        std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
            return a.first.rank < b.first.rank;
        });
        std::vector<RunEntry> ranking;
        std::set<std::string> seen;
        for (std::size_t i = 0; i < entries.size(); ++i) {
            const auto& [entry, line] = entries[i];
            if (entry.rank != static_cast<int>(i) + 1)
                throw ParseError(source, line,
                                 "run " + key.first + "/" + key.second +
                                     ": ranks must form 1..m, found rank " +
                                     std::to_string(entry.rank));
            if (!seen.insert(entry.doc).second)
                throw ParseError(source, line,
                                 "run " + key.first + "/" + key.second + ": duplicate document " +
                                     entry.doc);
            ranking.push_back(entry);
        }
        runs.emplace_back(key.first, key.second, std::move(ranking));
    }
    return runs;
}

std::vector<TopicEntry> parse_topics(std::istream& in, const std::string& source) {
    read_header(in, source, "id\ttitle\tdescription");
    std::vector<TopicEntry> topics;
    std::set<std::string> seen;
    std::string raw;
    std::size_t line_no = 1;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto fields = split_tabs(strip_cr(raw));
        if (fields.size() != 3)
            throw ParseError(source, line_no, "expected 3 tab-separated fields");
        if (fields[0].empty()) throw ParseError(source, line_no, "empty topic id");
        if (!seen.insert(fields[0]).second)
            throw ParseError(source, line_no, "duplicate topic id " + fields[0]);
        topics.push_back({fields[0], fields[1], fields[2]});
    }
    return topics;
}

SessionServices parse_availability(std::istream& in, const std::string& source) {
    read_header(in, source, "session\tservice");
    std::map<std::string, std::set<std::string>> table;
    std::string raw;
    std::size_t line_no = 1;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto fields = split_tabs(strip_cr(raw));
        if (fields.size() != 2)
            throw ParseError(source, line_no, "expected 2 tab-separated fields");
        if (fields[0].empty() || fields[1].empty())
            throw ParseError(source, line_no, "empty field");
        table[fields[0]].insert(fields[1]);
    }
    SessionServices availability;
    for (auto& [session, services] : table) availability.set(session, std::move(services));
    return availability;
}

// ----- JSON helpers -----

namespace {

json score_to_json(const ScoreResult& score) {
    json j;
    j["value"] = score ? json(score.value()) : json(nullptr);
    j["reason"] = score ? json(nullptr) : json(std::string(to_string(score.reason())));
    return j;
}

ScoreResult score_from_json(const json& j, const std::string& source) {
    if (!j.contains("value") || j["value"].is_null()) {
        std::string reason = j.value("reason", std::string("unreported"));
        const auto parsed = agreement::undefined_reason_from_string(reason);
        if (!parsed) throw ParseError(source, 0, "unknown undefined-reason '" + reason + "'");
        return ScoreResult::undefined(*parsed);
    }
    return ScoreResult::defined(j["value"].get<double>());
}

json key_to_json(const SetKey& key) {
    return json{{"session", key.session}, {"topic", key.topic}};
}

SetKey key_from_json(const json& j) {
    return SetKey{j.at("session").get<std::string>(), j.at("topic").get<std::string>()};
}

json record_to_json(const AgreementRecord& record) {
    json j;
    j["session"] = record.session;
    j["topic"] = record.topic;
    j["assessors"] = record.assessor_count;
    j["alpha"] = score_to_json(record.alpha);
    j["kappa"] = score_to_json(record.kappa);
    j["percent"] = score_to_json(record.percent);
    j["jaccard"] = score_to_json(record.jaccard);
    j["observed_disagreement"] =
        record.observed_disagreement ? json(*record.observed_disagreement) : json(nullptr);
    j["expected_disagreement"] =
        record.expected_disagreement ? json(*record.expected_disagreement) : json(nullptr);
    j["excluded_documents"] = record.excluded_documents;
    if (record.kappa) {
        const auto bands =
            agreement::interpret_kappa(std::clamp(record.kappa.value(), -1.0, 1.0));
        j["kappa_band"] = json{{"landis_koch", std::string(to_string(bands.landis_koch))},
                               {"greve_wentura", std::string(to_string(bands.greve_wentura))}};
    } else {
        j["kappa_band"] = nullptr;
    }
    if (record.alpha) {
        j["alpha_band"] =
            std::string(to_string(agreement::interpret_alpha(record.alpha.value())));
    } else {
        j["alpha_band"] = nullptr;
    }
    return j;
}

AgreementRecord record_from_json(const json& j, const std::string& source) {
    AgreementRecord record;
    record.session = j.at("session").get<std::string>();
    record.topic = j.at("topic").get<std::string>();
    record.assessor_count = j.at("assessors").get<int>();
    record.alpha = score_from_json(j.at("alpha"), source);
    record.kappa = score_from_json(j.at("kappa"), source);
    if (j.contains("percent")) record.percent = score_from_json(j["percent"], source);
    if (j.contains("jaccard")) record.jaccard = score_from_json(j["jaccard"], source);
    if (j.contains("observed_disagreement") && !j["observed_disagreement"].is_null())
        record.observed_disagreement = j["observed_disagreement"].get<double>();
    if (j.contains("expected_disagreement") && !j["expected_disagreement"].is_null())
        record.expected_disagreement = j["expected_disagreement"].get<double>();
    record.excluded_documents = j.value("excluded_documents", std::size_t{0});
    return record;
}

json parse_json_root(std::istream& in, const std::string& source, const char* expected_type) {
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ParseError(source, 0, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object() || j.value("type", std::string{}) != expected_type)
        throw ParseError(source, 0,
                         std::string("expected a JSON document of type '") + expected_type + "'");
    return j;
}

bool looks_like_json(std::istream& in) {
    int c;
    while ((c = in.peek()) != EOF) {
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            in.get();
            continue;
        }
        return c == '{' || c == '[';
    }
    return false;
}

}  // namespace

std::vector<AgreementRecord> parse_agreement(std::istream& in, const std::string& source) {
    if (looks_like_json(in)) {
        const json j = parse_json_root(in, source, "agreement-records");
        std::vector<AgreementRecord> records;
        for (const auto& rj : j.at("records")) records.push_back(record_from_json(rj, source));
        return records;
    }

    read_header(in, source, "session\ttopic\tn\talpha\tkappa");
    std::vector<AgreementRecord> records;
    std::set<SetKey> seen;
    std::string raw;
    std::size_t line_no = 1;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto fields = split_tabs(strip_cr(raw));
        if (fields.size() != 5)
            throw ParseError(source, line_no, "expected 5 tab-separated fields");
        AgreementRecord record;
        record.session = fields[0];
        record.topic = fields[1];
        if (record.session.empty() || record.topic.empty())
            throw ParseError(source, line_no, "empty session or topic");
        if (!seen.insert(record.key()).second)
            throw ParseError(source, line_no, "duplicate set " + record.key().label());
        record.assessor_count =
            static_cast<int>(parse_int(fields[2], source, line_no, "assessor count"));
        if (record.assessor_count < 0)
            throw ParseError(source, line_no, "assessor count must be non-negative");
        const auto score_field = [&](const std::string& token, const char* what) {
            if (token == "NA") return ScoreResult::undefined(UndefinedReason::unreported);
            return ScoreResult::defined(parse_double(token, source, line_no, what));
        };
        record.alpha = score_field(fields[3], "alpha");
        record.kappa = score_field(fields[4], "kappa");
        records.push_back(std::move(record));
    }
    if (records.empty()) throw ParseError(source, 0, "no agreement records found");
    return records;
}

PrecisionReport parse_precision_report(std::istream& in, const std::string& source) {
    const json j = parse_json_root(in, source, "precision-report");
    PrecisionReport report;
    report.variant = j.at("variant").get<std::string>();
    report.k = j.at("k").get<int>();
    report.topics = j.at("topics").get<std::vector<std::string>>();
    report.services = j.at("services").get<std::vector<std::string>>();
    for (const auto& [topic, row] : j.at("cells").items()) {
        for (const auto& [service, value] : row.items()) {
            if (!value.is_null()) report.cells[{topic, service}] = value.get<double>();
        }
    }
    return report;
}

FilterOutcome parse_filter_outcome(std::istream& in, const std::string& source) {
    const json j = parse_json_root(in, source, "filter-outcome");
    FilterOutcome outcome;
    const std::string measure = j.at("measure").get<std::string>();
    const auto parsed = reliability::measure_from_string(measure);
    if (!parsed) throw ParseError(source, 0, "unknown measure '" + measure + "'");
    outcome.measure = *parsed;
    outcome.threshold = j.at("threshold").get<double>();
    for (const auto& kj : j.at("kept")) outcome.kept.push_back(key_from_json(kj));
    for (const auto& dj : j.at("dropped")) {
        FilterOutcome::DroppedSet dropped;
        dropped.key = key_from_json(dj);
        const std::string reason = dj.at("reason").get<std::string>();
        if (reason == "below-threshold") dropped.reason = reliability::DropReason::below_threshold;
        else if (reason == "undefined-score")
            dropped.reason = reliability::DropReason::undefined_score;
        else
            throw ParseError(source, 0, "unknown drop reason '" + reason + "'");
        outcome.dropped.push_back(std::move(dropped));
    }
    return outcome;
}

reliability::CleaningOutcome parse_cleaning_log(std::istream& in, const std::string& source) {
    const json j = parse_json_root(in, source, "cleaning-log");
    reliability::CleaningOutcome outcome;
    outcome.max_missing_rate = j.at("max_missing_rate").get<double>();
    outcome.pool_depth = j.at("pool_depth").get<int>();
    for (const auto& dj : j.at("dropped_assessors")) {
        outcome.dropped_assessors.push_back({key_from_json(dj),
                                             dj.at("assessor").get<std::string>(),
                                             dj.at("missing_rate").get<double>()});
    }
    for (const auto& kj : j.at("emptied_sets")) outcome.emptied_sets.push_back(key_from_json(kj));
    return outcome;
}

// ----- writers -----

void write_assessments(const Dataset& dataset, std::ostream& out) {
    out << "session\ttopic\tassessor\tdoc\trelevance\n";
    std::vector<const AssessmentSet*> sets;
    for (const auto& set : dataset.sets) sets.push_back(&set);
    std::sort(sets.begin(), sets.end(),
              [](const AssessmentSet* a, const AssessmentSet* b) { return a->key() < b->key(); });
    for (const auto* set : sets) {
        for (std::size_t a = 0; a < set->assessor_count(); ++a) {
            for (std::size_t d = 0; d < set->document_count(); ++d) {
                const auto label = set->cell(a, d);
                if (!label) continue;
                out << set->session() << '\t' << set->topic() << '\t' << set->assessors()[a]
                    << '\t' << set->documents()[d] << '\t' << *label << '\n';
            }
        }
    }
}

namespace {

json records_to_json(std::span<const AgreementRecord> records) {
    json j;
    j["type"] = "agreement-records";
    j["records"] = json::array();
    for (const auto& record : records) j["records"].push_back(record_to_json(record));
    return j;
}

void write_records_csv(std::span<const AgreementRecord> records, std::ostream& out) {
    out << "session,topic,assessors,alpha,alpha_reason,kappa,kappa_reason,percent,"
           "percent_reason,jaccard,jaccard_reason,observed_disagreement,"
           "expected_disagreement,excluded_documents\n";
    const auto score_cols = [&](const ScoreResult& s) {
        if (s) return format_full(s.value()) + ",";
        return "," + std::string(to_string(s.reason()));
    };
    for (const auto& r : records) {
        out << csv_field(r.session) << ',' << csv_field(r.topic) << ',' << r.assessor_count << ','
            << score_cols(r.alpha) << ',' << score_cols(r.kappa) << ',' << score_cols(r.percent)
            << ',' << score_cols(r.jaccard) << ','
            << (r.observed_disagreement ? format_full(*r.observed_disagreement) : "") << ','
            << (r.expected_disagreement ? format_full(*r.expected_disagreement) : "") << ','
            << r.excluded_documents << '\n';
    }
}

void write_records_markdown(std::span<const AgreementRecord> records, std::ostream& out) {
    out << "| Session | Topic | n | alpha | kappa | percent | jaccard | D_o | D_e | Notes |\n";
    out << "|---|---|---:|---:|---:|---:|---:|---:|---:|---|\n";
    for (const auto& r : records) {
        std::string notes;
        const auto cell = [&](const ScoreResult& s, const char* name) {
            if (s) return format_score(s.value(), 3);
            if (!notes.empty()) notes += "; ";
            notes += std::string(name) + ": " + std::string(to_string(s.reason()));
            return std::string{};
        };
        const std::string alpha = cell(r.alpha, "alpha");
        const std::string kappa = cell(r.kappa, "kappa");
        const std::string percent = cell(r.percent, "percent");
        const std::string jaccard = cell(r.jaccard, "jaccard");
        out << "| " << md_field(r.session) << " | " << md_field(r.topic) << " | "
            << r.assessor_count << " | " << alpha << " | " << kappa << " | " << percent << " | "
            << jaccard << " | "
            << (r.observed_disagreement ? format_score(*r.observed_disagreement, 3) : "") << " | "
            << (r.expected_disagreement ? format_score(*r.expected_disagreement, 3) : "") << " | "
            << notes << " |\n";
    }
}

}  // namespace

void write_agreement_records(std::span<const AgreementRecord> records, Format format,
                             std::ostream& out) {
    switch (format) {
        case Format::json: out << records_to_json(records).dump(2) << '\n'; break;
        case Format::csv: write_records_csv(records, out); break;
        case Format::markdown: write_records_markdown(records, out); break;
    }
}

namespace {

json filter_to_json(const FilterOutcome& outcome, const SessionServices& availability) {
    json j;
    j["type"] = "filter-outcome";
    j["measure"] = std::string(to_string(outcome.measure));
    j["threshold"] = outcome.threshold;
    j["counts"] = json{{"kept", outcome.kept.size()}, {"dropped", outcome.dropped.size()}};
    j["kept"] = json::array();
    for (const auto& key : outcome.kept) j["kept"].push_back(key_to_json(key));
    j["dropped"] = json::array();
    for (const auto& dropped : outcome.dropped) {
        json dj = key_to_json(dropped.key);
        dj["reason"] = std::string(to_string(dropped.reason));
        j["dropped"].push_back(std::move(dj));
    }
    if (!availability.empty()) {
        const auto services = availability.services();
        const auto cells =
            reliability::surviving_cells(outcome.kept, services, availability);
        std::set<std::string, NaturalLess> topics;
        for (const auto& key : outcome.kept) topics.insert(key.topic);
        for (const auto& dropped : outcome.dropped) topics.insert(dropped.key.topic);
        json grid = json::object();
        for (const auto& topic : topics) {
            json row = json::object();
            for (const auto& service : services)
                row[service] = cells.contains({topic, service});
            grid[topic] = std::move(row);
        }
        j["surviving_cells"] = std::move(grid);
    }
    return j;
}

void write_filter_markdown(const FilterOutcome& outcome, const SessionServices& availability,
                           std::ostream& out) {
    out << "# Filter outcome (" << to_string(outcome.measure) << " >= "
        << format_decimal(outcome.threshold, 3) << ")\n\n";
    out << "Kept " << outcome.kept.size() << " of " << outcome.kept.size() + outcome.dropped.size()
        << " assessment sets, dropped " << outcome.dropped.size() << ".\n\n";
    out << "| Session | Topic | Status | Reason |\n|---|---|---|---|\n";
    struct Row {
        SetKey key;
        const char* status;
        std::string reason;
    };
    std::vector<Row> rows;
    for (const auto& key : outcome.kept) rows.push_back({key, "kept", ""});
    for (const auto& dropped : outcome.dropped)
        rows.push_back({dropped.key, "dropped", std::string(to_string(dropped.reason))});
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.key < b.key; });
    for (const auto& row : rows)
        out << "| " << md_field(row.key.session) << " | " << md_field(row.key.topic) << " | "
            << row.status << " | " << row.reason << " |\n";

    if (!availability.empty()) {
        const auto services = availability.services();
        const auto cells = reliability::surviving_cells(outcome.kept, services, availability);
        std::set<std::string, NaturalLess> topics;
        for (const auto& row : rows) topics.insert(row.key.topic);
        out << "\n## Surviving cells\n\n| Topic |";
        for (const auto& service : services) out << ' ' << md_field(service) << " |";
        out << "\n|---|";
        for (std::size_t i = 0; i < services.size(); ++i) out << "---|";
        out << '\n';
        for (const auto& topic : topics) {
            out << "| " << md_field(topic) << " |";
            for (const auto& service : services)
                out << ' ' << (cells.contains({topic, service}) ? "x" : "") << " |";
            out << '\n';
        }
    }
}

void write_filter_csv(const FilterOutcome& outcome, std::ostream& out) {
    out << "session,topic,status,reason,measure,threshold\n";
    for (const auto& key : outcome.kept)
        out << csv_field(key.session) << ',' << csv_field(key.topic) << ",kept,,"
            << to_string(outcome.measure) << ',' << format_full(outcome.threshold) << '\n';
    for (const auto& dropped : outcome.dropped)
        out << csv_field(dropped.key.session) << ',' << csv_field(dropped.key.topic)
            << ",dropped," << to_string(dropped.reason) << ',' << to_string(outcome.measure)
            << ',' << format_full(outcome.threshold) << '\n';
}

}  // namespace

void write_filter_outcome(const FilterOutcome& outcome, const SessionServices& availability,
                          Format format, std::ostream& out) {
    switch (format) {
        case Format::json: out << filter_to_json(outcome, availability).dump(2) << '\n'; break;
        case Format::csv: write_filter_csv(outcome, out); break;
        case Format::markdown: write_filter_markdown(outcome, availability, out); break;
    }
}

void write_cleaning_log(const reliability::CleaningOutcome& outcome, std::ostream& out) {
    json j;
    j["type"] = "cleaning-log";
    j["max_missing_rate"] = outcome.max_missing_rate;
    j["pool_depth"] = outcome.pool_depth;
    j["dropped_assessors"] = json::array();
    for (const auto& drop : outcome.dropped_assessors) {
        json dj = key_to_json(drop.set);
        dj["assessor"] = drop.assessor;
        dj["missing_rate"] = drop.missing_rate;
        j["dropped_assessors"].push_back(std::move(dj));
    }
    j["emptied_sets"] = json::array();
    for (const auto& key : outcome.emptied_sets) j["emptied_sets"].push_back(key_to_json(key));
    out << j.dump(2) << '\n';
}

namespace {

json precision_to_json(const PrecisionReport& report) {
    json j;
    j["type"] = "precision-report";
    j["variant"] = report.variant;
    j["k"] = report.k;
    j["topics"] = report.topics;
    j["services"] = report.services;
    json cells = json::object();
    for (const auto& topic : report.topics) {
        json row = json::object();
        for (const auto& service : report.services) {
            const auto v = report.cell(topic, service);
            row[service] = v ? json(*v) : json(nullptr);
        }
        cells[topic] = std::move(row);
    }
    j["cells"] = std::move(cells);
    json means = json::object();
    for (const auto& service : report.services) {
        const auto m = evalmetrics::mean_over_topics(report, service);
        means[service] = m ? json(*m) : json(nullptr);
    }
    j["service_means"] = std::move(means);
    return j;
}

void write_precision_markdown(const PrecisionReport& report, std::ostream& out) {
    out << "| Topic |";
    for (const auto& service : report.services) out << ' ' << md_field(service) << " |";
    out << "\n|---|";
    for (std::size_t i = 0; i < report.services.size(); ++i) out << "---:|";
    out << '\n';
    for (const auto& topic : report.topics) {
        out << "| " << md_field(topic) << " |";
        for (const auto& service : report.services) {
            const auto v = report.cell(topic, service);
            out << ' ' << (v ? format_score(*v, 2) : "") << " |";
        }
        out << '\n';
    }
    out << "| avg. prec. |";
    for (const auto& service : report.services) {
        const auto m = evalmetrics::mean_over_topics(report, service);
        out << ' ' << (m ? format_score(*m, 2) : "") << " |";
    }
    out << '\n';
}

void write_precision_csv(const PrecisionReport& report, std::ostream& out) {
    out << "topic";
    for (const auto& service : report.services) out << ',' << csv_field(service);
    out << '\n';
    for (const auto& topic : report.topics) {
        out << csv_field(topic);
        for (const auto& service : report.services) {
            const auto v = report.cell(topic, service);
            out << ',' << (v ? format_full(*v) : "");
        }
        out << '\n';
    }
    out << "avg. prec.";
    for (const auto& service : report.services) {
        const auto m = evalmetrics::mean_over_topics(report, service);
        out << ',' << (m ? format_full(*m) : "");
    }
    out << '\n';
}

}  // namespace

void write_precision_report(const PrecisionReport& report, Format format, std::ostream& out) {
    switch (format) {
        case Format::json: out << precision_to_json(report).dump(2) << '\n'; break;
        case Format::csv: write_precision_csv(report, out); break;
        case Format::markdown: write_precision_markdown(report, out); break;
    }
}

RmsReport make_rms_report(const PrecisionReport& original, const PrecisionReport& filtered) {
    RmsReport report;
    report.k = original.k;
    report.original_variant = original.variant;
    report.filtered_variant = filtered.variant;
    report.services = original.services;
    report.per_service = evalmetrics::rms_errors(original, filtered);
    return report;
}

void write_rms_report(const RmsReport& report, Format format, std::ostream& out) {
    switch (format) {
        case Format::json: {
            json j;
            j["type"] = "rms-report";
            j["k"] = report.k;
            j["original"] = report.original_variant;
            j["filtered"] = report.filtered_variant;
            j["services"] = report.services;
            json rms = json::object();
            for (const auto& service : report.services) {
                const auto it = report.per_service.find(service);
                const bool has = it != report.per_service.end() && it->second.has_value();
                rms[service] = has ? json(*it->second) : json(nullptr);
            }
            j["rms"] = std::move(rms);
            out << j.dump(2) << '\n';
            break;
        }
        case Format::csv: {
            out << "service,rms\n";
            for (const auto& service : report.services) {
                const auto it = report.per_service.find(service);
                const bool has = it != report.per_service.end() && it->second.has_value();
                out << csv_field(service) << ',' << (has ? format_full(*it->second) : "") << '\n';
            }
            break;
        }
        case Format::markdown: {
            out << "| Service | RMSerr(" << md_field(report.original_variant) << ", "
                << md_field(report.filtered_variant) << ") |\n|---|---:|\n";
            for (const auto& service : report.services) {
                const auto it = report.per_service.find(service);
                const bool has = it != report.per_service.end() && it->second.has_value();
                out << "| " << md_field(service) << " | "
                    << (has ? format_score(*it->second, 2) : "") << " |\n";
            }
            break;
        }
    }
}

// ----- composite study -----

namespace {

json averages_to_json(const AgreementTable::Averages& avg) {
    json j;
    j["n"] = avg.n ? json(*avg.n) : json(nullptr);
    j["alpha"] = avg.alpha ? json(*avg.alpha) : json(nullptr);
    j["kappa"] = avg.kappa ? json(*avg.kappa) : json(nullptr);
    return j;
}

json study_to_json(const StudyReport& report, std::span<const TopicEntry> legend) {
    json j;
    j["type"] = "study-report";
    j["thresholds"] = json{{"kappa_min", report.thresholds.kappa_min},
                           {"alpha_min", report.thresholds.alpha_min},
                           {"max_missing_rate", report.thresholds.max_missing_rate},
                           {"pool_depth", report.thresholds.pool_depth}};
    j["k"] = report.k;

    json cleaning;
    cleaning["dropped_assessors"] = json::array();
    for (const auto& drop : report.dropped_assessors) {
        json dj = key_to_json(drop.set);
        dj["assessor"] = drop.assessor;
        dj["missing_rate"] = drop.missing_rate;
        cleaning["dropped_assessors"].push_back(std::move(dj));
    }
    cleaning["emptied_sets"] = json::array();
    for (const auto& key : report.emptied_sets)
        cleaning["emptied_sets"].push_back(key_to_json(key));
    j["cleaning"] = std::move(cleaning);

    json agreement_block;
    agreement_block["records"] = json::array();
    for (const auto& record : report.records)
        agreement_block["records"].push_back(record_to_json(record));

    const AgreementTable table = reliability::make_agreement_table(report.records);
    json averages;
    json per_session = json::object();
    for (const auto& session : table.sessions)
        per_session[session] = averages_to_json(table.session_average(session));
    averages["per_session"] = std::move(per_session);
    json per_topic = json::object();
    for (const auto& topic : table.topics)
        per_topic[topic] = averages_to_json(table.topic_average(topic));
    averages["per_topic"] = std::move(per_topic);
    averages["overall"] = averages_to_json(table.overall_average());
    agreement_block["averages"] = std::move(averages);

    json correlations;
    json per_session_corr = json::object();
    for (const auto& [session, score] : report.correlations.per_session)
        per_session_corr[session] = score_to_json(score);
    correlations["per_session"] = std::move(per_session_corr);
    correlations["averages"] = score_to_json(report.correlations.averages);
    agreement_block["correlations"] = std::move(correlations);
    j["agreement"] = std::move(agreement_block);

    json filters;
    filters["kappa"] =
        report.kappa_filter ? filter_to_json(*report.kappa_filter, SessionServices{}) : json(nullptr);
    filters["alpha"] =
        report.alpha_filter ? filter_to_json(*report.alpha_filter, SessionServices{}) : json(nullptr);
    j["filters"] = std::move(filters);

    json precision;
    precision["unfiltered"] = precision_to_json(report.unfiltered);
    precision["kappa_filtered"] =
        report.kappa_filtered ? precision_to_json(*report.kappa_filtered) : json(nullptr);
    precision["alpha_filtered"] =
        report.alpha_filtered ? precision_to_json(*report.alpha_filtered) : json(nullptr);
    j["precision"] = std::move(precision);

    const auto rms_block = [](const std::map<std::string, std::optional<double>>& rms,
                              const std::vector<std::string>& services) {
        if (rms.empty()) return json(nullptr);
        json out = json::object();
        for (const auto& service : services) {
            const auto it = rms.find(service);
            const bool has = it != rms.end() && it->second.has_value();
            out[service] = has ? json(*it->second) : json(nullptr);
        }
        return out;
    };
    j["rms"] = json{{"kappa", rms_block(report.rms_kappa, report.unfiltered.services)},
                    {"alpha", rms_block(report.rms_alpha, report.unfiltered.services)}};

    if (!legend.empty()) {
        json topics = json::array();
        for (const auto& entry : legend)
            topics.push_back(json{{"id", entry.id},
                                  {"title", entry.title},
                                  {"description", entry.description}});
        j["topics"] = std::move(topics);
    }
    return j;
}

void write_study_markdown(const StudyReport& report, std::ostream& out,
                          std::span<const TopicEntry> legend) {
    out << "# Reliability study\n\n";
    out << "Thresholds: kappa >= " << format_decimal(report.thresholds.kappa_min, 3)
        << ", alpha >= " << format_decimal(report.thresholds.alpha_min, 3)
        << ", max missing rate " << format_decimal(report.thresholds.max_missing_rate, 3)
        << ", pool depth " << report.thresholds.pool_depth << ", k = " << report.k << ".\n";

    const AgreementTable table = reliability::make_agreement_table(report.records);

    out << "\n## Agreement by session and topic\n\n";
    out << "| Topic |";
    for (const auto& session : table.sessions)
        out << ' ' << md_field(session) << " n | " << md_field(session) << " alpha | "
            << md_field(session) << " kappa |";
    out << " avg n | avg alpha | avg kappa |\n|---|";
    for (std::size_t i = 0; i < 3 * (table.sessions.size() + 1); ++i) out << "---:|";
    out << '\n';

    std::vector<std::string> notes;
    const auto score_cell = [&](const ScoreResult& s, const SetKey& key, const char* name) {
        if (s) return format_score(s.value(), 3);
        notes.push_back(key.label() + " " + name + ": " + std::string(to_string(s.reason())));
        return std::string{};
    };
    for (const auto& topic : table.topics) {
        out << "| " << md_field(topic) << " |";
        for (const auto& session : table.sessions) {
            const auto it = table.cells.find(SetKey{session, topic});
            if (it == table.cells.end()) {
                out << "  |  |  |";
                continue;
            }
            const AgreementRecord& r = it->second;
            out << ' ' << r.assessor_count << " | "
                << score_cell(r.alpha, it->first, "alpha") << " | "
                << score_cell(r.kappa, it->first, "kappa") << " |";
        }
        const auto avg = table.topic_average(topic);
        out << ' ' << (avg.n ? format_decimal(*avg.n, 1) : "") << " | "
            << (avg.alpha ? format_score(*avg.alpha, 3) : "") << " | "
            << (avg.kappa ? format_score(*avg.kappa, 3) : "") << " |\n";
    }
    out << "| avg. |";
    for (const auto& session : table.sessions) {
        const auto avg = table.session_average(session);
        out << ' ' << (avg.n ? format_decimal(*avg.n, 1) : "") << " | "
            << (avg.alpha ? format_score(*avg.alpha, 3) : "") << " | "
            << (avg.kappa ? format_score(*avg.kappa, 3) : "") << " |";
    }
    const auto overall = table.overall_average();
    out << ' ' << (overall.n ? format_decimal(*overall.n, 1) : "") << " | "
        << (overall.alpha ? format_score(*overall.alpha, 3) : "") << " | "
        << (overall.kappa ? format_score(*overall.kappa, 3) : "") << " |\n";

    if (!notes.empty()) {
        out << "\nUndefined coefficients:\n";
        for (const auto& note : notes) out << "- " << note << '\n';
    }

    out << "\n## Correlations (kappa vs alpha)\n\n| Scope | r |\n|---|---:|\n";
    for (const auto& [session, score] : report.correlations.per_session)
        out << "| " << md_field(session) << " | "
            << (score ? format_score(score.value(), 3)
                      : std::string(to_string(score.reason())))
            << " |\n";
    out << "| averages | "
        << (report.correlations.averages
                ? format_score(report.correlations.averages.value(), 3)
                : std::string(to_string(report.correlations.averages.reason())))
        << " |\n";

    const auto precision_block = [&](const PrecisionReport& pr,
                                     const std::map<std::string, std::optional<double>>* rms) {
        out << "\n## Precision@" << pr.k << " - " << pr.variant << "\n\n";
        write_precision_markdown(pr, out);
        if (rms && !rms->empty()) {
            out << "| RMSerr(o,f) |";
            for (const auto& service : pr.services) {
                const auto it = rms->find(service);
                const bool has = it != rms->end() && it->second.has_value();
                out << ' ' << (has ? format_score(*it->second, 2) : "") << " |";
            }
            out << '\n';
        }
    };
    precision_block(report.unfiltered, nullptr);
    if (report.kappa_filtered) precision_block(*report.kappa_filtered, &report.rms_kappa);
    if (report.alpha_filtered) precision_block(*report.alpha_filtered, &report.rms_alpha);

    out << "\n## Cleaning\n\n";
    if (report.dropped_assessors.empty() && report.emptied_sets.empty()) {
        out << "No assessors dropped.\n";
    } else {
        out << "| Session | Topic | Assessor | Missing rate |\n|---|---|---|---:|\n";
        for (const auto& drop : report.dropped_assessors)
            out << "| " << md_field(drop.set.session) << " | " << md_field(drop.set.topic)
                << " | " << md_field(drop.assessor) << " | " << format_decimal(drop.missing_rate, 3)
                << " |\n";
        for (const auto& key : report.emptied_sets)
            out << "\nSet " << key.label() << " lost every assessor and was removed.\n";
    }

    if (!legend.empty()) {
        out << "\n## Topics\n\n| Id | Title | Description |\n|---|---|---|\n";
        for (const auto& entry : legend)
            out << "| " << md_field(entry.id) << " | " << md_field(entry.title) << " | "
                << md_field(entry.description) << " |\n";
    }
}

void write_study_csv(const StudyReport& report, std::ostream& out) {
    out << "# thresholds\n";
    out << "kappa_min,alpha_min,max_missing_rate,pool_depth,k\n";
    out << format_full(report.thresholds.kappa_min) << ','
        << format_full(report.thresholds.alpha_min) << ','
        << format_full(report.thresholds.max_missing_rate) << ','
        << report.thresholds.pool_depth << ',' << report.k << '\n';

    out << "# cleaning\nsession,topic,assessor,missing_rate\n";
    for (const auto& drop : report.dropped_assessors)
        out << csv_field(drop.set.session) << ',' << csv_field(drop.set.topic) << ','
            << csv_field(drop.assessor) << ',' << format_full(drop.missing_rate) << '\n';

    out << "# agreement\n";
    write_records_csv(report.records, out);

    const AgreementTable table = reliability::make_agreement_table(report.records);
    out << "# agreement averages\nscope,id,n,alpha,kappa\n";
    const auto avg_row = [&](const char* scope, const std::string& id,
                             const AgreementTable::Averages& avg) {
        out << scope << ',' << csv_field(id) << ',' << (avg.n ? format_full(*avg.n) : "") << ','
            << (avg.alpha ? format_full(*avg.alpha) : "") << ','
            << (avg.kappa ? format_full(*avg.kappa) : "") << '\n';
    };
    for (const auto& session : table.sessions)
        avg_row("session", session, table.session_average(session));
    for (const auto& topic : table.topics) avg_row("topic", topic, table.topic_average(topic));
    avg_row("overall", "", table.overall_average());

    out << "# correlations\nscope,id,value,reason\n";
    for (const auto& [session, score] : report.correlations.per_session) {
        out << "session," << csv_field(session) << ',';
        if (score) out << format_full(score.value()) << ",\n";
        else out << ',' << to_string(score.reason()) << '\n';
    }
    out << "averages,,";
    if (report.correlations.averages) out << format_full(report.correlations.averages.value()) << ",\n";
    else out << ',' << to_string(report.correlations.averages.reason()) << '\n';

    const auto precision_block = [&](const char* name, const PrecisionReport& pr) {
        out << "# precision " << name << '\n';
        write_precision_csv(pr, out);
    };
    precision_block("unfiltered", report.unfiltered);
    if (report.kappa_filtered) precision_block("kappa-filtered", *report.kappa_filtered);
    if (report.alpha_filtered) precision_block("alpha-filtered", *report.alpha_filtered);

    const auto rms_block = [&](const char* name,
                               const std::map<std::string, std::optional<double>>& rms) {
        if (rms.empty()) return;
        out << "# rms " << name << "\nservice,rms\n";
        for (const auto& service : report.unfiltered.services) {
            const auto it = rms.find(service);
            const bool has = it != rms.end() && it->second.has_value();
            out << csv_field(service) << ',' << (has ? format_full(*it->second) : "") << '\n';
        }
    };
    rms_block("kappa", report.rms_kappa);
    rms_block("alpha", report.rms_alpha);
}

}  // namespace

void write_study(const StudyReport& report, Format format, std::ostream& out,
                 std::span<const TopicEntry> topic_legend) {
    switch (format) {
        case Format::json: out << study_to_json(report, topic_legend).dump(2) << '\n'; break;
        case Format::csv: write_study_csv(report, out); break;
        case Format::markdown: write_study_markdown(report, out, topic_legend); break;
    }
}

StudyReport parse_study_json(std::istream& in, const std::string& source) {
    const json j = parse_json_root(in, source, "study-report");
    StudyReport report;
    const json& t = j.at("thresholds");
    report.thresholds.kappa_min = t.at("kappa_min").get<double>();
    report.thresholds.alpha_min = t.at("alpha_min").get<double>();
    report.thresholds.max_missing_rate = t.at("max_missing_rate").get<double>();
    report.thresholds.pool_depth = t.at("pool_depth").get<int>();
    report.k = j.at("k").get<int>();

    for (const auto& dj : j.at("cleaning").at("dropped_assessors"))
        report.dropped_assessors.push_back({key_from_json(dj),
                                            dj.at("assessor").get<std::string>(),
                                            dj.at("missing_rate").get<double>()});
    for (const auto& kj : j.at("cleaning").at("emptied_sets"))
        report.emptied_sets.push_back(key_from_json(kj));

    for (const auto& rj : j.at("agreement").at("records"))
        report.records.push_back(record_from_json(rj, source));
    for (const auto& [session, score] : j.at("agreement").at("correlations").at("per_session").items())
        report.correlations.per_session[session] = score_from_json(score, source);
    report.correlations.averages =
        score_from_json(j.at("agreement").at("correlations").at("averages"), source);

    const auto parse_filter = [&](const json& fj) -> std::optional<FilterOutcome> {
        if (fj.is_null()) return std::nullopt;
        std::stringstream buffer(fj.dump());
        return parse_filter_outcome(buffer, source);
    };
    report.kappa_filter = parse_filter(j.at("filters").at("kappa"));
    report.alpha_filter = parse_filter(j.at("filters").at("alpha"));

    const auto parse_precision = [&](const json& pj) -> std::optional<PrecisionReport> {
        if (pj.is_null()) return std::nullopt;
        std::stringstream buffer(pj.dump());
        return parse_precision_report(buffer, source);
    };
    auto unfiltered = parse_precision(j.at("precision").at("unfiltered"));
    if (!unfiltered) throw ParseError(source, 0, "study report lacks the unfiltered grid");
    report.unfiltered = std::move(*unfiltered);
    report.kappa_filtered = parse_precision(j.at("precision").at("kappa_filtered"));
    report.alpha_filtered = parse_precision(j.at("precision").at("alpha_filtered"));

    const auto parse_rms = [&](const json& rj) {
        std::map<std::string, std::optional<double>> rms;
        if (rj.is_null()) return rms;
        for (const auto& [service, value] : rj.items())
            rms[service] = value.is_null() ? std::nullopt : std::optional<double>(value.get<double>());
        return rms;
    };
    report.rms_kappa = parse_rms(j.at("rms").at("kappa"));
    report.rms_alpha = parse_rms(j.at("rms").at("alpha"));
    return report;
}

}  // namespace irrkit::dataio
