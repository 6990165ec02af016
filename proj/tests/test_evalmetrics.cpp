#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "irrkit/evalmetrics.hpp"
#include "support/grids.hpp"

using namespace irrkit;
using namespace irrkit::evalmetrics;
using irrkit::testing::grid;

namespace {

RankedRun run(const std::string& service, const std::string& topic,
              const std::vector<std::string>& docs) {
    std::vector<RunEntry> entries;
    for (std::size_t i = 0; i < docs.size(); ++i)
        entries.push_back({docs[i], static_cast<int>(i) + 1, 1.0 / static_cast<double>(i + 1)});
    return RankedRun(service, topic, std::move(entries));
}

std::vector<std::string> numbered(const std::string& prefix, int from, int count) {
    std::vector<std::string> docs;
    for (int i = 0; i < count; ++i) docs.push_back(prefix + std::to_string(from + i));
    return docs;
}

}  // namespace

TEST_CASE("ranked run validation") {
    CHECK_THROWS_AS(RankedRun("S", "t", {{"d1", 1, 0.5}, {"d1", 2, 0.4}}), std::invalid_argument);
    CHECK_THROWS_AS(RankedRun("S", "t", {{"d1", 1, 0.5}, {"d2", 3, 0.4}}), std::invalid_argument);
    CHECK_THROWS_AS(RankedRun("S", "t", {{"d1", 2, 0.5}}), std::invalid_argument);

    // entries may arrive out of order
    const RankedRun r("S", "t", {{"d2", 2, 0.4}, {"d1", 1, 0.5}});
    CHECK(r.ranking().front().doc == "d1");
}

TEST_CASE("pool construction") {
    SUBCASE("disjoint runs add up") {
        std::vector<RankedRun> runs;
        for (int s = 0; s < 5; ++s)
            runs.push_back(run("S" + std::to_string(s), "t", numbered("d", s * 100, 10)));
        const auto pool = build_pool(runs, 10);
        CHECK(pool.documents.size() == 50);
        CHECK(pool.source_services.size() == 5);
    }
    SUBCASE("identical runs collapse") {
        std::vector<RankedRun> runs(5, run("S", "t", numbered("d", 1, 10)));
        CHECK(build_pool(runs, 10).documents.size() == 10);
    }
    SUBCASE("partial overlap stays within bounds") {
        std::vector<RankedRun> runs;
        runs.push_back(run("A", "t", numbered("d", 1, 10)));
        runs.push_back(run("B", "t", numbered("d", 6, 10)));
        runs.push_back(run("C", "t", numbered("d", 11, 10)));
        runs.push_back(run("D", "t", numbered("d", 16, 10)));
        const auto size = build_pool(runs, 10).documents.size();
        CHECK(size >= 10);
        CHECK(size <= 40);
        CHECK(size == 25);
    }
    SUBCASE("depth cuts deeper runs") {
        std::vector<RankedRun> runs{run("A", "t", numbered("d", 1, 30))};
        CHECK(build_pool(runs, 10).documents.size() == 10);
    }
    SUBCASE("mixed topics are rejected") {
        std::vector<RankedRun> runs{run("A", "t1", {"d1"}), run("A", "t2", {"d2"})};
        CHECK_THROWS_AS(build_pool(runs, 10), std::invalid_argument);
    }
    SUBCASE("documents come out in natural ascending order") {
        std::vector<RankedRun> runs{run("A", "t", {"d10", "d2", "d1"})};
        const auto pool = build_pool(runs, 10);
        CHECK(pool.documents == std::vector<std::string>{"d1", "d2", "d10"});
    }
}

TEST_CASE("precision at k") {
    const auto r = run("S", "t", numbered("d", 1, 10));
    std::set<std::string> all;
    for (const auto& e : r.ranking()) all.insert(e.doc);

    CHECK(precision_at_k(r, all, 10) == doctest::Approx(1.0));
    CHECK(precision_at_k(r, {}, 10) == doctest::Approx(0.0));

    const auto first_seven = numbered("d", 1, 7);
    const std::set<std::string> seven(first_seven.begin(), first_seven.end());
    CHECK(precision_at_k(r, seven, 10) == doctest::Approx(0.7));

    SUBCASE("short rankings keep the denominator") {
        const auto shorty = run("S", "t", numbered("d", 1, 3));
        const auto first_three = numbered("d", 1, 3);
        const std::set<std::string> three(first_three.begin(), first_three.end());
        CHECK(precision_at_k(shorty, three, 10) == doctest::Approx(0.3));
    }
    SUBCASE("unjudged documents count as not relevant") {
        CHECK(precision_at_k(r, {"d1", "nonexistent"}, 10) == doctest::Approx(0.1));
    }
    SUBCASE("monotone in the relevant set") {
        std::set<std::string> relevant;
        double last = precision_at_k(r, relevant, 10);
        for (int i = 1; i <= 10; ++i) {
            relevant.insert("d" + std::to_string(i));
            const double now = precision_at_k(r, relevant, 10);
            CHECK(now >= last);
            last = now;
        }
    }
}

TEST_CASE("per topic precision") {
    const auto r = run("SOLR", "t1", numbered("d", 1, 10));
    const std::vector<RankedRun> runs{r};
    const SessionServices everywhere;

    SUBCASE("single assessor matches precision_at_k directly") {
        Dataset data;
        // d1..d3 relevant out of the 10 pool documents
        data.sets.push_back(grid("s1", "t1", {"1110000000"}));
        const auto report = per_topic_precision(data, runs, everywhere, 10, "unfiltered");
        REQUIRE(report.cell("t1", "SOLR").has_value());
        CHECK(*report.cell("t1", "SOLR") == doctest::Approx(0.3));
        CHECK(*report.cell("t1", "SOLR") ==
              doctest::Approx(precision_at_k(r, data.sets[0].relevant_documents(0), 10)));
    }
    SUBCASE("two assessors average") {
        Dataset data;
        data.sets.push_back(grid("s1", "t1", {"1111000000", "1111110000"}));  // 0.4 and 0.6
        const auto report = per_topic_precision(data, runs, everywhere, 10, "unfiltered");
        CHECK(*report.cell("t1", "SOLR") == doctest::Approx(0.5));
    }
    SUBCASE("assessors pool across sessions") {
        Dataset data;
        data.sets.push_back(grid("s1", "t1", {"1111000000"}));
        data.sets.push_back(grid("s2", "t1", {"1111110000"}));
        const auto report = per_topic_precision(data, runs, everywhere, 10, "unfiltered");
        CHECK(*report.cell("t1", "SOLR") == doctest::Approx(0.5));
    }
    SUBCASE("unavailable service contributes nothing") {
        Dataset data;
        data.sets.push_back(grid("s1", "t1", {"1111000000"}));
        data.sets.push_back(grid("s2", "t1", {"1111110000"}));
        SessionServices availability;
        availability.set("s1", {"SOLR"});
        availability.set("s2", {"OTHER"});
        const auto report = per_topic_precision(data, runs, availability, 10, "unfiltered");
        CHECK(*report.cell("t1", "SOLR") == doctest::Approx(0.4));
    }
    SUBCASE("dropped topics leave absent cells") {
        Dataset data;
        data.sets.push_back(grid("s1", "t1", {"1110000000"}));
        const auto report = per_topic_precision(data, runs, everywhere, 10, "filtered",
                                                {"t1", "t2"}, {"SOLR", "RAND"});
        CHECK(report.cell("t1", "SOLR").has_value());
        CHECK_FALSE(report.cell("t2", "SOLR").has_value());
        CHECK_FALSE(report.cell("t1", "RAND").has_value());
        CHECK(report.topics == std::vector<std::string>{"t1", "t2"});
        CHECK(report.services == std::vector<std::string>{"SOLR", "RAND"});
    }
    SUBCASE("missing cells are treated as not relevant") {
        Dataset data;
        data.sets.push_back(grid("s1", "t1", {"111???????"}));
        const auto report = per_topic_precision(data, runs, everywhere, 10, "unfiltered");
        CHECK(*report.cell("t1", "SOLR") == doctest::Approx(0.3));
    }
}

TEST_CASE("mean over topics") {
    PrecisionReport report;
    report.variant = "unfiltered";
    report.k = 10;
    report.topics = {"t1", "t2", "t3"};
    report.services = {"A", "B"};
    report.cells[{"t1", "A"}] = 0.4;
    report.cells[{"t2", "A"}] = 0.6;

    REQUIRE(mean_over_topics(report, "A").has_value());
    CHECK(*mean_over_topics(report, "A") == doctest::Approx(0.5));
    CHECK_FALSE(mean_over_topics(report, "B").has_value());

    report.cells[{"t3", "A"}] = 0.4;
    CHECK(*mean_over_topics(report, "A") == doctest::Approx(1.4 / 3).epsilon(1e-12));
}

TEST_CASE("rms error") {
    SUBCASE("hand value") {
        const std::vector<double> o{0.5, 0.7};
        const std::vector<double> f{0.4, 0.7};
        REQUIRE(rms_error(o, f).has_value());
        CHECK(*rms_error(o, f) == doctest::Approx(std::sqrt(0.005)).epsilon(1e-12));
        CHECK(*rms_error(o, f) == doctest::Approx(0.0707).epsilon(1e-3));
    }
    SUBCASE("identical grids give zero") {
        const std::vector<double> o{0.5, 0.7, 0.1};
        CHECK(*rms_error(o, o) == 0.0);
    }
    SUBCASE("absent positions are skipped, empty support is absent") {
        const std::vector<std::optional<double>> o{0.5, std::nullopt, 0.7};
        const std::vector<std::optional<double>> f{0.4, 0.9, std::nullopt};
        CHECK(*rms_error(std::span<const std::optional<double>>(o),
                         std::span<const std::optional<double>>(f)) == doctest::Approx(0.1));
        const std::vector<std::optional<double>> none{std::nullopt};
        CHECK_FALSE(rms_error(std::span<const std::optional<double>>(none),
                              std::span<const std::optional<double>>(none))
                        .has_value());
    }
    SUBCASE("symmetry and topic-order invariance on reports") {
        PrecisionReport a, b;
        a.variant = "unfiltered";
        b.variant = "kappa-filtered";
        a.k = b.k = 10;
        a.topics = {"t1", "t2", "t3"};
        b.topics = {"t3", "t1", "t2"};
        a.services = b.services = {"S"};
        a.cells[{"t1", "S"}] = 0.5;
        a.cells[{"t2", "S"}] = 0.7;
        a.cells[{"t3", "S"}] = 0.9;
        b.cells[{"t1", "S"}] = 0.4;
        b.cells[{"t3", "S"}] = 0.8;
        const auto ab = rms_error(a, b, "S");
        const auto ba = rms_error(b, a, "S");
        REQUIRE(ab.has_value());
        CHECK(*ab == *ba);
        CHECK(*ab == doctest::Approx(0.1).epsilon(1e-12));
        CHECK(rms_errors(a, b).at("S") == ab);
    }
}

TEST_CASE("property: pool construction is idempotent and order independent") {
    std::mt19937 rng(37);
    std::uniform_int_distribution<int> pick(1, 30);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<RankedRun> runs;
        for (int s = 0; s < 4; ++s) {
            std::set<int> ids;
            while (ids.size() < 12) ids.insert(pick(rng));
            std::vector<std::string> docs;
            for (const int id : ids) docs.push_back("d" + std::to_string(id));
            std::shuffle(docs.begin(), docs.end(), rng);
            runs.push_back(run("S" + std::to_string(s), "t", docs));
        }
        const auto pool = build_pool(runs, 10);
        auto reversed = runs;
        std::reverse(reversed.begin(), reversed.end());
        CHECK(build_pool(reversed, 10).documents == pool.documents);

        // pooling the pooled documents again changes nothing
        std::vector<RankedRun> again{run("ALL", "t", pool.documents)};
        const auto twice = build_pool(again, static_cast<int>(pool.documents.size()));
        CHECK(twice.documents == pool.documents);
    }
}
