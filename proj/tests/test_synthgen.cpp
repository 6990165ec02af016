#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "irrkit/agreement.hpp"
#include "irrkit/dataio.hpp"
#include "irrkit/synthgen.hpp"

using namespace irrkit;
using namespace irrkit::synthgen;

namespace {

std::string as_tsv(const Dataset& data) {
    std::ostringstream out;
    dataio::write_assessments(data, out);
    return out.str();
}

bool truth_is_degenerate(const AssessmentSet& set) {
    // with error 0 and no missing cells, the first row is the truth vector
    bool saw0 = false, saw1 = false;
    for (std::size_t d = 0; d < set.document_count(); ++d) {
        const auto v = set.cell(0, d);
        if (v == 0) saw0 = true;
        if (v == 1) saw1 = true;
    }
    return !(saw0 && saw1);
}

}  // namespace

TEST_CASE("identical seeds give identical bytes") {
    SimulationConfig config;
    config.assessors = 4;
    config.documents = 30;
    config.error_rate = 0.3;
    config.missing_rate = 0.1;
    config.seed = 42;
    config.sessions = 2;
    config.topics = 3;

    const auto first = as_tsv(generate(config));
    const auto second = as_tsv(generate(config));
    CHECK(first == second);

    config.seed = 43;
    CHECK(as_tsv(generate(config)) != first);
}

TEST_CASE("zero error copies the truth everywhere") {
    SimulationConfig config;
    config.assessors = 5;
    config.documents = 40;
    config.error_rate = 0.0;
    config.missing_rate = 0.0;
    config.seed = 7;
    const auto data = generate(config);
    REQUIRE(data.sets.size() == 1);
    const auto& set = data.sets[0];
    REQUIRE_FALSE(truth_is_degenerate(set));

    CHECK(agreement::fleiss_kappa(set).value() == 1.0);
    CHECK(agreement::krippendorff_alpha(set).value() == 1.0);
    CHECK(agreement::percent_agreement(set).value() == 1.0);
    CHECK(agreement::jaccard_mean(set).value() == 1.0);
}

TEST_CASE("adding assessors never perturbs existing ones") {
    SimulationConfig small;
    small.assessors = 3;
    small.documents = 25;
    small.error_rate = 0.25;
    small.missing_rate = 0.15;
    small.seed = 1234;
    SimulationConfig large = small;
    large.assessors = 6;

    const auto a = generate(small);
    const auto b = generate(large);
    REQUIRE(a.sets.size() == 1);
    REQUIRE(b.sets.size() == 1);
    for (std::size_t assessor = 0; assessor < 3; ++assessor) {
        for (std::size_t d = 0; d < a.sets[0].document_count(); ++d) {
            CHECK(a.sets[0].cell(assessor, d) == b.sets[0].cell(assessor, d));
        }
    }
}

TEST_CASE("missing rate masks roughly the requested share") {
    SimulationConfig config;
    config.assessors = 10;
    config.documents = 200;
    config.missing_rate = 0.3;
    config.seed = 5;
    const auto data = generate(config);
    std::size_t missing = 0;
    const auto& set = data.sets[0];
    for (std::size_t a = 0; a < set.assessor_count(); ++a)
        missing += set.document_count() - set.judged_count(a);
    const double rate = static_cast<double>(missing) /
                        static_cast<double>(set.assessor_count() * set.document_count());
    CHECK(rate == doctest::Approx(0.3).epsilon(0.15));
}

TEST_CASE("config validation") {
    SimulationConfig config;
    config.assessors = 0;
    CHECK_THROWS_AS(generate(config), std::invalid_argument);
    config.assessors = 1;
    config.prevalence = 1.5;
    CHECK_THROWS_AS(generate(config), std::invalid_argument);
    config.prevalence = 0.5;
    config.error_rate = -0.1;
    CHECK_THROWS_AS(generate(config), std::invalid_argument);
}

TEST_CASE("session and topic grid shape") {
    SimulationConfig config;
    config.assessors = 2;
    config.documents = 5;
    config.sessions = 3;
    config.topics = 4;
    config.seed = 9;
    const auto data = generate(config);
    CHECK(data.sets.size() == 12);
    CHECK(data.sessions() == std::vector<std::string>{"s1", "s2", "s3"});
    CHECK(data.topics() == std::vector<std::string>{"t01", "t02", "t03", "t04"});

    // sessions draw independent truths, so sets differ across sessions
    const auto* s1 = data.find(SetKey{"s1", "t01"});
    const auto* s2 = data.find(SetKey{"s2", "t01"});
    REQUIRE(s1 != nullptr);
    REQUIRE(s2 != nullptr);
    bool identical = true;
    for (std::size_t d = 0; d < s1->document_count(); ++d)
        identical = identical && s1->cell(0, d) == s2->cell(0, d);
    CHECK_FALSE(identical);
}

TEST_CASE("noise lowers agreement on average") {
    const auto mean_kappa = [](double error_rate, int seeds) {
        double sum = 0.0;
        int defined = 0;
        for (int seed = 0; seed < seeds; ++seed) {
            SimulationConfig config;
            config.assessors = 5;
            config.documents = 60;
            config.error_rate = error_rate;
            config.seed = static_cast<std::uint64_t>(seed);
            const auto data = generate(config);
            const auto kappa = agreement::fleiss_kappa(data.sets[0]);
            if (kappa) {
                sum += kappa.value();
                ++defined;
            }
        }
        REQUIRE(defined > 0);
        return sum / defined;
    };
    const double at0 = mean_kappa(0.0, 40);
    const double at25 = mean_kappa(0.25, 40);
    const double at50 = mean_kappa(0.5, 40);
    CHECK(at0 == doctest::Approx(1.0));
    CHECK(at0 > at25);
    CHECK(at25 > at50);
    CHECK(at50 == doctest::Approx(0.0).epsilon(0.2));
}
