#include "irrkit/synthgen.hpp"

#include <algorithm>
#include <cstdio>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace irrkit::synthgen {

namespace {

constexpr std::uint32_t kTruthStream = 0;  // assessor streams start at 1

// Independent engine per (seed, session, topic, stream). mt19937_64 output
// is fully specified by the standard, and uniform doubles are derived from
// raw engine words, so the bytes are identical on every platform.
std::mt19937_64 make_engine(std::uint64_t seed, std::uint32_t session, std::uint32_t topic,
                            std::uint32_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                      static_cast<std::uint32_t>(seed >> 32), session, topic, stream};
    return std::mt19937_64(seq);
}

bool bernoulli(std::mt19937_64& engine, double p) {
    const double u = static_cast<double>(engine() >> 11) * 0x1.0p-53;
    return u < p;
}

std::string padded(const char* prefix, int value, int width) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%0*d", prefix, std::clamp(width, 1, 10), value);
    return buf;
}

int digits(int n) {
    int d = 1;
    while (n >= 10) {
        n /= 10;
        ++d;
    }
    return d;
}

}  // namespace

Dataset generate(const SimulationConfig& config) {
    if (config.assessors < 1 || config.documents < 1 || config.sessions < 1 ||
        config.topics < 1)
        throw std::invalid_argument("simulation counts must be >= 1");
    for (const double p : {config.prevalence, config.error_rate, config.missing_rate}) {
        if (p < 0.0 || p > 1.0)
            throw std::invalid_argument("simulation probabilities must lie in [0, 1]");
    }

    const int topic_width = std::max(2, digits(config.topics));
    const int assessor_width = std::max(2, digits(config.assessors));
    const int doc_width = std::max(3, digits(config.documents));

    Dataset dataset;
    for (int s = 1; s <= config.sessions; ++s) {
        const std::string session = "s" + std::to_string(s);
        for (int t = 1; t <= config.topics; ++t) {
            const std::string topic = padded("t", t, topic_width);

            std::vector<std::string> documents(static_cast<std::size_t>(config.documents));
            for (int d = 0; d < config.documents; ++d)
                documents[static_cast<std::size_t>(d)] = padded("d", d + 1, doc_width);

            auto truth_engine = make_engine(config.seed, static_cast<std::uint32_t>(s),
                                            static_cast<std::uint32_t>(t), kTruthStream);
            std::vector<int> truth(static_cast<std::size_t>(config.documents));
            for (auto& label : truth) label = bernoulli(truth_engine, config.prevalence) ? 1 : 0;

            std::vector<std::string> assessors(static_cast<std::size_t>(config.assessors));
            std::vector<std::optional<int>> cells(
                static_cast<std::size_t>(config.assessors * config.documents));
            for (int a = 0; a < config.assessors; ++a) {
                assessors[static_cast<std::size_t>(a)] = padded("a", a + 1, assessor_width);
                auto engine = make_engine(config.seed, static_cast<std::uint32_t>(s),
                                          static_cast<std::uint32_t>(t),
                                          static_cast<std::uint32_t>(a) + 1);
                for (int d = 0; d < config.documents; ++d) {
                    const bool flip = bernoulli(engine, config.error_rate);
                    const bool missing = bernoulli(engine, config.missing_rate);
                    if (missing) continue;
                    const int label = truth[static_cast<std::size_t>(d)] ^ (flip ? 1 : 0);
                    cells[static_cast<std::size_t>(a * config.documents + d)] = label;
                }
            }

            dataset.sets.emplace_back(session, topic, std::move(assessors),
                                      std::move(documents), std::vector<int>{0, 1},
                                      std::move(cells));
        }
    }
    dataset.sort_sets();
    return dataset;
}

}  // namespace irrkit::synthgen
