#include "irrkit/agreement.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace irrkit::agreement {

namespace {

// Sorting before summation makes the result independent of the order the
// contributions were collected in, so reordering assessors or documents
// cannot shift the last ulp.
double stable_sum(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    return std::accumulate(values.begin(), values.end(), 0.0);
}

// Index of each cell's label in the set's category list, or -1 when missing.
std::vector<int> category_indices(const AssessmentSet& set) {
    const auto& cats = set.categories();
    std::vector<int> out(set.assessor_count() * set.document_count(), -1);
    for (std::size_t a = 0; a < set.assessor_count(); ++a) {
        for (std::size_t d = 0; d < set.document_count(); ++d) {
            const auto label = set.cell(a, d);
            if (!label) continue;
            const auto it = std::lower_bound(cats.begin(), cats.end(), *label);
            out[a * set.document_count() + d] = static_cast<int>(it - cats.begin());
        }
    }
    return out;
}

}  // namespace

std::string_view to_string(UndefinedReason reason) {
    switch (reason) {
        case UndefinedReason::no_variation: return "no-variation";
        case UndefinedReason::single_assessor: return "single-assessor";
        case UndefinedReason::no_pairable_values: return "no-pairable-values";
        case UndefinedReason::non_binary: return "non-binary";
        case UndefinedReason::unreported: return "unreported";
    }
    return "unknown";
}

std::optional<UndefinedReason> undefined_reason_from_string(std::string_view text) {
    if (text == "no-variation") return UndefinedReason::no_variation;
    if (text == "single-assessor") return UndefinedReason::single_assessor;
    if (text == "no-pairable-values") return UndefinedReason::no_pairable_values;
    if (text == "non-binary") return UndefinedReason::non_binary;
    if (text == "unreported") return UndefinedReason::unreported;
    return std::nullopt;
}

double ScoreResult::value() const {
    if (!value_) throw std::logic_error("score is undefined");
    return *value_;
}

UndefinedReason ScoreResult::reason() const {
    if (value_) throw std::logic_error("score is defined");
    return reason_;
}

ContingencyTable2x2::ContingencyTable2x2(double a, double b, double c, double d,
                                         long long n_values)
    : a_(a), b_(b), c_(c), d_(d), n_values_(n_values) {
    if (a < 0 || b < 0 || c < 0 || d < 0)
        throw std::invalid_argument("contingency proportions must be non-negative");
    if (std::fabs((a + b + c + d) - 1.0) > 1e-9)
        throw std::invalid_argument("contingency proportions must sum to 1");
    if (n_values < 2) throw std::invalid_argument("contingency table needs n >= 2 joint values");
}

ContingencyTable2x2 contingency_from_set(const AssessmentSet& set) {
    if (set.assessor_count() != 2)
        throw std::invalid_argument("contingency table needs exactly two assessors");
    if (!set.is_binary())
        throw std::invalid_argument("contingency table needs binary categories {0, 1}");

    long long counts[2][2] = {{0, 0}, {0, 0}};  // [B label][A label]
    long long joint = 0;
    for (std::size_t d = 0; d < set.document_count(); ++d) {
        const auto va = set.cell(0, d);
        const auto vb = set.cell(1, d);
        if (!va || !vb) continue;
        ++counts[*vb][*va];
        ++joint;
    }
    if (joint == 0)
        throw std::invalid_argument("the two assessors share no judged document");

    const double n = static_cast<double>(joint);
    return ContingencyTable2x2(counts[0][0] / n, counts[0][1] / n, counts[1][0] / n,
                               counts[1][1] / n, 2 * joint);
}

std::string_view to_string(LandisKochBand band) {
    switch (band) {
        case LandisKochBand::poor: return "poor";
        case LandisKochBand::slight: return "slight";
        case LandisKochBand::fair: return "fair";
        case LandisKochBand::moderate: return "moderate";
        case LandisKochBand::substantial: return "substantial";
        case LandisKochBand::almost_perfect: return "almost-perfect";
    }
    return "unknown";
}

std::string_view to_string(GreveWenturaBand band) {
    switch (band) {
        case GreveWenturaBand::not_serious: return "not-serious";
        case GreveWenturaBand::acceptable: return "acceptable";
        case GreveWenturaBand::acceptable_to_good: return "acceptable-to-good";
        case GreveWenturaBand::good_to_excellent: return "good-to-excellent";
    }
    return "unknown";
}

std::string_view to_string(AlphaBand band) {
    return band == AlphaBand::threshold_met ? "perfect-agreement-threshold-met"
                                            : "below-threshold";
}

KappaInterpretation interpret_kappa(double score) {
    if (!(score >= -1.0 && score <= 1.0))
        throw std::invalid_argument("kappa score outside [-1, 1]");

    LandisKochBand lk;
    if (score < 0.0) lk = LandisKochBand::poor;
    else if (score < 0.2) lk = LandisKochBand::slight;
    else if (score < 0.4) lk = LandisKochBand::fair;
    else if (score < 0.6) lk = LandisKochBand::moderate;
    else if (score < 0.8) lk = LandisKochBand::substantial;
    else lk = LandisKochBand::almost_perfect;

    GreveWenturaBand gw;
    if (score < 0.4) gw = GreveWenturaBand::not_serious;
    else if (score < 0.6) gw = GreveWenturaBand::acceptable;
    else if (score < 0.75) gw = GreveWenturaBand::acceptable_to_good;
    else gw = GreveWenturaBand::good_to_excellent;

    return KappaInterpretation{lk, gw};
}

AlphaBand interpret_alpha(double score) {
    if (!(score <= 1.0)) throw std::invalid_argument("alpha score above 1");
    return score >= 0.8 ? AlphaBand::threshold_met : AlphaBand::below_threshold;
}

ScoreResult cohen_kappa_2x2(const ContingencyTable2x2& t) {
    const double expected = t.p_a() * t.q_b() + t.p_b() * t.q_a();
    if (expected == 0.0) return ScoreResult::undefined(UndefinedReason::no_variation);
    return ScoreResult::defined(1.0 - (t.b() + t.c()) / expected);
}

ScoreResult alpha_2x2(const ContingencyTable2x2& t) {
    if (t.p_bar() * t.q_bar() == 0.0)
        return ScoreResult::undefined(UndefinedReason::no_variation);
    const double n = static_cast<double>(t.n_values());
    const double expected = (n / (n - 1.0)) * 2.0 * t.p_bar() * t.q_bar();
    return ScoreResult::defined(1.0 - (t.b() + t.c()) / expected);
}

std::size_t incomplete_document_count(const AssessmentSet& set) {
    std::size_t excluded = 0;
    for (std::size_t d = 0; d < set.document_count(); ++d) {
        for (std::size_t a = 0; a < set.assessor_count(); ++a) {
            if (!set.cell(a, d)) {
                ++excluded;
                break;
            }
        }
    }
    return excluded;
}

ScoreResult fleiss_kappa(const AssessmentSet& set) {
    const std::size_t m = set.assessor_count();
    if (m < 2) return ScoreResult::undefined(UndefinedReason::single_assessor);

    const auto idx = category_indices(set);
    const std::size_t ncat = set.categories().size();

    // Restricted to documents every assessor judged, so the textbook
    // equal-raters formula applies unchanged. All sums are integers; the
    // result cannot depend on assessor or document order.
    std::int64_t complete_docs = 0;
    std::int64_t pair_sum = 0;                         // sum_i sum_j n_ij (n_ij - 1)
    std::vector<std::int64_t> totals(ncat, 0);         // pooled category counts
    std::vector<std::int64_t> counts(ncat);
    for (std::size_t d = 0; d < set.document_count(); ++d) {
        std::fill(counts.begin(), counts.end(), 0);
        bool complete = true;
        for (std::size_t a = 0; a < m; ++a) {
            const int c = idx[a * set.document_count() + d];
            if (c < 0) {
                complete = false;
                break;
            }
            ++counts[static_cast<std::size_t>(c)];
        }
        if (!complete) continue;
        ++complete_docs;
        for (std::size_t c = 0; c < ncat; ++c) {
            pair_sum += counts[c] * (counts[c] - 1);
            totals[c] += counts[c];
        }
    }
    if (complete_docs == 0) return ScoreResult::undefined(UndefinedReason::no_pairable_values);

    const auto mm = static_cast<std::int64_t>(m);
    const double observed = static_cast<double>(pair_sum) /
                            static_cast<double>(complete_docs * mm * (mm - 1));
    const double total = static_cast<double>(complete_docs * mm);
    double expected = 0.0;
    for (std::size_t c = 0; c < ncat; ++c) {
        const double p = static_cast<double>(totals[c]) / total;
        expected += p * p;
    }
    if (expected == 1.0) return ScoreResult::undefined(UndefinedReason::no_variation);
    return ScoreResult::defined((observed - expected) / (1.0 - expected));
}

namespace {

struct Coincidence {
    std::vector<double> off_diagonal_by_pair;  // o_ck for c < k, flattened
    std::vector<std::int64_t> marginals;       // n_c, integer by construction
    std::int64_t pairable_values = 0;          // n
};

// Coincidence counts o_ck = sum_u n_uc (n_uk - delta_ck) / (m_u - 1). Units
// are grouped by their value count m_u so each group's integer sums divide
// once; the totals cannot depend on document order.
Coincidence coincidence_matrix(const AssessmentSet& set) {
    const auto idx = category_indices(set);
    const std::size_t ncat = set.categories().size();

    std::map<std::int64_t, std::vector<std::int64_t>> by_unit_size;  // m_u -> pair sums
    Coincidence out;
    out.marginals.assign(ncat, 0);
    std::vector<std::int64_t> counts(ncat);
    for (std::size_t d = 0; d < set.document_count(); ++d) {
        std::fill(counts.begin(), counts.end(), 0);
        std::int64_t mu = 0;
        for (std::size_t a = 0; a < set.assessor_count(); ++a) {
            const int c = idx[a * set.document_count() + d];
            if (c < 0) continue;
            ++counts[static_cast<std::size_t>(c)];
            ++mu;
        }
        if (mu < 2) continue;  // unpairable unit
        auto& sums = by_unit_size[mu];
        if (sums.empty()) sums.assign(ncat * (ncat - 1) / 2, 0);
        std::size_t p = 0;
        for (std::size_t c = 0; c < ncat; ++c) {
            for (std::size_t k = c + 1; k < ncat; ++k) sums[p++] += counts[c] * counts[k];
        }
        for (std::size_t c = 0; c < ncat; ++c) out.marginals[c] += counts[c];
        out.pairable_values += mu;
    }

    out.off_diagonal_by_pair.assign(ncat * (ncat - 1) / 2, 0.0);
    for (const auto& [mu, sums] : by_unit_size) {
        const double w = 1.0 / static_cast<double>(mu - 1);
        for (std::size_t p = 0; p < sums.size(); ++p)
            out.off_diagonal_by_pair[p] += static_cast<double>(sums[p]) * w;
    }
    return out;
}

}  // namespace

DisagreementParts decompose(const AssessmentSet& set) {
    const Coincidence co = coincidence_matrix(set);
    DisagreementParts parts;
    if (co.pairable_values < 2) {
        parts.undefined = UndefinedReason::no_pairable_values;
        return parts;
    }

    const double n = static_cast<double>(co.pairable_values);
    double observed = 0.0;
    std::int64_t expected_num = 0;
    std::size_t p = 0;
    for (std::size_t c = 0; c < co.marginals.size(); ++c) {
        for (std::size_t k = c + 1; k < co.marginals.size(); ++k) {
            observed += 2.0 * co.off_diagonal_by_pair[p++];
            expected_num += 2 * co.marginals[c] * co.marginals[k];
        }
    }
    parts.observed = observed / n;
    parts.expected = static_cast<double>(expected_num) / (n * (n - 1.0));
    if (parts.expected == 0.0) parts.undefined = UndefinedReason::no_variation;
    return parts;
}

ScoreResult krippendorff_alpha(const AssessmentSet& set) {
    const DisagreementParts parts = decompose(set);
    if (parts.undefined) return ScoreResult::undefined(*parts.undefined);
    return ScoreResult::defined(1.0 - parts.observed / parts.expected);
}

ScoreResult percent_agreement(const AssessmentSet& set) {
    const std::size_t m = set.assessor_count();
    if (m < 2) return ScoreResult::undefined(UndefinedReason::single_assessor);

    const auto idx = category_indices(set);
    const std::size_t docs = set.document_count();
    std::vector<double> pair_shares;
    for (std::size_t a = 0; a < m; ++a) {
        for (std::size_t b = a + 1; b < m; ++b) {
            std::int64_t joint = 0, same = 0;
            for (std::size_t d = 0; d < docs; ++d) {
                const int va = idx[a * docs + d];
                const int vb = idx[b * docs + d];
                if (va < 0 || vb < 0) continue;
                ++joint;
                if (va == vb) ++same;
            }
            if (joint == 0) continue;  // pair shares no document
            pair_shares.push_back(static_cast<double>(same) / static_cast<double>(joint));
        }
    }
    if (pair_shares.empty()) return ScoreResult::undefined(UndefinedReason::no_pairable_values);
    const double count = static_cast<double>(pair_shares.size());
    return ScoreResult::defined(stable_sum(std::move(pair_shares)) / count);
}

ScoreResult jaccard_mean(const AssessmentSet& set) {
    if (!set.is_binary()) return ScoreResult::undefined(UndefinedReason::non_binary);
    const std::size_t m = set.assessor_count();
    if (m < 2) return ScoreResult::undefined(UndefinedReason::single_assessor);

    const std::size_t docs = set.document_count();
    std::vector<std::vector<bool>> relevant(m, std::vector<bool>(docs, false));
    for (std::size_t a = 0; a < m; ++a) {
        for (std::size_t d = 0; d < docs; ++d) {
            const auto label = set.cell(a, d);
            relevant[a][d] = label && *label > 0;
        }
    }

    std::vector<double> pair_values;
    for (std::size_t a = 0; a < m; ++a) {
        for (std::size_t b = a + 1; b < m; ++b) {
            std::int64_t inter = 0, uni = 0;
            for (std::size_t d = 0; d < docs; ++d) {
                const bool ra = relevant[a][d], rb = relevant[b][d];
                if (ra && rb) ++inter;
                if (ra || rb) ++uni;
            }
            // both relevant sets empty: vacuous total agreement
            pair_values.push_back(uni == 0 ? 1.0
                                           : static_cast<double>(inter) / static_cast<double>(uni));
        }
    }
    const double count = static_cast<double>(pair_values.size());
    return ScoreResult::defined(stable_sum(std::move(pair_values)) / count);
}

ScoreResult pearson_correlation(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw std::invalid_argument("correlation inputs differ in length");
    if (xs.size() < 2) throw std::invalid_argument("correlation needs at least two pairs");

    const auto flat = [](std::span<const double> values) {
        return std::all_of(values.begin(), values.end(),
                           [&](double v) { return v == values.front(); });
    };
    if (flat(xs) || flat(ys)) return ScoreResult::undefined(UndefinedReason::no_variation);

    const double n = static_cast<double>(xs.size());
    double mean_x = 0.0, mean_y = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mean_x += xs[i];
        mean_y += ys[i];
    }
    mean_x /= n;
    mean_y /= n;

    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - mean_x;
        const double dy = ys[i] - mean_y;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0) return ScoreResult::undefined(UndefinedReason::no_variation);
    return ScoreResult::defined(std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0));
}

AgreementRecord score_set(const AssessmentSet& set) {
    AgreementRecord record;
    record.session = set.session();
    record.topic = set.topic();
    record.assessor_count = static_cast<int>(set.assessor_count());
    record.kappa = fleiss_kappa(set);
    record.alpha = krippendorff_alpha(set);
    record.percent = percent_agreement(set);
    record.jaccard = jaccard_mean(set);
    const DisagreementParts parts = decompose(set);
    record.observed_disagreement = parts.observed;
    record.expected_disagreement = parts.expected;
    record.excluded_documents = incomplete_document_count(set);
    return record;
}

}  // namespace irrkit::agreement
