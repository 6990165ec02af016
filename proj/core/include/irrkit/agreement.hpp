#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "irrkit/assessment.hpp"

namespace irrkit::agreement {

// Why a coefficient could not be computed.
enum class UndefinedReason {
    no_variation,        // zero expected disagreement: every label identical
    single_assessor,     // fewer than two raters
    no_pairable_values,  // no document carries two or more judgments
    non_binary,          // measure only defined for binary categories
    unreported,          // value absent from a replayed score file
};

std::string_view to_string(UndefinedReason reason);
std::optional<UndefinedReason> undefined_reason_from_string(std::string_view text);

// A coefficient outcome: either a value or the reason it is undefined.
class ScoreResult {
public:
    static ScoreResult defined(double value) {
        ScoreResult r;
        r.value_ = value;
        return r;
    }
    static ScoreResult undefined(UndefinedReason reason) {
        ScoreResult r;
        r.reason_ = reason;
        return r;
    }

    bool has_value() const noexcept { return value_.has_value(); }
    explicit operator bool() const noexcept { return has_value(); }
    double value() const;            // throws std::logic_error when undefined
    double value_or(double fallback) const noexcept { return value_.value_or(fallback); }
    UndefinedReason reason() const;  // throws std::logic_error when defined

    friend bool operator==(const ScoreResult&, const ScoreResult&) = default;

private:
    std::optional<double> value_;
    UndefinedReason reason_ = UndefinedReason::no_variation;
};

// Proportions of paired binary judgments for two assessors: a = both 0,
// b = A 1 / B 0, c = A 0 / B 1, d = both 1. n_values counts the jointly
// used judgments (two per jointly judged document).
class ContingencyTable2x2 {
public:
    // Throws std::invalid_argument unless a..d >= 0, a+b+c+d == 1 within
    // 1e-9 and n_values >= 2.
    ContingencyTable2x2(double a, double b, double c, double d, long long n_values);

    double a() const noexcept { return a_; }
    double b() const noexcept { return b_; }
    double c() const noexcept { return c_; }
    double d() const noexcept { return d_; }
    double p_a() const noexcept { return a_ + c_; }  // assessor A's share of 0s
    double q_a() const noexcept { return b_ + d_; }
    double p_b() const noexcept { return a_ + b_; }  // assessor B's share of 0s
    double q_b() const noexcept { return c_ + d_; }
    double p_bar() const noexcept { return 0.5 * (p_a() + p_b()); }
    double q_bar() const noexcept { return 1.0 - p_bar(); }
    long long n_values() const noexcept { return n_values_; }

private:
    double a_, b_, c_, d_;
    long long n_values_;
};

// Builds the 2x2 table from a binary two-assessor grid, restricted to
// jointly judged documents. Throws std::invalid_argument when the set is
// not binary, has a different assessor count, or shares no document.
ContingencyTable2x2 contingency_from_set(const AssessmentSet& set);

// ----- interpretation bands -----

enum class LandisKochBand { poor, slight, fair, moderate, substantial, almost_perfect };
enum class GreveWenturaBand { not_serious, acceptable, acceptable_to_good, good_to_excellent };
enum class AlphaBand { below_threshold, threshold_met };

std::string_view to_string(LandisKochBand band);
std::string_view to_string(GreveWenturaBand band);
std::string_view to_string(AlphaBand band);

struct KappaInterpretation {
    LandisKochBand landis_koch;
    GreveWenturaBand greve_wentura;
    friend bool operator==(const KappaInterpretation&, const KappaInterpretation&) = default;
};

// Half-open, lower-inclusive bands partitioning [-1, 1]; out-of-range scores
// throw std::invalid_argument.
KappaInterpretation interpret_kappa(double score);
// threshold_met iff score >= 0.8; accepts any score <= 1.
AlphaBand interpret_alpha(double score);

// ----- coefficients -----

ScoreResult cohen_kappa_2x2(const ContingencyTable2x2& table);
ScoreResult alpha_2x2(const ContingencyTable2x2& table);

// Multi-rater kappa over the documents judged by every assessor of the set.
ScoreResult fleiss_kappa(const AssessmentSet& set);
// Documents excluded by that complete-column restriction.
std::size_t incomplete_document_count(const AssessmentSet& set);

// Coincidence-matrix alpha; documents with fewer than two judgments are
// excluded from pairing.
ScoreResult krippendorff_alpha(const AssessmentSet& set);

// Observed/expected disagreement underlying krippendorff_alpha, such that
// alpha == 1 - observed/expected whenever defined.
struct DisagreementParts {
    double observed = 0.0;  // D_o
    double expected = 0.0;  // D_e
    std::optional<UndefinedReason> undefined;  // set when the ratio is meaningless
};
DisagreementParts decompose(const AssessmentSet& set);

// Mean pairwise share of same-label documents, each pair evaluated over the
// documents both judged.
ScoreResult percent_agreement(const AssessmentSet& set);

// Mean pairwise intersection/union of the assessors' relevant sets; a pair
// with an empty union contributes 1.0. Binary sets only.
ScoreResult jaccard_mean(const AssessmentSet& set);

// Product-moment correlation, clamped into [-1, 1]. Throws
// std::invalid_argument on length mismatch or fewer than two pairs; zero
// variance yields an undefined result.
ScoreResult pearson_correlation(std::span<const double> xs, std::span<const double> ys);

// ----- per-set record -----

// Coefficient results for one assessment set; one row of the agreement table.
struct AgreementRecord {
    std::string session;
    std::string topic;
    int assessor_count = 0;
    ScoreResult kappa = ScoreResult::undefined(UndefinedReason::unreported);
    ScoreResult alpha = ScoreResult::undefined(UndefinedReason::unreported);
    ScoreResult percent = ScoreResult::undefined(UndefinedReason::unreported);
    ScoreResult jaccard = ScoreResult::undefined(UndefinedReason::unreported);
    // D_o / D_e; absent in records replayed from a score file.
    std::optional<double> observed_disagreement;
    std::optional<double> expected_disagreement;
    std::size_t excluded_documents = 0;  // docs outside the complete-column subset

    SetKey key() const { return SetKey{session, topic}; }
};

// Computes every coefficient for one judgment grid.
AgreementRecord score_set(const AssessmentSet& set);

}  // namespace irrkit::agreement
