#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace irrkit {

// Natural token order: tokens that are plain non-negative integers compare by
// value, everything else lexicographically. Keeps topic "96" ahead of "105".
bool natural_less(const std::string& a, const std::string& b);

struct NaturalLess {
    using is_transparent = void;
    bool operator()(const std::string& a, const std::string& b) const {
        return natural_less(a, b);
    }
};

// Identifies one assessment set: all judgments for a (session, topic) pair.
struct SetKey {
    std::string session;
    std::string topic;

    friend bool operator==(const SetKey&, const SetKey&) = default;
    friend bool operator<(const SetKey& lhs, const SetKey& rhs) {
        if (lhs.session != rhs.session) return lhs.session < rhs.session;
        return natural_less(lhs.topic, rhs.topic);
    }
    std::string label() const { return session + "/" + topic; }
};

// Judgment grid of one assessment set: assessors x documents, cells may be
// missing. Labels are integer categories; the binary case uses {0, 1}.
class AssessmentSet {
public:
    // `cells` is row-major: index = assessor * documents.size() + document.
    // Throws std::invalid_argument when an invariant is violated (empty axes,
    // fewer than two categories, duplicate ids, or a label outside the
    // category set).
    AssessmentSet(std::string session, std::string topic,
                  std::vector<std::string> assessors,
                  std::vector<std::string> documents,
                  std::vector<int> categories,
                  std::vector<std::optional<int>> cells);

    const std::string& session() const noexcept { return session_; }
    const std::string& topic() const noexcept { return topic_; }
    SetKey key() const { return SetKey{session_, topic_}; }

    std::size_t assessor_count() const noexcept { return assessors_.size(); }
    std::size_t document_count() const noexcept { return documents_.size(); }
    const std::vector<std::string>& assessors() const noexcept { return assessors_; }
    const std::vector<std::string>& documents() const noexcept { return documents_; }
    const std::vector<int>& categories() const noexcept { return categories_; }

    std::optional<int> cell(std::size_t assessor, std::size_t document) const {
        return cells_[assessor * documents_.size() + document];
    }

    // Non-missing cells in one assessor's row.
    std::size_t judged_count(std::size_t assessor) const;
    // Documents the assessor marked with a label > 0.
    std::set<std::string> relevant_documents(std::size_t assessor) const;

    bool is_complete() const noexcept;
    bool is_binary() const noexcept;  // categories == {0, 1}

    // Copy with a subset of assessor rows (indices into assessors()).
    AssessmentSet with_assessors(const std::vector<std::size_t>& keep) const;

private:
    std::string session_;
    std::string topic_;
    std::vector<std::string> assessors_;
    std::vector<std::string> documents_;
    std::vector<int> categories_;  // sorted, unique, size >= 2
    std::vector<std::optional<int>> cells_;
};

// All assessment sets of a campaign, ordered by (session, topic).
struct Dataset {
    std::vector<AssessmentSet> sets;

    const AssessmentSet* find(const SetKey& key) const;
    std::vector<std::string> sessions() const;  // unique, ascending
    std::vector<std::string> topics() const;    // unique, natural ascending
    Dataset subset(std::span<const SetKey> keys) const;
    void sort_sets();
};

// Which services contributed runs in which session. An empty table means
// every service is available in every session; once a session is listed it
// is restricted to its entries.
class SessionServices {
public:
    SessionServices() = default;

    void set(const std::string& session, std::set<std::string> services);
    bool available(const std::string& session, const std::string& service) const;
    bool empty() const noexcept { return table_.empty(); }
    std::vector<std::string> services() const;  // union, ascending
    const std::map<std::string, std::set<std::string>>& table() const noexcept {
        return table_;
    }

private:
    std::map<std::string, std::set<std::string>> table_;
};

}  // namespace irrkit
