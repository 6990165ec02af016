#include "irrkit/assessment.hpp"

#include <algorithm>
#include <charconv>
#include <stdexcept>
#include <unordered_set>

namespace irrkit {

namespace {

bool is_digit(char c) {
    return c >= '0' && c <= '9';
}

}  // namespace

// Segment-wise alphanumeric comparison: digit runs compare by numeric value,
// everything else byte-wise, so "96" < "105" and "d2" < "d10".
bool natural_less(const std::string& a, const std::string& b) {
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (is_digit(a[i]) && is_digit(b[j])) {
            const std::size_t i0 = i, j0 = j;
            while (i < a.size() && is_digit(a[i])) ++i;
            while (j < b.size() && is_digit(b[j])) ++j;
            std::size_t ia = i0, jb = j0;
            while (ia + 1 < i && a[ia] == '0') ++ia;  // skip leading zeros
            while (jb + 1 < j && b[jb] == '0') ++jb;
            const std::size_t la = i - ia, lb = j - jb;
            if (la != lb) return la < lb;
            const int cmp = a.compare(ia, la, b, jb, lb);
            if (cmp != 0) return cmp < 0;
            if (i - i0 != j - j0) return (i - i0) < (j - j0);  // "7" before "07"
        } else {
            if (a[i] != b[j]) return a[i] < b[j];
            ++i;
            ++j;
        }
    }
    return i == a.size() && j < b.size();
}

AssessmentSet::AssessmentSet(std::string session, std::string topic,
                             std::vector<std::string> assessors,
                             std::vector<std::string> documents,
                             std::vector<int> categories,
                             std::vector<std::optional<int>> cells)
    : session_(std::move(session)),
      topic_(std::move(topic)),
      assessors_(std::move(assessors)),
      documents_(std::move(documents)),
      categories_(std::move(categories)),
      cells_(std::move(cells)) {
    if (session_.empty() || topic_.empty())
        throw std::invalid_argument("assessment set needs a session and a topic");
    if (assessors_.empty()) throw std::invalid_argument("assessment set needs at least one assessor");
    if (documents_.empty()) throw std::invalid_argument("assessment set needs at least one document");
    std::sort(categories_.begin(), categories_.end());
    categories_.erase(std::unique(categories_.begin(), categories_.end()), categories_.end());
    if (categories_.size() < 2)
        throw std::invalid_argument("assessment set needs at least two categories");
    if (cells_.size() != assessors_.size() * documents_.size())
        throw std::invalid_argument("cell grid does not match assessors x documents");

    auto unique_tokens = [](const std::vector<std::string>& tokens) {
        std::unordered_set<std::string> seen;
        for (const auto& t : tokens) {
            if (t.empty() || !seen.insert(t).second) return false;
        }
        return true;
    };
    if (!unique_tokens(assessors_)) throw std::invalid_argument("assessor ids must be unique and non-empty");
    if (!unique_tokens(documents_)) throw std::invalid_argument("document ids must be unique and non-empty");

    for (const auto& cell : cells_) {
        if (cell && !std::binary_search(categories_.begin(), categories_.end(), *cell))
            throw std::invalid_argument("cell label outside the category set");
    }
}

std::size_t AssessmentSet::judged_count(std::size_t assessor) const {
    std::size_t n = 0;
    for (std::size_t d = 0; d < documents_.size(); ++d) {
        if (cell(assessor, d)) ++n;
    }
    return n;
}

std::set<std::string> AssessmentSet::relevant_documents(std::size_t assessor) const {
    std::set<std::string> relevant;
    for (std::size_t d = 0; d < documents_.size(); ++d) {
        const auto label = cell(assessor, d);
        if (label && *label > 0) relevant.insert(documents_[d]);
    }
    return relevant;
}

bool AssessmentSet::is_complete() const noexcept {
    return std::all_of(cells_.begin(), cells_.end(),
                       [](const std::optional<int>& c) { return c.has_value(); });
}

bool AssessmentSet::is_binary() const noexcept {
    return categories_.size() == 2 && categories_[0] == 0 && categories_[1] == 1;
}

AssessmentSet AssessmentSet::with_assessors(const std::vector<std::size_t>& keep) const {
    std::vector<std::string> assessors;
    std::vector<std::optional<int>> cells;
    assessors.reserve(keep.size());
    cells.reserve(keep.size() * documents_.size());
    for (const auto a : keep) {
        if (a >= assessors_.size()) throw std::invalid_argument("assessor index out of range");
        assessors.push_back(assessors_[a]);
        for (std::size_t d = 0; d < documents_.size(); ++d) cells.push_back(cell(a, d));
    }
    return AssessmentSet(session_, topic_, std::move(assessors), documents_, categories_,
                         std::move(cells));
}

const AssessmentSet* Dataset::find(const SetKey& key) const {
    for (const auto& set : sets) {
        if (set.session() == key.session && set.topic() == key.topic) return &set;
    }
    return nullptr;
}

std::vector<std::string> Dataset::sessions() const {
    std::vector<std::string> out;
    for (const auto& set : sets) out.push_back(set.session());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<std::string> Dataset::topics() const {
    std::vector<std::string> out;
    for (const auto& set : sets) out.push_back(set.topic());
    std::sort(out.begin(), out.end(), natural_less);
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

Dataset Dataset::subset(std::span<const SetKey> keys) const {
    Dataset out;
    for (const auto& set : sets) {
        const SetKey key = set.key();
        if (std::find(keys.begin(), keys.end(), key) != keys.end()) out.sets.push_back(set);
    }
    return out;
}

void Dataset::sort_sets() {
    std::sort(sets.begin(), sets.end(), [](const AssessmentSet& a, const AssessmentSet& b) {
        return a.key() < b.key();
    });
}

void SessionServices::set(const std::string& session, std::set<std::string> services) {
    table_[session] = std::move(services);
}

bool SessionServices::available(const std::string& session, const std::string& service) const {
    if (table_.empty()) return true;
    const auto it = table_.find(session);
    if (it == table_.end()) return true;
    return it->second.contains(service);
}

std::vector<std::string> SessionServices::services() const {
    std::set<std::string> all;
    for (const auto& [session, services] : table_) all.insert(services.begin(), services.end());
    return {all.begin(), all.end()};
}

}  // namespace irrkit
