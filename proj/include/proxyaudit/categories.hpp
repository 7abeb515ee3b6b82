#pragma once

#include <algorithm>
#include <cctype>
#include <string>
#include <unordered_set>
#include <vector>

#include "proxyaudit/errors.hpp"

namespace proxyaudit {

// Ordered set of race/ethnicity labels. The ordering is fixed for the
// lifetime of a run and defines vector/matrix component order everywhere.
class CategorySet {
public:
  CategorySet() = default;

  explicit CategorySet(std::vector<std::string> labels)
      : labels_(std::move(labels)) {
    if (labels_.size() < 2)
      throw ValidationError("need at least 2 category labels");
    std::unordered_set<std::string> seen;
    for (const auto& l : labels_) {
      if (l.empty()) throw ValidationError("empty category label");
      if (!seen.insert(l).second)
        throw ValidationError("duplicate category label: " + l);
    }
  }

  static CategorySet default_races() {
    return CategorySet({"Asian", "Black", "Hispanic", "Others", "White"});
  }

  int size() const { return static_cast<int>(labels_.size()); }
  const std::string& label(int i) const { return labels_.at(i); }
  const std::vector<std::string>& labels() const { return labels_; }

  // -1 when the label is not a member.
  int index_of(const std::string& label) const {
    auto it = std::find(labels_.begin(), labels_.end(), label);
    return it == labels_.end() ? -1 : static_cast<int>(it - labels_.begin());
  }

  int require(const std::string& label) const {
    int i = index_of(label);
    if (i < 0) throw ValidationError("unknown category label: " + label);
    return i;
  }

  bool operator==(const CategorySet& o) const { return labels_ == o.labels_; }

private:
  std::vector<std::string> labels_;
};

// Case-folds and strips non-alphabetic characters so that name lookups are
// deterministic across data sources.
inline std::string normalize_name_key(const std::string& raw) {
  std::string out;
  out.reserve(raw.size());
  for (unsigned char c : raw) {
    if (std::isalpha(c)) out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

}  // namespace proxyaudit
