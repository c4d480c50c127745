#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace learnsketch {

using ElementId = std::uint64_t;
using Count = std::uint64_t;

/// Exact per-element frequencies, stored sorted by element id.
class FrequencyTable {
 public:
  using Entry = std::pair<ElementId, Count>;

  FrequencyTable() = default;

  /// Entries must have distinct ids; zero counts are dropped.
  explicit FrequencyTable(std::vector<Entry> entries) : entries_(std::move(entries)) {
    std::erase_if(entries_, [](const Entry& e) { return e.second == 0; });
    std::sort(entries_.begin(), entries_.end());
    for (std::size_t i = 1; i < entries_.size(); ++i)
      if (entries_[i].first == entries_[i - 1].first)
        throw std::invalid_argument("FrequencyTable: duplicate id " + std::to_string(entries_[i].first));
    for (const auto& e : entries_) total_ += e.second;
  }

  static FrequencyTable from_stream(std::span<const ElementId> items) {
    std::unordered_map<ElementId, Count> counts;
    for (ElementId id : items) ++counts[id];
    return FrequencyTable(std::vector<Entry>(counts.begin(), counts.end()));
  }

  [[nodiscard]] const std::vector<Entry>& entries() const noexcept { return entries_; }
  [[nodiscard]] std::size_t distinct() const noexcept { return entries_.size(); }
  [[nodiscard]] Count total() const noexcept { return total_; }

  [[nodiscard]] Count count(ElementId id) const noexcept {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), Entry{id, 0});
    return (it != entries_.end() && it->first == id) ? it->second : 0;
  }

  /// Entries ordered by descending count, ties by smaller id.
  [[nodiscard]] std::vector<Entry> ranked() const {
    std::vector<Entry> r = entries_;
    std::stable_sort(r.begin(), r.end(), [](const Entry& a, const Entry& b) { return a.second > b.second; });
    return r;
  }

  friend bool operator==(const FrequencyTable&, const FrequencyTable&) = default;

 private:
  std::vector<Entry> entries_;
  Count total_ = 0;
};

/// Predicted heavy set: an ordered list of distinct element ids.
struct FrequencyOracle {
  std::vector<ElementId> heavy;

  void validate() const {
    std::unordered_set<ElementId> seen;
    for (ElementId id : heavy)
      if (!seen.insert(id).second)
        throw std::invalid_argument("FrequencyOracle: duplicate id " + std::to_string(id));
  }

  [[nodiscard]] std::size_t size() const noexcept { return heavy.size(); }
  friend bool operator==(const FrequencyOracle&, const FrequencyOracle&) = default;
};

}  // namespace learnsketch
