#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "learnsketch/frequency.hpp"

namespace learnsketch {

/// Misra-Gries counter summary with a generalized shrink threshold.
///
/// The table holds at most `capacity` counters between updates. When an
/// absent item arrives at a full table, the capacity + 1 candidate counts
/// (stored counters plus the arrival's 1) are ranked, the threshold-th
/// largest is subtracted from every stored counter, and non-positive
/// counters are dropped. The arrival never survives a shrink. This is the
/// counter form of one Frequent Directions compaction on a buffer of
/// capacity + 1 rows, so for every element
///
///   f_i - threshold_bound <= estimate(i) <= f_i,
///   threshold_bound = min_{k < threshold} (n - top-k mass) / (threshold - k).
///
/// threshold = capacity + 1 (the default) subtracts the arrival's count 1
/// and is the textbook decrement-all algorithm.
class MisraGriesSketch {
 public:
  explicit MisraGriesSketch(std::size_t capacity) : MisraGriesSketch(capacity, capacity + 1) {}

  MisraGriesSketch(std::size_t capacity, std::size_t threshold) : capacity_(capacity), threshold_(threshold) {
    if (capacity_ == 0) throw std::invalid_argument("MisraGriesSketch: capacity must be positive");
    if (threshold_ == 0 || threshold_ > capacity_ + 1)
      throw std::invalid_argument("MisraGriesSketch: threshold must lie in [1, capacity + 1]");
    table_.reserve(capacity_ + 1);
  }

  void update(ElementId item) {
    ++items_seen_;
    if (auto it = table_.find(item); it != table_.end()) {
      ++it->second;
      return;
    }
    if (table_.size() < capacity_) {
      table_.emplace(item, 1);
      return;
    }
    shrink();
  }

  [[nodiscard]] Count estimate(ElementId item) const {
    auto it = table_.find(item);
    return it == table_.end() ? 0 : it->second;
  }

  [[nodiscard]] std::size_t capacity() const noexcept { return capacity_; }
  [[nodiscard]] std::size_t threshold() const noexcept { return threshold_; }
  [[nodiscard]] Count items_seen() const noexcept { return items_seen_; }
  [[nodiscard]] std::size_t size() const noexcept { return table_.size(); }
  [[nodiscard]] std::size_t shrinks() const noexcept { return shrinks_; }
  /// Sum of all subtracted amounts; an upper bound on every element's error.
  [[nodiscard]] Count total_decrement() const noexcept { return total_decrement_; }
  [[nodiscard]] std::size_t space_words() const noexcept { return 2 * capacity_; }

  /// Stored counters sorted by element id.
  [[nodiscard]] std::vector<std::pair<ElementId, Count>> entries() const {
    std::vector<std::pair<ElementId, Count>> out(table_.begin(), table_.end());
    std::sort(out.begin(), out.end());
    return out;
  }

  /// Rebuilds a sketch from a snapshot.
  static MisraGriesSketch restore(std::size_t capacity, std::size_t threshold, Count items_seen,
                                  const std::vector<std::pair<ElementId, Count>>& entries) {
    MisraGriesSketch s(capacity, threshold);
    if (entries.size() > capacity) throw std::invalid_argument("MisraGriesSketch::restore: too many entries");
    for (const auto& [id, c] : entries) {
      if (c == 0) throw std::invalid_argument("MisraGriesSketch::restore: zero count");
      if (!s.table_.emplace(id, c).second) throw std::invalid_argument("MisraGriesSketch::restore: duplicate id");
    }
    s.items_seen_ = items_seen;
    return s;
  }

  friend bool operator==(const MisraGriesSketch& a, const MisraGriesSketch& b) {
    return a.capacity_ == b.capacity_ && a.threshold_ == b.threshold_ && a.items_seen_ == b.items_seen_ &&
           a.table_ == b.table_;
  }

 private:
  void shrink() {
    scratch_.clear();
    for (const auto& kv : table_) scratch_.push_back(kv.second);
    scratch_.push_back(1);
    auto nth = scratch_.begin() + static_cast<std::ptrdiff_t>(threshold_ - 1);
    std::nth_element(scratch_.begin(), nth, scratch_.end(), std::greater<>{});
    const Count cut = *nth;
    for (auto it = table_.begin(); it != table_.end();) {
      if (it->second <= cut) {
        it = table_.erase(it);
      } else {
        it->second -= cut;
        ++it;
      }
    }
    total_decrement_ += cut;
    ++shrinks_;
  }

  std::size_t capacity_;
  std::size_t threshold_;
  Count items_seen_ = 0;
  Count total_decrement_ = 0;
  std::size_t shrinks_ = 0;
  std::unordered_map<ElementId, Count> table_;
  std::vector<Count> scratch_;
};

/// min_{k < threshold} (n - Σ_{j<=k} f_(j)) / (threshold - k), the worst-case
/// per-element error of a threshold-τ shrink rule.
inline double misra_gries_error_bound(const FrequencyTable& truth, std::size_t threshold) {
  const auto ranked = truth.ranked();
  double head = 0.0;
  const double n = static_cast<double>(truth.total());
  double best = n / static_cast<double>(threshold);
  for (std::size_t k = 1; k < threshold; ++k) {
    if (k <= ranked.size()) head += static_cast<double>(ranked[k - 1].second);
    best = std::min(best, (n - head) / static_cast<double>(threshold - k));
  }
  return best;
}

}  // namespace learnsketch
