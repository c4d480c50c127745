#pragma once

#include <algorithm>
#include <concepts>
#include <cstddef>
#include <unordered_map>
#include <utility>
#include <vector>

#include "learnsketch/count_sketch.hpp"
#include "learnsketch/frequency.hpp"
#include "learnsketch/misra_gries.hpp"

namespace learnsketch {

template <class S>
concept FrequencySketch = requires(S s, const S cs, ElementId id) {
  s.update(id);
  cs.estimate(id);
  { cs.space_words() } -> std::convertible_to<std::size_t>;
};

/// Exact counters for the predicted heavy set, an ordinary sketch for the rest.
///
/// Elements in the oracle's set are never routed to the inner sketch, so
/// their estimates are exact regardless of what the inner sketch does.
template <FrequencySketch Inner>
class LearnedSketch {
 public:
  using estimate_type = decltype(std::declval<const Inner&>().estimate(ElementId{}));

  LearnedSketch(const FrequencyOracle& oracle, Inner inner) : inner_(std::move(inner)) {
    oracle.validate();
    exact_.reserve(oracle.size());
    for (ElementId id : oracle.heavy) exact_.emplace(id, 0);
  }

  void update(ElementId item) {
    if (auto it = exact_.find(item); it != exact_.end()) {
      ++it->second;
      return;
    }
    inner_.update(item);
  }

  [[nodiscard]] estimate_type estimate(ElementId item) const {
    if (auto it = exact_.find(item); it != exact_.end()) return static_cast<estimate_type>(it->second);
    return inner_.estimate(item);
  }

  [[nodiscard]] bool is_predicted_heavy(ElementId item) const { return exact_.contains(item); }
  [[nodiscard]] std::size_t heavy_size() const noexcept { return exact_.size(); }
  [[nodiscard]] const Inner& inner() const noexcept { return inner_; }

  /// 2 words (key and count) per exact counter plus the inner sketch.
  [[nodiscard]] std::size_t space_words() const { return 2 * exact_.size() + inner_.space_words(); }

  /// Exact counters sorted by element id.
  [[nodiscard]] std::vector<std::pair<ElementId, Count>> exact_counts() const {
    std::vector<std::pair<ElementId, Count>> out(exact_.begin(), exact_.end());
    std::sort(out.begin(), out.end());
    return out;
  }

  /// Rebuilds from a snapshot of exact counters and an inner sketch.
  static LearnedSketch restore(const std::vector<std::pair<ElementId, Count>>& exact, Inner inner) {
    FrequencyOracle oracle;
    for (const auto& e : exact) oracle.heavy.push_back(e.first);
    LearnedSketch s(oracle, std::move(inner));
    for (const auto& [id, c] : exact) s.exact_[id] = c;
    return s;
  }

  friend bool operator==(const LearnedSketch& a, const LearnedSketch& b)
    requires std::equality_comparable<Inner>
  {
    return a.exact_ == b.exact_ && a.inner_ == b.inner_;
  }

 private:
  std::unordered_map<ElementId, Count> exact_;
  Inner inner_;
};

using LearnedMisraGriesSketch = LearnedSketch<MisraGriesSketch>;
using LearnedCountSketch = LearnedSketch<CountSketch>;
using LearnedCountMinSketch = LearnedSketch<CountMinSketch>;

}  // namespace learnsketch
