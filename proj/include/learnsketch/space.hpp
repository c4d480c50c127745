#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace learnsketch {

// Space accounting in machine words. A counter costs two words (key and
// count); a hashed-sketch cell costs one; a d-dimensional row costs d.

enum class FreqAlgorithm { mg, learned_mg, cs, learned_cs, cs_pp, learned_cs_pp, cm, learned_cm };

enum class SpaceSplit { half, third };

inline constexpr std::size_t kCountSketchRows = 3;

inline std::string_view to_string(FreqAlgorithm a) {
  switch (a) {
    case FreqAlgorithm::mg: return "mg";
    case FreqAlgorithm::learned_mg: return "learned_mg";
    case FreqAlgorithm::cs: return "cs";
    case FreqAlgorithm::learned_cs: return "learned_cs";
    case FreqAlgorithm::cs_pp: return "cs++";
    case FreqAlgorithm::learned_cs_pp: return "learned_cs++";
    case FreqAlgorithm::cm: return "cm";
    case FreqAlgorithm::learned_cm: return "learned_cm";
  }
  return "?";
}

inline FreqAlgorithm parse_freq_algorithm(std::string_view s) {
  for (auto a : {FreqAlgorithm::mg, FreqAlgorithm::learned_mg, FreqAlgorithm::cs, FreqAlgorithm::learned_cs,
                 FreqAlgorithm::cs_pp, FreqAlgorithm::learned_cs_pp, FreqAlgorithm::cm, FreqAlgorithm::learned_cm})
    if (to_string(a) == s) return a;
  throw std::invalid_argument("unknown frequency algorithm '" + std::string(s) + "'");
}

inline bool is_learned(FreqAlgorithm a) {
  return a == FreqAlgorithm::learned_mg || a == FreqAlgorithm::learned_cs || a == FreqAlgorithm::learned_cs_pp ||
         a == FreqAlgorithm::learned_cm;
}

inline bool is_randomized(FreqAlgorithm a) { return a != FreqAlgorithm::mg && a != FreqAlgorithm::learned_mg; }

inline bool uses_truncation(FreqAlgorithm a) {
  return a == FreqAlgorithm::cs_pp || a == FreqAlgorithm::learned_cs_pp;
}

inline std::string_view to_string(SpaceSplit s) { return s == SpaceSplit::half ? "half" : "third"; }

inline SpaceSplit parse_split(std::string_view s) {
  if (s == "half") return SpaceSplit::half;
  if (s == "third") return SpaceSplit::third;
  throw std::invalid_argument("unknown split '" + std::string(s) + "' (expected half|third)");
}

/// Concrete sizes for one frequency sketch.
struct FreqSketchPlan {
  FreqAlgorithm algorithm = FreqAlgorithm::mg;
  std::size_t heavy = 0;     // exact counters for the predicted set
  std::size_t counters = 0;  // Misra-Gries capacity
  std::size_t rows = 0;      // hashed sketches
  std::size_t width = 0;
};

/// Shared accountant: the words a plan occupies.
inline std::size_t space_words(const FreqSketchPlan& p) {
  switch (p.algorithm) {
    case FreqAlgorithm::mg: return 2 * p.counters;
    case FreqAlgorithm::learned_mg: return 2 * p.heavy + 2 * p.counters;
    case FreqAlgorithm::cs:
    case FreqAlgorithm::cs_pp:
    case FreqAlgorithm::cm: return p.rows * p.width;
    case FreqAlgorithm::learned_cs:
    case FreqAlgorithm::learned_cs_pp:
    case FreqAlgorithm::learned_cm: return 2 * p.heavy + p.rows * p.width;
  }
  return 0;
}

/// Splits a word budget into sketch sizes. Learned variants give half (or a
/// third) of the budget to exact counters. Throws std::invalid_argument when
/// the budget cannot hold a non-empty sketch.
inline FreqSketchPlan plan_freq_sketch(FreqAlgorithm a, std::size_t budget_words, SpaceSplit split) {
  FreqSketchPlan p;
  p.algorithm = a;
  const std::size_t divisor = split == SpaceSplit::half ? 2 : 3;
  switch (a) {
    case FreqAlgorithm::mg: p.counters = budget_words / 2; break;
    case FreqAlgorithm::learned_mg: {
      const std::size_t total = budget_words / 2;
      p.heavy = total / divisor;
      p.counters = total - p.heavy;
      break;
    }
    case FreqAlgorithm::cs:
    case FreqAlgorithm::cs_pp:
    case FreqAlgorithm::cm:
      p.rows = kCountSketchRows;
      p.width = budget_words / kCountSketchRows;
      break;
    case FreqAlgorithm::learned_cs:
    case FreqAlgorithm::learned_cs_pp:
    case FreqAlgorithm::learned_cm:
      p.heavy = budget_words / (2 * divisor);
      p.rows = kCountSketchRows;
      p.width = (budget_words - 2 * p.heavy) / kCountSketchRows;
      break;
  }
  const bool counter_based = a == FreqAlgorithm::mg || a == FreqAlgorithm::learned_mg;
  if ((counter_based && p.counters == 0) || (!counter_based && p.width == 0))
    throw std::invalid_argument("space budget of " + std::to_string(budget_words) + " words is too small for " +
                                std::string(to_string(a)));
  return p;
}

/// Words held by a learned Frequent Directions sketch with `capacity` row
/// slots of which `predicted` go to the oracle directions and as many to the
/// predicted-subspace factor. Whether the oracle directions count against
/// the budget is a reporting convention; both are exposed.
struct MatrixSpace {
  std::size_t with_oracle = 0;
  std::size_t without_oracle = 0;
};

inline MatrixSpace learned_fd_space(std::size_t capacity, std::size_t predicted, std::size_t dim) {
  return {capacity * dim, (capacity - predicted) * dim};
}

inline MatrixSpace classic_fd_space(std::size_t capacity, std::size_t dim) {
  return {capacity * dim, capacity * dim};
}

}  // namespace learnsketch
