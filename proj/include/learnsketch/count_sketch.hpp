#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "learnsketch/frequency.hpp"

namespace learnsketch {

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seeded per-row hash family. Bucket and sign come from independent keys;
/// the mixing function only approximates pairwise independence.
class RowHashes {
 public:
  RowHashes(std::size_t rows, std::size_t width, std::uint64_t seed) : width_(width) {
    if (rows == 0 || width == 0) throw std::invalid_argument("RowHashes: rows and width must be positive");
    bucket_keys_.resize(rows);
    sign_keys_.resize(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      bucket_keys_[r] = mix64(seed ^ mix64(2 * r + 1));
      sign_keys_[r] = mix64(seed ^ mix64(2 * r + 2) ^ 0x5bd1e995ULL);
    }
  }

  [[nodiscard]] std::size_t rows() const noexcept { return bucket_keys_.size(); }
  [[nodiscard]] std::size_t width() const noexcept { return width_; }

  [[nodiscard]] std::size_t bucket(std::size_t row, ElementId item) const noexcept {
    return static_cast<std::size_t>(mix64(item ^ bucket_keys_[row]) % width_);
  }
  [[nodiscard]] int sign(std::size_t row, ElementId item) const noexcept {
    return (mix64(item ^ sign_keys_[row]) >> 63) ? 1 : -1;
  }

 private:
  std::size_t width_;
  std::vector<std::uint64_t> bucket_keys_;
  std::vector<std::uint64_t> sign_keys_;
};

namespace detail {
inline double median_of(std::vector<double>& v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  if (v.size() % 2 == 1) return v[mid];
  const double upper = v[mid];
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}
}  // namespace detail

/// CountSketch with r rows of w signed counters. In plus-plus mode (the
/// single-table CountSketch++ heuristic) any estimate below C·n/w is
/// reported as zero, n being the number of items this table has seen.
class CountSketch {
 public:
  enum class Mode { plain, plus_plus };

  CountSketch(std::size_t rows, std::size_t width, std::uint64_t seed, Mode mode = Mode::plain,
              double truncation = 1.0)
      : hashes_(rows, width, seed), mode_(mode), truncation_(truncation), counters_(rows * width, 0) {
    if (truncation_ < 0.0) throw std::invalid_argument("CountSketch: truncation constant must be non-negative");
  }

  void update(ElementId item, std::int64_t weight = 1) {
    items_seen_ += weight;
    for (std::size_t r = 0; r < hashes_.rows(); ++r)
      counters_[r * hashes_.width() + hashes_.bucket(r, item)] += hashes_.sign(r, item) * weight;
  }

  /// Median over rows of the sign-corrected bucket counters.
  [[nodiscard]] double raw_estimate(ElementId item) const {
    std::vector<double> v(hashes_.rows());
    for (std::size_t r = 0; r < hashes_.rows(); ++r)
      v[r] = static_cast<double>(hashes_.sign(r, item) * counters_[r * hashes_.width() + hashes_.bucket(r, item)]);
    return detail::median_of(v);
  }

  [[nodiscard]] double estimate(ElementId item) const {
    const double e = raw_estimate(item);
    if (mode_ == Mode::plus_plus && e < truncation_floor()) return 0.0;
    return e;
  }

  [[nodiscard]] double truncation_floor() const noexcept {
    return truncation_ * static_cast<double>(items_seen_) / static_cast<double>(hashes_.width());
  }

  [[nodiscard]] const RowHashes& hashes() const noexcept { return hashes_; }
  [[nodiscard]] std::size_t rows() const noexcept { return hashes_.rows(); }
  [[nodiscard]] std::size_t width() const noexcept { return hashes_.width(); }
  [[nodiscard]] Mode mode() const noexcept { return mode_; }
  [[nodiscard]] double truncation() const noexcept { return truncation_; }
  [[nodiscard]] std::int64_t items_seen() const noexcept { return items_seen_; }
  [[nodiscard]] std::size_t space_words() const noexcept { return hashes_.rows() * hashes_.width(); }

 private:
  RowHashes hashes_;
  Mode mode_;
  double truncation_;
  std::int64_t items_seen_ = 0;
  std::vector<std::int64_t> counters_;
};

/// CountMin: the minimum over rows of unsigned bucket counters.
class CountMinSketch {
 public:
  CountMinSketch(std::size_t rows, std::size_t width, std::uint64_t seed)
      : hashes_(rows, width, seed), counters_(rows * width, 0) {}

  void update(ElementId item, Count weight = 1) {
    for (std::size_t r = 0; r < hashes_.rows(); ++r)
      counters_[r * hashes_.width() + hashes_.bucket(r, item)] += weight;
  }

  [[nodiscard]] double estimate(ElementId item) const {
    Count best = std::numeric_limits<Count>::max();
    for (std::size_t r = 0; r < hashes_.rows(); ++r)
      best = std::min(best, counters_[r * hashes_.width() + hashes_.bucket(r, item)]);
    return static_cast<double>(best);
  }

  [[nodiscard]] std::size_t space_words() const noexcept { return hashes_.rows() * hashes_.width(); }

 private:
  RowHashes hashes_;
  std::vector<Count> counters_;
};

}  // namespace learnsketch
