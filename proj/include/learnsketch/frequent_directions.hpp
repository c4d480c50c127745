#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "learnsketch/dense_matrix.hpp"
#include "learnsketch/linalg.hpp"
#include "learnsketch/space.hpp"

namespace learnsketch {

namespace detail {
inline void require_row(std::span<const double> row, std::size_t dim, const char* context) {
  if (row.size() != dim)
    throw std::invalid_argument(std::string(context) + ": expected row of length " + std::to_string(dim) + ", got " +
                                std::to_string(row.size()));
  for (double v : row)
    if (!std::isfinite(v)) throw std::invalid_argument(std::string(context) + ": non-finite row entry");
}

inline void require_unit(std::span<const double> x, const char* context) {
  if (std::abs(std::sqrt(norm_sq(x)) - 1.0) > 1e-10)
    throw std::invalid_argument(std::string(context) + ": query vector must have unit norm");
}
}  // namespace detail

/// Frequent Directions over rows of dimension d with a buffer of `capacity`
/// rows. When the buffer fills, it is replaced by Σ̄·Vᵀ where
/// Σ̄² = max(Σ² − σ_τ², 0) and σ_τ is the threshold-th singular value, so at
/// most threshold − 1 non-zero rows survive. Surviving rows are packed at the
/// top of the buffer.
class FrequentDirections {
 public:
  FrequentDirections(std::size_t capacity, std::size_t threshold, std::size_t dim)
      : capacity_(capacity), threshold_(threshold), dim_(dim), buffer_(capacity, dim) {
    if (capacity_ == 0 || dim_ == 0) throw std::invalid_argument("FrequentDirections: capacity and dim must be positive");
    if (threshold_ == 0 || threshold_ > capacity_)
      throw std::invalid_argument("FrequentDirections: threshold must lie in [1, capacity]");
  }

  void update(std::span<const double> row) {
    detail::require_row(row, dim_, "FrequentDirections::update");
    std::copy(row.begin(), row.end(), buffer_.row(fill_).begin());
    ++fill_;
    ++rows_seen_;
    if (fill_ == capacity_) compact();
  }

  void update_rows(const DenseMatrix& rows) {
    for (std::size_t r = 0; r < rows.rows(); ++r) update(rows.row(r));
  }

  /// Current sketch without its empty rows (fill × dim).
  [[nodiscard]] DenseMatrix result() const { return buffer_.row_block(0, fill_); }

  [[nodiscard]] std::size_t capacity() const noexcept { return capacity_; }
  [[nodiscard]] std::size_t threshold() const noexcept { return threshold_; }
  [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
  [[nodiscard]] std::size_t fill() const noexcept { return fill_; }
  [[nodiscard]] std::size_t rows_seen() const noexcept { return rows_seen_; }
  [[nodiscard]] std::size_t compactions() const noexcept { return compactions_; }
  /// Sum of the subtracted σ_τ² over all compactions; bounds ‖AᵀA − BᵀB‖₂.
  [[nodiscard]] double total_shrinkage() const noexcept { return total_shrinkage_; }
  [[nodiscard]] std::size_t space_words() const noexcept { return capacity_ * dim_; }

 private:
  void compact() {
    const SvdResult f = svd(buffer_);
    const auto& s = f.singular_values;
    const double cut = threshold_ <= s.size() ? s[threshold_ - 1] : 0.0;
    std::fill(buffer_.data().begin(), buffer_.data().end(), 0.0);
    // Rows whose shrunk energy is at round-off level (ties with the cut) are
    // dropped rather than kept as near-zero rows occupying a slot.
    const double drop_below = s.empty() ? 0.0 : 1e-12 * s[0] * s[0];
    std::size_t kept = 0;
    for (std::size_t j = 0; j < s.size(); ++j) {
      const double shrunk_sq = (s[j] - cut) * (s[j] + cut);
      if (!(shrunk_sq > drop_below)) break;
      const double scale = std::sqrt(shrunk_sq);
      auto dst = buffer_.row(kept++);
      auto v = f.vt.row(j);
      for (std::size_t c = 0; c < dim_; ++c) dst[c] = scale * v[c];
    }
    fill_ = kept;
    total_shrinkage_ += cut * cut;
    ++compactions_;
  }

  std::size_t capacity_;
  std::size_t threshold_;
  std::size_t dim_;
  DenseMatrix buffer_;
  std::size_t fill_ = 0;
  std::size_t rows_seen_ = 0;
  std::size_t compactions_ = 0;
  double total_shrinkage_ = 0.0;
};

/// ‖b·x‖² for a unit vector x.
inline double fd_query(const DenseMatrix& b, std::span<const double> x) {
  detail::require_unit(x, "fd_query");
  if (b.rows() == 0) {
    if (b.cols() != 0 && b.cols() != x.size()) throw std::invalid_argument("fd_query: dimension mismatch");
    return 0.0;
  }
  if (b.cols() != x.size()) throw std::invalid_argument("fd_query: dimension mismatch");
  double s = 0.0;
  for (std::size_t r = 0; r < b.rows(); ++r) {
    const double p = dot(b.row(r), x);
    s += p * p;
  }
  return s;
}

/// How the predicted-subspace part of a learned sketch is kept.
enum class SubspaceMode {
  /// Exact k×k covariance of the projected coordinates; zero error inside
  /// the predicted span.
  exact_tracker,
  /// A Frequent Directions instance with k rows and threshold k/2 fed the
  /// projected rows.
  literal,
};

struct LearnedFdOptions {
  SubspaceMode mode = SubspaceMode::exact_tracker;
  /// Threshold of the orthogonal-complement sketch; 0 selects half its capacity.
  std::size_t perp_threshold = 0;
};

/// Learned Frequent Directions: each row is split into its projection onto
/// the predicted span P (d×k, orthonormal columns) and the orthogonal
/// remainder. Projections go to the predicted-subspace part, remainders to a
/// classic sketch with capacity − 2k rows. The result stacks both parts.
class LearnedFrequentDirections {
 public:
  LearnedFrequentDirections(std::size_t capacity, DenseMatrix predicted, LearnedFdOptions options = {})
      : capacity_(capacity),
        predicted_(std::move(predicted)),
        options_(options),
        covariance_(predicted_.cols(), predicted_.cols()),
        perp_(make_perp(capacity, predicted_, options)) {
    const std::size_t k = predicted_.cols();
    if (orthonormality_defect(predicted_) > 1e-8)
      throw std::invalid_argument("LearnedFrequentDirections: predicted directions are not orthonormal");
    if (options_.mode == SubspaceMode::literal) {
      if (k == 0) throw std::invalid_argument("LearnedFrequentDirections: literal mode needs at least one direction");
      down_.emplace(k, std::max<std::size_t>(1, k / 2), dim());
    }
    coords_.resize(k);
    projected_.resize(dim());
    remainder_.resize(dim());
  }

  void update(std::span<const double> row) {
    detail::require_row(row, dim(), "LearnedFrequentDirections::update");
    const std::size_t k = predicted_.cols();
    const std::size_t d = dim();
    std::fill(coords_.begin(), coords_.end(), 0.0);
    for (std::size_t i = 0; i < d; ++i) {
      const double ri = row[i];
      if (ri == 0.0) continue;
      auto prow = predicted_.row(i);
      for (std::size_t j = 0; j < k; ++j) coords_[j] += prow[j] * ri;
    }
    for (std::size_t i = 0; i < d; ++i) {
      projected_[i] = dot(predicted_.row(i), coords_);
      remainder_[i] = row[i] - projected_[i];
    }
    if (down_) {
      down_->update(projected_);
    } else {
      for (std::size_t a = 0; a < k; ++a) {
        auto crow = covariance_.row(a);
        for (std::size_t b = 0; b < k; ++b) crow[b] += coords_[a] * coords_[b];
      }
    }
    perp_.update(remainder_);
  }

  void update_rows(const DenseMatrix& rows) {
    for (std::size_t r = 0; r < rows.rows(); ++r) update(rows.row(r));
  }

  /// Factor B↓ with B↓ᵀB↓ equal to the tracked covariance, in ambient coordinates.
  [[nodiscard]] DenseMatrix predicted_factor() const {
    if (down_) return down_->result();
    const std::size_t k = predicted_.cols();
    DenseMatrix out(0, dim());
    if (k == 0) return out;
    const SymmetricEigen eig = symmetric_eigen(covariance_);
    std::vector<double> r(dim());
    for (std::size_t j = 0; j < k; ++j) {
      const double lambda = eig.values[j];
      if (!(lambda > 0.0)) break;
      const double scale = std::sqrt(lambda);
      for (std::size_t i = 0; i < dim(); ++i) {
        double s = 0.0;
        for (std::size_t a = 0; a < k; ++a) s += predicted_(i, a) * eig.vectors(a, j);
        r[i] = scale * s;
      }
      out.append_row(r);
    }
    return out;
  }

  [[nodiscard]] DenseMatrix perp_factor() const { return perp_.result(); }

  [[nodiscard]] DenseMatrix result() const { return vstack(predicted_factor(), perp_factor()); }

  [[nodiscard]] std::size_t capacity() const noexcept { return capacity_; }
  [[nodiscard]] std::size_t dim() const noexcept { return predicted_.rows(); }
  [[nodiscard]] std::size_t predicted_rank() const noexcept { return predicted_.cols(); }
  [[nodiscard]] const DenseMatrix& predicted() const noexcept { return predicted_; }
  [[nodiscard]] const FrequentDirections& perp_sketch() const noexcept { return perp_; }
  [[nodiscard]] const DenseMatrix& tracked_covariance() const noexcept { return covariance_; }
  [[nodiscard]] SubspaceMode mode() const noexcept { return options_.mode; }
  [[nodiscard]] std::size_t space_words() const noexcept {
    return learned_fd_space(capacity_, predicted_.cols(), dim()).with_oracle;
  }

 private:
  static FrequentDirections make_perp(std::size_t capacity, const DenseMatrix& predicted,
                                      const LearnedFdOptions& options) {
    const std::size_t k = predicted.cols();
    if (predicted.rows() == 0) throw std::invalid_argument("LearnedFrequentDirections: empty predicted matrix");
    if (2 * k >= capacity)
      throw std::invalid_argument("LearnedFrequentDirections: need 2*k_h < capacity (got k_h=" + std::to_string(k) +
                                  ", capacity=" + std::to_string(capacity) + ")");
    const std::size_t perp_capacity = capacity - 2 * k;
    const std::size_t tau =
        options.perp_threshold != 0 ? options.perp_threshold : std::max<std::size_t>(1, perp_capacity / 2);
    return FrequentDirections(perp_capacity, tau, predicted.rows());
  }

  std::size_t capacity_;
  DenseMatrix predicted_;
  LearnedFdOptions options_;
  DenseMatrix covariance_;
  std::optional<FrequentDirections> down_;
  FrequentDirections perp_;
  std::vector<double> coords_;
  std::vector<double> projected_;
  std::vector<double> remainder_;
};

template <class R>
concept ResidualEstimator = requires(R r, const R cr, std::span<const double> row) {
  r.update(row);
  { cr.estimate() } -> std::convertible_to<double>;
  { cr.rank() } -> std::convertible_to<std::size_t>;
};

/// Streaming estimate of ‖A − [A]_k‖_F² from an auxiliary Frequent
/// Directions sketch with 2k + 1 rows and threshold 2k + 1, plus the exact
/// Frobenius mass: α₀ = ‖A‖_F² − ‖[B]_k‖_F². Because BᵀB ⪯ AᵀA and
/// ‖AᵀA − BᵀB‖₂ ≤ res_k/(k + 1), the estimate satisfies
/// res_k ≤ α₀ ≤ (2k + 1)/(k + 1)·res_k < 2·res_k.
class FdResidualEstimator {
 public:
  FdResidualEstimator(std::size_t rank, std::size_t dim) : rank_(rank), fd_(2 * rank + 1, 2 * rank + 1, dim) {}

  void update(std::span<const double> row) {
    fd_.update(row);
    total_ += norm_sq(row);
  }

  [[nodiscard]] double estimate() const {
    const DenseMatrix b = fd_.result();
    if (b.rows() == 0) return total_;
    const auto s = svd(b).singular_values;
    double head = 0.0;
    for (std::size_t i = 0; i < std::min(rank_, s.size()); ++i) head += s[i] * s[i];
    return std::max(0.0, total_ - head);
  }

  [[nodiscard]] std::size_t rank() const noexcept { return rank_; }
  [[nodiscard]] std::size_t space_words() const noexcept { return fd_.space_words() + 1; }

 private:
  std::size_t rank_;
  FrequentDirections fd_;
  double total_ = 0.0;
};

/// Keeps every row and returns the exact residual (testing only; not a
/// streaming algorithm).
class ExactResidualEstimator {
 public:
  ExactResidualEstimator(std::size_t rank, std::size_t dim) : rank_(rank), rows_(0, dim) {}

  void update(std::span<const double> row) { rows_.append_row(row); }

  [[nodiscard]] double estimate() const {
    if (rows_.rows() == 0) return 0.0;
    const auto tail = tail_energies(rows_);
    return tail[std::min(rank_, tail.size() - 1)];
  }

  [[nodiscard]] std::size_t rank() const noexcept { return rank_; }

 private:
  std::size_t rank_;
  DenseMatrix rows_;
};

/// Runs a residual estimator of rank k over the rows of a.
template <ResidualEstimator Residual = FdResidualEstimator>
double residual_estimate(const DenseMatrix& a, std::size_t k) {
  Residual r(k, a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) r.update(a.row(i));
  return r.estimate();
}

/// Snapshot of the robust sketch: classic output, learned output and the
/// normalized residual α = α₀ / (capacity − k).
struct RobustLfdResult {
  DenseMatrix classic;
  DenseMatrix learned;
  double alpha = 0.0;

  [[nodiscard]] bool prefers_learned(std::span<const double> x) const {
    return std::abs(fd_query(learned, x) - fd_query(classic, x)) <= 2.0 * alpha;
  }

  /// Learned answer when it agrees with the classic one to within 2α,
  /// otherwise the classic answer.
  [[nodiscard]] double query(std::span<const double> x) const {
    const double l = fd_query(learned, x);
    const double c = fd_query(classic, x);
    return std::abs(l - c) <= 2.0 * alpha ? l : c;
  }
};

/// Robust learned Frequent Directions: a classic sketch, a learned sketch and
/// a residual estimator run side by side; queries fall back to the classic
/// answer when the two disagree by more than twice the normalized residual.
///
/// The classic sketch uses threshold = capacity so that its error is at most
/// res_k / (capacity − k) for the residual rank k < capacity in use.
template <ResidualEstimator Residual = FdResidualEstimator>
class RobustLearnedFrequentDirections {
 public:
  RobustLearnedFrequentDirections(std::size_t capacity, DenseMatrix predicted, std::size_t residual_rank,
                                  LearnedFdOptions options = {})
      : capacity_(capacity),
        residual_rank_(residual_rank),
        classic_(capacity, capacity, predicted.rows()),
        learned_(capacity, predicted, options),
        residual_(residual_rank, predicted.rows()) {
    if (residual_rank_ >= capacity_)
      throw std::invalid_argument("RobustLearnedFrequentDirections: residual rank must be below capacity");
  }

  RobustLearnedFrequentDirections(std::size_t capacity, DenseMatrix predicted, LearnedFdOptions options = {})
      : RobustLearnedFrequentDirections(capacity, std::move(predicted), capacity / 2, options) {}

  void update(std::span<const double> row) {
    classic_.update(row);
    learned_.update(row);
    residual_.update(row);
  }

  void update_rows(const DenseMatrix& rows) {
    for (std::size_t r = 0; r < rows.rows(); ++r) update(rows.row(r));
  }

  [[nodiscard]] RobustLfdResult result() const {
    return {classic_.result(), learned_.result(),
            residual_.estimate() / static_cast<double>(capacity_ - residual_rank_)};
  }

  [[nodiscard]] double query(std::span<const double> x) const { return result().query(x); }

  [[nodiscard]] std::size_t capacity() const noexcept { return capacity_; }
  [[nodiscard]] std::size_t residual_rank() const noexcept { return residual_rank_; }
  [[nodiscard]] const FrequentDirections& classic() const noexcept { return classic_; }
  [[nodiscard]] const LearnedFrequentDirections& learned() const noexcept { return learned_; }
  [[nodiscard]] const Residual& residual() const noexcept { return residual_; }

 private:
  std::size_t capacity_;
  std::size_t residual_rank_;
  FrequentDirections classic_;
  LearnedFrequentDirections learned_;
  Residual residual_;
};

}  // namespace learnsketch
