#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "learnsketch/dense_matrix.hpp"
#include "learnsketch/frequency.hpp"
#include "learnsketch/linalg.hpp"
#include "learnsketch/random.hpp"

namespace learnsketch {

/// Predicted frequent directions: d×k_h with orthonormal columns.
struct DirectionOracle {
  DenseMatrix p;

  void validate() const {
    if (orthonormality_defect(p) > 1e-8) throw std::invalid_argument("DirectionOracle: columns are not orthonormal");
  }
  [[nodiscard]] std::size_t dim() const noexcept { return p.rows(); }
  [[nodiscard]] std::size_t rank() const noexcept { return p.cols(); }
  friend bool operator==(const DirectionOracle&, const DirectionOracle&) = default;
};

// ---- frequency oracles ---------------------------------------------------

inline FrequencyOracle perfect_freq_oracle(const FrequencyTable& truth, std::size_t k_h) {
  if (k_h > truth.distinct())
    throw std::invalid_argument("perfect_freq_oracle: k_h=" + std::to_string(k_h) + " exceeds the " +
                                std::to_string(truth.distinct()) + " distinct elements");
  const auto ranked = truth.ranked();
  FrequencyOracle o;
  o.heavy.reserve(k_h);
  for (std::size_t i = 0; i < k_h; ++i) o.heavy.push_back(ranked[i].first);
  return o;
}

/// The true top ⌈c·k_h⌉ elements followed by distractors drawn uniformly
/// without replacement from the remaining elements.
inline FrequencyOracle partial_freq_oracle(const FrequencyTable& truth, std::size_t k_h, double c,
                                           std::uint64_t seed) {
  if (!(c > 0.0 && c <= 1.0)) throw std::invalid_argument("partial_freq_oracle: c must lie in (0, 1]");
  if (k_h > truth.distinct()) throw std::invalid_argument("partial_freq_oracle: k_h exceeds distinct elements");
  const auto ranked = truth.ranked();
  const auto top = std::min<std::size_t>(k_h, static_cast<std::size_t>(std::ceil(c * static_cast<double>(k_h) - 1e-9)));
  FrequencyOracle o;
  o.heavy.reserve(k_h);
  for (std::size_t i = 0; i < top; ++i) o.heavy.push_back(ranked[i].first);
  std::vector<ElementId> rest;
  rest.reserve(ranked.size() - top);
  for (std::size_t i = top; i < ranked.size(); ++i) rest.push_back(ranked[i].first);
  Rng rng(seed);
  std::vector<ElementId> picked;
  std::sample(rest.begin(), rest.end(), std::back_inserter(picked), k_h - top, rng);
  o.heavy.insert(o.heavy.end(), picked.begin(), picked.end());
  return o;
}

/// The k_h lightest elements of the table: the worst possible prediction.
inline FrequencyOracle adversarial_freq_oracle(const FrequencyTable& truth, std::size_t k_h) {
  if (k_h > truth.distinct()) throw std::invalid_argument("adversarial_freq_oracle: k_h exceeds distinct elements");
  const auto ranked = truth.ranked();
  FrequencyOracle o;
  for (std::size_t i = 0; i < k_h; ++i) o.heavy.push_back(ranked[ranked.size() - 1 - i].first);
  return o;
}

inline FrequencyOracle first_instance_oracle(const FrequencyTable& first, std::size_t k_h) {
  return perfect_freq_oracle(first, k_h);
}

// ---- direction oracles ---------------------------------------------------

namespace detail {
inline DirectionOracle columns_of_eigenvectors(const SymmetricEigen& eig, std::size_t first, std::size_t count) {
  const std::size_t d = eig.vectors.rows();
  DirectionOracle o{DenseMatrix(d, count)};
  for (std::size_t j = 0; j < count; ++j)
    for (std::size_t i = 0; i < d; ++i) o.p(i, j) = eig.vectors(i, first + j);
  return o;
}
}  // namespace detail

/// Top-k_h right singular vectors of a.
inline DirectionOracle perfect_direction_oracle(const DenseMatrix& a, std::size_t k_h) {
  const std::size_t d = a.cols();
  if (k_h > d) throw std::invalid_argument("perfect_direction_oracle: k_h exceeds dimension");
  if (k_h == 0) return {DenseMatrix(d, 0)};
  const SvdResult f = svd(a);
  if (k_h <= f.vt.rows()) return {f.vt.row_block(0, k_h).transpose()};
  // Fewer rows than k_h: fall back to the full eigenbasis of aᵀa.
  return detail::columns_of_eigenvectors(symmetric_eigen(gram(a)), 0, k_h);
}

/// Bottom-k_h right singular vectors of a (eigenvectors of aᵀa with the
/// smallest eigenvalues).
inline DirectionOracle adversarial_direction_oracle(const DenseMatrix& a, std::size_t k_h) {
  const std::size_t d = a.cols();
  if (k_h > d) throw std::invalid_argument("adversarial_direction_oracle: k_h exceeds dimension");
  return detail::columns_of_eigenvectors(symmetric_eigen(gram(a)), d - k_h, k_h);
}

/// Adds i.i.d. N(0, σ²/d) entries to the base directions, then
/// re-orthonormalizes. σ = 0 returns the base unchanged. A rank-deficient
/// draw is retried with the next seed.
inline DirectionOracle noisy_direction_oracle(const DirectionOracle& base, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma))
    throw std::invalid_argument("noisy_direction_oracle: sigma must be finite and non-negative");
  if (sigma == 0.0 || base.rank() == 0) return base;
  const double stddev = sigma / std::sqrt(static_cast<double>(base.dim()));
  for (std::uint64_t attempt = 0; attempt < 64; ++attempt) {
    Rng rng(seed + attempt);
    const DenseMatrix noisy = add(base.p, gaussian_matrix(base.dim(), base.rank(), rng, stddev));
    try {
      return {orthonormalize(noisy)};
    } catch (const std::invalid_argument&) {
    }
  }
  throw std::runtime_error("noisy_direction_oracle: could not draw a full-rank perturbation");
}

inline DirectionOracle first_instance_oracle(const DenseMatrix& first, std::size_t k_h) {
  return perfect_direction_oracle(first, k_h);
}

}  // namespace learnsketch
