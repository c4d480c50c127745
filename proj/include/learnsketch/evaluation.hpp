#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "learnsketch/dense_matrix.hpp"
#include "learnsketch/frequency.hpp"
#include "learnsketch/linalg.hpp"
#include "learnsketch/random.hpp"

namespace learnsketch {

/// One benchmark measurement. A non-empty `error` marks a cell that could
/// not be run; its numeric fields are then meaningless.
struct ErrorReport {
  std::string algorithm;
  std::size_t m = 0;
  std::size_t tau = 0;
  std::size_t k_h = 0;
  double c = 0.0;
  std::uint64_t seed = 0;
  std::size_t space_words = 0;
  double weighted_err = 0.0;
  double unweighted_err = 0.0;
  double wall_ms = 0.0;
  std::string error;

  [[nodiscard]] bool ok() const noexcept { return error.empty(); }
  friend bool operator==(const ErrorReport&, const ErrorReport&) = default;
};

template <class F>
concept ElementEstimator = requires(const F& f, ElementId id) {
  { f(id) } -> std::convertible_to<double>;
};

template <class F>
concept DirectionEstimator = requires(const F& f, std::span<const double> x) {
  { f(x) } -> std::convertible_to<double>;
};

/// Σᵢ (fᵢ/n)·|fᵢ − f̂ᵢ| over elements with non-zero true frequency.
template <ElementEstimator F>
double weighted_error_freq(const FrequencyTable& truth, const F& estimate) {
  if (truth.total() == 0) throw std::invalid_argument("weighted_error_freq: empty frequency table");
  const double n = static_cast<double>(truth.total());
  double err = 0.0;
  for (const auto& [id, f] : truth.entries()) {
    const double fi = static_cast<double>(f);
    err += fi * std::abs(fi - static_cast<double>(estimate(id)));
  }
  return err / n;
}

/// Σ over stream positions of |f_{a_t} − f̂_{a_t}|, computed per element as Σᵢ fᵢ·|fᵢ − f̂ᵢ|.
template <ElementEstimator F>
double unweighted_error_freq(const FrequencyTable& truth, const F& estimate) {
  double err = 0.0;
  for (const auto& [id, f] : truth.entries()) {
    const double fi = static_cast<double>(f);
    err += fi * std::abs(fi - static_cast<double>(estimate(id)));
  }
  return err;
}

template <ElementEstimator F>
double unweighted_error_freq(std::span<const ElementId> stream, const F& estimate) {
  return unweighted_error_freq(FrequencyTable::from_stream(stream), estimate);
}

/// Per-direction errors of a matrix estimator against the exact SVD of a.
struct DirectionErrors {
  std::vector<double> weights;  // σᵢ² / ‖a‖_F²
  std::vector<double> abs_err;  // |σᵢ² − estimate(vᵢ)|

  [[nodiscard]] double weighted() const {
    double s = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) s += weights[i] * abs_err[i];
    return s;
  }
  [[nodiscard]] double unweighted() const { return std::accumulate(abs_err.begin(), abs_err.end(), 0.0); }
};

/// Exact SVD of an input matrix, computed once and reused across sketches.
struct MatrixTruth {
  SvdResult factors;
  double total = 0.0;  // ‖a‖_F²
  std::size_t dim = 0;

  explicit MatrixTruth(const DenseMatrix& a) : factors(svd(a)), total(a.frobenius_norm_sq()), dim(a.cols()) {
    if (!(total > 0.0)) throw std::invalid_argument("MatrixTruth: matrix must be non-zero");
  }
};

template <DirectionEstimator F>
DirectionErrors direction_errors(const MatrixTruth& truth, const F& estimate) {
  DirectionErrors out;
  const auto& s = truth.factors.singular_values;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double s2 = s[i] * s[i];
    out.weights.push_back(s2 / truth.total);
    out.abs_err.push_back(std::abs(s2 - static_cast<double>(estimate(truth.factors.vt.row(i)))));
  }
  return out;
}

template <DirectionEstimator F>
DirectionErrors direction_errors(const DenseMatrix& a, const F& estimate) {
  return direction_errors(MatrixTruth(a), estimate);
}

namespace detail {
inline auto sketch_estimator(const DenseMatrix& b) {
  return [&b](std::span<const double> x) {
    if (b.rows() == 0) return 0.0;
    double s = 0.0;
    for (std::size_t r = 0; r < b.rows(); ++r) {
      const double p = dot(b.row(r), x);
      s += p * p;
    }
    return s;
  };
}
}  // namespace detail

/// Σᵢ (σᵢ²/‖a‖_F²)·|‖a·vᵢ‖² − ‖b·vᵢ‖²| over the right singular vectors of a.
inline double weighted_error_matrix(const DenseMatrix& a, const DenseMatrix& b) {
  detail::require_compatible(a, b, "weighted_error_matrix");
  return direction_errors(a, detail::sketch_estimator(b)).weighted();
}

inline double weighted_error_matrix(const MatrixTruth& truth, const DenseMatrix& b) {
  if (b.rows() > 0 && b.cols() != truth.dim) throw std::invalid_argument("weighted_error_matrix: dimension mismatch");
  return direction_errors(truth, detail::sketch_estimator(b)).weighted();
}

inline double unweighted_error_matrix(const MatrixTruth& truth, const DenseMatrix& b) {
  if (b.rows() > 0 && b.cols() != truth.dim) throw std::invalid_argument("unweighted_error_matrix: dimension mismatch");
  return direction_errors(truth, detail::sketch_estimator(b)).unweighted();
}

/// Σᵢ |‖a·vᵢ‖² − ‖b·vᵢ‖²|.
inline double unweighted_error_matrix(const DenseMatrix& a, const DenseMatrix& b) {
  detail::require_compatible(a, b, "unweighted_error_matrix");
  return direction_errors(a, detail::sketch_estimator(b)).unweighted();
}

struct TraceFormResult {
  double value = 0.0;
  /// Whether bᵀb ⪯ aᵀa held (to 1e-8·‖a‖_F²); the closed form equals the
  /// weighted error only under that premise.
  bool premise_holds = true;
  double psd_gap = 0.0;
};

/// (Tr((aᵀa)²) − Tr(bᵀb·aᵀa)) / ‖a‖_F².
inline TraceFormResult weighted_error_trace_form(const DenseMatrix& a, const DenseMatrix& b) {
  detail::require_compatible(a, b, "weighted_error_trace_form");
  const double total = a.frobenius_norm_sq();
  if (!(total > 0.0)) throw std::invalid_argument("weighted_error_trace_form: a must be non-zero");
  const double first = gram(a).frobenius_norm_sq();
  const double second = b.rows() == 0 ? 0.0 : multiply_a_bt(b, a).frobenius_norm_sq();
  TraceFormResult r;
  r.value = (first - second) / total;
  r.psd_gap = gram_psd_gap(a, b);
  r.premise_holds = r.psd_gap >= -1e-8 * total;
  return r;
}

struct MonteCarloResult {
  double value = 0.0;
  double mean_norm_sq = 0.0;  // empirical E‖v‖², should approach ‖a‖_F²
};

/// Empirical E[‖a·v‖² − ‖b·v‖²] / E[‖v‖²] for v = aᵀz, z standard normal.
/// Samples are drawn in chunks of 1024 with per-chunk seeds, so results do
/// not depend on how chunks are scheduled.
inline MonteCarloResult weighted_error_monte_carlo(const DenseMatrix& a, const DenseMatrix& b, std::size_t samples,
                                           std::uint64_t seed) {
  detail::require_compatible(a, b, "weighted_error_monte_carlo");
  if (samples == 0) throw std::invalid_argument("weighted_error_monte_carlo: samples must be positive");
  const std::size_t n = a.rows();
  const std::size_t d = a.cols();
  const DenseMatrix ata = gram(a);
  const DenseMatrix btb = b.rows() == 0 ? DenseMatrix(d, d) : gram(b);
  const DenseMatrix diff = subtract(ata, btb);
  constexpr std::size_t kChunk = 1024;
  std::vector<double> z(n);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t start = 0, chunk = 0; start < samples; start += kChunk, ++chunk) {
    Rng rng(derive_seed(seed, chunk));
    std::normal_distribution<double> normal;
    const std::size_t stop = std::min(samples, start + kChunk);
    for (std::size_t s = start; s < stop; ++s) {
      for (double& zi : z) zi = normal(rng);
      const std::vector<double> v = multiply_transpose(a, z);
      const std::vector<double> dv = multiply(diff, v);
      num += dot(v, dv);
      den += norm_sq(v);
    }
  }
  const double count = static_cast<double>(samples);
  return {den > 0.0 ? num / den : 0.0, den / count};
}

struct ScalingFit {
  double slope = 0.0;
  double intercept = 0.0;
};

/// Least-squares fit of log(err) = intercept + slope·log(m).
inline ScalingFit fit_log_log(std::span<const std::pair<double, double>> points) {
  if (points.size() < 3) throw std::invalid_argument("fit_error_scaling: need at least 3 points");
  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto& [m, err] : points) {
    if (!(m > 0.0) || !(err > 0.0)) throw std::invalid_argument("fit_error_scaling: values must be positive");
    xs.push_back(std::log(m));
    ys.push_back(std::log(err));
  }
  std::vector<double> sorted = xs;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw std::invalid_argument("fit_error_scaling: m values must be distinct");
  const double k = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / k;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / k;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

inline double fit_error_scaling(std::span<const std::pair<double, double>> points) {
  return fit_log_log(points).slope;
}

struct SummaryStats {
  double median = 0.0;
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t count = 0;
};

/// Median, mean and population standard deviation.
inline SummaryStats summarize(std::vector<double> values) {
  SummaryStats s;
  s.count = values.size();
  if (values.empty()) return s;
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  s.median = values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(var / static_cast<double>(values.size()));
  return s;
}

inline double median(std::vector<double> values) { return summarize(std::move(values)).median; }

}  // namespace learnsketch
