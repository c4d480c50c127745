#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "learnsketch/dense_matrix.hpp"
#include "learnsketch/frequency.hpp"
#include "learnsketch/linalg.hpp"
#include "learnsketch/misra_gries.hpp"
#include "learnsketch/random.hpp"

namespace learnsketch {

struct StreamInstance {
  std::vector<ElementId> items;
  FrequencyTable truth;
  std::size_t d = 0;

  [[nodiscard]] Count n() const noexcept { return truth.total(); }
};

struct MatrixInstance {
  DenseMatrix a;
  std::vector<double> spectrum;  // intended σᵢ², non-increasing
  DenseMatrix v;                 // intended right singular vectors as columns (d×d)
};

enum class StreamOrder { shuffled, sorted };

inline double harmonic_number(std::size_t d) {
  double h = 0.0;
  for (std::size_t i = d; i >= 1; --i) h += 1.0 / static_cast<double>(i);
  return h;
}

/// fᵢ = round(n / (i·H_d)) for i = 1..d, then repaired to sum to n: a
/// surplus goes to element 1, a deficit is taken from the last non-zero
/// elements first. The result is non-increasing.
inline std::vector<Count> zipf_frequencies(std::size_t d, Count n) {
  if (d == 0) throw std::invalid_argument("zipf_frequencies: d must be positive");
  const double h = harmonic_number(d);
  std::vector<Count> f(d);
  Count sum = 0;
  for (std::size_t i = 0; i < d; ++i) {
    f[i] = static_cast<Count>(std::llround(static_cast<double>(n) / (static_cast<double>(i + 1) * h)));
    sum += f[i];
  }
  if (sum < n) {
    f[0] += n - sum;
  } else {
    Count excess = sum - n;
    for (std::size_t i = d; i-- > 0 && excess > 0;) {
      const Count take = std::min(excess, f[i]);
      f[i] -= take;
      excess -= take;
    }
  }
  return f;
}

namespace detail {
inline StreamInstance stream_from_items(std::vector<ElementId> items, std::size_t d) {
  StreamInstance s;
  s.truth = FrequencyTable::from_stream(items);
  s.items = std::move(items);
  s.d = d;
  return s;
}
}  // namespace detail

/// Zipfian stream over ids 1..d with exactly n items.
inline StreamInstance zipf_stream(std::size_t d, Count n, std::uint64_t seed, StreamOrder order = StreamOrder::shuffled) {
  const auto f = zipf_frequencies(d, n);
  std::vector<ElementId> items;
  items.reserve(n);
  for (std::size_t i = 0; i < d; ++i) items.insert(items.end(), f[i], static_cast<ElementId>(i + 1));
  if (order == StreamOrder::shuffled) {
    Rng rng(seed);
    std::shuffle(items.begin(), items.end(), rng);
  }
  return detail::stream_from_items(std::move(items), d);
}

/// Random orthonormal d×k basis (orthonormalized Gaussian).
inline DenseMatrix random_orthonormal(std::size_t rows, std::size_t cols, Rng& rng) {
  for (int attempt = 0; attempt < 16; ++attempt) {
    try {
      return orthonormalize(gaussian_matrix(rows, cols, rng));
    } catch (const std::invalid_argument&) {
    }
  }
  throw std::runtime_error("random_orthonormal: repeated rank-deficient draws");
}

namespace detail {
inline std::vector<double> zipf_spectrum(std::size_t d, std::size_t n) {
  const double z = static_cast<double>(n) / harmonic_number(d);
  std::vector<double> s(d);
  for (std::size_t i = 0; i < d; ++i) s[i] = z / static_cast<double>(i + 1);
  return s;
}

// u·diag(√spectrum)·vᵀ
inline DenseMatrix compose(const DenseMatrix& u, const std::vector<double>& spectrum, const DenseMatrix& v) {
  DenseMatrix us = u;
  for (std::size_t r = 0; r < us.rows(); ++r)
    for (std::size_t c = 0; c < us.cols(); ++c) us(r, c) *= std::sqrt(spectrum[c]);
  return multiply_a_bt(us, v);
}
}  // namespace detail

/// n×d matrix with σᵢ² = Z/i, Z = n/H_d (so ‖A‖_F² = n), built as
/// U·diag(σ)·Vᵀ with random orthonormal U (n×d) and V (d×d).
inline MatrixInstance zipf_matrix(std::size_t d, std::size_t n, std::uint64_t seed) {
  if (d == 0 || n < d) throw std::invalid_argument("zipf_matrix: need 0 < d <= n");
  Rng rng(seed);
  MatrixInstance out;
  out.v = random_orthonormal(d, d, rng);
  const DenseMatrix u = random_orthonormal(n, d, rng);
  out.spectrum = detail::zipf_spectrum(d, n);
  out.a = detail::compose(u, out.spectrum, out.v);
  return out;
}

/// Self-similar sequence: every instance has the same Zipfian spectrum and
/// the same top-k_shared right singular vectors. The remaining right
/// singular vectors and the left factor of instance j are re-orthonormalized
/// mixtures (1 − drift)·base + drift·noise_j, so drift = 0 repeats one matrix.
inline std::vector<MatrixInstance> matrix_sequence(std::size_t count, std::size_t d, std::size_t n,
                                                   std::size_t k_shared, double drift, std::uint64_t seed) {
  if (k_shared >= d) throw std::invalid_argument("matrix_sequence: k_shared must be below d");
  if (n < d) throw std::invalid_argument("matrix_sequence: need n >= d");
  if (!(drift >= 0.0 && drift <= 1.0)) throw std::invalid_argument("matrix_sequence: drift must lie in [0, 1]");
  Rng base_rng(derive_seed(seed, 0));
  const DenseMatrix v_base = random_orthonormal(d, d, base_rng);
  const DenseMatrix u_base = random_orthonormal(n, d, base_rng);
  const auto spectrum = detail::zipf_spectrum(d, n);

  std::vector<MatrixInstance> seq;
  seq.reserve(count);
  for (std::size_t j = 0; j < count; ++j) {
    Rng rng(derive_seed(seed, j + 1));
    DenseMatrix mixed_v = v_base;
    const DenseMatrix gv = gaussian_matrix(d, d - k_shared, rng);
    for (std::size_t r = 0; r < d; ++r)
      for (std::size_t c = k_shared; c < d; ++c)
        mixed_v(r, c) = (1.0 - drift) * v_base(r, c) + drift * gv(r, c - k_shared);
    DenseMatrix v = orthonormalize(mixed_v);
    for (std::size_t r = 0; r < d; ++r)
      for (std::size_t c = 0; c < k_shared; ++c) v(r, c) = v_base(r, c);

    const DenseMatrix gu = gaussian_matrix(n, d, rng);
    DenseMatrix mixed_u(n, d);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < d; ++c) mixed_u(r, c) = (1.0 - drift) * u_base(r, c) + drift * gu(r, c);
    const DenseMatrix u = drift == 0.0 ? u_base : orthonormalize(mixed_u);
    if (drift == 0.0) v = v_base;

    MatrixInstance inst;
    inst.a = detail::compose(u, spectrum, v);
    inst.spectrum = spectrum;
    inst.v = std::move(v);
    seq.push_back(std::move(inst));
  }
  return seq;
}

// ---- adversarial constructions -------------------------------------------

/// Self-check recorded while building the classic Misra-Gries adversary.
struct MgCertificate {
  std::size_t t = 0;             // number of head elements inserted first
  Count padding = 0;             // extra copies of element 1 added in phase one
  std::size_t game_steps = 0;
  double bound = 0.0;            // (1/m)·Σ_{i>m+t} fᵢ
  double min_reduction = 0.0;    // min over heads of fᵢ − estimate(i) after the whole stream
  bool holds = true;             // every head lost at least min(fᵢ, bound)
};

struct AdversarialMgInstance {
  StreamInstance stream;
  MgCertificate certificate;
};

/// Self-check recorded while building the learned Misra-Gries adversary.
struct LmgCertificate {
  std::size_t game_steps = 0;
  std::size_t range_begin = 0;   // first element id of the checked range
  std::size_t range_end = 0;     // last element id of the checked range
  std::size_t zero_estimates = 0;
  std::size_t required_zeros = 0;
  std::size_t max_inner_size = 0;
  double lower_bound = 0.0;      // Σ over the lightest required_zeros elements of the range of fᵢ²/n
  bool holds = true;
};

struct AdversarialLmgInstance {
  StreamInstance stream;
  LmgCertificate certificate;
};

namespace detail {

// Tail multiset over element ids with remaining multiplicities; supports
// sampling an element that a sketch does not currently store.
class TailPool {
 public:
  TailPool(const std::vector<Count>& f, std::size_t first_index) {
    for (std::size_t i = first_index; i < f.size(); ++i)
      if (f[i] > 0) {
        ids_.push_back(static_cast<ElementId>(i + 1));
        remaining_.push_back(f[i]);
      }
  }

  template <class Stored>
  bool pick_unstored(Rng& rng, const Stored& stored, ElementId& out) {
    if (ids_.empty()) return false;
    std::uniform_int_distribution<std::size_t> pick(0, ids_.size() - 1);
    for (int attempt = 0; attempt < 32; ++attempt) {
      const std::size_t idx = pick(rng);
      if (!stored(ids_[idx])) return take(idx, out);
    }
    for (std::size_t idx = 0; idx < ids_.size(); ++idx)
      if (!stored(ids_[idx])) return take(idx, out);
    return false;
  }

  void drain(std::vector<ElementId>& items) {
    for (std::size_t i = 0; i < ids_.size(); ++i) items.insert(items.end(), remaining_[i], ids_[i]);
    ids_.clear();
    remaining_.clear();
  }

 private:
  bool take(std::size_t idx, ElementId& out) {
    out = ids_[idx];
    if (--remaining_[idx] == 0) {
      ids_[idx] = ids_.back();
      remaining_[idx] = remaining_.back();
      ids_.pop_back();
      remaining_.pop_back();
    }
    return true;
  }

  std::vector<ElementId> ids_;
  std::vector<Count> remaining_;
};

}  // namespace detail

/// Ordering that drives classic Misra-Gries with capacity m to its lower
/// bound: elements 1..t (t = ⌈m / ln(2d/m)⌉, at most m − 1) arrive first,
/// padded with copies of element 1 so their total is a multiple of m; then
/// the adversary repeatedly sends a tail element the table does not hold,
/// and finally the leftovers. For m ≥ d no eviction can happen and the
/// stream is a plain shuffled Zipfian stream.
inline AdversarialMgInstance adversarial_mg_stream(std::size_t d, Count n, std::size_t m, std::uint64_t seed) {
  if (m == 0) throw std::invalid_argument("adversarial_mg_stream: m must be positive");
  AdversarialMgInstance out;
  if (m >= d) {
    out.stream = zipf_stream(d, n, seed);
    out.certificate.t = d;
    return out;
  }
  auto f = zipf_frequencies(d, n);
  const double ratio = std::log(2.0 * static_cast<double>(d) / static_cast<double>(m));
  auto t = static_cast<std::size_t>(std::ceil(static_cast<double>(m) / ratio));
  t = std::clamp<std::size_t>(t, 1, m - 1);

  Count head = 0;
  for (std::size_t i = 0; i < t; ++i) head += f[i];
  const Count padding = (m - head % m) % m;
  f[0] += padding;

  std::vector<ElementId> items;
  items.reserve(n + padding);
  for (std::size_t i = 0; i < t; ++i) items.insert(items.end(), f[i], static_cast<ElementId>(i + 1));

  MisraGriesSketch sim(m);
  for (ElementId id : items) sim.update(id);
  detail::TailPool pool(f, t);
  Rng rng(seed);
  ElementId next = 0;
  std::size_t steps = 0;
  while (pool.pick_unstored(rng, [&](ElementId id) { return sim.estimate(id) > 0; }, next)) {
    sim.update(next);
    items.push_back(next);
    ++steps;
  }
  const std::size_t game_end = items.size();
  pool.drain(items);
  for (std::size_t i = game_end; i < items.size(); ++i) sim.update(items[i]);

  MgCertificate& cert = out.certificate;
  cert.t = t;
  cert.padding = padding;
  cert.game_steps = steps;
  double tail = 0.0;
  for (std::size_t i = m + t; i < d; ++i) tail += static_cast<double>(f[i]);
  cert.bound = tail / static_cast<double>(m);
  cert.min_reduction = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < t; ++i) {
    const double fi = static_cast<double>(f[i]);
    const double lost = fi - static_cast<double>(sim.estimate(static_cast<ElementId>(i + 1)));
    cert.min_reduction = std::min(cert.min_reduction, lost);
    if (lost + 1e-9 < std::min(fi, cert.bound)) cert.holds = false;
  }
  out.stream = detail::stream_from_items(std::move(items), d);
  return out;
}

/// Ordering against learned Misra-Gries with m counters of which k_h are
/// exact counters for elements 1..k_h: those arrive first, then the
/// adversary plays the same game over elements k_h+1..d against a simulated
/// inner table of m − k_h counters, then the leftovers arrive.
inline AdversarialLmgInstance adversarial_lmg_stream(std::size_t d, Count n, std::size_t m, std::size_t k_h,
                                                     std::uint64_t seed) {
  if (k_h >= m) throw std::invalid_argument("adversarial_lmg_stream: need k_h < m");
  if (d < k_h + 2 * (m - k_h)) throw std::invalid_argument("adversarial_lmg_stream: d too small for m and k_h");
  const auto f = zipf_frequencies(d, n);
  std::vector<ElementId> items;
  items.reserve(n);
  for (std::size_t i = 0; i < k_h; ++i) items.insert(items.end(), f[i], static_cast<ElementId>(i + 1));

  const std::size_t inner_capacity = m - k_h;
  MisraGriesSketch sim(inner_capacity);
  detail::TailPool pool(f, k_h);
  Rng rng(seed);
  ElementId next = 0;
  LmgCertificate cert;
  while (pool.pick_unstored(rng, [&](ElementId id) { return sim.estimate(id) > 0; }, next)) {
    sim.update(next);
    items.push_back(next);
    cert.max_inner_size = std::max(cert.max_inner_size, sim.size());
    ++cert.game_steps;
  }
  const std::size_t game_end = items.size();
  pool.drain(items);
  for (std::size_t i = game_end; i < items.size(); ++i) {
    sim.update(items[i]);
    cert.max_inner_size = std::max(cert.max_inner_size, sim.size());
  }

  cert.range_begin = k_h + 1;
  cert.range_end = k_h + 2 * inner_capacity;
  cert.required_zeros = inner_capacity;
  for (std::size_t id = cert.range_begin; id <= cert.range_end; ++id)
    if (sim.estimate(static_cast<ElementId>(id)) == 0) ++cert.zero_estimates;
  double lb = 0.0;
  for (std::size_t id = cert.range_end - inner_capacity + 1; id <= cert.range_end; ++id) {
    const double fi = static_cast<double>(f[id - 1]);
    lb += fi * fi;
  }
  cert.lower_bound = lb / static_cast<double>(n);
  cert.holds = cert.zero_estimates >= cert.required_zeros && cert.max_inner_size <= inner_capacity;
  return {detail::stream_from_items(std::move(items), d), cert};
}

}  // namespace learnsketch
