#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace learnsketch {

/// Row-major dense matrix of 64-bit floats.
///
/// Construction from raw data rejects non-finite entries; element access
/// through operator() is unchecked so that the numerical kernels stay tight.
class DenseMatrix {
 public:
  DenseMatrix() = default;

  DenseMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw std::invalid_argument("DenseMatrix: data length " + std::to_string(data_.size()) +
                                  " does not match " + std::to_string(rows_) + "x" + std::to_string(cols_));
    }
    require_finite("DenseMatrix");
  }

  DenseMatrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_) throw std::invalid_argument("DenseMatrix: ragged initializer");
      data_.insert(data_.end(), r.begin(), r.end());
    }
    require_finite("DenseMatrix");
  }

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
  [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
  [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  [[nodiscard]] std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  [[nodiscard]] std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  [[nodiscard]] std::span<double> data() noexcept { return data_; }
  [[nodiscard]] std::span<const double> data() const noexcept { return data_; }

  /// Appends a row; an empty matrix adopts the row's length as its width.
  void append_row(std::span<const double> values) {
    if (rows_ == 0 && cols_ == 0) cols_ = values.size();
    if (values.size() != cols_) {
      throw std::invalid_argument("DenseMatrix::append_row: expected " + std::to_string(cols_) +
                                  " columns, got " + std::to_string(values.size()));
    }
    data_.insert(data_.end(), values.begin(), values.end());
    ++rows_;
  }

  [[nodiscard]] DenseMatrix transpose() const {
    DenseMatrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
  }

  /// Rows [first, first + count).
  [[nodiscard]] DenseMatrix row_block(std::size_t first, std::size_t count) const {
    if (first + count > rows_) throw std::out_of_range("DenseMatrix::row_block");
    DenseMatrix out(count, cols_);
    std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(first * cols_), count * cols_, out.data_.begin());
    return out;
  }

  /// Columns [first, first + count).
  [[nodiscard]] DenseMatrix col_block(std::size_t first, std::size_t count) const {
    if (first + count > cols_) throw std::out_of_range("DenseMatrix::col_block");
    DenseMatrix out(rows_, count);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < count; ++c) out(r, c) = (*this)(r, first + c);
    return out;
  }

  [[nodiscard]] std::vector<double> column(std::size_t c) const {
    std::vector<double> out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
    return out;
  }

  [[nodiscard]] double frobenius_norm_sq() const noexcept {
    double s = 0.0;
    for (double v : data_) s += v * v;
    return s;
  }

  [[nodiscard]] bool all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  void require_finite(const char* context) const {
    if (!all_finite()) throw std::invalid_argument(std::string(context) + ": non-finite entry");
  }

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline double dot(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm_sq(std::span<const double> a) noexcept { return dot(a, a); }

inline void require_same_cols(const DenseMatrix& a, const DenseMatrix& b, const char* context) {
  if (a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(context) + ": column mismatch " + std::to_string(a.cols()) + " vs " +
                                std::to_string(b.cols()));
  }
}

inline DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("multiply: inner dimension mismatch");
  DenseMatrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto orow = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto brow = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

/// aᵀ·b without materializing the transpose.
inline DenseMatrix multiply_at_b(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows()) throw std::invalid_argument("multiply_at_b: row mismatch");
  DenseMatrix out(a.cols(), b.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto arow = a.row(r);
    auto brow = b.row(r);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double ai = arow[i];
      if (ai == 0.0) continue;
      auto orow = out.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) orow[j] += ai * brow[j];
    }
  }
  return out;
}

/// a·bᵀ.
inline DenseMatrix multiply_a_bt(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_cols(a, b, "multiply_a_bt");
  DenseMatrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) out(i, j) = dot(a.row(i), b.row(j));
  return out;
}

/// The Gram matrix aᵀa.
inline DenseMatrix gram(const DenseMatrix& a) { return multiply_at_b(a, a); }

inline DenseMatrix subtract(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("subtract: shape mismatch");
  DenseMatrix out = a;
  auto o = out.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] -= bd[i];
  return out;
}

inline DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("add: shape mismatch");
  DenseMatrix out = a;
  auto o = out.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += bd[i];
  return out;
}

/// a·x for a vector x of length a.cols().
inline std::vector<double> multiply(const DenseMatrix& a, std::span<const double> x) {
  if (x.size() != a.cols()) throw std::invalid_argument("multiply: vector length mismatch");
  std::vector<double> out(a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r) out[r] = dot(a.row(r), x);
  return out;
}

/// aᵀ·y for a vector y of length a.rows().
inline std::vector<double> multiply_transpose(const DenseMatrix& a, std::span<const double> y) {
  if (y.size() != a.rows()) throw std::invalid_argument("multiply_transpose: vector length mismatch");
  std::vector<double> out(a.cols(), 0.0);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const double yr = y[r];
    if (yr == 0.0) continue;
    auto arow = a.row(r);
    for (std::size_t c = 0; c < a.cols(); ++c) out[c] += yr * arow[c];
  }
  return out;
}

/// Stacks b below a; either operand may have zero rows.
inline DenseMatrix vstack(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() == 0 && a.cols() == 0) return b;
  if (b.rows() == 0 && b.cols() == 0) return a;
  require_same_cols(a, b, "vstack");
  std::vector<double> data(a.data().begin(), a.data().end());
  data.insert(data.end(), b.data().begin(), b.data().end());
  return DenseMatrix(a.rows() + b.rows(), a.cols(), std::move(data));
}

}  // namespace learnsketch
