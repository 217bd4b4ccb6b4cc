#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace skillfuse {

// Error taxonomy: argument errors are std::invalid_argument, out-of-domain
// inputs (e.g. non-positive intensities) are std::domain_error, and failures
// of a numeric procedure (singular systems, zero-norm vectors) are numeric_error.
class numeric_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dense row-major matrix of doubles. Rows are time samples, columns channels.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) return {};
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != m.cols_) throw std::invalid_argument("Matrix::from_rows: ragged rows");
      std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
    }
    return m;
  }

  static Matrix column(std::span<const double> values) {
    Matrix m(values.size(), 1);
    std::copy(values.begin(), values.end(), m.data_.begin());
    return m;
  }

  [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
  [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
  [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
  [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  [[nodiscard]] std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  [[nodiscard]] std::vector<double> col(std::size_t c) const {
    std::vector<double> out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
    return out;
  }

  void set_col(std::size_t c, std::span<const double> values) {
    assert(values.size() == rows_);
    for (std::size_t r = 0; r < rows_; ++r) (*this)(r, c) = values[r];
  }

  std::span<double> values() noexcept { return data_; }
  [[nodiscard]] std::span<const double> values() const noexcept { return data_; }

  [[nodiscard]] bool all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

enum class Modality { neural, motor, fused };
enum class Task { pattern_cutting, suturing };
enum class HeadKind { classify, regress };

inline std::string_view to_string(Modality m) {
  switch (m) {
    case Modality::neural: return "neural";
    case Modality::motor: return "motor";
    case Modality::fused: return "fused";
  }
  return "?";
}

inline std::string_view to_string(Task t) {
  return t == Task::pattern_cutting ? "pattern_cutting" : "suturing";
}

inline std::string_view to_string(HeadKind h) { return h == HeadKind::classify ? "classify" : "regress"; }

inline Modality parse_modality(std::string_view s) {
  if (s == "neural") return Modality::neural;
  if (s == "motor") return Modality::motor;
  if (s == "fused") return Modality::fused;
  throw std::invalid_argument("unknown modality: " + std::string(s));
}

inline Task parse_task(std::string_view s) {
  if (s == "pattern_cutting") return Task::pattern_cutting;
  if (s == "suturing") return Task::suturing;
  throw std::invalid_argument("unknown task: " + std::string(s));
}

inline HeadKind parse_head(std::string_view s) {
  if (s == "classify") return HeadKind::classify;
  if (s == "regress") return HeadKind::regress;
  throw std::invalid_argument("unknown head: " + std::string(s));
}

// Class names per task; index 0 is the unsatisfactory class.
inline std::string_view class_name(Task task, int label) {
  if (task == Task::pattern_cutting) return label == 0 ? "Fail" : "Pass";
  return label == 0 ? "Resident" : "Surgeon";
}

inline double mean(std::span<const double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Sample standard deviation (n - 1 denominator).
inline double stddev(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace skillfuse
