#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace kprog::nn {

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  bool square() const { return rows_ == cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  Matrix transpose() const;
  bool all_finite() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// a * b
Matrix matmul(const Matrix& a, const Matrix& b);
// a * b^T
Matrix matmul_transposed(const Matrix& a, const Matrix& b);
// a^T * b
Matrix transposed_matmul(const Matrix& a, const Matrix& b);
// out += a^T * b
void accumulate_transposed_matmul(Matrix& out, const Matrix& a, const Matrix& b);

std::vector<double> matvec(const Matrix& m, std::span<const double> v);
Matrix matrix_power(const Matrix& m, unsigned exponent);

Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& a);

double trace(const Matrix& m);

// Rows [begin, begin + count) as a new matrix.
Matrix slice_rows(const Matrix& m, std::size_t begin, std::size_t count);
// Columns [begin, begin + count) as a new matrix.
Matrix slice_cols(const Matrix& m, std::size_t begin, std::size_t count);
// [a | b], row counts must agree.
Matrix hconcat(const Matrix& a, const Matrix& b);
// a stacked over b, column counts must agree.
Matrix vconcat(const Matrix& a, const Matrix& b);

inline void require(bool condition, const std::string& message) {
  if (!condition) throw DimensionError(message);
}

}  // namespace kprog::nn
