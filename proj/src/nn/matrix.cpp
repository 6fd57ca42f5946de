#include "kprog/nn/matrix.hpp"

#include <cmath>

#include <Eigen/Core>

namespace kprog::nn {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using MutableMap = Eigen::Map<RowMajor>;

ConstMap view(const Matrix& m) { return ConstMap(m.data(), m.rows(), m.cols()); }
MutableMap view(Matrix& m) { return MutableMap(m.data(), m.rows(), m.cols()); }

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  require(data_.size() == rows * cols, "matrix data length does not match " +
                                           std::to_string(rows) + "x" + std::to_string(cols));
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    require(r.size() == cols_, "ragged matrix literal");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(std::span<const double> values) {
  Matrix m(values.size(), values.size());
  for (std::size_t i = 0; i < values.size(); ++i) m(i, i) = values[i];
  return m;
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

bool Matrix::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.rows(), "matmul: " + shape(a) + " * " + shape(b));
  Matrix out(a.rows(), b.cols());
  if (out.empty() || a.cols() == 0) return out;
  view(out).noalias() = view(a) * view(b);
  return out;
}

Matrix matmul_transposed(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.cols(), "matmul_transposed: " + shape(a) + " * " + shape(b) + "^T");
  Matrix out(a.rows(), b.rows());
  if (out.empty() || a.cols() == 0) return out;
  view(out).noalias() = view(a) * view(b).transpose();
  return out;
}

Matrix transposed_matmul(const Matrix& a, const Matrix& b) {
  Matrix out(a.cols(), b.cols());
  accumulate_transposed_matmul(out, a, b);
  return out;
}

void accumulate_transposed_matmul(Matrix& out, const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows(), "transposed_matmul: " + shape(a) + "^T * " + shape(b));
  require(out.rows() == a.cols() && out.cols() == b.cols(), "transposed_matmul: bad output shape");
  if (out.empty() || a.rows() == 0) return;
  view(out).noalias() += view(a).transpose() * view(b);
}

std::vector<double> matvec(const Matrix& m, std::span<const double> v) {
  require(m.cols() == v.size(), "matvec: " + shape(m) + " * vector of " + std::to_string(v.size()));
  std::vector<double> out(m.rows(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    double acc = 0.0;
    const auto row = m.row(r);
    for (std::size_t c = 0; c < m.cols(); ++c) acc += row[c] * v[c];
    out[r] = acc;
  }
  return out;
}

Matrix matrix_power(const Matrix& m, unsigned exponent) {
  require(m.square(), "matrix_power: matrix must be square");
  Matrix result = Matrix::identity(m.rows());
  for (unsigned i = 0; i < exponent; ++i) result = matmul(m, result);
  return result;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "add: " + shape(a) + " + " + shape(b));
  Matrix out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += b.data()[i];
  return out;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "sub: " + shape(a) + " - " + shape(b));
  Matrix out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] -= b.data()[i];
  return out;
}

Matrix operator*(double s, const Matrix& a) {
  Matrix out = a;
  for (double& v : out.values()) v *= s;
  return out;
}

double trace(const Matrix& m) {
  require(m.square(), "trace: matrix must be square");
  double t = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) t += m(i, i);
  return t;
}

Matrix slice_rows(const Matrix& m, std::size_t begin, std::size_t count) {
  require(begin + count <= m.rows(), "slice_rows out of range");
  Matrix out(count, m.cols());
  std::copy(m.data() + begin * m.cols(), m.data() + (begin + count) * m.cols(), out.data());
  return out;
}

Matrix slice_cols(const Matrix& m, std::size_t begin, std::size_t count) {
  require(begin + count <= m.cols(), "slice_cols out of range");
  Matrix out(m.rows(), count);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto src = m.row(r).subspan(begin, count);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

Matrix hconcat(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows(), "hconcat: " + shape(a) + " | " + shape(b));
  Matrix out(a.rows(), a.cols() + b.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto dst = out.row(r);
    std::copy(a.row(r).begin(), a.row(r).end(), dst.begin());
    std::copy(b.row(r).begin(), b.row(r).end(), dst.begin() + static_cast<std::ptrdiff_t>(a.cols()));
  }
  return out;
}

Matrix vconcat(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.cols(), "vconcat: " + shape(a) + " over " + shape(b));
  Matrix out(a.rows() + b.rows(), a.cols());
  std::copy(a.data(), a.data() + a.size(), out.data());
  std::copy(b.data(), b.data() + b.size(), out.data() + a.size());
  return out;
}

}  // namespace kprog::nn
