#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace pls {

// Dense row-major matrix of doubles. Shapes are checked on every operation;
// there is no broadcasting beyond explicit scalar scaling.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  std::string shape_string() const;

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool all_finite() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// a * b
Matrix matmul(const Matrix& a, const Matrix& b);
// a * b^T, the shape of a dense layer applied to a batch (weights stored out x in).
Matrix matmul_bt(const Matrix& a, const Matrix& b);
// a^T * b, the shape of a weight gradient.
Matrix matmul_at(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& a);
Matrix add(const Matrix& a, const Matrix& b);
Matrix subtract(const Matrix& a, const Matrix& b);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double s);
// Adds a column vector (n x 1) to every row of a (rows x n).
Matrix add_row_vector(const Matrix& a, const Matrix& bias);
// Sums each row: (rows x cols) -> (rows x 1).
Matrix row_sum(const Matrix& a);
// Sums each column: (rows x cols) -> (cols x 1).
Matrix column_sum(const Matrix& a);

Matrix relu(const Matrix& a);
Matrix sigmoid(const Matrix& a);
// Row-wise softmax with per-row max subtraction.
Matrix softmax_rows(const Matrix& z);

// Rows selected by index, in the given order.
Matrix gather_rows(const Matrix& a, std::span<const std::size_t> indices);

}  // namespace pls
