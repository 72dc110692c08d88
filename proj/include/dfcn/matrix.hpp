#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace dfcn {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix scalar(double v) { return Matrix(1, 1, v); }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  const std::vector<double>& storage() const noexcept { return data_; }

  /// Value of a 1x1 matrix.
  double item() const;

  bool same_shape(const Matrix& o) const noexcept { return rows_ == o.rows_ && cols_ == o.cols_; }
  bool all_finite() const noexcept;

  Matrix transposed() const;

  Matrix& operator+=(const Matrix& o);
  Matrix& operator-=(const Matrix& o);
  Matrix& operator*=(double s) noexcept;

  friend bool operator==(const Matrix& a, const Matrix& b) noexcept {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(double s, Matrix a);

/// "rows x cols" for error messages.
std::string shape_str(const Matrix& m);

/// Largest absolute entrywise difference; shapes must match.
double max_abs_diff(const Matrix& a, const Matrix& b);

/// Compressed-row sparse matrix. Column indices strictly increase within a row.
struct CsrMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> row_ptr{0};
  std::vector<std::size_t> col_idx;
  std::vector<double> values;

  std::size_t nnz() const noexcept { return col_idx.size(); }

  /// Returns the stored value, or 0 for an absent entry.
  double at(std::size_t r, std::size_t c) const;

  Matrix to_dense() const;
  CsrMatrix transposed() const;
  bool is_symmetric(double tol = 0.0) const;

  /// Throws ValidationError if the layout invariants are broken.
  void validate() const;

  static CsrMatrix from_dense(const Matrix& m);
  static CsrMatrix identity(std::size_t n);

  friend bool operator==(const CsrMatrix&, const CsrMatrix&) = default;
};

}  // namespace dfcn
