#include "dfcn/matrix.hpp"

#include <algorithm>
#include <cmath>

#include "dfcn/errors.hpp"

namespace dfcn {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ShapeError("matrix data length " + std::to_string(data_.size()) + " does not match " +
                     std::to_string(rows) + "x" + std::to_string(cols));
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw ShapeError("ragged matrix literal");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

double Matrix::item() const {
  if (rows_ != 1 || cols_ != 1) throw ShapeError("item() on " + shape_str(*this) + " matrix");
  return data_[0];
}

bool Matrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

Matrix& Matrix::operator+=(const Matrix& o) {
  if (!same_shape(o)) throw ShapeError("add: " + shape_str(*this) + " vs " + shape_str(o));
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& o) {
  if (!same_shape(o)) throw ShapeError("sub: " + shape_str(*this) + " vs " + shape_str(o));
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
  return *this;
}

Matrix& Matrix::operator*=(double s) noexcept {
  for (double& v : data_) v *= s;
  return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(double s, Matrix a) { return a *= s; }

std::string shape_str(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) throw ShapeError("max_abs_diff: " + shape_str(a) + " vs " + shape_str(b));
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

double CsrMatrix::at(std::size_t r, std::size_t c) const {
  auto first = col_idx.begin() + static_cast<std::ptrdiff_t>(row_ptr[r]);
  auto last = col_idx.begin() + static_cast<std::ptrdiff_t>(row_ptr[r + 1]);
  auto it = std::lower_bound(first, last, c);
  if (it == last || *it != c) return 0.0;
  return values[static_cast<std::size_t>(it - col_idx.begin())];
}

Matrix CsrMatrix::to_dense() const {
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t p = row_ptr[r]; p < row_ptr[r + 1]; ++p) m(r, col_idx[p]) = values[p];
  return m;
}

CsrMatrix CsrMatrix::transposed() const {
  CsrMatrix t;
  t.rows = cols;
  t.cols = rows;
  t.row_ptr.assign(cols + 1, 0);
  for (std::size_t c : col_idx) ++t.row_ptr[c + 1];
  for (std::size_t i = 0; i < cols; ++i) t.row_ptr[i + 1] += t.row_ptr[i];
  t.col_idx.resize(nnz());
  t.values.resize(nnz());
  std::vector<std::size_t> next(t.row_ptr.begin(), t.row_ptr.end() - 1);
  // Rows visited in order, so each transposed row receives increasing columns.
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t p = row_ptr[r]; p < row_ptr[r + 1]; ++p) {
      std::size_t dst = next[col_idx[p]]++;
      t.col_idx[dst] = r;
      t.values[dst] = values[p];
    }
  }
  return t;
}

bool CsrMatrix::is_symmetric(double tol) const {
  if (rows != cols) return false;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t p = row_ptr[r]; p < row_ptr[r + 1]; ++p)
      if (std::abs(values[p] - at(col_idx[p], r)) > tol) return false;
  // Pattern symmetry also needs the reverse inclusion; equal nnz per transpose covers it.
  CsrMatrix t = transposed();
  return t.col_idx == col_idx && t.row_ptr == row_ptr;
}

void CsrMatrix::validate() const {
  if (row_ptr.size() != rows + 1 || row_ptr.front() != 0 || row_ptr.back() != col_idx.size() ||
      values.size() != col_idx.size()) {
    throw ValidationError("csr: inconsistent array lengths");
  }
  for (std::size_t r = 0; r < rows; ++r) {
    if (row_ptr[r] > row_ptr[r + 1]) throw ValidationError("csr: row offsets decrease");
    for (std::size_t p = row_ptr[r]; p < row_ptr[r + 1]; ++p) {
      if (col_idx[p] >= cols) throw ValidationError("csr: column index out of range");
      if (p > row_ptr[r] && col_idx[p] <= col_idx[p - 1])
        throw ValidationError("csr: column indices not strictly increasing in row " +
                              std::to_string(r));
      if (!std::isfinite(values[p])) throw ValidationError("csr: non-finite value");
    }
  }
}

CsrMatrix CsrMatrix::from_dense(const Matrix& m) {
  CsrMatrix s;
  s.rows = m.rows();
  s.cols = m.cols();
  s.row_ptr.reserve(m.rows() + 1);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (m(r, c) != 0.0) {
        s.col_idx.push_back(c);
        s.values.push_back(m(r, c));
      }
    }
    s.row_ptr.push_back(s.col_idx.size());
  }
  return s;
}

CsrMatrix CsrMatrix::identity(std::size_t n) {
  CsrMatrix s;
  s.rows = s.cols = n;
  for (std::size_t i = 0; i < n; ++i) {
    s.col_idx.push_back(i);
    s.values.push_back(1.0);
    s.row_ptr.push_back(i + 1);
  }
  return s;
}

}  // namespace dfcn
