#include "dfcn/kernels.hpp"

#include <atomic>
#include <cstdint>

#include "dfcn/errors.hpp"

namespace dfcn::kernels {

namespace {

std::atomic<Backend> g_backend{Backend::parallel};

using Index = std::int64_t;  // OpenMP loop counters must be signed

}  // namespace

void set_backend(Backend b) noexcept { g_backend.store(b); }
Backend backend() noexcept { return g_backend.load(); }

namespace serial {

void gemm_nn(const Matrix& a, const Matrix& b, Matrix& c) {
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
}

void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c) {
  for (std::size_t i = 0; i < a.cols(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.rows(); ++k) s += a(k, i) * b(k, j);
      c(i, j) = s;
    }
}

void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c) {
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(j, k);
      c(i, j) = s;
    }
}

void spmm(const CsrMatrix& a, const Matrix& h, Matrix& c) {
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < h.cols(); ++j) {
      double s = 0.0;
      for (std::size_t p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p)
        s += a.values[p] * h(a.col_idx[p], j);
      c(i, j) = s;
    }
}

void pairwise_sq_dist(const Matrix& a, const Matrix& b, Matrix& d) {
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) {
        double diff = a(i, k) - b(j, k);
        s += diff * diff;
      }
      d(i, j) = s;
    }
}

}  // namespace serial

namespace parallel {

void gemm_nn(const Matrix& a, const Matrix& b, Matrix& c) {
  const std::size_t inner = a.cols(), n = b.cols();
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* pc = c.data().data();
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < static_cast<Index>(a.rows()); ++i) {
    double* ci = pc + static_cast<std::size_t>(i) * n;
    for (std::size_t j = 0; j < n; ++j) ci[j] = 0.0;
    const double* ai = pa + static_cast<std::size_t>(i) * inner;
    for (std::size_t k = 0; k < inner; ++k) {
      const double aik = ai[k];
      const double* bk = pb + k * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aik * bk[j];
    }
  }
}

void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c) {
  const std::size_t m = a.cols(), inner = a.rows(), n = b.cols();
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* pc = c.data().data();
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < static_cast<Index>(m); ++i) {
    double* ci = pc + static_cast<std::size_t>(i) * n;
    for (std::size_t j = 0; j < n; ++j) ci[j] = 0.0;
    for (std::size_t k = 0; k < inner; ++k) {
      const double aki = pa[k * m + static_cast<std::size_t>(i)];
      const double* bk = pb + k * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aki * bk[j];
    }
  }
}

void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c) {
  const std::size_t inner = a.cols(), n = b.rows();
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* pc = c.data().data();
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < static_cast<Index>(a.rows()); ++i) {
    const double* ai = pa + static_cast<std::size_t>(i) * inner;
    double* ci = pc + static_cast<std::size_t>(i) * n;
    for (std::size_t j = 0; j < n; ++j) {
      const double* bj = pb + j * inner;
      double s = 0.0;
      for (std::size_t k = 0; k < inner; ++k) s += ai[k] * bj[k];
      ci[j] = s;
    }
  }
}

void spmm(const CsrMatrix& a, const Matrix& h, Matrix& c) {
  const std::size_t n = h.cols();
  const double* ph = h.data().data();
  double* pc = c.data().data();
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < static_cast<Index>(a.rows); ++i) {
    const auto r = static_cast<std::size_t>(i);
    double* ci = pc + r * n;
    for (std::size_t j = 0; j < n; ++j) ci[j] = 0.0;
    for (std::size_t p = a.row_ptr[r]; p < a.row_ptr[r + 1]; ++p) {
      const double v = a.values[p];
      const double* hk = ph + a.col_idx[p] * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += v * hk[j];
    }
  }
}

void pairwise_sq_dist(const Matrix& a, const Matrix& b, Matrix& d) {
  const std::size_t dim = a.cols(), n = b.rows();
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* pd = d.data().data();
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < static_cast<Index>(a.rows()); ++i) {
    const double* ai = pa + static_cast<std::size_t>(i) * dim;
    for (std::size_t j = 0; j < n; ++j) {
      const double* bj = pb + j * dim;
      double s = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        const double diff = ai[k] - bj[k];
        s += diff * diff;
      }
      pd[static_cast<std::size_t>(i) * n + j] = s;
    }
  }
}

}  // namespace parallel

namespace {

void require(bool ok, const char* op, const Matrix& a, const Matrix& b) {
  if (!ok) throw ShapeError(std::string(op) + ": " + shape_str(a) + " vs " + shape_str(b));
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.rows(), "matmul", a, b);
  Matrix c(a.rows(), b.cols());
  backend() == Backend::serial ? serial::gemm_nn(a, b, c) : parallel::gemm_nn(a, b, c);
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows(), "matmul_tn", a, b);
  Matrix c(a.cols(), b.cols());
  backend() == Backend::serial ? serial::gemm_tn(a, b, c) : parallel::gemm_tn(a, b, c);
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.cols(), "matmul_nt", a, b);
  Matrix c(a.rows(), b.rows());
  backend() == Backend::serial ? serial::gemm_nt(a, b, c) : parallel::gemm_nt(a, b, c);
  return c;
}

Matrix spmm(const CsrMatrix& a, const Matrix& h) {
  if (a.cols != h.rows()) {
    throw ShapeError("spmm: sparse " + std::to_string(a.rows) + "x" + std::to_string(a.cols) +
                     " vs dense " + shape_str(h));
  }
  Matrix c(a.rows, h.cols());
  backend() == Backend::serial ? serial::spmm(a, h, c) : parallel::spmm(a, h, c);
  return c;
}

Matrix pairwise_sq_dist(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.cols(), "pairwise_sq_dist", a, b);
  Matrix d(a.rows(), b.rows());
  backend() == Backend::serial ? serial::pairwise_sq_dist(a, b, d)
                               : parallel::pairwise_sq_dist(a, b, d);
  return d;
}

}  // namespace dfcn::kernels
