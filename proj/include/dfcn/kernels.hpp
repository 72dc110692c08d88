#pragma once

// Dense and sparse compute kernels.
//
// Every kernel exists twice: a textbook loop nest in `serial` kept as the
// reference, and a cache-friendly OpenMP version in `parallel`. The parallel
// kernels split work by output row only; each output entry is still reduced
// in the same sequential order, so both variants agree bit for bit.

#include <cstddef>

#include "dfcn/matrix.hpp"

namespace dfcn::kernels {

enum class Backend { serial, parallel };

/// Backend used by the dispatching wrappers below. Defaults to parallel.
void set_backend(Backend b) noexcept;
Backend backend() noexcept;

// Raw kernels: the output must already have the result shape; nothing is checked.
namespace serial {
void gemm_nn(const Matrix& a, const Matrix& b, Matrix& c);  // c = a * b
void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c);  // c = a^T * b
void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c);  // c = a * b^T
void spmm(const CsrMatrix& a, const Matrix& h, Matrix& c);  // c = a * h
void pairwise_sq_dist(const Matrix& a, const Matrix& b, Matrix& d);
}  // namespace serial

namespace parallel {
void gemm_nn(const Matrix& a, const Matrix& b, Matrix& c);
void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c);
void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c);
void spmm(const CsrMatrix& a, const Matrix& h, Matrix& c);
void pairwise_sq_dist(const Matrix& a, const Matrix& b, Matrix& d);
}  // namespace parallel

// Allocating wrappers: validate shapes, then dispatch on backend().
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Matrix matmul_nt(const Matrix& a, const Matrix& b);
Matrix spmm(const CsrMatrix& a, const Matrix& h);

/// d(i, j) = ||a_i - b_j||^2 over rows.
Matrix pairwise_sq_dist(const Matrix& a, const Matrix& b);

}  // namespace dfcn::kernels
