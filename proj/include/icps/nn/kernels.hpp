#pragma once

#include <cstdint>

namespace icps::nn::kernels {

// Geometry of one 2D cross-correlation. Tensors are NHWC; the kernel is
// [kh, kw, in_c, out_c]. Padding offsets are the top/left zero rows.
struct ConvDims {
  std::int64_t n, h, w, c;       // input
  std::int64_t kh, kw, f;        // kernel spatial dims and output channels
  std::int64_t oh, ow;           // output spatial dims
  std::int64_t stride;
  std::int64_t pad_top, pad_left;
};

// Production kernels. Parallelized with OpenMP over independent output
// (or input-gradient) elements; every element is accumulated by exactly
// one iteration in a fixed order, so output is bitwise identical for any
// thread count, including the serial reference below.
void dense_forward(const double* x, const double* w, const double* b,
                   double* y, std::int64_t n, std::int64_t in,
                   std::int64_t out);
void dense_backward_x(const double* dy, const double* w, double* dx,
                      std::int64_t n, std::int64_t in, std::int64_t out);
void dense_backward_w(const double* x, const double* dy, double* dw,
                      std::int64_t n, std::int64_t in, std::int64_t out);
void dense_backward_b(const double* dy, double* db, std::int64_t n,
                      std::int64_t out);

void conv2d_forward(const double* x, const double* k, const double* b,
                    double* y, const ConvDims& d);
void conv2d_backward_x(const double* dy, const double* k, double* dx,
                       const ConvDims& d);
void conv2d_backward_k(const double* x, const double* dy, double* dk,
                       const ConvDims& d);
void conv2d_backward_b(const double* dy, double* db, const ConvDims& d);

// Plain single-threaded reference implementations, kept for the
// equivalence tests and the benchmark target.
namespace serial {
void dense_forward(const double* x, const double* w, const double* b,
                   double* y, std::int64_t n, std::int64_t in,
                   std::int64_t out);
void dense_backward_x(const double* dy, const double* w, double* dx,
                      std::int64_t n, std::int64_t in, std::int64_t out);
void dense_backward_w(const double* x, const double* dy, double* dw,
                      std::int64_t n, std::int64_t in, std::int64_t out);
void dense_backward_b(const double* dy, double* db, std::int64_t n,
                      std::int64_t out);

void conv2d_forward(const double* x, const double* k, const double* b,
                    double* y, const ConvDims& d);
void conv2d_backward_x(const double* dy, const double* k, double* dx,
                       const ConvDims& d);
void conv2d_backward_k(const double* x, const double* dy, double* dk,
                       const ConvDims& d);
void conv2d_backward_b(const double* dy, double* db, const ConvDims& d);
}  // namespace serial

}  // namespace icps::nn::kernels
