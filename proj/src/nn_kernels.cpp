#include "icps/nn/kernels.hpp"

#include "icps/threads.hpp"

// Production kernels. Gradient kernels accumulate (+=) into their
// destination; forward kernels overwrite. Each destination element is
// owned by exactly one loop iteration and summed in a fixed order, so
// results do not depend on the thread count.

namespace icps::nn::kernels {

void dense_forward(const double* x, const double* w, const double* b,
                   double* y, std::int64_t n, std::int64_t in,
                   std::int64_t out) {
  const int nt = max_threads();
  (void)nt;
#if defined(_OPENMP)
#pragma omp parallel for num_threads(nt) schedule(static)
#endif
  for (std::int64_t i = 0; i < n; ++i) {
    double* yrow = y + i * out;
    for (std::int64_t o = 0; o < out; ++o) yrow[o] = b[o];
    const double* xrow = x + i * in;
    for (std::int64_t k = 0; k < in; ++k) {
      const double xv = xrow[k];
      const double* wrow = w + k * out;
      for (std::int64_t o = 0; o < out; ++o) yrow[o] += xv * wrow[o];
    }
  }
}

void dense_backward_x(const double* dy, const double* w, double* dx,
                      std::int64_t n, std::int64_t in, std::int64_t out) {
  const int nt = max_threads();
  (void)nt;
#if defined(_OPENMP)
#pragma omp parallel for num_threads(nt) schedule(static)
#endif
  for (std::int64_t i = 0; i < n; ++i) {
    const double* dyrow = dy + i * out;
    double* dxrow = dx + i * in;
    for (std::int64_t k = 0; k < in; ++k) {
      const double* wrow = w + k * out;
      double acc = dxrow[k];
      for (std::int64_t o = 0; o < out; ++o) acc += dyrow[o] * wrow[o];
      dxrow[k] = acc;
    }
  }
}

void dense_backward_w(const double* x, const double* dy, double* dw,
                      std::int64_t n, std::int64_t in, std::int64_t out) {
  const int nt = max_threads();
  (void)nt;
#if defined(_OPENMP)
#pragma omp parallel for num_threads(nt) schedule(static)
#endif
  for (std::int64_t k = 0; k < in; ++k) {
    double* dwrow = dw + k * out;
    for (std::int64_t i = 0; i < n; ++i) {
      const double xv = x[i * in + k];
      const double* dyrow = dy + i * out;
      for (std::int64_t o = 0; o < out; ++o) dwrow[o] += xv * dyrow[o];
    }
  }
}

void dense_backward_b(const double* dy, double* db, std::int64_t n,
                      std::int64_t out) {
  const int nt = max_threads();
  (void)nt;
#if defined(_OPENMP)
#pragma omp parallel for num_threads(nt) schedule(static)
#endif
  for (std::int64_t o = 0; o < out; ++o) {
    double acc = db[o];
    for (std::int64_t i = 0; i < n; ++i) acc += dy[i * out + o];
    db[o] = acc;
  }
}

void conv2d_forward(const double* x, const double* k, const double* b,
                    double* y, const ConvDims& d) {
  const int nt = max_threads();
  (void)nt;
#if defined(_OPENMP)
#pragma omp parallel for num_threads(nt) schedule(static)
#endif
  for (std::int64_t row = 0; row < d.n * d.oh; ++row) {
    const std::int64_t i = row / d.oh;
    const std::int64_t oh_i = row % d.oh;
    for (std::int64_t ow_i = 0; ow_i < d.ow; ++ow_i) {
      double* yrow = y + ((i * d.oh + oh_i) * d.ow + ow_i) * d.f;
      for (std::int64_t fi = 0; fi < d.f; ++fi) yrow[fi] = b[fi];
      for (std::int64_t kh_i = 0; kh_i < d.kh; ++kh_i) {
        const std::int64_t ih = oh_i * d.stride - d.pad_top + kh_i;
        if (ih < 0 || ih >= d.h) continue;
        for (std::int64_t kw_i = 0; kw_i < d.kw; ++kw_i) {
          const std::int64_t iw = ow_i * d.stride - d.pad_left + kw_i;
          if (iw < 0 || iw >= d.w) continue;
          const double* xrow = x + ((i * d.h + ih) * d.w + iw) * d.c;
          const double* krow = k + ((kh_i * d.kw + kw_i) * d.c) * d.f;
          for (std::int64_t ci = 0; ci < d.c; ++ci) {
            const double xv = xrow[ci];
            const double* kc = krow + ci * d.f;
            for (std::int64_t fi = 0; fi < d.f; ++fi) yrow[fi] += xv * kc[fi];
          }
        }
      }
    }
  }
}

void conv2d_backward_x(const double* dy, const double* k, double* dx,
                       const ConvDims& d) {
  const int nt = max_threads();
  (void)nt;
#if defined(_OPENMP)
#pragma omp parallel for num_threads(nt) schedule(static)
#endif
  for (std::int64_t row = 0; row < d.n * d.h; ++row) {
    const std::int64_t i = row / d.h;
    const std::int64_t ih = row % d.h;
    for (std::int64_t iw = 0; iw < d.w; ++iw) {
      double* dxrow = dx + ((i * d.h + ih) * d.w + iw) * d.c;
      for (std::int64_t kh_i = 0; kh_i < d.kh; ++kh_i) {
        const std::int64_t th = ih + d.pad_top - kh_i;
        if (th < 0 || th % d.stride != 0) continue;
        const std::int64_t oh_i = th / d.stride;
        if (oh_i >= d.oh) continue;
        for (std::int64_t kw_i = 0; kw_i < d.kw; ++kw_i) {
          const std::int64_t tw = iw + d.pad_left - kw_i;
          if (tw < 0 || tw % d.stride != 0) continue;
          const std::int64_t ow_i = tw / d.stride;
          if (ow_i >= d.ow) continue;
          const double* dyrow = dy + ((i * d.oh + oh_i) * d.ow + ow_i) * d.f;
          const double* krow = k + ((kh_i * d.kw + kw_i) * d.c) * d.f;
          for (std::int64_t ci = 0; ci < d.c; ++ci) {
            const double* kc = krow + ci * d.f;
            double acc = dxrow[ci];
            for (std::int64_t fi = 0; fi < d.f; ++fi) acc += dyrow[fi] * kc[fi];
            dxrow[ci] = acc;
          }
        }
      }
    }
  }
}

void conv2d_backward_k(const double* x, const double* dy, double* dk,
                       const ConvDims& d) {
  const int nt = max_threads();
  (void)nt;
#if defined(_OPENMP)
#pragma omp parallel for num_threads(nt) schedule(static)
#endif
  for (std::int64_t khw = 0; khw < d.kh * d.kw; ++khw) {
    const std::int64_t kh_i = khw / d.kw;
    const std::int64_t kw_i = khw % d.kw;
    double* dkslice = dk + khw * d.c * d.f;
    for (std::int64_t i = 0; i < d.n; ++i) {
      for (std::int64_t oh_i = 0; oh_i < d.oh; ++oh_i) {
        const std::int64_t ih = oh_i * d.stride - d.pad_top + kh_i;
        if (ih < 0 || ih >= d.h) continue;
        for (std::int64_t ow_i = 0; ow_i < d.ow; ++ow_i) {
          const std::int64_t iw = ow_i * d.stride - d.pad_left + kw_i;
          if (iw < 0 || iw >= d.w) continue;
          const double* xrow = x + ((i * d.h + ih) * d.w + iw) * d.c;
          const double* dyrow = dy + ((i * d.oh + oh_i) * d.ow + ow_i) * d.f;
          for (std::int64_t ci = 0; ci < d.c; ++ci) {
            const double xv = xrow[ci];
            double* dkrow = dkslice + ci * d.f;
            for (std::int64_t fi = 0; fi < d.f; ++fi)
              dkrow[fi] += xv * dyrow[fi];
          }
        }
      }
    }
  }
}

void conv2d_backward_b(const double* dy, double* db, const ConvDims& d) {
  const std::int64_t rows = d.n * d.oh * d.ow;
  const int nt = max_threads();
  (void)nt;
#if defined(_OPENMP)
#pragma omp parallel for num_threads(nt) schedule(static)
#endif
  for (std::int64_t fi = 0; fi < d.f; ++fi) {
    double acc = db[fi];
    for (std::int64_t r = 0; r < rows; ++r) acc += dy[r * d.f + fi];
    db[fi] = acc;
  }
}

}  // namespace icps::nn::kernels
