#pragma once

#include <cstddef>
#include <string>

// Dense f64 kernels behind the graph network, the optimizer, and the
// brute-force similarity scans. Scalar reference implementations always
// exist; on x86-64 an AVX2+FMA variant is selected at runtime when the CPU
// supports it. Both variants use a fixed accumulation order, so a given
// binary on a given machine is bit-reproducible.
namespace benh::kernels {

enum class Backend { Auto, Scalar, Avx2 };

// Resolves Auto against CPUID and the BENH_SIMD env var
// (BENH_SIMD=scalar|avx2|auto). Safe to call again to switch.
void set_backend(Backend b);
Backend active_backend();
const char* backend_name();

double dot(const double* a, const double* b, size_t n);
double l2_norm(const double* a, size_t n);

// y += alpha * x
void axpy(double* y, double alpha, const double* x, size_t n);
// x *= alpha
void scale(double* x, double alpha, size_t n);
// y += x
void vadd(double* y, const double* x, size_t n);

// Row-major W (rows x cols): y = W x          (x: cols, y: rows)
void matvec(const double* w, size_t rows, size_t cols, const double* x, double* y);
// y = W^T x                                   (x: rows, y: cols)
void matvec_t(const double* w, size_t rows, size_t cols, const double* x, double* y);
// W += u v^T                                  (u: rows, v: cols)
void outer_acc(double* w, size_t rows, size_t cols, const double* u, const double* v);

namespace detail {
double dot_scalar(const double* a, const double* b, size_t n);
void axpy_scalar(double* y, double alpha, const double* x, size_t n);
void scale_scalar(double* x, double alpha, size_t n);
void vadd_scalar(double* y, const double* x, size_t n);

#if defined(__x86_64__) || defined(_M_X64)
bool cpu_has_avx2_fma();
double dot_avx2(const double* a, const double* b, size_t n);
void axpy_avx2(double* y, double alpha, const double* x, size_t n);
void scale_avx2(double* x, double alpha, size_t n);
void vadd_avx2(double* y, const double* x, size_t n);
#endif
}  // namespace detail

}  // namespace benh::kernels
