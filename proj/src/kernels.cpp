#include "benh/kernels.hpp"

#include <cmath>
#include <cstdlib>
#include <cstring>

namespace benh::kernels {

namespace detail {

double dot_scalar(const double* a, const double* b, size_t n) {
  double s = 0.0;
  for (size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_scalar(double* y, double alpha, const double* x, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scale_scalar(double* x, double alpha, size_t n) {
  for (size_t i = 0; i < n; ++i) x[i] *= alpha;
}

void vadd_scalar(double* y, const double* x, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] += x[i];
}

}  // namespace detail

namespace {

using DotFn = double (*)(const double*, const double*, size_t);
using AxpyFn = void (*)(double*, double, const double*, size_t);
using ScaleFn = void (*)(double*, double, size_t);
using VaddFn = void (*)(double*, const double*, size_t);

DotFn g_dot = detail::dot_scalar;
AxpyFn g_axpy = detail::axpy_scalar;
ScaleFn g_scale = detail::scale_scalar;
VaddFn g_vadd = detail::vadd_scalar;
Backend g_active = Backend::Scalar;
bool g_initialized = false;

Backend resolve_auto() {
#if defined(__x86_64__) || defined(_M_X64)
  if (const char* env = std::getenv("BENH_SIMD")) {
    if (std::strcmp(env, "scalar") == 0) return Backend::Scalar;
    if (std::strcmp(env, "avx2") == 0) return Backend::Avx2;
  }
  if (detail::cpu_has_avx2_fma()) return Backend::Avx2;
#endif
  return Backend::Scalar;
}

void apply(Backend b) {
  switch (b) {
#if defined(__x86_64__) || defined(_M_X64)
    case Backend::Avx2:
      g_dot = detail::dot_avx2;
      g_axpy = detail::axpy_avx2;
      g_scale = detail::scale_avx2;
      g_vadd = detail::vadd_avx2;
      g_active = Backend::Avx2;
      break;
#endif
    default:
      g_dot = detail::dot_scalar;
      g_axpy = detail::axpy_scalar;
      g_scale = detail::scale_scalar;
      g_vadd = detail::vadd_scalar;
      g_active = Backend::Scalar;
      break;
  }
  g_initialized = true;
}

void ensure_init() {
  if (!g_initialized) apply(resolve_auto());
}

}  // namespace

void set_backend(Backend b) {
  apply(b == Backend::Auto ? resolve_auto() : b);
}

Backend active_backend() {
  ensure_init();
  return g_active;
}

const char* backend_name() {
  return active_backend() == Backend::Avx2 ? "avx2" : "scalar";
}

double dot(const double* a, const double* b, size_t n) {
  ensure_init();
  return g_dot(a, b, n);
}

double l2_norm(const double* a, size_t n) { return std::sqrt(dot(a, a, n)); }

void axpy(double* y, double alpha, const double* x, size_t n) {
  ensure_init();
  g_axpy(y, alpha, x, n);
}

void scale(double* x, double alpha, size_t n) {
  ensure_init();
  g_scale(x, alpha, n);
}

void vadd(double* y, const double* x, size_t n) {
  ensure_init();
  g_vadd(y, x, n);
}

void matvec(const double* w, size_t rows, size_t cols, const double* x, double* y) {
  ensure_init();
  for (size_t r = 0; r < rows; ++r) y[r] = g_dot(w + r * cols, x, cols);
}

void matvec_t(const double* w, size_t rows, size_t cols, const double* x, double* y) {
  ensure_init();
  std::memset(y, 0, cols * sizeof(double));
  for (size_t r = 0; r < rows; ++r) g_axpy(y, x[r], w + r * cols, cols);
}

void outer_acc(double* w, size_t rows, size_t cols, const double* u, const double* v) {
  ensure_init();
  for (size_t r = 0; r < rows; ++r) g_axpy(w + r * cols, u[r], v, cols);
}

}  // namespace benh::kernels
