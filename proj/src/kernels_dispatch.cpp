#include "trifuse/errors.hpp"
#include "trifuse/kernels.hpp"

namespace trifuse::kernels {
namespace {

bool detect_avx2() {
#if defined(TRIFUSE_NO_AVX2)
  return false;
#elif defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* g_active = nullptr;

const KernelTable& active() {
#ifndef TRIFUSE_NO_AVX2
  if (g_active == nullptr) g_active = avx2_supported() ? &avx2_table() : &scalar_table();
#else
  if (g_active == nullptr) g_active = &scalar_table();
#endif
  return *g_active;
}

}  // namespace

bool avx2_supported() {
  static const bool supported = detect_avx2();
  return supported;
}

Backend active_backend() {
  return &active() == &scalar_table() ? Backend::kScalar : Backend::kAvx2;
}

void set_backend(Backend b) {
  if (b == Backend::kAvx2 && !avx2_supported())
    throw ConfigError("avx2 backend requested but not supported on this machine");
#ifndef TRIFUSE_NO_AVX2
  g_active = b == Backend::kAvx2 ? &avx2_table() : &scalar_table();
#else
  g_active = &scalar_table();
#endif
}

void reset_backend() { g_active = nullptr; }

void matmul_nn(const float* a, const float* b, float* c, int m, int k, int n, bool accumulate) {
  active().matmul_nn(a, b, c, m, k, n, accumulate);
}

void matmul_nt(const float* a, const float* b, float* c, int m, int k, int n, bool accumulate) {
  active().matmul_nt(a, b, c, m, k, n, accumulate);
}

void matmul_tn(const float* a, const float* b, float* c, int p, int m, int n, bool accumulate) {
  active().matmul_tn(a, b, c, p, m, n, accumulate);
}

void add(const float* a, const float* b, float* dst, int n) { active().add(a, b, dst, n); }

void mul(const float* a, const float* b, float* dst, int n) { active().mul(a, b, dst, n); }

void madd(const float* a, const float* b, float* dst, int n) { active().madd(a, b, dst, n); }

void axpy(float alpha, const float* x, float* y, int n) { active().axpy(alpha, x, y, n); }

void scale(const float* a, float alpha, float* dst, int n) { active().scale(a, alpha, dst, n); }

void add_row_bias(const float* a, const float* bias, float* dst, int rows, int cols) {
  active().add_row_bias(a, bias, dst, rows, cols);
}

void col_sums(const float* a, float* dst, int rows, int cols, bool accumulate) {
  active().col_sums(a, dst, rows, cols, accumulate);
}

float reduce_sum(const float* a, int n) { return active().reduce_sum(a, n); }

void softmax_rows(const float* x, float* y, int rows, int cols, bool causal) {
  active().softmax_rows(x, y, rows, cols, causal);
}

void softmax_rows_backward(const float* y, const float* dy, float* dx, int rows, int cols) {
  active().softmax_rows_backward(y, dy, dx, rows, cols);
}

void layer_norm(const float* x, const float* gain, const float* bias, float* y, float* mean,
                float* rstd, int rows, int cols, float eps) {
  active().layer_norm(x, gain, bias, y, mean, rstd, rows, cols, eps);
}

void layer_norm_backward(const float* x, const float* gain, const float* mean, const float* rstd,
                         const float* dy, float* dx, float* dgain, float* dbias, int rows,
                         int cols) {
  active().layer_norm_backward(x, gain, mean, rstd, dy, dx, dgain, dbias, rows, cols);
}

void gelu(const float* x, float* y, int n) { active().gelu(x, y, n); }

void gelu_backward(const float* x, const float* dy, float* dx, int n) {
  active().gelu_backward(x, dy, dx, n);
}

void adam_step(float* param, const float* grad, float* m, float* v, int n, float lr, float beta1,
               float beta2, float eps, long t) {
  active().adam_step(param, grad, m, v, n, lr, beta1, beta2, eps, t);
}

}  // namespace trifuse::kernels
