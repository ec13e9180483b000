#pragma once

namespace trifuse::kernels {

// Dense float32 inner loops behind the tensor ops. Every kernel has a scalar
// reference implementation and (on x86-64) an AVX2+FMA variant; the active
// backend is picked at runtime from cpuid and can be pinned for tests.
// Scalar and AVX2 variants are equivalence-tested against each other.
enum class Backend { kScalar, kAvx2 };

bool avx2_supported();
Backend active_backend();
void set_backend(Backend b);  // throws ConfigError when unsupported
void reset_backend();         // back to auto-detection

// Row-major matrix products. The accumulate flag selects C += vs C =.
//   matmul_nn: C(m x n) = A(m x k) * B(k x n)
//   matmul_nt: C(m x n) = A(m x k) * B(n x k)^T
//   matmul_tn: C(m x n) = A(p x m)^T * B(p x n)
void matmul_nn(const float* a, const float* b, float* c, int m, int k, int n, bool accumulate);
void matmul_nt(const float* a, const float* b, float* c, int m, int k, int n, bool accumulate);
void matmul_tn(const float* a, const float* b, float* c, int p, int m, int n, bool accumulate);

void add(const float* a, const float* b, float* dst, int n);
void mul(const float* a, const float* b, float* dst, int n);
void madd(const float* a, const float* b, float* dst, int n);  // dst += a .* b
void axpy(float alpha, const float* x, float* y, int n);       // y += alpha * x
void scale(const float* a, float alpha, float* dst, int n);
void add_row_bias(const float* a, const float* bias, float* dst, int rows, int cols);
void col_sums(const float* a, float* dst, int rows, int cols, bool accumulate);
float reduce_sum(const float* a, int n);

// Row-stochastic softmax with max-subtraction. In causal mode row i sees
// columns [0, i] and the remainder is exactly zero.
void softmax_rows(const float* x, float* y, int rows, int cols, bool causal);
// dx += y .* (dy - rowdot(y, dy)); exact zeros in y keep masked grads at 0.
void softmax_rows_backward(const float* y, const float* dy, float* dx, int rows, int cols);

// Per-row layer norm; mean/rstd are caches consumed by the backward pass.
void layer_norm(const float* x, const float* gain, const float* bias, float* y,
                float* mean, float* rstd, int rows, int cols, float eps);
void layer_norm_backward(const float* x, const float* gain, const float* mean,
                         const float* rstd, const float* dy, float* dx, float* dgain,
                         float* dbias, int rows, int cols);

// tanh-approximation GELU.
void gelu(const float* x, float* y, int n);
void gelu_backward(const float* x, const float* dy, float* dx, int n);

// Bias-corrected Adam update in place; t is the per-parameter step count
// after increment (t >= 1).
void adam_step(float* param, const float* grad, float* m, float* v, int n,
               float lr, float beta1, float beta2, float eps, long t);

// Backend-internal function table; instantiated once per backend.
struct KernelTable {
  void (*matmul_nn)(const float*, const float*, float*, int, int, int, bool);
  void (*matmul_nt)(const float*, const float*, float*, int, int, int, bool);
  void (*matmul_tn)(const float*, const float*, float*, int, int, int, bool);
  void (*add)(const float*, const float*, float*, int);
  void (*mul)(const float*, const float*, float*, int);
  void (*madd)(const float*, const float*, float*, int);
  void (*axpy)(float, const float*, float*, int);
  void (*scale)(const float*, float, float*, int);
  void (*add_row_bias)(const float*, const float*, float*, int, int);
  void (*col_sums)(const float*, float*, int, int, bool);
  float (*reduce_sum)(const float*, int);
  void (*softmax_rows)(const float*, float*, int, int, bool);
  void (*softmax_rows_backward)(const float*, const float*, float*, int, int);
  void (*layer_norm)(const float*, const float*, const float*, float*, float*, float*, int, int, float);
  void (*layer_norm_backward)(const float*, const float*, const float*, const float*,
                              const float*, float*, float*, float*, int, int);
  void (*gelu)(const float*, float*, int);
  void (*gelu_backward)(const float*, const float*, float*, int);
  void (*adam_step)(float*, const float*, float*, float*, int, float, float, float, float, long);
};

const KernelTable& scalar_table();
#ifndef TRIFUSE_NO_AVX2
const KernelTable& avx2_table();
#endif

}  // namespace trifuse::kernels
