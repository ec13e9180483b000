// AVX2+FMA kernel variants. Compiled with -mavx2 -mfma in this TU only; the
// dispatcher routes here after a cpuid check.

#include <immintrin.h>

#include <cmath>
#include <cstring>

#include "trifuse/kernels.hpp"

namespace trifuse::kernels {
namespace {

inline float hsum8(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  lo = _mm_add_ps(lo, hi);
  lo = _mm_hadd_ps(lo, lo);
  lo = _mm_hadd_ps(lo, lo);
  return _mm_cvtss_f32(lo);
}

// Cephes-style expf. Max observed error vs libm is ~2 ulp, well inside the
// scalar/AVX2 equivalence tolerance.
inline __m256 exp256(__m256 x) {
  const __m256 hi = _mm256_set1_ps(88.3762626647950f);
  const __m256 lo = _mm256_set1_ps(-87.3365478515625f);
  const __m256 log2e = _mm256_set1_ps(1.44269504088896341f);
  const __m256 c1 = _mm256_set1_ps(-0.693359375f);
  const __m256 c2 = _mm256_set1_ps(2.12194440e-4f);
  const __m256 half = _mm256_set1_ps(0.5f);
  const __m256 one = _mm256_set1_ps(1.0f);

  x = _mm256_min_ps(x, hi);
  x = _mm256_max_ps(x, lo);

  __m256 fx = _mm256_fmadd_ps(x, log2e, half);
  fx = _mm256_floor_ps(fx);
  x = _mm256_fmadd_ps(fx, c1, x);
  x = _mm256_fmadd_ps(fx, c2, x);

  const __m256 z = _mm256_mul_ps(x, x);
  __m256 y = _mm256_set1_ps(1.9875691500e-4f);
  y = _mm256_fmadd_ps(y, x, _mm256_set1_ps(1.3981999507e-3f));
  y = _mm256_fmadd_ps(y, x, _mm256_set1_ps(8.3334519073e-3f));
  y = _mm256_fmadd_ps(y, x, _mm256_set1_ps(4.1665795894e-2f));
  y = _mm256_fmadd_ps(y, x, _mm256_set1_ps(1.6666665459e-1f));
  y = _mm256_fmadd_ps(y, x, half);
  y = _mm256_fmadd_ps(y, z, x);
  y = _mm256_add_ps(y, one);

  const __m256i n = _mm256_cvtps_epi32(fx);
  const __m256i pow2n = _mm256_slli_epi32(_mm256_add_epi32(n, _mm256_set1_epi32(127)), 23);
  return _mm256_mul_ps(y, _mm256_castsi256_ps(pow2n));
}

inline __m256 tanh256(__m256 x) {
  // tanh(x) = 1 - 2 / (exp(2x) + 1)
  const __m256 one = _mm256_set1_ps(1.0f);
  const __m256 two = _mm256_set1_ps(2.0f);
  const __m256 e = exp256(_mm256_mul_ps(x, two));
  return _mm256_sub_ps(one, _mm256_div_ps(two, _mm256_add_ps(e, one)));
}

// ---------------------------------------------------------------- matmul

// 4x16 FMA micro-kernel shared by nn and tn. The A element feeding C row
// (i+r) at inner step p sits at a_base[r * a_row + p * a_step].
template <bool Accumulate>
inline void micro_4x16(const float* a_base, int a_row, int a_step, const float* b, int ldb,
                       float* c, int ldc, int kk) {
  __m256 c00, c01, c10, c11, c20, c21, c30, c31;
  if (Accumulate) {
    c00 = _mm256_loadu_ps(c + 0 * ldc);
    c01 = _mm256_loadu_ps(c + 0 * ldc + 8);
    c10 = _mm256_loadu_ps(c + 1 * ldc);
    c11 = _mm256_loadu_ps(c + 1 * ldc + 8);
    c20 = _mm256_loadu_ps(c + 2 * ldc);
    c21 = _mm256_loadu_ps(c + 2 * ldc + 8);
    c30 = _mm256_loadu_ps(c + 3 * ldc);
    c31 = _mm256_loadu_ps(c + 3 * ldc + 8);
  } else {
    c00 = c01 = c10 = c11 = c20 = c21 = c30 = c31 = _mm256_setzero_ps();
  }
  for (int p = 0; p < kk; ++p) {
    const __m256 b0 = _mm256_loadu_ps(b + size_t(p) * ldb);
    const __m256 b1 = _mm256_loadu_ps(b + size_t(p) * ldb + 8);
    const float* ap = a_base + size_t(p) * a_step;
    const __m256 a0 = _mm256_broadcast_ss(ap + 0 * a_row);
    const __m256 a1 = _mm256_broadcast_ss(ap + 1 * a_row);
    const __m256 a2 = _mm256_broadcast_ss(ap + 2 * a_row);
    const __m256 a3 = _mm256_broadcast_ss(ap + 3 * a_row);
    c00 = _mm256_fmadd_ps(a0, b0, c00);
    c01 = _mm256_fmadd_ps(a0, b1, c01);
    c10 = _mm256_fmadd_ps(a1, b0, c10);
    c11 = _mm256_fmadd_ps(a1, b1, c11);
    c20 = _mm256_fmadd_ps(a2, b0, c20);
    c21 = _mm256_fmadd_ps(a2, b1, c21);
    c30 = _mm256_fmadd_ps(a3, b0, c30);
    c31 = _mm256_fmadd_ps(a3, b1, c31);
  }
  _mm256_storeu_ps(c + 0 * ldc, c00);
  _mm256_storeu_ps(c + 0 * ldc + 8, c01);
  _mm256_storeu_ps(c + 1 * ldc, c10);
  _mm256_storeu_ps(c + 1 * ldc + 8, c11);
  _mm256_storeu_ps(c + 2 * ldc, c20);
  _mm256_storeu_ps(c + 2 * ldc + 8, c21);
  _mm256_storeu_ps(c + 3 * ldc, c30);
  _mm256_storeu_ps(c + 3 * ldc + 8, c31);
}

template <bool Accumulate>
inline void micro_1x8(const float* a_base, int a_step, const float* b, int ldb, float* c,
                      int kk) {
  __m256 acc = Accumulate ? _mm256_loadu_ps(c) : _mm256_setzero_ps();
  for (int p = 0; p < kk; ++p) {
    const __m256 bv = _mm256_loadu_ps(b + size_t(p) * ldb);
    const __m256 av = _mm256_broadcast_ss(a_base + size_t(p) * a_step);
    acc = _mm256_fmadd_ps(av, bv, acc);
  }
  _mm256_storeu_ps(c, acc);
}

// Shared broadcast-FMA driver: C(m x n) += contributions over kk inner steps,
// with A element for (row i, step p) at a[i * a_row + p * a_step].
void matmul_broadcast(const float* a, int a_row, int a_step, const float* b, float* c, int m,
                      int kk, int n, bool accumulate) {
  int j = 0;
  for (; j + 16 <= n; j += 16) {
    int i = 0;
    for (; i + 4 <= m; i += 4) {
      const float* abase = a + size_t(i) * a_row;
      float* cbase = c + size_t(i) * n + j;
      if (accumulate)
        micro_4x16<true>(abase, a_row, a_step, b + j, n, cbase, n, kk);
      else
        micro_4x16<false>(abase, a_row, a_step, b + j, n, cbase, n, kk);
    }
    for (; i < m; ++i) {
      const float* abase = a + size_t(i) * a_row;
      float* cbase = c + size_t(i) * n + j;
      if (accumulate) {
        micro_1x8<true>(abase, a_step, b + j, n, cbase, kk);
        micro_1x8<true>(abase, a_step, b + j + 8, n, cbase + 8, kk);
      } else {
        micro_1x8<false>(abase, a_step, b + j, n, cbase, kk);
        micro_1x8<false>(abase, a_step, b + j + 8, n, cbase + 8, kk);
      }
    }
  }
  for (; j + 8 <= n; j += 8) {
    for (int i = 0; i < m; ++i) {
      const float* abase = a + size_t(i) * a_row;
      float* cbase = c + size_t(i) * n + j;
      if (accumulate)
        micro_1x8<true>(abase, a_step, b + j, n, cbase, kk);
      else
        micro_1x8<false>(abase, a_step, b + j, n, cbase, kk);
    }
  }
  if (j < n) {
    for (int i = 0; i < m; ++i) {
      const float* abase = a + size_t(i) * a_row;
      float* crow = c + size_t(i) * n;
      for (int jj = j; jj < n; ++jj) {
        float s = accumulate ? crow[jj] : 0.f;
        for (int p = 0; p < kk; ++p) s += abase[size_t(p) * a_step] * b[size_t(p) * n + jj];
        crow[jj] = s;
      }
    }
  }
}

void matmul_nn_avx2(const float* a, const float* b, float* c, int m, int k, int n,
                    bool accumulate) {
  matmul_broadcast(a, k, 1, b, c, m, k, n, accumulate);
}

void matmul_tn_avx2(const float* a, const float* b, float* c, int p, int m, int n,
                    bool accumulate) {
  // A is (p x m); row i of C reads column i of A, so a_row=1, a_step=m.
  matmul_broadcast(a, 1, m, b, c, m, p, n, accumulate);
}

void matmul_nt_avx2(const float* a, const float* b, float* c, int m, int k, int n,
                    bool accumulate) {
  for (int i = 0; i < m; ++i) {
    const float* arow = a + size_t(i) * k;
    float* crow = c + size_t(i) * n;
    int j = 0;
    for (; j + 4 <= n; j += 4) {
      __m256 acc0 = _mm256_setzero_ps();
      __m256 acc1 = _mm256_setzero_ps();
      __m256 acc2 = _mm256_setzero_ps();
      __m256 acc3 = _mm256_setzero_ps();
      const float* b0 = b + size_t(j + 0) * k;
      const float* b1 = b + size_t(j + 1) * k;
      const float* b2 = b + size_t(j + 2) * k;
      const float* b3 = b + size_t(j + 3) * k;
      int p = 0;
      for (; p + 8 <= k; p += 8) {
        const __m256 av = _mm256_loadu_ps(arow + p);
        acc0 = _mm256_fmadd_ps(av, _mm256_loadu_ps(b0 + p), acc0);
        acc1 = _mm256_fmadd_ps(av, _mm256_loadu_ps(b1 + p), acc1);
        acc2 = _mm256_fmadd_ps(av, _mm256_loadu_ps(b2 + p), acc2);
        acc3 = _mm256_fmadd_ps(av, _mm256_loadu_ps(b3 + p), acc3);
      }
      float s0 = hsum8(acc0), s1 = hsum8(acc1), s2 = hsum8(acc2), s3 = hsum8(acc3);
      for (; p < k; ++p) {
        const float av = arow[p];
        s0 += av * b0[p];
        s1 += av * b1[p];
        s2 += av * b2[p];
        s3 += av * b3[p];
      }
      if (accumulate) {
        crow[j + 0] += s0;
        crow[j + 1] += s1;
        crow[j + 2] += s2;
        crow[j + 3] += s3;
      } else {
        crow[j + 0] = s0;
        crow[j + 1] = s1;
        crow[j + 2] = s2;
        crow[j + 3] = s3;
      }
    }
    for (; j < n; ++j) {
      const float* brow = b + size_t(j) * k;
      __m256 acc = _mm256_setzero_ps();
      int p = 0;
      for (; p + 8 <= k; p += 8)
        acc = _mm256_fmadd_ps(_mm256_loadu_ps(arow + p), _mm256_loadu_ps(brow + p), acc);
      float s = hsum8(acc);
      for (; p < k; ++p) s += arow[p] * brow[p];
      crow[j] = accumulate ? crow[j] + s : s;
    }
  }
}

// ---------------------------------------------------------------- elementwise

void add_avx2(const float* a, const float* b, float* dst, int n) {
  int i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(dst + i, _mm256_add_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
  for (; i < n; ++i) dst[i] = a[i] + b[i];
}

void mul_avx2(const float* a, const float* b, float* dst, int n) {
  int i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(dst + i, _mm256_mul_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
  for (; i < n; ++i) dst[i] = a[i] * b[i];
}

void madd_avx2(const float* a, const float* b, float* dst, int n) {
  int i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 d = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i),
                                     _mm256_loadu_ps(dst + i));
    _mm256_storeu_ps(dst + i, d);
  }
  for (; i < n; ++i) dst[i] += a[i] * b[i];
}

void axpy_avx2(float alpha, const float* x, float* y, int n) {
  const __m256 av = _mm256_set1_ps(alpha);
  int i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(y + i, _mm256_fmadd_ps(av, _mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void scale_avx2(const float* a, float alpha, float* dst, int n) {
  const __m256 av = _mm256_set1_ps(alpha);
  int i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(dst + i, _mm256_mul_ps(av, _mm256_loadu_ps(a + i)));
  for (; i < n; ++i) dst[i] = a[i] * alpha;
}

void add_row_bias_avx2(const float* a, const float* bias, float* dst, int rows, int cols) {
  for (int r = 0; r < rows; ++r)
    add_avx2(a + size_t(r) * cols, bias, dst + size_t(r) * cols, cols);
}

void col_sums_avx2(const float* a, float* dst, int rows, int cols, bool accumulate) {
  if (!accumulate) std::memset(dst, 0, sizeof(float) * size_t(cols));
  for (int r = 0; r < rows; ++r) {
    const float* arow = a + size_t(r) * cols;
    int j = 0;
    for (; j + 8 <= cols; j += 8)
      _mm256_storeu_ps(dst + j, _mm256_add_ps(_mm256_loadu_ps(dst + j), _mm256_loadu_ps(arow + j)));
    for (; j < cols; ++j) dst[j] += arow[j];
  }
}

float reduce_sum_avx2(const float* a, int n) {
  __m256 acc = _mm256_setzero_ps();
  int i = 0;
  for (; i + 8 <= n; i += 8) acc = _mm256_add_ps(acc, _mm256_loadu_ps(a + i));
  float s = hsum8(acc);
  for (; i < n; ++i) s += a[i];
  return s;
}

// ---------------------------------------------------------------- softmax

void softmax_rows_avx2(const float* x, float* y, int rows, int cols, bool causal) {
  for (int r = 0; r < rows; ++r) {
    const float* xr = x + size_t(r) * cols;
    float* yr = y + size_t(r) * cols;
    const int width = causal ? (r + 1 < cols ? r + 1 : cols) : cols;

    __m256 vmax = _mm256_set1_ps(-3.4e38f);
    int j = 0;
    for (; j + 8 <= width; j += 8) vmax = _mm256_max_ps(vmax, _mm256_loadu_ps(xr + j));
    __m128 m4 = _mm_max_ps(_mm256_castps256_ps128(vmax), _mm256_extractf128_ps(vmax, 1));
    m4 = _mm_max_ps(m4, _mm_movehl_ps(m4, m4));
    m4 = _mm_max_ss(m4, _mm_shuffle_ps(m4, m4, 1));
    float mx = _mm_cvtss_f32(m4);
    for (; j < width; ++j) mx = xr[j] > mx ? xr[j] : mx;

    const __m256 vmx = _mm256_set1_ps(mx);
    __m256 vsum = _mm256_setzero_ps();
    j = 0;
    for (; j + 8 <= width; j += 8) {
      const __m256 e = exp256(_mm256_sub_ps(_mm256_loadu_ps(xr + j), vmx));
      _mm256_storeu_ps(yr + j, e);
      vsum = _mm256_add_ps(vsum, e);
    }
    float sum = hsum8(vsum);
    for (; j < width; ++j) {
      // match the vector path's exp so row contents don't depend on alignment
      float buf[8] = {xr[j] - mx, 0, 0, 0, 0, 0, 0, 0};
      __m256 e = exp256(_mm256_loadu_ps(buf));
      float out[8];
      _mm256_storeu_ps(out, e);
      yr[j] = out[0];
      sum += out[0];
    }
    const float inv = 1.f / sum;
    scale_avx2(yr, inv, yr, width);
    for (int z = width; z < cols; ++z) yr[z] = 0.f;
  }
}

void softmax_rows_backward_avx2(const float* y, const float* dy, float* dx, int rows,
                                int cols) {
  for (int r = 0; r < rows; ++r) {
    const float* yr = y + size_t(r) * cols;
    const float* gr = dy + size_t(r) * cols;
    float* dr = dx + size_t(r) * cols;
    __m256 vdot = _mm256_setzero_ps();
    int j = 0;
    for (; j + 8 <= cols; j += 8)
      vdot = _mm256_fmadd_ps(_mm256_loadu_ps(yr + j), _mm256_loadu_ps(gr + j), vdot);
    float dot = hsum8(vdot);
    for (; j < cols; ++j) dot += yr[j] * gr[j];

    const __m256 vd = _mm256_set1_ps(dot);
    j = 0;
    for (; j + 8 <= cols; j += 8) {
      const __m256 t = _mm256_sub_ps(_mm256_loadu_ps(gr + j), vd);
      _mm256_storeu_ps(dr + j, _mm256_fmadd_ps(_mm256_loadu_ps(yr + j), t, _mm256_loadu_ps(dr + j)));
    }
    for (; j < cols; ++j) dr[j] += yr[j] * (gr[j] - dot);
  }
}

// ---------------------------------------------------------------- layer norm

void layer_norm_avx2(const float* x, const float* gain, const float* bias, float* y,
                     float* mean, float* rstd, int rows, int cols, float eps) {
  for (int r = 0; r < rows; ++r) {
    const float* xr = x + size_t(r) * cols;
    float* yr = y + size_t(r) * cols;
    const float mu = reduce_sum_avx2(xr, cols) / float(cols);
    const __m256 vmu = _mm256_set1_ps(mu);
    __m256 vvar = _mm256_setzero_ps();
    int j = 0;
    for (; j + 8 <= cols; j += 8) {
      const __m256 d = _mm256_sub_ps(_mm256_loadu_ps(xr + j), vmu);
      vvar = _mm256_fmadd_ps(d, d, vvar);
    }
    float var = hsum8(vvar);
    for (; j < cols; ++j) {
      const float d = xr[j] - mu;
      var += d * d;
    }
    var /= float(cols);
    const float rs = 1.f / std::sqrt(var + eps);
    mean[r] = mu;
    rstd[r] = rs;
    const __m256 vrs = _mm256_set1_ps(rs);
    j = 0;
    for (; j + 8 <= cols; j += 8) {
      const __m256 xhat = _mm256_mul_ps(_mm256_sub_ps(_mm256_loadu_ps(xr + j), vmu), vrs);
      const __m256 out = _mm256_fmadd_ps(xhat, _mm256_loadu_ps(gain + j), _mm256_loadu_ps(bias + j));
      _mm256_storeu_ps(yr + j, out);
    }
    for (; j < cols; ++j) yr[j] = (xr[j] - mu) * rs * gain[j] + bias[j];
  }
}

void layer_norm_backward_avx2(const float* x, const float* gain, const float* mean,
                              const float* rstd, const float* dy, float* dx, float* dgain,
                              float* dbias, int rows, int cols) {
  for (int r = 0; r < rows; ++r) {
    const float* xr = x + size_t(r) * cols;
    const float* gr = dy + size_t(r) * cols;
    float* dr = dx + size_t(r) * cols;
    const float mu = mean[r];
    const float rs = rstd[r];
    const __m256 vmu = _mm256_set1_ps(mu);
    const __m256 vrs = _mm256_set1_ps(rs);
    __m256 vsg = _mm256_setzero_ps();
    __m256 vsgx = _mm256_setzero_ps();
    int j = 0;
    for (; j + 8 <= cols; j += 8) {
      const __m256 xhat = _mm256_mul_ps(_mm256_sub_ps(_mm256_loadu_ps(xr + j), vmu), vrs);
      const __m256 dyv = _mm256_loadu_ps(gr + j);
      const __m256 g = _mm256_mul_ps(dyv, _mm256_loadu_ps(gain + j));
      vsg = _mm256_add_ps(vsg, g);
      vsgx = _mm256_fmadd_ps(g, xhat, vsgx);
      _mm256_storeu_ps(dgain + j, _mm256_fmadd_ps(dyv, xhat, _mm256_loadu_ps(dgain + j)));
      _mm256_storeu_ps(dbias + j, _mm256_add_ps(dyv, _mm256_loadu_ps(dbias + j)));
    }
    float sum_g = hsum8(vsg), sum_gx = hsum8(vsgx);
    for (; j < cols; ++j) {
      const float xhat = (xr[j] - mu) * rs;
      const float g = gr[j] * gain[j];
      sum_g += g;
      sum_gx += g * xhat;
      dgain[j] += gr[j] * xhat;
      dbias[j] += gr[j];
    }
    const float inv_cols = 1.f / float(cols);
    const __m256 vinv = _mm256_set1_ps(inv_cols);
    const __m256 vsum_g = _mm256_set1_ps(sum_g);
    const __m256 vsum_gx = _mm256_set1_ps(sum_gx);
    j = 0;
    for (; j + 8 <= cols; j += 8) {
      const __m256 xhat = _mm256_mul_ps(_mm256_sub_ps(_mm256_loadu_ps(xr + j), vmu), vrs);
      const __m256 g = _mm256_mul_ps(_mm256_loadu_ps(gr + j), _mm256_loadu_ps(gain + j));
      const __m256 corr = _mm256_mul_ps(vinv, _mm256_fmadd_ps(xhat, vsum_gx, vsum_g));
      const __m256 d = _mm256_mul_ps(vrs, _mm256_sub_ps(g, corr));
      _mm256_storeu_ps(dr + j, _mm256_add_ps(d, _mm256_loadu_ps(dr + j)));
    }
    for (; j < cols; ++j) {
      const float xhat = (xr[j] - mu) * rs;
      const float g = gr[j] * gain[j];
      dr[j] += rs * (g - inv_cols * (sum_g + xhat * sum_gx));
    }
  }
}

// ---------------------------------------------------------------- gelu

constexpr float kGeluScale = 0.7978845608028654f;
constexpr float kGeluCubic = 0.044715f;

void gelu_avx2(const float* x, float* y, int n) {
  const __m256 vs = _mm256_set1_ps(kGeluScale);
  const __m256 vc = _mm256_set1_ps(kGeluCubic);
  const __m256 half = _mm256_set1_ps(0.5f);
  const __m256 one = _mm256_set1_ps(1.0f);
  int i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 v = _mm256_loadu_ps(x + i);
    const __m256 v3 = _mm256_mul_ps(v, _mm256_mul_ps(v, v));
    const __m256 u = _mm256_mul_ps(vs, _mm256_fmadd_ps(vc, v3, v));
    const __m256 t = tanh256(u);
    _mm256_storeu_ps(y + i, _mm256_mul_ps(_mm256_mul_ps(half, v), _mm256_add_ps(one, t)));
  }
  for (; i < n; ++i) {
    float buf[8] = {x[i], 0, 0, 0, 0, 0, 0, 0};
    float out[8];
    gelu_avx2(buf, out, 8);
    y[i] = out[0];
  }
}

void gelu_backward_avx2(const float* x, const float* dy, float* dx, int n) {
  const __m256 vs = _mm256_set1_ps(kGeluScale);
  const __m256 vc3 = _mm256_set1_ps(3.f * kGeluCubic);
  const __m256 vc = _mm256_set1_ps(kGeluCubic);
  const __m256 half = _mm256_set1_ps(0.5f);
  const __m256 one = _mm256_set1_ps(1.0f);
  int i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 v = _mm256_loadu_ps(x + i);
    const __m256 v2 = _mm256_mul_ps(v, v);
    const __m256 u = _mm256_mul_ps(vs, _mm256_fmadd_ps(vc, _mm256_mul_ps(v2, v), v));
    const __m256 t = tanh256(u);
    const __m256 du = _mm256_mul_ps(vs, _mm256_fmadd_ps(vc3, v2, one));
    const __m256 sech2 = _mm256_sub_ps(one, _mm256_mul_ps(t, t));
    const __m256 g = _mm256_fmadd_ps(_mm256_mul_ps(half, v), _mm256_mul_ps(sech2, du),
                                     _mm256_mul_ps(half, _mm256_add_ps(one, t)));
    _mm256_storeu_ps(dx + i, _mm256_fmadd_ps(_mm256_loadu_ps(dy + i), g, _mm256_loadu_ps(dx + i)));
  }
  for (; i < n; ++i) {
    float bx[8] = {x[i], 0, 0, 0, 0, 0, 0, 0};
    float bdy[8] = {dy[i], 0, 0, 0, 0, 0, 0, 0};
    float bdx[8] = {0, 0, 0, 0, 0, 0, 0, 0};
    gelu_backward_avx2(bx, bdy, bdx, 8);
    dx[i] += bdx[0];
  }
}

// ---------------------------------------------------------------- adam

void adam_step_avx2(float* param, const float* grad, float* m, float* v, int n, float lr,
                    float beta1, float beta2, float eps, long t) {
  const float bc1 = 1.f - std::pow(beta1, float(t));
  const float bc2 = 1.f - std::pow(beta2, float(t));
  const __m256 vb1 = _mm256_set1_ps(beta1);
  const __m256 vb2 = _mm256_set1_ps(beta2);
  const __m256 vo1 = _mm256_set1_ps(1.f - beta1);
  const __m256 vo2 = _mm256_set1_ps(1.f - beta2);
  const __m256 vibc1 = _mm256_set1_ps(1.f / bc1);
  const __m256 vibc2 = _mm256_set1_ps(1.f / bc2);
  const __m256 vlr = _mm256_set1_ps(lr);
  const __m256 veps = _mm256_set1_ps(eps);
  int i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 g = _mm256_loadu_ps(grad + i);
    const __m256 mi = _mm256_fmadd_ps(vo1, g, _mm256_mul_ps(vb1, _mm256_loadu_ps(m + i)));
    const __m256 vi = _mm256_fmadd_ps(vo2, _mm256_mul_ps(g, g),
                                      _mm256_mul_ps(vb2, _mm256_loadu_ps(v + i)));
    _mm256_storeu_ps(m + i, mi);
    _mm256_storeu_ps(v + i, vi);
    const __m256 mhat = _mm256_mul_ps(mi, vibc1);
    const __m256 vhat = _mm256_mul_ps(vi, vibc2);
    const __m256 denom = _mm256_add_ps(_mm256_sqrt_ps(vhat), veps);
    const __m256 upd = _mm256_div_ps(_mm256_mul_ps(vlr, mhat), denom);
    _mm256_storeu_ps(param + i, _mm256_sub_ps(_mm256_loadu_ps(param + i), upd));
  }
  for (; i < n; ++i) {
    const float g = grad[i];
    m[i] = beta1 * m[i] + (1.f - beta1) * g;
    v[i] = beta2 * v[i] + (1.f - beta2) * g * g;
    const float mhat = m[i] * (1.f / bc1);
    const float vhat = v[i] * (1.f / bc2);
    param[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable table = {
      matmul_nn_avx2,
      matmul_nt_avx2,
      matmul_tn_avx2,
      add_avx2,
      mul_avx2,
      madd_avx2,
      axpy_avx2,
      scale_avx2,
      add_row_bias_avx2,
      col_sums_avx2,
      reduce_sum_avx2,
      softmax_rows_avx2,
      softmax_rows_backward_avx2,
      layer_norm_avx2,
      layer_norm_backward_avx2,
      gelu_avx2,
      gelu_backward_avx2,
      adam_step_avx2,
  };
  return table;
}

}  // namespace trifuse::kernels
