// Scalar reference kernels. Written for clarity: these are the ground truth
// the AVX2 variants are equivalence-tested against.

#include <cmath>
#include <cstring>

#include "trifuse/kernels.hpp"

namespace trifuse::kernels {
namespace {

void matmul_nn_scalar(const float* a, const float* b, float* c, int m, int k, int n,
                      bool accumulate) {
  if (!accumulate) std::memset(c, 0, sizeof(float) * size_t(m) * size_t(n));
  for (int i = 0; i < m; ++i) {
    const float* arow = a + size_t(i) * k;
    float* crow = c + size_t(i) * n;
    for (int p = 0; p < k; ++p) {
      const float av = arow[p];
      const float* brow = b + size_t(p) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void matmul_nt_scalar(const float* a, const float* b, float* c, int m, int k, int n,
                      bool accumulate) {
  for (int i = 0; i < m; ++i) {
    const float* arow = a + size_t(i) * k;
    for (int j = 0; j < n; ++j) {
      const float* brow = b + size_t(j) * k;
      float s = 0.f;
      for (int p = 0; p < k; ++p) s += arow[p] * brow[p];
      float* cp = c + size_t(i) * n + j;
      *cp = accumulate ? *cp + s : s;
    }
  }
}

void matmul_tn_scalar(const float* a, const float* b, float* c, int p, int m, int n,
                      bool accumulate) {
  if (!accumulate) std::memset(c, 0, sizeof(float) * size_t(m) * size_t(n));
  for (int q = 0; q < p; ++q) {
    const float* arow = a + size_t(q) * m;
    const float* brow = b + size_t(q) * n;
    for (int i = 0; i < m; ++i) {
      const float av = arow[i];
      float* crow = c + size_t(i) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void add_scalar(const float* a, const float* b, float* dst, int n) {
  for (int i = 0; i < n; ++i) dst[i] = a[i] + b[i];
}

void mul_scalar(const float* a, const float* b, float* dst, int n) {
  for (int i = 0; i < n; ++i) dst[i] = a[i] * b[i];
}

void madd_scalar(const float* a, const float* b, float* dst, int n) {
  for (int i = 0; i < n; ++i) dst[i] += a[i] * b[i];
}

void axpy_scalar(float alpha, const float* x, float* y, int n) {
  for (int i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scale_scalar(const float* a, float alpha, float* dst, int n) {
  for (int i = 0; i < n; ++i) dst[i] = a[i] * alpha;
}

void add_row_bias_scalar(const float* a, const float* bias, float* dst, int rows, int cols) {
  for (int r = 0; r < rows; ++r) {
    const float* arow = a + size_t(r) * cols;
    float* drow = dst + size_t(r) * cols;
    for (int j = 0; j < cols; ++j) drow[j] = arow[j] + bias[j];
  }
}

void col_sums_scalar(const float* a, float* dst, int rows, int cols, bool accumulate) {
  if (!accumulate) std::memset(dst, 0, sizeof(float) * size_t(cols));
  for (int r = 0; r < rows; ++r) {
    const float* arow = a + size_t(r) * cols;
    for (int j = 0; j < cols; ++j) dst[j] += arow[j];
  }
}

float reduce_sum_scalar(const float* a, int n) {
  float s = 0.f;
  for (int i = 0; i < n; ++i) s += a[i];
  return s;
}

void softmax_rows_scalar(const float* x, float* y, int rows, int cols, bool causal) {
  for (int r = 0; r < rows; ++r) {
    const float* xr = x + size_t(r) * cols;
    float* yr = y + size_t(r) * cols;
    const int width = causal ? (r + 1 < cols ? r + 1 : cols) : cols;
    float mx = xr[0];
    for (int j = 1; j < width; ++j) mx = xr[j] > mx ? xr[j] : mx;
    float sum = 0.f;
    for (int j = 0; j < width; ++j) {
      yr[j] = std::exp(xr[j] - mx);
      sum += yr[j];
    }
    const float inv = 1.f / sum;
    for (int j = 0; j < width; ++j) yr[j] *= inv;
    for (int j = width; j < cols; ++j) yr[j] = 0.f;
  }
}

void softmax_rows_backward_scalar(const float* y, const float* dy, float* dx, int rows,
                                  int cols) {
  for (int r = 0; r < rows; ++r) {
    const float* yr = y + size_t(r) * cols;
    const float* gr = dy + size_t(r) * cols;
    float* dr = dx + size_t(r) * cols;
    float dot = 0.f;
    for (int j = 0; j < cols; ++j) dot += yr[j] * gr[j];
    for (int j = 0; j < cols; ++j) dr[j] += yr[j] * (gr[j] - dot);
  }
}

void layer_norm_scalar(const float* x, const float* gain, const float* bias, float* y,
                       float* mean, float* rstd, int rows, int cols, float eps) {
  for (int r = 0; r < rows; ++r) {
    const float* xr = x + size_t(r) * cols;
    float* yr = y + size_t(r) * cols;
    float mu = 0.f;
    for (int j = 0; j < cols; ++j) mu += xr[j];
    mu /= float(cols);
    float var = 0.f;
    for (int j = 0; j < cols; ++j) {
      const float d = xr[j] - mu;
      var += d * d;
    }
    var /= float(cols);
    const float rs = 1.f / std::sqrt(var + eps);
    mean[r] = mu;
    rstd[r] = rs;
    for (int j = 0; j < cols; ++j) yr[j] = (xr[j] - mu) * rs * gain[j] + bias[j];
  }
}

void layer_norm_backward_scalar(const float* x, const float* gain, const float* mean,
                                const float* rstd, const float* dy, float* dx, float* dgain,
                                float* dbias, int rows, int cols) {
  for (int r = 0; r < rows; ++r) {
    const float* xr = x + size_t(r) * cols;
    const float* gr = dy + size_t(r) * cols;
    float* dr = dx + size_t(r) * cols;
    const float mu = mean[r];
    const float rs = rstd[r];
    float sum_g = 0.f, sum_gx = 0.f;
    for (int j = 0; j < cols; ++j) {
      const float xhat = (xr[j] - mu) * rs;
      const float g = gr[j] * gain[j];
      sum_g += g;
      sum_gx += g * xhat;
      dgain[j] += gr[j] * xhat;
      dbias[j] += gr[j];
    }
    const float inv_cols = 1.f / float(cols);
    for (int j = 0; j < cols; ++j) {
      const float xhat = (xr[j] - mu) * rs;
      const float g = gr[j] * gain[j];
      dr[j] += rs * (g - inv_cols * (sum_g + xhat * sum_gx));
    }
  }
}

constexpr float kGeluScale = 0.7978845608028654f;  // sqrt(2/pi)
constexpr float kGeluCubic = 0.044715f;

void gelu_scalar(const float* x, float* y, int n) {
  for (int i = 0; i < n; ++i) {
    const float v = x[i];
    const float u = kGeluScale * (v + kGeluCubic * v * v * v);
    y[i] = 0.5f * v * (1.f + std::tanh(u));
  }
}

void gelu_backward_scalar(const float* x, const float* dy, float* dx, int n) {
  for (int i = 0; i < n; ++i) {
    const float v = x[i];
    const float u = kGeluScale * (v + kGeluCubic * v * v * v);
    const float t = std::tanh(u);
    const float du = kGeluScale * (1.f + 3.f * kGeluCubic * v * v);
    const float grad = 0.5f * (1.f + t) + 0.5f * v * (1.f - t * t) * du;
    dx[i] += dy[i] * grad;
  }
}

void adam_step_scalar(float* param, const float* grad, float* m, float* v, int n, float lr,
                      float beta1, float beta2, float eps, long t) {
  const float bc1 = 1.f - std::pow(beta1, float(t));
  const float bc2 = 1.f - std::pow(beta2, float(t));
  for (int i = 0; i < n; ++i) {
    const float g = grad[i];
    m[i] = beta1 * m[i] + (1.f - beta1) * g;
    v[i] = beta2 * v[i] + (1.f - beta2) * g * g;
    const float mhat = m[i] / bc1;
    const float vhat = v[i] / bc2;
    param[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table = {
      matmul_nn_scalar,
      matmul_nt_scalar,
      matmul_tn_scalar,
      add_scalar,
      mul_scalar,
      madd_scalar,
      axpy_scalar,
      scale_scalar,
      add_row_bias_scalar,
      col_sums_scalar,
      reduce_sum_scalar,
      softmax_rows_scalar,
      softmax_rows_backward_scalar,
      layer_norm_scalar,
      layer_norm_backward_scalar,
      gelu_scalar,
      gelu_backward_scalar,
      adam_step_scalar,
  };
  return table;
}

}  // namespace trifuse::kernels
