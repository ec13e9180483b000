#include <cmath>
#include <cstring>
#include <string>

#include "trifuse/errors.hpp"
#include "trifuse/kernels.hpp"
#include "trifuse/tensor.hpp"

namespace trifuse {
namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw DimensionError(msg);
}

std::string dims(const TensorPtr& t) {
  return std::to_string(t->rows) + "x" + std::to_string(t->cols);
}

}  // namespace

Tape::Tape(bool grad_enabled, bool check_finite)
    : grad_enabled_(grad_enabled), check_finite_(check_finite) {}

void Tape::finite_check(const TensorPtr& t, const char* op) const {
  if (!check_finite_) return;
  for (float x : t->value)
    if (!std::isfinite(x)) throw NumericError(std::string("non-finite output from ") + op);
}

TensorPtr Tape::matmul(const TensorPtr& a, const TensorPtr& b) {
  require(a->cols == b->rows, "matmul: " + dims(a) + " * " + dims(b));
  const int m = a->rows, k = a->cols, n = b->cols;
  auto out = Tensor::zeros(m, n);
  kernels::matmul_nn(a->v(), b->v(), out->v(), m, k, n, false);
  finite_check(out, "matmul");
  track(out, {a, b}, [a, b, out, m, k, n] {
    if (out->grad.empty()) return;
    if (a->requires_grad) kernels::matmul_nt(out->grad.data(), b->v(), a->g(), m, n, k, true);
    if (b->requires_grad) kernels::matmul_tn(a->v(), out->grad.data(), b->g(), m, k, n, true);
  });
  return out;
}

TensorPtr Tape::matmul_nt(const TensorPtr& a, const TensorPtr& b) {
  require(a->cols == b->cols, "matmul_nt: " + dims(a) + " * " + dims(b) + "^T");
  const int m = a->rows, k = a->cols, n = b->rows;
  auto out = Tensor::zeros(m, n);
  kernels::matmul_nt(a->v(), b->v(), out->v(), m, k, n, false);
  finite_check(out, "matmul_nt");
  track(out, {a, b}, [a, b, out, m, k, n] {
    if (out->grad.empty()) return;
    if (a->requires_grad) kernels::matmul_nn(out->grad.data(), b->v(), a->g(), m, n, k, true);
    if (b->requires_grad) kernels::matmul_tn(out->grad.data(), a->v(), b->g(), m, n, k, true);
  });
  return out;
}

TensorPtr Tape::add(const TensorPtr& a, const TensorPtr& b) {
  require(a->rows == b->rows && a->cols == b->cols, "add: " + dims(a) + " vs " + dims(b));
  auto out = Tensor::zeros(a->rows, a->cols);
  const int n = int(a->numel());
  kernels::add(a->v(), b->v(), out->v(), n);
  finite_check(out, "add");
  track(out, {a, b}, [a, b, out, n] {
    if (out->grad.empty()) return;
    if (a->requires_grad) kernels::axpy(1.f, out->grad.data(), a->g(), n);
    if (b->requires_grad) kernels::axpy(1.f, out->grad.data(), b->g(), n);
  });
  return out;
}

TensorPtr Tape::add_bias(const TensorPtr& a, const TensorPtr& bias) {
  require(bias->rows == 1 && bias->cols == a->cols,
          "add_bias: " + dims(a) + " with bias " + dims(bias));
  auto out = Tensor::zeros(a->rows, a->cols);
  const int rows = a->rows, cols = a->cols;
  kernels::add_row_bias(a->v(), bias->v(), out->v(), rows, cols);
  finite_check(out, "add_bias");
  track(out, {a, bias}, [a, bias, out, rows, cols] {
    if (out->grad.empty()) return;
    if (a->requires_grad) kernels::axpy(1.f, out->grad.data(), a->g(), rows * cols);
    if (bias->requires_grad) kernels::col_sums(out->grad.data(), bias->g(), rows, cols, true);
  });
  return out;
}

TensorPtr Tape::mul(const TensorPtr& a, const TensorPtr& b) {
  require(a->rows == b->rows && a->cols == b->cols, "mul: " + dims(a) + " vs " + dims(b));
  auto out = Tensor::zeros(a->rows, a->cols);
  const int n = int(a->numel());
  kernels::mul(a->v(), b->v(), out->v(), n);
  finite_check(out, "mul");
  track(out, {a, b}, [a, b, out, n] {
    if (out->grad.empty()) return;
    if (a->requires_grad) kernels::madd(out->grad.data(), b->v(), a->g(), n);
    if (b->requires_grad) kernels::madd(out->grad.data(), a->v(), b->g(), n);
  });
  return out;
}

TensorPtr Tape::scale(const TensorPtr& a, float alpha) {
  if (!std::isfinite(alpha)) throw NumericError("scale: non-finite factor");
  auto out = Tensor::zeros(a->rows, a->cols);
  const int n = int(a->numel());
  kernels::scale(a->v(), alpha, out->v(), n);
  finite_check(out, "scale");
  track(out, {a}, [a, out, alpha, n] {
    if (out->grad.empty() || !a->requires_grad) return;
    kernels::axpy(alpha, out->grad.data(), a->g(), n);
  });
  return out;
}

TensorPtr Tape::sum(const TensorPtr& a) {
  auto out = Tensor::zeros(1, 1);
  const int n = int(a->numel());
  out->value[0] = kernels::reduce_sum(a->v(), n);
  finite_check(out, "sum");
  track(out, {a}, [a, out, n] {
    if (out->grad.empty() || !a->requires_grad) return;
    const float g = out->grad[0];
    float* da = a->g();
    for (int i = 0; i < n; ++i) da[i] += g;
  });
  return out;
}

TensorPtr Tape::concat_cols(const std::vector<TensorPtr>& parts) {
  require(!parts.empty(), "concat_cols: no inputs");
  const int rows = parts[0]->rows;
  int total = 0;
  for (const auto& p : parts) {
    require(p->rows == rows, "concat_cols: row mismatch " + dims(p));
    total += p->cols;
  }
  auto out = Tensor::zeros(rows, total);
  for (int r = 0; r < rows; ++r) {
    float* dst = out->v() + size_t(r) * total;
    for (const auto& p : parts) {
      std::memcpy(dst, p->v() + size_t(r) * p->cols, sizeof(float) * size_t(p->cols));
      dst += p->cols;
    }
  }
  finite_check(out, "concat_cols");
  bool any = false;
  if (grad_enabled_)
    for (const auto& p : parts)
      if (p->requires_grad) any = true;
  if (any) {
    out->requires_grad = true;
    auto held = parts;
    nodes_.push_back([held, out, rows, total] {
      if (out->grad.empty()) return;
      int off = 0;
      for (const auto& p : held) {
        if (p->requires_grad)
          for (int r = 0; r < rows; ++r)
            kernels::axpy(1.f, out->grad.data() + size_t(r) * total + off,
                          p->g() + size_t(r) * p->cols, p->cols);
        off += p->cols;
      }
    });
  }
  return out;
}

TensorPtr Tape::slice_cols(const TensorPtr& a, int c0, int c1) {
  require(0 <= c0 && c0 < c1 && c1 <= a->cols, "slice_cols: bad range");
  const int rows = a->rows, cols = c1 - c0, acols = a->cols;
  auto out = Tensor::zeros(rows, cols);
  for (int r = 0; r < rows; ++r)
    std::memcpy(out->v() + size_t(r) * cols, a->v() + size_t(r) * acols + c0,
                sizeof(float) * size_t(cols));
  finite_check(out, "slice_cols");
  track(out, {a}, [a, out, c0, rows, cols, acols] {
    if (out->grad.empty() || !a->requires_grad) return;
    for (int r = 0; r < rows; ++r)
      kernels::axpy(1.f, out->grad.data() + size_t(r) * cols, a->g() + size_t(r) * acols + c0,
                    cols);
  });
  return out;
}

TensorPtr Tape::gather_rows(const TensorPtr& a, std::vector<int> rows) {
  require(!rows.empty(), "gather_rows: empty index list");
  for (int r : rows)
    if (r < 0 || r >= a->rows) throw LookupError("gather_rows: index out of range");
  const int n = int(rows.size()), cols = a->cols;
  auto out = Tensor::zeros(n, cols);
  for (int i = 0; i < n; ++i)
    std::memcpy(out->v() + size_t(i) * cols, a->v() + size_t(rows[i]) * cols,
                sizeof(float) * size_t(cols));
  finite_check(out, "gather_rows");
  track(out, {a}, [a, out, rows = std::move(rows), n, cols] {
    if (out->grad.empty() || !a->requires_grad) return;
    for (int i = 0; i < n; ++i)
      kernels::axpy(1.f, out->grad.data() + size_t(i) * cols, a->g() + size_t(rows[i]) * cols,
                    cols);
  });
  return out;
}

TensorPtr Tape::overlay_rows(const TensorPtr& base, const TensorPtr& patch,
                             std::vector<int> rows) {
  require(int(rows.size()) == patch->rows, "overlay_rows: index count vs patch rows");
  require(patch->cols == base->cols, "overlay_rows: " + dims(base) + " vs " + dims(patch));
  std::vector<char> hit(size_t(base->rows), 0);
  for (int r : rows) {
    if (r < 0 || r >= base->rows) throw LookupError("overlay_rows: index out of range");
    if (hit[size_t(r)]) throw UsageError("overlay_rows: duplicate index");
    hit[size_t(r)] = 1;
  }
  const int brows = base->rows, cols = base->cols;
  auto out = Tensor::zeros(brows, cols);
  out->value = base->value;
  for (size_t i = 0; i < rows.size(); ++i)
    std::memcpy(out->v() + size_t(rows[i]) * cols, patch->v() + i * size_t(cols),
                sizeof(float) * size_t(cols));
  finite_check(out, "overlay_rows");
  track(out, {base, patch},
        [base, patch, out, rows = std::move(rows), hit = std::move(hit), brows, cols] {
          if (out->grad.empty()) return;
          if (base->requires_grad) {
            float* db = base->g();
            for (int r = 0; r < brows; ++r)
              if (!hit[size_t(r)])
                kernels::axpy(1.f, out->grad.data() + size_t(r) * cols, db + size_t(r) * cols,
                              cols);
          }
          if (patch->requires_grad)
            for (size_t i = 0; i < rows.size(); ++i)
              kernels::axpy(1.f, out->grad.data() + size_t(rows[i]) * cols,
                            patch->g() + i * size_t(cols), cols);
        });
  return out;
}

TensorPtr Tape::softmax_rows(const TensorPtr& a, bool causal) {
  auto out = Tensor::zeros(a->rows, a->cols);
  const int rows = a->rows, cols = a->cols;
  kernels::softmax_rows(a->v(), out->v(), rows, cols, causal);
  finite_check(out, "softmax_rows");
  // Masked-out entries of a causal row have y=0, so the shared backward kernel
  // leaves their gradient untouched.
  track(out, {a}, [a, out, rows, cols] {
    if (out->grad.empty() || !a->requires_grad) return;
    kernels::softmax_rows_backward(out->v(), out->grad.data(), a->g(), rows, cols);
  });
  return out;
}

TensorPtr Tape::layer_norm(const TensorPtr& a, const TensorPtr& gain, const TensorPtr& bias,
                           float eps) {
  require(gain->rows == 1 && gain->cols == a->cols, "layer_norm: gain " + dims(gain));
  require(bias->rows == 1 && bias->cols == a->cols, "layer_norm: bias " + dims(bias));
  const int rows = a->rows, cols = a->cols;
  auto mean = std::make_shared<std::vector<float>>(size_t(rows));
  auto rstd = std::make_shared<std::vector<float>>(size_t(rows));
  auto out = Tensor::zeros(rows, cols);
  kernels::layer_norm(a->v(), gain->v(), bias->v(), out->v(), mean->data(), rstd->data(), rows,
                      cols, eps);
  finite_check(out, "layer_norm");
  // The fused kernel accumulates all three grads whenever any input needs one;
  // the extra writes land in grads no optimizer subset reads.
  track(out, {a, gain, bias}, [a, gain, bias, out, mean, rstd, rows, cols] {
    if (out->grad.empty()) return;
    kernels::layer_norm_backward(a->v(), gain->v(), mean->data(), rstd->data(),
                                 out->grad.data(), a->g(), gain->g(), bias->g(), rows, cols);
  });
  return out;
}

TensorPtr Tape::gelu(const TensorPtr& a) {
  auto out = Tensor::zeros(a->rows, a->cols);
  const int n = int(a->numel());
  kernels::gelu(a->v(), out->v(), n);
  finite_check(out, "gelu");
  track(out, {a}, [a, out, n] {
    if (out->grad.empty() || !a->requires_grad) return;
    kernels::gelu_backward(a->v(), out->grad.data(), a->g(), n);
  });
  return out;
}

TensorPtr Tape::cross_entropy(const TensorPtr& logits, std::vector<int> targets) {
  const int rows = logits->rows, cols = logits->cols;
  require(int(targets.size()) == rows, "cross_entropy: target count vs logit rows");
  for (int t : targets)
    if (t < 0 || t >= cols) throw LookupError("cross_entropy: target out of range");
  auto out = Tensor::zeros(1, 1);
  double total = 0;
  for (int r = 0; r < rows; ++r) {
    const float* row = logits->v() + size_t(r) * cols;
    float mx = row[0];
    for (int j = 1; j < cols; ++j) mx = row[j] > mx ? row[j] : mx;
    double sumexp = 0;
    for (int j = 0; j < cols; ++j) sumexp += std::exp(double(row[j]) - mx);
    total += std::log(sumexp) + mx - row[targets[size_t(r)]];
  }
  out->value[0] = float(total / rows);
  finite_check(out, "cross_entropy");
  track(out, {logits}, [logits, out, targets = std::move(targets), rows, cols] {
    if (out->grad.empty() || !logits->requires_grad) return;
    const float g = out->grad[0] / float(rows);
    std::vector<float> probs(size_t(rows) * cols);
    kernels::softmax_rows(logits->v(), probs.data(), rows, cols, false);
    kernels::axpy(g, probs.data(), logits->g(), rows * cols);
    float* dl = logits->g();
    for (int r = 0; r < rows; ++r) dl[size_t(r) * cols + targets[size_t(r)]] -= g;
  });
  return out;
}

void Tape::backward(const TensorPtr& loss) {
  if (!grad_enabled_) throw UsageError("backward on a no-grad tape");
  require(loss->rows == 1 && loss->cols == 1, "backward: loss must be 1x1");
  if (!loss->requires_grad) throw UsageError("backward: loss does not require grad");
  loss->g()[0] += 1.f;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
}

}  // namespace trifuse
