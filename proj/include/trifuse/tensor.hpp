#pragma once

// Dense row-major float32 tensors (all 2-D; scalars are 1x1) plus a tape for
// reverse-mode gradients. Ops live on the tape; leaves are created through the
// Tensor factories. Gradients accumulate across tapes until zero_grad, so one
// optimizer step can consume several recorded prompts.

#include <functional>
#include <memory>
#include <vector>

#include "trifuse/rng.hpp"

namespace trifuse {

struct Tensor;
using TensorPtr = std::shared_ptr<Tensor>;

struct Tensor {
  int rows = 0;
  int cols = 0;
  bool requires_grad = false;
  std::vector<float> value;
  std::vector<float> grad;  // empty until first touched by backward

  Tensor(int r, int c, bool track);

  static TensorPtr zeros(int rows, int cols, bool requires_grad = false);
  static TensorPtr full(int rows, int cols, float fill, bool requires_grad = false);
  static TensorPtr from(int rows, int cols, std::vector<float> data,
                        bool requires_grad = false);
  static TensorPtr randn(Rng& rng, int rows, int cols, float stddev,
                         bool requires_grad = false);
  static TensorPtr uniform(Rng& rng, int rows, int cols, float lo, float hi,
                           bool requires_grad = false);

  size_t numel() const { return size_t(rows) * size_t(cols); }
  float* v() { return value.data(); }
  const float* v() const { return value.data(); }
  float* g();  // allocates zeroed grad storage on first use
  bool has_grad() const { return !grad.empty(); }
  void zero_grad();

  float at(int r, int c) const { return value[size_t(r) * cols + c]; }
  float grad_at(int r, int c) const { return grad[size_t(r) * cols + c]; }
};

class Tape {
 public:
  // grad_enabled=false records nothing (pure forward); check_finite scans each
  // op's output and throws NumericError on NaN/inf.
  explicit Tape(bool grad_enabled = true, bool check_finite = true);

  TensorPtr matmul(const TensorPtr& a, const TensorPtr& b);     // a(m,k) * b(k,n)
  TensorPtr matmul_nt(const TensorPtr& a, const TensorPtr& b);  // a(m,k) * b(n,k)^T
  TensorPtr add(const TensorPtr& a, const TensorPtr& b);
  TensorPtr add_bias(const TensorPtr& a, const TensorPtr& bias);  // bias is 1 x cols
  TensorPtr mul(const TensorPtr& a, const TensorPtr& b);
  TensorPtr scale(const TensorPtr& a, float alpha);
  TensorPtr sum(const TensorPtr& a);  // 1x1
  TensorPtr concat_cols(const std::vector<TensorPtr>& parts);
  TensorPtr slice_cols(const TensorPtr& a, int c0, int c1);
  TensorPtr gather_rows(const TensorPtr& a, std::vector<int> rows);
  // Copy of base with base row rows[i] replaced by patch row i. Replaced rows
  // pass no gradient into base.
  TensorPtr overlay_rows(const TensorPtr& base, const TensorPtr& patch, std::vector<int> rows);
  TensorPtr softmax_rows(const TensorPtr& a, bool causal = false);
  TensorPtr layer_norm(const TensorPtr& a, const TensorPtr& gain, const TensorPtr& bias,
                       float eps = 1e-5f);
  TensorPtr gelu(const TensorPtr& a);
  // Mean negative log-likelihood over rows; targets[i] indexes row i's columns.
  TensorPtr cross_entropy(const TensorPtr& logits, std::vector<int> targets);

  void backward(const TensorPtr& loss);  // loss must be 1x1
  bool grad_enabled() const { return grad_enabled_; }
  size_t node_count() const { return nodes_.size(); }

 private:
  // Marks out as gradient-bearing and stores the node closure iff any input
  // takes gradients; a no-grad tape stores nothing.
  template <typename F>
  void track(const TensorPtr& out, std::initializer_list<TensorPtr> inputs, F&& backward_fn) {
    if (!grad_enabled_) return;
    for (const auto& in : inputs)
      if (in->requires_grad) {
        out->requires_grad = true;
        nodes_.emplace_back(std::forward<F>(backward_fn));
        return;
      }
  }
  void finite_check(const TensorPtr& t, const char* op) const;

  std::vector<std::function<void()>> nodes_;
  bool grad_enabled_;
  bool check_finite_;
};

}  // namespace trifuse
