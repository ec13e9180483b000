#include "trifuse/lm.hpp"

#include <cmath>
#include <numeric>

#include "trifuse/errors.hpp"
#include "trifuse/prompt.hpp"
#include "trifuse/rng.hpp"

namespace trifuse {

namespace {

TensorPtr fan_in_uniform(Rng& rng, int rows, int cols) {
  float bound = 1.f / std::sqrt(float(rows));
  return Tensor::uniform(rng, rows, cols, -bound, bound, /*requires_grad=*/true);
}

}  // namespace

Lm Lm::init(long seed, const LmShape& shape) {
  if (shape.vocab <= 0 || shape.d <= 0 || shape.layers <= 0) throw DimensionError("lm needs positive sizes");
  if (shape.heads < 1 || shape.d % shape.heads != 0) throw DimensionError("heads must divide d");

  Lm lm;
  lm.shape = shape;
  long stream = 0;
  auto next_rng = [&seed, &stream] { return Rng::derive(seed, rng_tag::kModelInit, stream++); };

  Rng emb_rng = next_rng();
  lm.tok_emb = Tensor::randn(emb_rng, shape.vocab, shape.d, 0.02f, true);
  lm.pos_emb = Tensor::randn(emb_rng, shape.max_seq_len, shape.d, 0.02f, true);
  lm.layers.resize(size_t(shape.layers));
  for (LmLayer& layer : lm.layers) {
    Rng rng = next_rng();
    layer.ln1_g = Tensor::full(1, shape.d, 1.f, true);
    layer.ln1_b = Tensor::zeros(1, shape.d, true);
    layer.w_q = fan_in_uniform(rng, shape.d, shape.d);
    layer.w_k = fan_in_uniform(rng, shape.d, shape.d);
    layer.w_v = fan_in_uniform(rng, shape.d, shape.d);
    layer.w_o = fan_in_uniform(rng, shape.d, shape.d);
    layer.ln2_g = Tensor::full(1, shape.d, 1.f, true);
    layer.ln2_b = Tensor::zeros(1, shape.d, true);
    layer.w_fc = fan_in_uniform(rng, shape.d, 4 * shape.d);
    layer.w_proj = fan_in_uniform(rng, 4 * shape.d, shape.d);
  }
  Rng head_rng = next_rng();
  lm.ln_f_g = Tensor::full(1, shape.d, 1.f, true);
  lm.ln_f_b = Tensor::zeros(1, shape.d, true);
  lm.lm_head = fan_in_uniform(head_rng, shape.d, shape.vocab);
  return lm;
}

void Lm::register_base(ParamStore& store) const {
  store.add("base.tok_emb", tok_emb);
  store.add("base.pos_emb", pos_emb);
  for (size_t l = 0; l < layers.size(); ++l) {
    const LmLayer& layer = layers[l];
    std::string p = "base.l" + std::to_string(l) + ".";
    store.add(p + "ln1_g", layer.ln1_g);
    store.add(p + "ln1_b", layer.ln1_b);
    store.add(p + "w_q", layer.w_q);
    store.add(p + "w_k", layer.w_k);
    store.add(p + "w_v", layer.w_v);
    store.add(p + "w_o", layer.w_o);
    store.add(p + "ln2_g", layer.ln2_g);
    store.add(p + "ln2_b", layer.ln2_b);
    store.add(p + "w_fc", layer.w_fc);
    store.add(p + "w_proj", layer.w_proj);
  }
  store.add("base.ln_f_g", ln_f_g);
  store.add("base.ln_f_b", ln_f_b);
  store.add("base.lm_head", lm_head);
}

void Lm::register_lora(ParamStore& store) const {
  if (!lora_attached()) throw UsageError("no adapters to register");
  for (size_t l = 0; l < layers.size(); ++l) {
    const AttnLora& lora = *layers[l].lora;
    std::string p = "lora.l" + std::to_string(l) + ".";
    store.add(p + "a_q", lora.a_q);
    store.add(p + "b_q", lora.b_q);
    store.add(p + "a_v", lora.a_v);
    store.add(p + "b_v", lora.b_v);
  }
}

void Lm::attach_lora(long seed, int r, float alpha) {
  if (lora_attached()) throw UsageError("adapters are already attached");
  if (r <= 0) throw DimensionError("adapter rank must be positive");

  tok_emb->requires_grad = false;
  pos_emb->requires_grad = false;
  ln_f_g->requires_grad = false;
  ln_f_b->requires_grad = false;
  lm_head->requires_grad = false;
  long stream = 1000;  // distinct from the base init streams
  for (LmLayer& layer : layers) {
    for (const TensorPtr& t : {layer.ln1_g, layer.ln1_b, layer.w_q, layer.w_k, layer.w_v, layer.w_o,
                               layer.ln2_g, layer.ln2_b, layer.w_fc, layer.w_proj}) {
      t->requires_grad = false;
    }
    Rng rng = Rng::derive(seed, rng_tag::kModelInit, stream++);
    AttnLora lora;
    lora.a_q = fan_in_uniform(rng, shape.d, r);
    lora.b_q = Tensor::zeros(r, shape.d, true);
    lora.a_v = fan_in_uniform(rng, shape.d, r);
    lora.b_v = Tensor::zeros(r, shape.d, true);
    lora.scale = alpha / float(r);
    layer.lora = std::move(lora);
  }
}

long Lm::lora_param_count() const {
  long n = 0;
  for (const LmLayer& layer : layers) {
    if (!layer.lora) continue;
    n += long(layer.lora->a_q->numel()) + long(layer.lora->b_q->numel()) +
         long(layer.lora->a_v->numel()) + long(layer.lora->b_v->numel());
  }
  return n;
}

TensorPtr Lm::hidden_states(Tape& tape, const TensorPtr& embedded) const {
  if (embedded->cols != shape.d) throw DimensionError("embedded width does not match the model");
  if (embedded->rows > shape.max_seq_len) {
    throw LengthError("sequence of " + std::to_string(embedded->rows) + " exceeds max_seq_len");
  }
  const int len = embedded->rows;
  const int hd = shape.d / shape.heads;
  const float inv_sqrt_hd = 1.f / std::sqrt(float(hd));

  std::vector<int> positions(static_cast<size_t>(len));
  std::iota(positions.begin(), positions.end(), 0);
  TensorPtr x = tape.add(embedded, tape.gather_rows(pos_emb, positions));

  for (const LmLayer& layer : layers) {
    TensorPtr xn = tape.layer_norm(x, layer.ln1_g, layer.ln1_b);
    TensorPtr q = tape.matmul(xn, layer.w_q);
    TensorPtr k = tape.matmul(xn, layer.w_k);
    TensorPtr v = tape.matmul(xn, layer.w_v);
    if (layer.lora) {
      const AttnLora& lora = *layer.lora;
      q = tape.add(q, tape.scale(tape.matmul(tape.matmul(xn, lora.a_q), lora.b_q), lora.scale));
      v = tape.add(v, tape.scale(tape.matmul(tape.matmul(xn, lora.a_v), lora.b_v), lora.scale));
    }

    std::vector<TensorPtr> head_outs;
    head_outs.reserve(size_t(shape.heads));
    for (int h = 0; h < shape.heads; ++h) {
      int c0 = h * hd, c1 = (h + 1) * hd;
      TensorPtr qh = shape.heads == 1 ? q : tape.slice_cols(q, c0, c1);
      TensorPtr kh = shape.heads == 1 ? k : tape.slice_cols(k, c0, c1);
      TensorPtr vh = shape.heads == 1 ? v : tape.slice_cols(v, c0, c1);
      TensorPtr attn = tape.softmax_rows(tape.scale(tape.matmul_nt(qh, kh), inv_sqrt_hd),
                                         /*causal=*/true);
      head_outs.push_back(tape.matmul(attn, vh));
    }
    TensorPtr merged = shape.heads == 1 ? head_outs.front() : tape.concat_cols(head_outs);
    x = tape.add(x, tape.matmul(merged, layer.w_o));

    TensorPtr yn = tape.layer_norm(x, layer.ln2_g, layer.ln2_b);
    x = tape.add(x, tape.matmul(tape.gelu(tape.matmul(yn, layer.w_fc)), layer.w_proj));
  }
  return tape.layer_norm(x, ln_f_g, ln_f_b);
}

TensorPtr Lm::forward(Tape& tape, const TensorPtr& embedded) const {
  return tape.matmul(hidden_states(tape, embedded), lm_head);
}

namespace {

void check_answer_span(int n_tokens, int answer_start) {
  if (answer_start <= 0) throw UsageError("answer span needs at least one preceding token");
  if (answer_start >= n_tokens) throw UsageError("answer span is empty");
}

}  // namespace

TensorPtr nll_loss(Tape& tape, const TensorPtr& logits, const std::vector<int>& tokens,
                   int answer_start) {
  check_answer_span(int(tokens.size()), answer_start);
  if (logits->rows != int(tokens.size())) throw DimensionError("logits rows must match the token count");
  std::vector<int> rows;
  std::vector<int> targets;
  for (int t = answer_start; t < int(tokens.size()); ++t) {
    rows.push_back(t - 1);
    targets.push_back(tokens[size_t(t)]);
  }
  return tape.cross_entropy(tape.gather_rows(logits, rows), targets);
}

TensorPtr lm_nll(Tape& tape, const Lm& lm, const TensorPtr& embedded, const std::vector<int>& tokens,
                 int answer_start) {
  check_answer_span(int(tokens.size()), answer_start);
  if (embedded->rows != int(tokens.size())) throw DimensionError("embedded rows must match the token count");
  TensorPtr hidden = lm.hidden_states(tape, embedded);
  std::vector<int> rows;
  std::vector<int> targets;
  for (int t = answer_start; t < int(tokens.size()); ++t) {
    rows.push_back(t - 1);
    targets.push_back(tokens[size_t(t)]);
  }
  TensorPtr answer_logits = tape.matmul(tape.gather_rows(hidden, rows), lm.lm_head);
  return tape.cross_entropy(answer_logits, targets);
}

std::vector<int> generate(const Lm& lm, const TensorPtr& prompt_embedded, int max_new_tokens) {
  if (prompt_embedded->cols != lm.shape.d) throw DimensionError("embedded width does not match the model");
  if (prompt_embedded->rows >= lm.shape.max_seq_len) {
    throw LengthError("prompt leaves no room to generate");
  }
  if (max_new_tokens < 0) throw UsageError("max_new_tokens must be >= 0");

  std::vector<float> buf(prompt_embedded->v(), prompt_embedded->v() + prompt_embedded->numel());
  int len = prompt_embedded->rows;
  std::vector<int> out;
  while (int(out.size()) < max_new_tokens && len < lm.shape.max_seq_len) {
    Tape tape(false);
    TensorPtr x = Tensor::from(len, lm.shape.d, buf);
    TensorPtr last = tape.gather_rows(lm.hidden_states(tape, x), {len - 1});
    TensorPtr logits = tape.matmul(last, lm.lm_head);

    int best = -1;
    float best_v = 0.f;
    for (int t = 0; t < lm.shape.vocab; ++t) {
      if (t == special::kBos || t == special::kPad || t == special::kMtItem || t == special::kMtBeh) {
        continue;
      }
      float v = logits->at(0, t);
      if (best < 0 || v > best_v) {
        best = t;
        best_v = v;
      }
    }
    if (best == special::kEos) break;
    out.push_back(best);
    const float* row = lm.tok_emb->v() + size_t(best) * lm.shape.d;
    buf.insert(buf.end(), row, row + lm.shape.d);
    ++len;
  }
  return out;
}

}  // namespace trifuse
