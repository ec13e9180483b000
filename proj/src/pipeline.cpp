#include "trifuse/pipeline.hpp"

#include <cstring>

#include "trifuse/errors.hpp"

namespace trifuse {

TmfModel TmfModel::init(const Config& cfg, const std::vector<Item>& catalog) {
  cfg.validate();
  TmfModel m;
  m.cfg = cfg;
  m.vocab = Vocab::build(catalog);
  LmShape shape;
  shape.vocab = m.vocab.size();
  shape.d = cfg.d_llm;
  shape.layers = cfg.lm_layers;
  shape.heads = cfg.lm_heads;
  shape.max_seq_len = cfg.max_seq_len;
  m.lm = Lm::init(cfg.seed, shape);
  m.fusion = FusionParams::init(cfg.seed, cfg.d_v + cfg.d_t + cfg.d_g, cfg.d_v);
  int hidden = cfg.resolved_adaptor_hidden();
  m.item_adaptor = ItemAdaptor::init(cfg.seed, cfg.d_v, hidden, cfg.d_llm);
  m.behavior_adaptor = BehaviorAdaptor::init(cfg.seed, cfg.d_g, hidden, cfg.d_llm);
  return m;
}

void TmfModel::register_all(ParamStore& store) const {
  lm.register_base(store);
  if (lm.lora_attached()) lm.register_lora(store);
  fusion.register_params(store);
  item_adaptor.register_params(store);
  behavior_adaptor.register_params(store);
}

namespace {

TensorPtr history_rows(const ModalityTables& tables, const UserSequence& seq,
                       const float* (ModalityTables::*row)(int) const, int width) {
  std::vector<float> buf;
  buf.reserve(seq.history.size() * size_t(width));
  for (const Interaction& step : seq.history) {
    const float* r = (tables.*row)(step.item);
    buf.insert(buf.end(), r, r + width);
  }
  return Tensor::from(int(seq.history.size()), width, std::move(buf));
}

}  // namespace

ModalityTokens build_modality_tokens(Tape& tape, const TmfModel& model,
                                     const ModalityTables& tables, const UserSequence& seq,
                                     PromptLevel level, bool use_cma) {
  ModalityTokens out;
  if (level == PromptLevel::kEasy) return out;

  std::vector<float> beh(size_t(kBehaviorCount) * tables.d_g);
  for (int b = 0; b < kBehaviorCount; ++b) {
    std::memcpy(beh.data() + size_t(b) * tables.d_g, tables.graph_behaviors[size_t(b)].data(),
                size_t(tables.d_g) * sizeof(float));
  }
  out.behaviors =
      model.behavior_adaptor.forward(tape, Tensor::from(kBehaviorCount, tables.d_g, std::move(beh)));
  if (level == PromptLevel::kMedium) return out;

  FusionInputs in;
  in.v_img = history_rows(tables, seq, &ModalityTables::image_row, tables.d_v);
  in.v_txt = history_rows(tables, seq, &ModalityTables::text_row, tables.d_t);
  in.v_gph = history_rows(tables, seq, &ModalityTables::graph_row, tables.d_g);
  TensorPtr q = tape.matmul(amsa(tape, concat_modalities(tape, in)), model.fusion.w_q);
  TensorPtr fused = use_cma ? cma(tape, q, in.v_img, in.v_txt, model.cfg.cma_heads) : q;
  out.items = model.item_adaptor.forward(tape, fused);
  return out;
}

TensorPtr example_loss(Tape& tape, const TmfModel& model, const ModalityTables& tables,
                       const std::vector<Item>& catalog, const UserSequence& seq,
                       PromptLevel level, long template_seed, bool use_cma) {
  HybridPrompt prompt =
      render_prompt(model.vocab, catalog, seq, level, template_seed, /*include_answer=*/true);
  ModalityTokens mt = build_modality_tokens(tape, model, tables, seq, level, use_cma);
  TensorPtr embedded = embed_prompt(tape, prompt, model.lm.tok_emb, mt.items, mt.behaviors);
  return lm_nll(tape, model.lm, embedded, prompt.tokens, prompt.answer_start);
}

std::vector<int> generate_answer(const TmfModel& model, const ModalityTables& tables,
                                 const std::vector<Item>& catalog, const UserSequence& seq,
                                 PromptLevel level, long template_seed, int max_new_tokens,
                                 bool use_cma) {
  Tape tape(false);
  HybridPrompt prompt =
      render_prompt(model.vocab, catalog, seq, level, template_seed, /*include_answer=*/false);
  ModalityTokens mt = build_modality_tokens(tape, model, tables, seq, level, use_cma);
  TensorPtr embedded = embed_prompt(tape, prompt, model.lm.tok_emb, mt.items, mt.behaviors);
  return generate(model.lm, embedded, max_new_tokens);
}

}  // namespace trifuse
