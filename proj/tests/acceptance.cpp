// End-to-end acceptance gate. Each numbered criterion prints one PASS/FAIL
// line with its evidence; the process exits nonzero if any selected
// criterion fails. Run with no arguments for all criteria, or pass numbers
// to run a subset (e.g. "acceptance 1 4 7").

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fusion_ref.hpp"
#include "trifuse/checkpoint.hpp"
#include "trifuse/curriculum.hpp"
#include "trifuse/errors.hpp"
#include "trifuse/evalkit.hpp"
#include "trifuse/grad_check.hpp"
#include "trifuse/util.hpp"

using namespace trifuse;
using fusion_ref::Mat;

namespace {

struct Outcome {
  bool pass = false;
  std::string evidence;
};

std::string fmt(double x, int prec = 3) {
  std::ostringstream s;
  s.precision(prec);
  s << x;
  return s.str();
}

uint64_t block_hash(const ParamStore& store, const std::string& prefix) {
  uint64_t h = kFnvOffset;
  for (const auto& name : store.names_with_prefix(prefix)) {
    TensorPtr t = store.get(name);
    h = fnv1a(name, h);
    h = fnv1a(t->v(), t->numel() * sizeof(float), h);
  }
  return h;
}

// ---------------------------------------------------------------- criterion 1

Outcome criterion_fusion_oracle() {
  Rng rng = Rng::derive(4242, rng_tag::kModelInit, 0);
  double max_err = 0;
  int instances = 0;
  for (int trial = 0; trial < 24; ++trial) {
    int h = 1 + rng.uniform_int(8);
    int d_v = (trial % 3 == 0) ? 4 : (trial % 3 == 1 ? 8 : 16);
    int d_g = (trial % 2 == 0) ? 2 : 8;
    int heads = (trial % 4 == 3) ? 2 : 1;

    FusionInputs in = fusion_ref::random_inputs(rng, h, d_v, d_g);
    FusionParams params = FusionParams::init(trial, 2 * d_v + d_g, d_v);

    Tape tape(false);
    TensorPtr fused = fuse(tape, in, params, heads);
    Mat expected = fusion_ref::fuse_ref(fusion_ref::to_mat(in.v_img), fusion_ref::to_mat(in.v_txt),
                                        fusion_ref::to_mat(in.v_gph), fusion_ref::to_mat(params.w_q),
                                        heads);
    for (int r = 0; r < fused->rows; ++r) {
      for (int c = 0; c < fused->cols; ++c) {
        max_err = std::max(max_err,
                           std::abs(double(fused->at(r, c)) - expected[size_t(r)][size_t(c)]));
      }
    }
    ++instances;
  }

  // Single-row histories collapse every attention to identity weights, so
  // the fused row must equal the image row bit for bit.
  bool identity_ok = true;
  for (int trial = 0; trial < 5; ++trial) {
    FusionInputs in = fusion_ref::random_inputs(rng, 1, 8, 4);
    FusionParams params = FusionParams::init(77 + trial, 20, 8);
    Tape tape(false);
    TensorPtr m = concat_modalities(tape, in);
    TensorPtr self = amsa(tape, m);
    identity_ok &= std::memcmp(self->v(), m->v(), m->numel() * sizeof(float)) == 0;
    TensorPtr fused = fuse(tape, in, params, 1);
    identity_ok &= std::memcmp(fused->v(), in.v_img->v(), in.v_img->numel() * sizeof(float)) == 0;
  }

  Outcome o;
  o.pass = max_err <= 1e-6 && instances >= 20 && identity_ok;
  o.evidence = "max |tape - f64 oracle| " + fmt(max_err, 2) + " over " + std::to_string(instances) +
               " instances; single-row identity " + (identity_ok ? "bitwise" : "BROKEN");
  return o;
}

// ---------------------------------------------------------------- criterion 2

double op_suite_max_err(long seed) {
  Rng rng = Rng::derive(seed, rng_tag::kModelInit, 3);
  double worst = 0;
  auto leafy = [&](int r, int c) { return Tensor::randn(rng, r, c, 1.f, /*requires_grad=*/true); };
  auto fixed = [&](int r, int c) { return Tensor::randn(rng, r, c, 1.f); };
  auto track = [&](const GradCheckReport& rep) { worst = std::max(worst, rep.max_err); };

  // Weighted sums keep the loss sensitive to every output element, including
  // through ops whose plain sum has a degenerate gradient (softmax rows).
  {
    auto a = leafy(3, 4), b = leafy(4, 5), w = fixed(3, 5);
    track(grad_check([&](Tape& t) { return t.sum(t.mul(t.matmul(a, b), w)); }, {a, b}));
  }
  {
    auto a = leafy(3, 4), b = leafy(5, 4), w = fixed(3, 5);
    track(grad_check([&](Tape& t) { return t.sum(t.mul(t.matmul_nt(a, b), w)); }, {a, b}));
  }
  {
    auto a = leafy(3, 4), b = leafy(3, 4), w = fixed(3, 4);
    track(grad_check([&](Tape& t) { return t.sum(t.mul(t.add(a, b), w)); }, {a, b}));
  }
  {
    auto a = leafy(3, 4), bias = leafy(1, 4), w = fixed(3, 4);
    track(grad_check([&](Tape& t) { return t.sum(t.mul(t.add_bias(a, bias), w)); }, {a, bias}));
  }
  {
    auto a = leafy(3, 4), b = leafy(3, 4), w = fixed(3, 4);
    track(grad_check([&](Tape& t) { return t.sum(t.mul(t.mul(a, b), w)); }, {a, b}));
  }
  {
    auto a = leafy(3, 4), w = fixed(3, 4);
    track(grad_check([&](Tape& t) { return t.sum(t.mul(t.scale(a, 1.75f), w)); }, {a}));
  }
  {
    auto a = leafy(4, 3);
    track(grad_check([&](Tape& t) { return t.sum(a); }, {a}));
  }
  {
    auto a = leafy(3, 2), b = leafy(3, 3), w = fixed(3, 5);
    track(grad_check([&](Tape& t) { return t.sum(t.mul(t.concat_cols({a, b}), w)); }, {a, b}));
  }
  {
    auto a = leafy(3, 6), w = fixed(3, 3);
    track(grad_check([&](Tape& t) { return t.sum(t.mul(t.slice_cols(a, 1, 4), w)); }, {a}));
  }
  {
    auto a = leafy(5, 3), w = fixed(4, 3);
    track(grad_check([&](Tape& t) { return t.sum(t.mul(t.gather_rows(a, {0, 2, 2, 4}), w)); }, {a}));
  }
  {
    auto base = leafy(5, 3), patch = leafy(2, 3), w = fixed(5, 3);
    track(grad_check(
        [&](Tape& t) { return t.sum(t.mul(t.overlay_rows(base, patch, {1, 3}), w)); },
        {base, patch}));
  }
  for (bool causal : {false, true}) {
    auto a = leafy(4, 4), w = fixed(4, 4);
    track(grad_check([&](Tape& t) { return t.sum(t.mul(t.softmax_rows(a, causal), w)); }, {a}));
  }
  {
    auto a = leafy(3, 8), g = leafy(1, 8), b = leafy(1, 8), w = fixed(3, 8);
    track(grad_check([&](Tape& t) { return t.sum(t.mul(t.layer_norm(a, g, b), w)); }, {a, g, b}));
  }
  {
    auto a = leafy(3, 4), w = fixed(3, 4);
    track(grad_check([&](Tape& t) { return t.sum(t.mul(t.gelu(a), w)); }, {a}));
  }
  {
    auto logits = leafy(4, 7);
    track(grad_check([&](Tape& t) { return t.cross_entropy(logits, {1, 0, 6, 3}); }, {logits}));
  }
  return worst;
}

Config gradcheck_cfg(long seed) {
  Config cfg;
  cfg.seed = seed;
  cfg.items = 20;
  cfg.users = 10;
  cfg.categories = 3;
  cfg.latent_k = 4;
  cfg.history_min = 2;
  cfg.history_max = 3;
  cfg.d_v = 4;
  cfg.d_t = 4;
  cfg.d_g = 2;
  cfg.graph_hops = 1;
  cfg.d_llm = 16;
  cfg.lm_layers = 1;
  cfg.lm_heads = 2;
  cfg.max_seq_len = 128;
  cfg.lora_r = 2;
  cfg.lora_alpha = 4.f;
  return cfg;
}

double full_path_err(long seed) {
  Config cfg = gradcheck_cfg(seed);
  Dataset data = generate_dataset(cfg);
  ModalityTables tables = build_tables(cfg, data.catalog, data.graph);
  TmfModel model = TmfModel::init(cfg, data.catalog);
  model.lm.attach_lora(cfg.seed, cfg.lora_r, cfg.lora_alpha);
  ParamStore store;
  model.register_all(store);

  const UserSequence& seq = data.users[size_t(seed) % data.users.size()];
  auto f = [&](Tape& t) {
    return example_loss(t, model, tables, data.catalog, seq, PromptLevel::kHard, seed);
  };
  std::vector<TensorPtr> leaves = {store.get("psi_f.w_q"), store.get("lora.l0.a_q"),
                                   store.get("lora.l0.b_v"), store.get("psi_b.b2"),
                                   store.get("psi_i.b1")};
  return grad_check(f, leaves).max_err;
}

Outcome criterion_gradients() {
  double op_worst = 0, path_worst = 0;
  for (long seed = 0; seed < 10; ++seed) {
    op_worst = std::max(op_worst, op_suite_max_err(seed));
    path_worst = std::max(path_worst, full_path_err(seed));
  }
  Outcome o;
  o.pass = op_worst <= 1e-4 && path_worst <= 1e-4;
  o.evidence = "10 seeds: max op rel err " + fmt(op_worst, 2) +
               ", max fused-prompt-to-loss rel err " + fmt(path_worst, 2) + " (bound 1e-4)";
  return o;
}

// ---------------------------------------------------------------- criterion 3

Outcome criterion_attention_invariants() {
  Rng rng = Rng::derive(1313, rng_tag::kModelInit, 1);
  int stochastic_bad = 0, hull_bad = 0, perm_bad = 0;
  const int cases = 120;

  for (int i = 0; i < cases; ++i) {
    int rows = 2 + rng.uniform_int(7);
    int cols = 2 + rng.uniform_int(7);
    TensorPtr scores = Tensor::randn(rng, rows, cols, 3.f);
    Tape tape(false);
    bool causal = (rows == cols) && (i % 2 == 0);
    TensorPtr p = tape.softmax_rows(scores, causal);
    for (int r = 0; r < rows; ++r) {
      double s = 0;
      for (int c = 0; c < cols; ++c) {
        float w = p->at(r, c);
        if (w < 0) ++stochastic_bad;
        if (causal && c > r && w != 0.f) ++stochastic_bad;
        s += double(w);
      }
      if (std::abs(s - 1.0) > 1e-5) ++stochastic_bad;
    }
  }

  for (int i = 0; i < cases; ++i) {
    int h = 2 + rng.uniform_int(7);
    int d_v = (i % 2 == 0) ? 4 : 8;
    FusionInputs in = fusion_ref::random_inputs(rng, h, d_v, 4);
    Tape tape(false);
    TensorPtr m = concat_modalities(tape, in);
    TensorPtr out = amsa(tape, m);
    for (int c = 0; c < m->cols; ++c) {
      float lo = m->at(0, c), hi = m->at(0, c);
      for (int r = 1; r < h; ++r) {
        lo = std::min(lo, m->at(r, c));
        hi = std::max(hi, m->at(r, c));
      }
      for (int r = 0; r < h; ++r) {
        if (out->at(r, c) < lo - 1e-5f || out->at(r, c) > hi + 1e-5f) ++hull_bad;
      }
    }
  }

  for (int i = 0; i < cases; ++i) {
    int h = 2 + rng.uniform_int(7);
    int d_v = (i % 2 == 0) ? 4 : 8;
    FusionInputs in = fusion_ref::random_inputs(rng, h, d_v, 4);
    std::vector<int> perm(static_cast<size_t>(h));
    for (int r = 0; r < h; ++r) perm[size_t(r)] = r;
    rng.shuffle(perm);

    FusionParams params = FusionParams::init(900 + i, 2 * d_v + 4, d_v);
    Tape tape(false);
    TensorPtr fused = fuse(tape, in, params, 1);

    FusionInputs shuffled;
    shuffled.v_img = tape.gather_rows(in.v_img, perm);
    shuffled.v_txt = tape.gather_rows(in.v_txt, perm);
    shuffled.v_gph = tape.gather_rows(in.v_gph, perm);
    TensorPtr fused_perm = fuse(tape, shuffled, params, 1);
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < d_v; ++c) {
        if (std::abs(fused_perm->at(r, c) - fused->at(perm[size_t(r)], c)) > 1e-5f) ++perm_bad;
      }
    }
  }

  Outcome o;
  o.pass = stochastic_bad == 0 && hull_bad == 0 && perm_bad == 0;
  o.evidence = std::to_string(cases) + " cases each: row-stochastic violations " +
               std::to_string(stochastic_bad) + ", hull violations " + std::to_string(hull_bad) +
               ", permutation violations " + std::to_string(perm_bad);
  return o;
}

// ---------------------------------------------------------------- criterion 4

Outcome criterion_scheduler() {
  Config cfg;  // default benchmark: T = 5000, T1 = 2500
  Scheduler sched = make_scheduler(cfg);
  const long T = sched.total, T1 = sched.boundary;
  const int n = 100000;
  Rng rng = Rng::derive(17, rng_tag::kScheduler, 99);

  double worst_sigma = 0;
  long exclusivity_bad = 0;
  for (long tau : {0L, T / 4, T1, (T + T1) / 2, T}) {
    double p_med = tau <= T1 ? sched.p_medium(tau) : 0.0;
    double p_hard = tau >= T1 ? sched.p_hard(tau) : 0.0;
    double expect[3] = {tau <= T1 ? 1.0 - p_med : 0.0,
                        tau <= T1 ? p_med : 1.0 - p_hard,
                        tau <= T1 ? 0.0 : p_hard};
    long counts[3] = {0, 0, 0};
    for (int i = 0; i < n; ++i) {
      PromptLevel lvl = sched.sample(tau, rng);
      ++counts[int(lvl)];
      if (tau <= T1 && lvl == PromptLevel::kHard) ++exclusivity_bad;
      if (tau > T1 && lvl == PromptLevel::kEasy) ++exclusivity_bad;
    }
    for (int k = 0; k < 3; ++k) {
      double emp = double(counts[k]) / n;
      double se = std::sqrt(expect[k] * (1.0 - expect[k]) / n);
      double sig = se > 0 ? std::abs(emp - expect[k]) / se
                          : (emp == expect[k] ? 0.0 : 1e9);
      worst_sigma = std::max(worst_sigma, sig);
    }
  }

  // Exclusivity swept across the whole schedule, not just the five points.
  for (long tau = 0; tau <= T; tau += 100) {
    for (int i = 0; i < 1000; ++i) {
      PromptLevel lvl = sched.sample(tau, rng);
      if (tau <= T1 && lvl == PromptLevel::kHard) ++exclusivity_bad;
      if (tau > T1 && lvl == PromptLevel::kEasy) ++exclusivity_bad;
    }
  }

  Outcome o;
  o.pass = worst_sigma <= 3.0 && exclusivity_bad == 0;
  o.evidence = "100k draws per tau in {0, T/4, T1, (T+T1)/2, T}: worst deviation " +
               fmt(worst_sigma, 3) + " sigma (bound 3); phase violations " +
               std::to_string(exclusivity_bad);
  return o;
}

// ---------------------------------------------------------------- criterion 5

Config discipline_cfg() {
  Config cfg;
  cfg.seed = 21;
  cfg.items = 30;
  cfg.users = 40;
  cfg.categories = 5;
  cfg.history_min = 3;
  cfg.history_max = 6;
  cfg.d_v = 8;
  cfg.d_t = 8;
  cfg.d_g = 4;
  cfg.d_llm = 32;
  cfg.lm_layers = 1;
  cfg.lm_heads = 2;
  cfg.max_seq_len = 192;
  cfg.lora_r = 2;
  cfg.lora_alpha = 4.f;
  cfg.train_steps = 500;
  cfg.phase_split = 250;
  cfg.batch = 2;
  return cfg;
}

Outcome criterion_param_discipline() {
  Config cfg = discipline_cfg();
  Dataset data = generate_dataset(cfg);
  ModalityTables tables = build_tables(cfg, data.catalog, data.graph);
  TmfModel model = TmfModel::init(cfg, data.catalog);
  model.lm.attach_lora(cfg.seed, cfg.lora_r, cfg.lora_alpha);
  ParamStore store;
  model.register_all(store);

  const std::vector<std::string> blocks = {"base.", "lora.", "psi_b.", "psi_f.", "psi_i."};
  std::map<std::string, uint64_t> last;
  for (const auto& b : blocks) last[b] = block_hash(store, b);

  long violations = 0;
  long level_seen[3] = {0, 0, 0};
  StepHook hook = [&](const TrainLogRow& row) {
    ++level_seen[int(row.level)];
    for (const auto& b : blocks) {
      uint64_t now = block_hash(store, b);
      bool changed = now != last[b];
      last[b] = now;
      if (!changed) continue;
      bool allowed = b == "lora." || (b == "psi_b." && row.level >= PromptLevel::kMedium) ||
                     ((b == "psi_f." || b == "psi_i.") && row.level == PromptLevel::kHard);
      if (!allowed) ++violations;
    }
  };
  train_curriculum(model, tables, data.catalog, data.users, PromptLevel::kHard, true, hook);

  Outcome o;
  o.pass = violations == 0 && level_seen[0] > 0 && level_seen[1] > 0 && level_seen[2] > 0;
  o.evidence = "500 steps (easy/medium/hard = " + std::to_string(level_seen[0]) + "/" +
               std::to_string(level_seen[1]) + "/" + std::to_string(level_seen[2]) +
               "): block-hash violations " + std::to_string(violations);
  return o;
}

// ---------------------------------------------------------------- criterion 6

Outcome criterion_lora_bitwise() {
  LmShape shape{64, 64, 2, 4, 64};
  Lm lm = Lm::init(33, shape);
  Rng rng = Rng::derive(33, rng_tag::kTrainLoop, 5);
  std::vector<int> tokens = {special::kBos};
  for (int i = 0; i < 24; ++i) tokens.push_back(special::kCount + rng.uniform_int(59));

  auto logits_bytes = [&]() {
    Tape tape(false);
    TensorPtr emb = tape.gather_rows(lm.tok_emb, tokens);
    TensorPtr logits = lm.forward(tape, emb);
    std::vector<float> out(logits->numel());
    std::memcpy(out.data(), logits->v(), out.size() * sizeof(float));
    return out;
  };

  std::vector<float> before = logits_bytes();
  lm.attach_lora(33, 4, 8.f);
  std::vector<float> after = logits_bytes();

  Outcome o;
  o.pass = before.size() == after.size() &&
           std::memcmp(before.data(), after.data(), before.size() * sizeof(float)) == 0;
  o.evidence = std::string("logits before vs after adapter attach: ") +
               (o.pass ? "bitwise equal" : "DIFFER") + " (" + std::to_string(before.size()) +
               " floats)";
  return o;
}

// ---------------------------------------------------------------- criterion 7

Outcome criterion_generation_contract() {
  Config cfg = discipline_cfg();
  cfg.users = 120;
  Dataset data = generate_dataset(cfg);
  ModalityTables tables = build_tables(cfg, data.catalog, data.graph);
  TmfModel model = TmfModel::init(cfg, data.catalog);

  auto run_all = [&]() {
    std::vector<std::vector<int>> outs;
    for (const UserSequence& seq : data.users) {
      for (PromptLevel lvl : {PromptLevel::kEasy, PromptLevel::kMedium, PromptLevel::kHard}) {
        for (long ts = 0; ts < 3; ++ts) {
          outs.push_back(generate_answer(model, tables, data.catalog, seq, lvl, ts, 8));
        }
      }
    }
    return outs;
  };

  std::vector<std::vector<int>> first = run_all();
  std::vector<std::vector<int>> second = run_all();

  long n_gens = long(first.size());
  long special_bad = 0;
  for (const auto& ids : first) {
    for (int id : ids) {
      if (id < special::kCount) ++special_bad;
    }
  }
  bool deterministic = first == second;

  Outcome o;
  o.pass = n_gens >= 1000 && special_bad == 0 && deterministic;
  o.evidence = std::to_string(n_gens) + " generations: special-token emissions " +
               std::to_string(special_bad) + "; rerun " +
               (deterministic ? "identical" : "DIVERGED");
  return o;
}

// ------------------------------------------------------------ criteria 8 & 9

struct LadderRun {
  std::vector<double> hitrates;     // base, behavior, amsa, full
  std::vector<double> valid_ratios;
  double secs = 0;
};

LadderRun run_ladder(long seed) {
  auto t0 = std::chrono::steady_clock::now();
  Config cfg;  // default benchmark
  cfg.seed = seed;
  Dataset data = generate_dataset(cfg);
  ModalityTables tables = build_tables(cfg, data.catalog, data.graph);
  std::vector<AblationRow> rows = run_ablation(cfg, data, tables);

  LadderRun run;
  for (const AblationRow& row : rows) {
    run.hitrates.push_back(row.metrics.hitrate_at_1);
    run.valid_ratios.push_back(row.metrics.valid_ratio);
  }
  run.secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return run;
}

std::optional<LadderRun> g_seed1_ladder;

const LadderRun& seed1_ladder() {
  if (!g_seed1_ladder) g_seed1_ladder = run_ladder(1);
  return *g_seed1_ladder;
}

Outcome criterion_ablation_trend() {
  const std::vector<long> seeds = {1, 2, 3};
  int mono_ok = 0, margin_ok = 0;
  double total_secs = 0;
  std::string detail;

  for (long seed : seeds) {
    const LadderRun run = seed == 1 ? seed1_ladder() : run_ladder(seed);
    total_secs += run.secs;
    const std::vector<double>& h = run.hitrates;

    bool decreasing = false;
    int ties = 0;
    for (int i = 0; i + 1 < int(h.size()); ++i) {
      if (h[size_t(i) + 1] < h[size_t(i)]) decreasing = true;
      if (h[size_t(i) + 1] == h[size_t(i)]) ++ties;
    }
    bool mono = !decreasing && ties <= 1;
    bool margin = h.back() - h.front() >= 0.10;
    mono_ok += mono;
    margin_ok += margin;

    detail += " s" + std::to_string(seed) + ":";
    for (double v : h) detail += " " + fmt(v, 3);
    detail += mono ? " mono" : " NOT-MONO";
    detail += " d=" + fmt(h.back() - h.front(), 3) + ";";
  }

  Outcome o;
  o.pass = mono_ok >= 2 && margin_ok >= 2;
  o.evidence = "hitrate ladders" + detail + " monotone " + std::to_string(mono_ok) +
               "/3, margin>=0.10 " + std::to_string(margin_ok) + "/3, ladder time " +
               fmt(total_secs / 60.0, 3) + " min";
  return o;
}

Outcome criterion_valid_ratio() {
  const LadderRun& run = seed1_ladder();
  double vr = run.valid_ratios.back();  // fully featured rung after full training
  Outcome o;
  o.pass = vr >= 0.90;
  o.evidence = "full model ValidRatio " + fmt(vr, 3) + " (bound 0.90)";
  return o;
}

// --------------------------------------------------------------- criterion 10

Config repro_cfg() {
  Config cfg;
  cfg.seed = 5;
  cfg.items = 30;
  cfg.users = 30;
  cfg.categories = 5;
  cfg.history_min = 2;
  cfg.history_max = 4;
  cfg.d_v = 8;
  cfg.d_t = 8;
  cfg.d_g = 4;
  cfg.d_llm = 16;
  cfg.lm_layers = 1;
  cfg.lm_heads = 2;
  cfg.max_seq_len = 160;
  cfg.lora_r = 2;
  cfg.lora_alpha = 4.f;
  cfg.pretrain_steps = 20;
  cfg.train_steps = 16;
  cfg.phase_split = 8;
  cfg.batch = 2;
  return cfg;
}

void run_pipeline_into(const Config& cfg, const std::string& dir) {
  std::filesystem::create_directories(dir);
  Dataset data = generate_dataset(cfg);
  ModalityTables tables = build_tables(cfg, data.catalog, data.graph);
  save_catalog(dir + "/catalog.jsonl", data.catalog);
  save_sequences(dir + "/sequences.jsonl", data.users);
  save_graph(dir + "/graph.jsonl", data.graph);
  save_tables(dir + "/tables.json", tables, cfg);

  size_t n_train = train_count(cfg, data.users.size());
  std::vector<UserSequence> train(data.users.begin(), data.users.begin() + long(n_train));
  std::vector<UserSequence> eval(data.users.begin() + long(n_train), data.users.end());

  TmfModel model = TmfModel::init(cfg, data.catalog);
  pretrain_base(model, tables, data.catalog, train);
  {
    ParamStore store;
    model.register_all(store);
    save_checkpoint(dir + "/base_ckpt.json", store, {{"phase", "pretrain"}});
  }
  model.lm.attach_lora(cfg.seed, cfg.lora_r, cfg.lora_alpha);
  train_curriculum(model, tables, data.catalog, train);
  {
    ParamStore store;
    model.register_all(store);
    save_checkpoint(dir + "/model_ckpt.json", store, {{"phase", "train"}});
  }

  EvalResult result = run_eval(model, tables, data.catalog, eval, PromptLevel::kHard);
  write_instance_log(dir + "/instances.jsonl", result.records, eval, data.catalog);
  nlohmann::json report = {{"config", cfg.to_json()},
                           {"hitrate_at_1", result.metrics.hitrate_at_1},
                           {"valid_ratio", result.metrics.valid_ratio},
                           {"n_instances", result.metrics.n_instances}};
  write_file(dir + "/report.json", report.dump(2) + "\n");
}

Outcome criterion_reproducibility() {
  Config cfg = repro_cfg();
  std::string root = (std::filesystem::temp_directory_path() / "trifuse_accept_repro").string();
  std::filesystem::remove_all(root);
  run_pipeline_into(cfg, root + "/a");
  run_pipeline_into(cfg, root + "/b");

  const std::vector<std::string> artifacts = {
      "catalog.jsonl",    "sequences.jsonl", "graph.jsonl",        "tables.json",
      "tables.json.f32",  "base_ckpt.json",  "base_ckpt.json.f32", "model_ckpt.json",
      "model_ckpt.json.f32", "instances.jsonl", "report.json"};
  int equal = 0;
  std::string mismatches;
  for (const std::string& name : artifacts) {
    if (file_hash(root + "/a/" + name) == file_hash(root + "/b/" + name)) {
      ++equal;
    } else {
      mismatches += " " + name;
    }
  }
  std::filesystem::remove_all(root);

  Outcome o;
  o.pass = equal == int(artifacts.size());
  o.evidence = std::to_string(equal) + "/" + std::to_string(artifacts.size()) +
               " rerun artifacts hash-identical" +
               (mismatches.empty() ? "" : "; mismatched:" + mismatches);
  return o;
}

// ------------------------------------------------------------------- harness

struct Criterion {
  int number;
  const char* name;
  Outcome (*run)();
};

const Criterion kCriteria[] = {
    {1, "fusion oracle", criterion_fusion_oracle},
    {2, "gradient suite", criterion_gradients},
    {3, "attention invariants", criterion_attention_invariants},
    {4, "scheduler fidelity", criterion_scheduler},
    {5, "parameter-set discipline", criterion_param_discipline},
    {6, "adapter attach equivalence", criterion_lora_bitwise},
    {7, "generation contract", criterion_generation_contract},
    {8, "ablation ladder trend", criterion_ablation_trend},
    {9, "valid ratio", criterion_valid_ratio},
    {10, "reproducibility", criterion_reproducibility},
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));

  bool all_pass = true;
  int ran = 0;
  for (const Criterion& c : kCriteria) {
    if (!selected.empty() &&
        std::find(selected.begin(), selected.end(), c.number) == selected.end()) {
      continue;
    }
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.evidence = std::string("exception: ") + e.what();
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%d] %s %s: %s (%.1fs)\n", c.number, o.pass ? "PASS" : "FAIL", c.name,
                o.evidence.c_str(), secs);
    std::fflush(stdout);
    all_pass &= o.pass;
    ++ran;
  }
  std::printf("acceptance: %s (%d criteria)\n", all_pass ? "ALL PASS" : "FAILURES", ran);
  return all_pass ? 0 : 1;
}
