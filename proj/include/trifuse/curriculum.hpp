#pragma once

// Staged instruction tuning. A two-phase scheduler ramps medium prompts in
// over phase one and hard prompts over phase two, and each sampled level
// steps only its own parameter subset: easy touches the adapters, medium
// adds the behavior adaptor, hard adds fusion and the item adaptor. Warm-up
// trains the full base model on easy prompts before any adapters exist.

#include <functional>
#include <string>
#include <vector>

#include "trifuse/pipeline.hpp"

namespace trifuse {

struct Scheduler {
  long total = 0;     // T
  long boundary = 0;  // T1
  bool phase_denom = false;  // medium probability tau/T1 instead of tau/T

  double p_medium(long tau) const;  // UsageError outside [0, boundary]
  double p_hard(long tau) const;    // UsageError outside [boundary, total]
  // Phase one (tau <= boundary) never yields hard; phase two never easy.
  PromptLevel sample(long tau, Rng& rng) const;
};

Scheduler make_scheduler(const Config& cfg);  // ConfigError unless 0 < T1 < T

// Parameter names the given level is allowed to update. Sets are nested:
// easy is lora.*, medium adds psi_b.*, hard adds psi_f.* and psi_i.*.
std::vector<std::string> level_param_names(const ParamStore& store, PromptLevel level);

struct TrainLogRow {
  long step = 0;
  long tau = 0;
  PromptLevel level = PromptLevel::kEasy;
  double loss = 0;
  double lr = 0;
};

void write_train_log(const std::string& path, const std::vector<TrainLogRow>& log);

// Full-base training on easy prompts only; the model must not have adapters
// attached yet. Returns the per-step log.
std::vector<TrainLogRow> pretrain_base(TmfModel& model, const ModalityTables& tables,
                                       const std::vector<Item>& catalog,
                                       const std::vector<UserSequence>& train_users);

// Observer invoked after each optimizer step (post-update, grads cleared).
using StepHook = std::function<void(const TrainLogRow&)>;

// Curriculum tuning; requires attached adapters (frozen base). max_level
// caps sampled levels for ablation rungs; use_cma selects the fusion depth
// behind hard prompts. Throws NumericError with step context on NaN loss.
std::vector<TrainLogRow> train_curriculum(TmfModel& model, const ModalityTables& tables,
                                          const std::vector<Item>& catalog,
                                          const std::vector<UserSequence>& train_users,
                                          PromptLevel max_level = PromptLevel::kHard,
                                          bool use_cma = true, const StepHook& on_step = {});

}  // namespace trifuse
