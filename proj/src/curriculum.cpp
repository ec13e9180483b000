#include "trifuse/curriculum.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "trifuse/errors.hpp"
#include "trifuse/util.hpp"

namespace trifuse {

double Scheduler::p_medium(long tau) const {
  if (tau < 0 || tau > boundary) {
    throw UsageError("medium probability is defined on [0, " + std::to_string(boundary) + "]");
  }
  return double(tau) / double(phase_denom ? boundary : total);
}

double Scheduler::p_hard(long tau) const {
  if (tau < boundary || tau > total) {
    throw UsageError("hard probability is defined on [" + std::to_string(boundary) + ", " +
                     std::to_string(total) + "]");
  }
  return double(tau - boundary) / double(total - boundary);
}

PromptLevel Scheduler::sample(long tau, Rng& rng) const {
  if (tau < 0 || tau > total) throw UsageError("tau outside [0, T]");
  double u = rng.uniform_open0();
  if (tau <= boundary) return u <= p_medium(tau) ? PromptLevel::kMedium : PromptLevel::kEasy;
  return u <= p_hard(tau) ? PromptLevel::kHard : PromptLevel::kMedium;
}

Scheduler make_scheduler(const Config& cfg) {
  Scheduler s;
  s.total = cfg.train_steps;
  s.boundary = cfg.resolved_phase_split();
  s.phase_denom = cfg.medium_prob_denom == "phase";
  if (s.boundary <= 0 || s.boundary >= s.total) {
    throw ConfigError("phase split must satisfy 0 < T1 < T");
  }
  return s;
}

std::vector<std::string> level_param_names(const ParamStore& store, PromptLevel level) {
  std::vector<std::string> names = store.names_with_prefix("lora.");
  if (level == PromptLevel::kEasy) return names;
  for (const auto& n : store.names_with_prefix("psi_b.")) names.push_back(n);
  if (level == PromptLevel::kMedium) return names;
  for (const auto& n : store.names_with_prefix("psi_f.")) names.push_back(n);
  for (const auto& n : store.names_with_prefix("psi_i.")) names.push_back(n);
  return names;
}

void write_train_log(const std::string& path, const std::vector<TrainLogRow>& log) {
  std::ostringstream out;
  out << "step,tau,level,loss,lr\n";
  for (const TrainLogRow& row : log) {
    out << row.step << ',' << row.tau << ',' << level_name(row.level) << ',' << row.loss << ','
        << row.lr << '\n';
  }
  write_file(path, out.str());
}

namespace {

struct LoopSpec {
  int steps = 0;
  float lr = 0;
  bool curriculum = false;   // false: every step is easy
  bool step_base = false;    // true: update base.*; false: update the level set
  PromptLevel max_level = PromptLevel::kHard;
  bool use_cma = true;
  uint64_t rng_index = 0;  // kTrainLoop stream
  const StepHook* on_step = nullptr;
};

std::vector<TrainLogRow> run_loop(TmfModel& model, const ModalityTables& tables,
                                  const std::vector<Item>& catalog,
                                  const std::vector<UserSequence>& train_users,
                                  const LoopSpec& spec) {
  if (train_users.empty()) throw UsageError("no training users");
  const Config& cfg = model.cfg;
  ParamStore store;
  model.register_all(store);
  const std::vector<std::string> base_names = store.names_with_prefix("base.");

  Scheduler sched;
  if (spec.curriculum) sched = make_scheduler(cfg);
  Rng sched_rng = Rng::derive(cfg.seed, rng_tag::kScheduler, 0);
  Rng loop_rng = Rng::derive(cfg.seed, rng_tag::kTrainLoop, spec.rng_index);

  const int warmup = std::max(1, int(std::lround(cfg.warmup_frac * float(spec.steps))));
  std::vector<TrainLogRow> log;
  log.reserve(size_t(spec.steps));

  for (int s = 0; s < spec.steps; ++s) {
    const long tau = s;
    PromptLevel level = PromptLevel::kEasy;
    if (spec.curriculum) level = std::min(sched.sample(tau, sched_rng), spec.max_level);
    const double lr = s < warmup ? double(spec.lr) * double(s + 1) / warmup : double(spec.lr);

    double batch_loss = 0;
    try {
      for (int b = 0; b < cfg.batch; ++b) {
        const UserSequence& user = train_users[size_t(loop_rng.uniform_int(int(train_users.size())))];
        long template_seed = loop_rng.uniform_int(kTemplateCount);
        Tape tape;
        TensorPtr loss = tape.scale(
            example_loss(tape, model, tables, catalog, user, level, template_seed, spec.use_cma),
            1.f / float(cfg.batch));
        tape.backward(loss);
        batch_loss += double(loss->at(0, 0));
      }
    } catch (const NumericError& e) {
      throw NumericError("aborted at step " + std::to_string(s) + " (" + level_name(level) +
                         "): " + e.what());
    }
    if (!std::isfinite(batch_loss)) {
      throw NumericError("aborted at step " + std::to_string(s) + " (" + level_name(level) +
                         "): batch loss is not finite");
    }

    store.step(spec.step_base ? base_names : level_param_names(store, level), float(lr));
    store.zero_all_grads();
    log.push_back({s, tau, level, batch_loss, lr});
    if (spec.on_step && *spec.on_step) (*spec.on_step)(log.back());
  }
  return log;
}

}  // namespace

std::vector<TrainLogRow> pretrain_base(TmfModel& model, const ModalityTables& tables,
                                       const std::vector<Item>& catalog,
                                       const std::vector<UserSequence>& train_users) {
  if (model.lm.lora_attached()) throw UsageError("warm-up must run before adapters attach");
  LoopSpec spec;
  spec.steps = model.cfg.pretrain_steps;
  spec.lr = model.cfg.pretrain_lr;
  spec.curriculum = false;
  spec.step_base = true;
  spec.rng_index = 0;
  return run_loop(model, tables, catalog, train_users, spec);
}

std::vector<TrainLogRow> train_curriculum(TmfModel& model, const ModalityTables& tables,
                                          const std::vector<Item>& catalog,
                                          const std::vector<UserSequence>& train_users,
                                          PromptLevel max_level, bool use_cma,
                                          const StepHook& on_step) {
  if (!model.lm.lora_attached()) throw UsageError("curriculum tuning needs attached adapters");
  LoopSpec spec;
  spec.steps = model.cfg.train_steps;
  spec.lr = model.cfg.lr;
  spec.curriculum = true;
  spec.step_base = false;
  spec.max_level = max_level;
  spec.use_cma = use_cma;
  spec.rng_index = 1;
  spec.on_step = &on_step;
  return run_loop(model, tables, catalog, train_users, spec);
}

}  // namespace trifuse
