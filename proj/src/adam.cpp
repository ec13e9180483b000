#include "trifuse/adam.hpp"

#include "trifuse/errors.hpp"
#include "trifuse/kernels.hpp"

namespace trifuse {

void ParamStore::add(const std::string& name, TensorPtr t) {
  if (slots_.count(name)) throw UsageError("parameter already registered: " + name);
  if (!t) throw UsageError("null parameter: " + name);
  slots_[name] = Slot{std::move(t), {}, {}, 0};
}

TensorPtr ParamStore::get(const std::string& name) const {
  auto it = slots_.find(name);
  if (it == slots_.end()) throw LookupError("no such parameter: " + name);
  return it->second.t;
}

bool ParamStore::contains(const std::string& name) const { return slots_.count(name) > 0; }

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(slots_.size());
  for (const auto& [name, slot] : slots_) out.push_back(name);
  return out;
}

std::vector<std::string> ParamStore::names_with_prefix(const std::string& prefix) const {
  std::vector<std::string> out;
  for (const auto& [name, slot] : slots_)
    if (name.rfind(prefix, 0) == 0) out.push_back(name);
  return out;
}

size_t ParamStore::numel(const std::vector<std::string>& names) const {
  size_t total = 0;
  for (const auto& name : names) total += get(name)->numel();
  return total;
}

void ParamStore::step(const std::vector<std::string>& names, float lr, const AdamConfig& cfg) {
  for (const auto& name : names) {
    auto it = slots_.find(name);
    if (it == slots_.end()) throw LookupError("no such parameter: " + name);
    Slot& slot = it->second;
    if (!slot.t->requires_grad) throw UsageError("stepping frozen parameter: " + name);
    const int n = int(slot.t->numel());
    if (slot.m.empty()) {
      slot.m.assign(size_t(n), 0.f);
      slot.v.assign(size_t(n), 0.f);
    }
    slot.steps += 1;
    kernels::adam_step(slot.t->v(), slot.t->g(), slot.m.data(), slot.v.data(), n, lr, cfg.beta1,
                       cfg.beta2, cfg.eps, slot.steps);
  }
}

void ParamStore::zero_grad(const std::vector<std::string>& names) {
  for (const auto& name : names) get(name)->zero_grad();
}

void ParamStore::zero_all_grads() {
  for (auto& [name, slot] : slots_) slot.t->zero_grad();
}

}  // namespace trifuse
