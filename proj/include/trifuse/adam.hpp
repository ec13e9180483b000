#pragma once

// Named parameter registry plus Adam. Moment buffers and step counters live
// per parameter, so stepping one curriculum subset never corrupts the bias
// correction of another.

#include <map>
#include <string>
#include <vector>

#include "trifuse/tensor.hpp"

namespace trifuse {

struct AdamConfig {
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
};

class ParamStore {
 public:
  void add(const std::string& name, TensorPtr t);
  TensorPtr get(const std::string& name) const;
  bool contains(const std::string& name) const;
  std::vector<std::string> names() const;
  std::vector<std::string> names_with_prefix(const std::string& prefix) const;
  size_t numel(const std::vector<std::string>& names) const;

  // One Adam update over the named parameters. Missing names and frozen
  // parameters throw; a parameter whose grad was never touched this round
  // steps with a zero gradient, which still decays its moments.
  void step(const std::vector<std::string>& names, float lr, const AdamConfig& cfg = {});
  void zero_grad(const std::vector<std::string>& names);
  void zero_all_grads();

 private:
  struct Slot {
    TensorPtr t;
    std::vector<float> m, v;
    long steps = 0;
  };
  std::map<std::string, Slot> slots_;
};

}  // namespace trifuse
