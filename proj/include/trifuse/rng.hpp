#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace trifuse {

// xoshiro256++ seeded through splitmix64. Self-contained so streams are
// bit-identical across compilers and standard libraries; std:: distributions
// are not specified tightly enough for hash-stable artifacts.
class Rng {
 public:
  explicit Rng(uint64_t seed) {
    uint64_t x = seed;
    for (auto& si : s_) si = splitmix64(x);
  }

  static uint64_t splitmix64(uint64_t& x) {
    x += 0x9e3779b97f4a7c15ull;
    uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  uint64_t next_u64() {
    const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform in [0,1).
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in (0,1]; used by the curriculum so the tau=0 / tau=T endpoint
  // draws are exact.
  double uniform_open0() { return double((next_u64() >> 11) + 1) * 0x1.0p-53; }

  // Uniform integer in [0, n).
  int uniform_int(int n) { return int(next_u64() % uint64_t(n)); }

  // Standard normal via Box-Muller, caching the second value.
  float normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform_open0();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * 3.14159265358979323846 * u2;
    spare_ = float(r * std::sin(a));
    has_spare_ = true;
    return float(r * std::cos(a));
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (int i = int(v.size()) - 1; i > 0; --i) {
      std::swap(v[i], v[uniform_int(i + 1)]);
    }
  }

  // Derive an independent stream from (seed, tag, index). Tags keep the
  // generator families (catalog, users, encoders, training, ...) decoupled
  // so adding draws to one never shifts another.
  static Rng derive(uint64_t seed, uint64_t tag, uint64_t index = 0) {
    uint64_t x = seed;
    uint64_t a = splitmix64(x);
    x ^= tag * 0x9e3779b97f4a7c15ull;
    uint64_t b = splitmix64(x);
    x ^= index * 0xd1342543de82ef95ull;
    uint64_t c = splitmix64(x);
    return Rng(a ^ b ^ c);
  }

 private:
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  uint64_t s_[4];
  float spare_ = 0.f;
  bool has_spare_ = false;
};

// Stream tags (arbitrary fixed constants).
namespace rng_tag {
inline constexpr uint64_t kCatalog = 0x01;
inline constexpr uint64_t kUserSeq = 0x02;
inline constexpr uint64_t kEncoderImage = 0x03;
inline constexpr uint64_t kEncoderText = 0x04;
inline constexpr uint64_t kEncoderGraph = 0x05;
inline constexpr uint64_t kEvalNegatives = 0x06;
inline constexpr uint64_t kModelInit = 0x07;
inline constexpr uint64_t kTrainLoop = 0x08;
inline constexpr uint64_t kScheduler = 0x09;
inline constexpr uint64_t kTemplates = 0x0a;
inline constexpr uint64_t kAdaptorInit = 0x0b;
}  // namespace rng_tag

}  // namespace trifuse
