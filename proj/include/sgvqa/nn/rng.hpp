#pragma once

#include <cstdint>
#include <string_view>

namespace sgvqa::nn {

// xoshiro256++ with splitmix64 seeding. std::mt19937 would also be portable,
// but the standard distributions are not, so all draws are implemented here.
class Rng {
 public:
  explicit Rng(uint64_t seed);

  // Independent stream derived from (seed, key), e.g. (run seed, question id).
  static Rng from_key(uint64_t seed, std::string_view key);

  uint64_t next_u64();
  double uniform();                      // [0, 1)
  double uniform(double lo, double hi);  // [lo, hi)
  int uniform_index(int n);              // [0, n), n >= 1
  bool bernoulli(double p);
  double normal();
  int poisson(double lambda);

  Rng fork(std::string_view key);

 private:
  uint64_t s_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace sgvqa::nn
