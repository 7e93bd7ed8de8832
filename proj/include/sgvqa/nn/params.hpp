#pragma once

#include <memory>
#include <string>
#include <vector>

#include "sgvqa/nn/rng.hpp"
#include "sgvqa/nn/tape.hpp"

namespace sgvqa::nn {

// Named parameter collection. Creation order is the serialization order.
class ParamStore {
 public:
  Parameter& add(const std::string& name, int rows, int cols);
  Parameter& add_glorot(const std::string& name, int rows, int cols, Rng& rng);
  Parameter& add_uniform(const std::string& name, int rows, int cols, double lo, double hi,
                         Rng& rng);
  Parameter* find(const std::string& name);
  const Parameter* find(const std::string& name) const;
  Parameter& at(const std::string& name);

  std::vector<std::unique_ptr<Parameter>>& all() { return params_; }
  const std::vector<std::unique_ptr<Parameter>>& all() const { return params_; }

  void zero_grad();
  size_t scalar_count() const;

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
};

struct OptimizerSpec {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class AdamOptimizer {
 public:
  explicit AdamOptimizer(OptimizerSpec spec) : spec_(spec) {}
  // Applies one update from the accumulated gradients, then clears them.
  void step(ParamStore& params);
  int steps_taken() const { return t_; }

 private:
  OptimizerSpec spec_;
  int t_ = 0;
};

// Raw little-endian doubles in creation order. The caller records shapes in
// its own manifest; load_blob checks the total element count.
void save_blob(const ParamStore& params, const std::string& path);
void load_blob(ParamStore& params, const std::string& path);

}  // namespace sgvqa::nn
