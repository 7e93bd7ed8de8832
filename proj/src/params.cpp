#include "sgvqa/nn/params.hpp"

#include <cmath>
#include <fstream>

#include "sgvqa/util.hpp"

namespace sgvqa::nn {

Parameter& ParamStore::add(const std::string& name, int rows, int cols) {
  if (find(name)) fail("ParamStore: duplicate parameter '", name, "'");
  params_.push_back(std::make_unique<Parameter>(name, rows, cols));
  return *params_.back();
}

Parameter& ParamStore::add_glorot(const std::string& name, int rows, int cols, Rng& rng) {
  Parameter& p = add(name, rows, cols);
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) p.value(r, c) = rng.uniform(-limit, limit);
  return p;
}

Parameter& ParamStore::add_uniform(const std::string& name, int rows, int cols, double lo,
                                   double hi, Rng& rng) {
  Parameter& p = add(name, rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) p.value(r, c) = rng.uniform(lo, hi);
  return p;
}

Parameter* ParamStore::find(const std::string& name) {
  for (auto& p : params_)
    if (p->name == name) return p.get();
  return nullptr;
}

const Parameter* ParamStore::find(const std::string& name) const {
  for (const auto& p : params_)
    if (p->name == name) return p.get();
  return nullptr;
}

Parameter& ParamStore::at(const std::string& name) {
  Parameter* p = find(name);
  if (!p) fail("ParamStore: no parameter '", name, "'");
  return *p;
}

void ParamStore::zero_grad() {
  for (auto& p : params_) p->grad.setZero();
}

size_t ParamStore::scalar_count() const {
  size_t n = 0;
  for (const auto& p : params_) n += static_cast<size_t>(p->value.size());
  return n;
}

void AdamOptimizer::step(ParamStore& params) {
  ++t_;
  const double bc1 = 1.0 - std::pow(spec_.beta1, t_);
  const double bc2 = 1.0 - std::pow(spec_.beta2, t_);
  for (auto& p : params.all()) {
    p->adam_m = spec_.beta1 * p->adam_m + (1.0 - spec_.beta1) * p->grad;
    p->adam_v = spec_.beta2 * p->adam_v.array() + (1.0 - spec_.beta2) * p->grad.array().square();
    p->value.array() -= spec_.learning_rate * (p->adam_m.array() / bc1) /
                        ((p->adam_v.array() / bc2).sqrt() + spec_.epsilon);
    p->grad.setZero();
  }
}

void save_blob(const ParamStore& params, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("save_blob: cannot open '", path, "'");
  for (const auto& p : params.all()) {
    // Row-major element order, independent of Eigen's internal layout.
    for (int r = 0; r < p->value.rows(); ++r)
      for (int c = 0; c < p->value.cols(); ++c) {
        const double v = p->value(r, c);
        out.write(reinterpret_cast<const char*>(&v), sizeof(double));
      }
  }
  if (!out) fail("save_blob: write failed for '", path, "'");
}

void load_blob(ParamStore& params, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("load_blob: cannot open '", path, "'");
  for (auto& p : params.all()) {
    for (int r = 0; r < p->value.rows(); ++r)
      for (int c = 0; c < p->value.cols(); ++c) {
        double v = 0.0;
        in.read(reinterpret_cast<char*>(&v), sizeof(double));
        if (!in) fail("load_blob: '", path, "' truncated at parameter '", p->name, "'");
        p->value(r, c) = v;
      }
  }
  char extra = 0;
  if (in.read(&extra, 1)) fail("load_blob: '", path, "' has trailing bytes");
}

}  // namespace sgvqa::nn
