#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "sgvqa/nn/params.hpp"
#include "sgvqa/nn/tape.hpp"

namespace sgvqa::testing {

struct GradCheckResult {
  bool ok = true;
  double worst_rel_error = 0.0;
  std::string worst_entry;
  int checked = 0;
};

// Central finite differences over every parameter entry against the tape's
// analytic gradients. The forward callback must rebuild the loss from the
// current parameter values on the tape it is given.
inline GradCheckResult gradcheck(nn::ParamStore& params,
                                 const std::function<nn::Var(nn::Tape&)>& forward,
                                 double h = 1e-5, double tol = 1e-3) {
  params.zero_grad();
  {
    nn::Tape tape;
    nn::Var loss = forward(tape);
    tape.backward(loss);
  }
  std::vector<nn::Matrix> analytic;
  for (auto& p : params.all()) analytic.push_back(p->grad);

  auto loss_value = [&]() {
    nn::Tape tape;
    return forward(tape).value()(0, 0);
  };

  GradCheckResult res;
  for (size_t pi = 0; pi < params.all().size(); ++pi) {
    nn::Parameter& p = *params.all()[pi];
    for (int r = 0; r < p.value.rows(); ++r) {
      for (int c = 0; c < p.value.cols(); ++c) {
        const double old = p.value(r, c);
        p.value(r, c) = old + h;
        const double up = loss_value();
        p.value(r, c) = old - h;
        const double down = loss_value();
        p.value(r, c) = old;
        const double numeric = (up - down) / (2.0 * h);
        const double exact = analytic[pi](r, c);
        const double scale = std::max({std::abs(numeric), std::abs(exact), 1e-6});
        const double rel = std::abs(numeric - exact) / scale;
        res.checked++;
        if (rel > res.worst_rel_error) {
          res.worst_rel_error = rel;
          res.worst_entry = p.name + "(" + std::to_string(r) + "," + std::to_string(c) + ")";
        }
        if (rel > tol) res.ok = false;
      }
    }
  }
  params.zero_grad();
  return res;
}

}  // namespace sgvqa::testing
