#pragma once

// Central finite-difference gradient oracle for tests. Kept independent of
// the tape: it only re-evaluates a loss closure under perturbed values.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "lemda/optim.hpp"
#include "lemda/tensor.hpp"

namespace lemda::testing {

inline std::vector<double> finite_difference(Tensor& x, const std::function<double()>& eval,
                                             double h = 1e-5) {
  std::vector<double> grad(x.numel());
  auto& data = x.data();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double keep = data[i];
    data[i] = keep + h;
    const double up = eval();
    data[i] = keep - h;
    const double down = eval();
    data[i] = keep;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

// Relative error with an absolute floor so near-zero gradients compare on an
// absolute scale.
inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({1e-6, std::abs(a), std::abs(b)});
}

inline double max_rel_err(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, rel_err(a[i], b[i]));
  return worst;
}

// Builds the loss once with tracking, runs backward, then checks every
// parameter's accumulated gradient against finite differences of the same
// builder evaluated untracked. The builder must be a deterministic function
// of the parameter values (re-seed any rng it uses on every call).
inline double gradcheck_params(ParameterSet params, const std::function<Tensor()>& loss_builder,
                               double h = 1e-5) {
  for (auto& p : params) p.tensor.zero_grad();
  Tensor loss = loss_builder();
  backward(loss);
  auto eval = [&]() {
    NoGradGuard ng;
    return loss_builder().value();
  };
  double worst = 0.0;
  for (auto& p : params) {
    const std::vector<double> fd = finite_difference(p.tensor, eval, h);
    worst = std::max(worst, max_rel_err(p.tensor.grad(), fd));
  }
  return worst;
}

// Convenience for checking the gradient w.r.t. a single leaf input.
inline double gradcheck_input(Tensor& input, const std::function<Tensor()>& loss_builder,
                              double h = 1e-5) {
  return gradcheck_params({{"input", input}}, loss_builder, h);
}

}  // namespace lemda::testing
