#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lemda/tensor.hpp"

namespace lemda {

struct Param {
  std::string name;
  Tensor tensor;
};

using ParameterSet = std::vector<Param>;

enum class OptimizerKind { sgd, adam };

OptimizerKind optimizer_kind_from_string(const std::string& s);

// Owns update state for one disjoint parameter set. step() applies the rule
// and zeroes gradients; parameters not registered here are never touched.
class Optimizer {
 public:
  static Optimizer sgd(double lr);
  static Optimizer adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  static Optimizer make(OptimizerKind kind, double lr);

  void attach(ParameterSet params);
  void step();
  void zero_grad();

  std::int64_t step_count() const { return steps_; }
  const ParameterSet& params() const { return params_; }

 private:
  Optimizer(OptimizerKind kind, double lr, double b1, double b2, double eps)
      : kind_(kind), lr_(lr), beta1_(b1), beta2_(b2), eps_(eps) {}

  OptimizerKind kind_;
  double lr_, beta1_, beta2_, eps_;
  ParameterSet params_;
  std::vector<std::vector<double>> m_, v_;  // Adam moments
  std::int64_t steps_ = 0;
};

}  // namespace lemda
