#include "lemda/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace lemda {

OptimizerKind optimizer_kind_from_string(const std::string& s) {
  if (s == "sgd") return OptimizerKind::sgd;
  if (s == "adam") return OptimizerKind::adam;
  throw std::invalid_argument("unknown optimizer kind: " + s);
}

Optimizer Optimizer::sgd(double lr) { return Optimizer(OptimizerKind::sgd, lr, 0, 0, 0); }

Optimizer Optimizer::adam(double lr, double beta1, double beta2, double eps) {
  return Optimizer(OptimizerKind::adam, lr, beta1, beta2, eps);
}

Optimizer Optimizer::make(OptimizerKind kind, double lr) {
  return kind == OptimizerKind::sgd ? sgd(lr) : adam(lr);
}

void Optimizer::attach(ParameterSet params) {
  if (!params_.empty()) throw std::logic_error("Optimizer::attach: parameters already registered");
  params_ = std::move(params);
  for (const auto& p : params_) {
    if (!p.tensor.defined() || !p.tensor.requires_grad()) {
      throw std::invalid_argument("Optimizer::attach: parameter '" + p.name + "' does not require grad");
    }
  }
  if (kind_ == OptimizerKind::adam) {
    m_.resize(params_.size());
    v_.resize(params_.size());
    for (std::size_t i = 0; i < params_.size(); ++i) {
      m_[i].assign(params_[i].tensor.numel(), 0.0);
      v_[i].assign(params_[i].tensor.numel(), 0.0);
    }
  }
}

void Optimizer::step() {
  ++steps_;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = params_[i];
    auto& data = p.tensor.data();
    const auto& grad = p.tensor.grad();
    if (grad.size() != data.size()) {
      throw std::logic_error("Optimizer::step: missing gradient for parameter '" + p.name + "'");
    }
    if (kind_ == OptimizerKind::sgd) {
      for (std::size_t j = 0; j < data.size(); ++j) data[j] -= lr_ * grad[j];
    } else {
      const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(steps_));
      const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(steps_));
      auto& m = m_[i];
      auto& v = v_[i];
      for (std::size_t j = 0; j < data.size(); ++j) {
        m[j] = beta1_ * m[j] + (1.0 - beta1_) * grad[j];
        v[j] = beta2_ * v[j] + (1.0 - beta2_) * grad[j] * grad[j];
        const double mhat = m[j] / bc1;
        const double vhat = v[j] / bc2;
        data[j] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
      }
    }
    p.tensor.zero_grad();
  }
}

void Optimizer::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

}  // namespace lemda
