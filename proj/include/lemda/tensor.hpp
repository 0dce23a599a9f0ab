#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <string>
#include <vector>

#include "lemda/rng.hpp"

namespace lemda {

using Shape = std::vector<int>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

struct TensorImpl {
  Shape shape;
  std::vector<double> data;
  bool requires_grad = false;
  std::vector<double> grad;  // same length as data when requires_grad
  std::string name;
};

// Dense double tensor with value semantics over a shared payload.
// Gradients accumulate into `grad` when backward() runs over the tape.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> data, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  static Tensor from_rows(const std::vector<std::vector<double>>& rows, bool requires_grad = false);
  static Tensor uniform(Shape shape, double lo, double hi, Rng& rng, bool requires_grad = false);
  static Tensor randn(Shape shape, Rng& rng, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  int rank() const { return static_cast<int>(impl_->shape.size()); }
  int dim(int i) const { return impl_->shape[static_cast<std::size_t>(i)]; }
  std::size_t numel() const { return impl_->data.size(); }

  std::vector<double>& data() { return impl_->data; }
  const std::vector<double>& data() const { return impl_->data; }
  double value() const;                               // scalar tensors only
  double at(std::initializer_list<int> idx) const;    // row-major indexing

  bool requires_grad() const { return impl_->requires_grad; }
  std::vector<double>& grad();
  const std::vector<double>& grad() const;
  void zero_grad();

  Tensor detach() const;  // shares the payload, drops grad tracking
  Tensor clone() const;   // deep copy, fresh leaf

  const std::string& name() const { return impl_->name; }
  Tensor& set_name(std::string n);

  const std::shared_ptr<TensorImpl>& impl() const { return impl_; }

 private:
  explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<TensorImpl> impl_;
};

// ---------------------------------------------------------------------------
// Tape: ordered record of differentiable operations for one forward pass.
// backward() replays it in exact reverse order and then clears it.

bool grad_enabled();

struct NoGradGuard {
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

class Tape {
 public:
  static Tape& active();

  void record(std::shared_ptr<TensorImpl> out, std::function<void()> pull_gradient);
  std::size_t size() const { return entries_.size(); }
  void clear() { entries_.clear(); }

 private:
  struct Entry {
    std::shared_ptr<TensorImpl> out;
    std::function<void()> pull;
  };
  std::vector<Entry> entries_;
  friend void backward(const Tensor& loss);
};

// Accumulates gradients of `loss` into every requires_grad ancestor, then
// clears the tape. `loss` must be a tracked scalar.
void backward(const Tensor& loss);

// ---------------------------------------------------------------------------
// Operations. Binary elementwise ops broadcast a scalar operand or an operand
// whose shape is a trailing suffix of the other's (broadcast over leading
// batch dims); anything else is a dimension error.

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor relu(const Tensor& x);  // relu'(0) == 0
Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);  // domain error on x <= 0
Tensor tanh(const Tensor& x);
Tensor clamp(const Tensor& x, double lo, double hi);
Tensor add_scalar(const Tensor& x, double s);
Tensor mul_scalar(const Tensor& x, double s);

// lhs of rank 2 or 3 against a rank-2 rhs; leading dims of lhs are flattened.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor bmm(const Tensor& a, const Tensor& b);       // [B,n,k] x [B,k,m]
Tensor transpose_12(const Tensor& x);               // [B,n,m] -> [B,m,n]

Tensor sum(const Tensor& x);   // -> scalar
Tensor mean(const Tensor& x);  // -> scalar

Tensor softmax(const Tensor& logits);  // over the last dim, max-subtracted
Tensor cross_entropy(const Tensor& logits, const std::vector<int>& labels);
Tensor cross_entropy_soft(const Tensor& logits, const Tensor& soft_labels);

// Mean KL(softmax(p) || softmax(q)) over rows where mask is true. Exact zero
// for an all-false mask. The p side is treated as a constant target; gradient
// flows only into q_logits.
Tensor kl_divergence(const Tensor& p_logits, const Tensor& q_logits, const std::vector<bool>& mask);

Tensor reshape(const Tensor& x, Shape new_shape);
Tensor permute_rows(const Tensor& x, const std::vector<int>& perm);  // [b,d] -> [b,d]
Tensor concat_cols(const std::vector<Tensor>& xs);        // N x [b,di] -> [b,sum di]
Tensor slice_cols(const Tensor& x, int start, int len);   // [b,d] -> [b,len]
Tensor stack_tokens(const std::vector<Tensor>& xs);       // N x [b,d] -> [b,N,d]
std::vector<Tensor> unstack_tokens(const Tensor& x);      // [b,N,d] -> N x [b,d]
Tensor split_heads(const Tensor& x, int heads);           // [b,n,h*dh] -> [b*h,n,dh]
Tensor merge_heads(const Tensor& x, int heads);           // [b*h,n,dh] -> [b,n,h*dh]

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-5);

// Mean of embedding rows per token sequence; rows must be non-empty.
Tensor embedding_mean(const Tensor& table, const std::vector<std::vector<int>>& tokens);

// Inverted dropout: scales by 1/(1-p) at train time, identity otherwise.
Tensor dropout(const Tensor& x, double p, Rng& rng, bool train);

// Reparameterized sample mu + exp(log_var/2) * eps, eps ~ N(0, I).
// log_var is clamped to [-30, 30] before exponentiation.
Tensor gaussian_sample(const Tensor& mu, const Tensor& log_var, Rng& rng);

Tensor one_hot(const std::vector<int>& labels, int num_classes);

bool all_finite(const Tensor& x);

}  // namespace lemda
