#include "lemda/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace lemda {

namespace {

thread_local bool g_grad_enabled = true;
thread_local Tape g_tape;

std::shared_ptr<TensorImpl> make_impl(Shape shape, std::vector<double> data, bool requires_grad) {
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = std::move(shape);
  impl->data = std::move(data);
  impl->requires_grad = requires_grad;
  if (requires_grad) impl->grad.assign(impl->data.size(), 0.0);
  return impl;
}

bool track(const Tensor& t) { return g_grad_enabled && t.requires_grad(); }

[[noreturn]] void dim_error(const std::string& op, const Shape& a, const Shape& b) {
  throw std::invalid_argument(op + ": incompatible shapes " + shape_str(a) + " and " + shape_str(b));
}

void check_defined(const Tensor& t, const char* op) {
  if (!t.defined()) throw std::invalid_argument(std::string(op) + ": undefined tensor");
}

}  // namespace

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d <= 0) throw std::invalid_argument("shape dimensions must be positive, got " + shape_str(shape));
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ",";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

Tensor::Tensor(Shape shape, std::vector<double> data, bool requires_grad) {
  const std::size_t n = shape_numel(shape);
  if (n != data.size()) {
    throw std::invalid_argument("tensor data length " + std::to_string(data.size()) +
                                " does not match shape " + shape_str(shape));
  }
  impl_ = make_impl(std::move(shape), std::move(data), requires_grad);
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  const std::size_t n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const std::size_t n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return Tensor(Shape{1}, std::vector<double>{value}, requires_grad);
}

Tensor Tensor::from_rows(const std::vector<std::vector<double>>& rows, bool requires_grad) {
  if (rows.empty()) throw std::invalid_argument("from_rows: no rows");
  const std::size_t cols = rows[0].size();
  std::vector<double> data;
  data.reserve(rows.size() * cols);
  for (const auto& r : rows) {
    if (r.size() != cols) throw std::invalid_argument("from_rows: ragged rows");
    data.insert(data.end(), r.begin(), r.end());
  }
  return Tensor(Shape{static_cast<int>(rows.size()), static_cast<int>(cols)}, std::move(data),
                requires_grad);
}

Tensor Tensor::uniform(Shape shape, double lo, double hi, Rng& rng, bool requires_grad) {
  const std::size_t n = shape_numel(shape);
  std::vector<double> data(n);
  for (auto& v : data) v = rng.uniform(lo, hi);
  return Tensor(std::move(shape), std::move(data), requires_grad);
}

Tensor Tensor::randn(Shape shape, Rng& rng, bool requires_grad) {
  const std::size_t n = shape_numel(shape);
  std::vector<double> data(n);
  for (auto& v : data) v = rng.normal();
  return Tensor(std::move(shape), std::move(data), requires_grad);
}

double Tensor::value() const {
  if (numel() != 1) throw std::invalid_argument("value(): tensor is not scalar, shape " + shape_str(shape()));
  return impl_->data[0];
}

double Tensor::at(std::initializer_list<int> idx) const {
  const Shape& s = impl_->shape;
  if (idx.size() != s.size()) throw std::invalid_argument("at(): rank mismatch");
  std::size_t flat = 0;
  std::size_t k = 0;
  for (int i : idx) {
    if (i < 0 || i >= s[k]) throw std::out_of_range("at(): index out of range");
    flat = flat * static_cast<std::size_t>(s[k]) + static_cast<std::size_t>(i);
    ++k;
  }
  return impl_->data[flat];
}

std::vector<double>& Tensor::grad() {
  if (!impl_->requires_grad) throw std::logic_error("grad(): tensor does not require grad");
  return impl_->grad;
}

const std::vector<double>& Tensor::grad() const {
  if (!impl_->requires_grad) throw std::logic_error("grad(): tensor does not require grad");
  return impl_->grad;
}

void Tensor::zero_grad() {
  if (impl_->requires_grad) std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
}

Tensor Tensor::detach() const {
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = impl_->shape;
  impl->data = impl_->data;  // value copy; detached views are read-mostly
  impl->requires_grad = false;
  impl->name = impl_->name;
  return Tensor(std::move(impl));
}

Tensor Tensor::clone() const {
  return Tensor(impl_->shape, impl_->data, impl_->requires_grad);
}

Tensor& Tensor::set_name(std::string n) {
  impl_->name = std::move(n);
  return *this;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

Tape& Tape::active() { return g_tape; }

void Tape::record(std::shared_ptr<TensorImpl> out, std::function<void()> pull_gradient) {
  entries_.push_back(Entry{std::move(out), std::move(pull_gradient)});
}

void backward(const Tensor& loss) {
  check_defined(loss, "backward");
  if (loss.numel() != 1) {
    throw std::invalid_argument("backward: loss must be scalar, got shape " + shape_str(loss.shape()));
  }
  if (!loss.requires_grad()) {
    throw std::invalid_argument("backward: loss is not connected to the tape");
  }
  loss.impl()->grad[0] += 1.0;
  auto& entries = g_tape.entries_;
  for (auto it = entries.rbegin(); it != entries.rend(); ++it) {
    it->pull();
  }
  g_tape.clear();
}

// ---------------------------------------------------------------------------
// Binary elementwise ops with restricted broadcasting.

namespace {

enum class Broadcast { same, a_scalar, b_scalar, b_over_a, a_over_b };

Broadcast resolve_broadcast(const char* op, const Shape& a, const Shape& b) {
  if (a == b) return Broadcast::same;
  if (shape_numel(a) == 1) return Broadcast::a_scalar;
  if (shape_numel(b) == 1) return Broadcast::b_scalar;
  if (a.size() > b.size() && std::equal(a.end() - static_cast<long>(b.size()), a.end(), b.begin())) {
    return Broadcast::b_over_a;
  }
  if (b.size() > a.size() && std::equal(b.end() - static_cast<long>(a.size()), b.end(), a.begin())) {
    return Broadcast::a_over_b;
  }
  dim_error(op, a, b);
}

template <typename Fwd>
Tensor binary_forward(const char* name, const Tensor& a, const Tensor& b, Fwd f, Broadcast& bc) {
  check_defined(a, name);
  check_defined(b, name);
  bc = resolve_broadcast(name, a.shape(), b.shape());
  const auto& ad = a.data();
  const auto& bd = b.data();
  Shape out_shape;
  std::vector<double> out;
  switch (bc) {
    case Broadcast::same: {
      out_shape = a.shape();
      out.resize(ad.size());
      for (std::size_t i = 0; i < ad.size(); ++i) out[i] = f(ad[i], bd[i]);
      break;
    }
    case Broadcast::a_scalar: {
      out_shape = b.shape();
      out.resize(bd.size());
      for (std::size_t i = 0; i < bd.size(); ++i) out[i] = f(ad[0], bd[i]);
      break;
    }
    case Broadcast::b_scalar: {
      out_shape = a.shape();
      out.resize(ad.size());
      for (std::size_t i = 0; i < ad.size(); ++i) out[i] = f(ad[i], bd[0]);
      break;
    }
    case Broadcast::b_over_a: {
      out_shape = a.shape();
      out.resize(ad.size());
      const std::size_t stride = bd.size();
      for (std::size_t i = 0; i < ad.size(); ++i) out[i] = f(ad[i], bd[i % stride]);
      break;
    }
    case Broadcast::a_over_b: {
      out_shape = b.shape();
      out.resize(bd.size());
      const std::size_t stride = ad.size();
      for (std::size_t i = 0; i < bd.size(); ++i) out[i] = f(ad[i % stride], bd[i]);
      break;
    }
  }
  return Tensor(std::move(out_shape), std::move(out));
}

// Accumulates `contrib[i] * scale(i)` into the (possibly broadcast) operand grad.
void scatter_into(std::vector<double>& dst, const std::vector<double>& contrib, Broadcast bc,
                  bool is_a_side) {
  const bool reduced =
      (is_a_side && (bc == Broadcast::a_scalar || bc == Broadcast::a_over_b)) ||
      (!is_a_side && (bc == Broadcast::b_scalar || bc == Broadcast::b_over_a));
  if (!reduced) {
    for (std::size_t i = 0; i < contrib.size(); ++i) dst[i] += contrib[i];
    return;
  }
  const std::size_t stride = dst.size();
  for (std::size_t i = 0; i < contrib.size(); ++i) dst[i % stride] += contrib[i];
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  Broadcast bc;
  Tensor out = binary_forward("add", a, b, [](double x, double y) { return x + y; }, bc);
  if (track(a) || track(b)) {
    out.impl()->requires_grad = true;
    out.impl()->grad.assign(out.numel(), 0.0);
    auto ai = a.impl();
    auto bi = b.impl();
    auto oimpl = out.impl();
    Tape::active().record(oimpl, [ai, bi, oimpl, bc]() {
      if (ai->requires_grad) scatter_into(ai->grad, oimpl->grad, bc, true);
      if (bi->requires_grad) scatter_into(bi->grad, oimpl->grad, bc, false);
    });
  }
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  Broadcast bc;
  Tensor out = binary_forward("sub", a, b, [](double x, double y) { return x - y; }, bc);
  if (track(a) || track(b)) {
    out.impl()->requires_grad = true;
    out.impl()->grad.assign(out.numel(), 0.0);
    auto ai = a.impl();
    auto bi = b.impl();
    auto oimpl = out.impl();
    Tape::active().record(oimpl, [ai, bi, oimpl, bc]() {
      if (ai->requires_grad) scatter_into(ai->grad, oimpl->grad, bc, true);
      if (bi->requires_grad) {
        std::vector<double> neg(oimpl->grad.size());
        for (std::size_t i = 0; i < neg.size(); ++i) neg[i] = -oimpl->grad[i];
        scatter_into(bi->grad, neg, bc, false);
      }
    });
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  Broadcast bc;
  Tensor out = binary_forward("mul", a, b, [](double x, double y) { return x * y; }, bc);
  if (track(a) || track(b)) {
    out.impl()->requires_grad = true;
    out.impl()->grad.assign(out.numel(), 0.0);
    auto ai = a.impl();
    auto bi = b.impl();
    auto oimpl = out.impl();
    Tape::active().record(oimpl, [ai, bi, oimpl, bc]() {
      const auto& g = oimpl->grad;
      auto other_at = [bc](const std::vector<double>& v, std::size_t i, bool v_is_a) {
        const bool reduced =
            (v_is_a && (bc == Broadcast::a_scalar || bc == Broadcast::a_over_b)) ||
            (!v_is_a && (bc == Broadcast::b_scalar || bc == Broadcast::b_over_a));
        return reduced ? v[i % v.size()] : v[i];
      };
      if (ai->requires_grad) {
        std::vector<double> contrib(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) contrib[i] = g[i] * other_at(bi->data, i, false);
        scatter_into(ai->grad, contrib, bc, true);
      }
      if (bi->requires_grad) {
        std::vector<double> contrib(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) contrib[i] = g[i] * other_at(ai->data, i, true);
        scatter_into(bi->grad, contrib, bc, false);
      }
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// Unary ops.

namespace {

template <typename Fwd, typename Dfn>
Tensor unary_op(const char* name, const Tensor& x, Fwd f, Dfn dfdx) {
  check_defined(x, name);
  const auto& xd = x.data();
  std::vector<double> out(xd.size());
  for (std::size_t i = 0; i < xd.size(); ++i) out[i] = f(xd[i]);
  Tensor o(x.shape(), std::move(out));
  if (track(x)) {
    o.impl()->requires_grad = true;
    o.impl()->grad.assign(o.numel(), 0.0);
    auto xi = x.impl();
    auto oi = o.impl();
    Tape::active().record(oi, [xi, oi, dfdx]() {
      if (!xi->requires_grad) return;
      for (std::size_t i = 0; i < oi->grad.size(); ++i) {
        xi->grad[i] += oi->grad[i] * dfdx(xi->data[i], oi->data[i]);
      }
    });
  }
  return o;
}

}  // namespace

Tensor relu(const Tensor& x) {
  return unary_op(
      "relu", x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor exp(const Tensor& x) {
  return unary_op(
      "exp", x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& x) {
  check_defined(x, "log");
  for (double v : x.data()) {
    if (!(v > 0.0)) throw std::domain_error("log: non-positive input " + std::to_string(v));
  }
  return unary_op(
      "log", x, [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Tensor tanh(const Tensor& x) {
  return unary_op(
      "tanh", x, [](double v) { return std::tanh(v); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor clamp(const Tensor& x, double lo, double hi) {
  if (lo > hi) throw std::invalid_argument("clamp: lo > hi");
  return unary_op(
      "clamp", x, [lo, hi](double v) { return std::min(std::max(v, lo), hi); },
      [lo, hi](double v, double) { return (v >= lo && v <= hi) ? 1.0 : 0.0; });
}

Tensor add_scalar(const Tensor& x, double s) {
  return unary_op(
      "add_scalar", x, [s](double v) { return v + s; }, [](double, double) { return 1.0; });
}

Tensor mul_scalar(const Tensor& x, double s) {
  return unary_op(
      "mul_scalar", x, [s](double v) { return v * s; }, [s](double, double) { return s; });
}

// ---------------------------------------------------------------------------
// Matrix products.

Tensor matmul(const Tensor& a, const Tensor& b) {
  check_defined(a, "matmul");
  check_defined(b, "matmul");
  if (b.rank() != 2 || a.rank() < 2 || a.rank() > 3) dim_error("matmul", a.shape(), b.shape());
  const int k = a.shape().back();
  if (k != b.dim(0)) dim_error("matmul", a.shape(), b.shape());
  const int n = b.dim(1);
  const std::size_t rows = a.numel() / static_cast<std::size_t>(k);

  std::vector<double> out(rows * static_cast<std::size_t>(n), 0.0);
  const auto& ad = a.data();
  const auto& bd = b.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* arow = ad.data() + r * static_cast<std::size_t>(k);
    double* orow = out.data() + r * static_cast<std::size_t>(n);
    for (int i = 0; i < k; ++i) {
      const double av = arow[i];
      if (av == 0.0) continue;
      const double* brow = bd.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(n);
      for (int j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
  Shape out_shape(a.shape());
  out_shape.back() = n;
  Tensor o(std::move(out_shape), std::move(out));

  if (track(a) || track(b)) {
    o.impl()->requires_grad = true;
    o.impl()->grad.assign(o.numel(), 0.0);
    auto ai = a.impl();
    auto bi = b.impl();
    auto oi = o.impl();
    Tape::active().record(oi, [ai, bi, oi, rows, k, n]() {
      const auto& g = oi->grad;
      if (ai->requires_grad) {
        for (std::size_t r = 0; r < rows; ++r) {
          const double* grow = g.data() + r * static_cast<std::size_t>(n);
          double* garow = ai->grad.data() + r * static_cast<std::size_t>(k);
          for (int i = 0; i < k; ++i) {
            const double* brow = bi->data.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(n);
            double acc = 0.0;
            for (int j = 0; j < n; ++j) acc += grow[j] * brow[j];
            garow[i] += acc;
          }
        }
      }
      if (bi->requires_grad) {
        for (std::size_t r = 0; r < rows; ++r) {
          const double* arow = ai->data.data() + r * static_cast<std::size_t>(k);
          const double* grow = g.data() + r * static_cast<std::size_t>(n);
          for (int i = 0; i < k; ++i) {
            const double av = arow[i];
            if (av == 0.0) continue;
            double* gbrow = bi->grad.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(n);
            for (int j = 0; j < n; ++j) gbrow[j] += av * grow[j];
          }
        }
      }
    });
  }
  return o;
}

Tensor bmm(const Tensor& a, const Tensor& b) {
  check_defined(a, "bmm");
  check_defined(b, "bmm");
  if (a.rank() != 3 || b.rank() != 3 || a.dim(0) != b.dim(0) || a.dim(2) != b.dim(1)) {
    dim_error("bmm", a.shape(), b.shape());
  }
  const int B = a.dim(0), nrow = a.dim(1), k = a.dim(2), m = b.dim(2);
  std::vector<double> out(static_cast<std::size_t>(B) * nrow * m, 0.0);
  const auto& ad = a.data();
  const auto& bd = b.data();
  auto aoff = [&](int bb, int i, int j) { return (static_cast<std::size_t>(bb) * nrow + i) * k + j; };
  auto boff = [&](int bb, int i, int j) { return (static_cast<std::size_t>(bb) * k + i) * m + j; };
  auto ooff = [&](int bb, int i, int j) { return (static_cast<std::size_t>(bb) * nrow + i) * m + j; };
  for (int bb = 0; bb < B; ++bb)
    for (int i = 0; i < nrow; ++i)
      for (int kk = 0; kk < k; ++kk) {
        const double av = ad[aoff(bb, i, kk)];
        if (av == 0.0) continue;
        for (int j = 0; j < m; ++j) out[ooff(bb, i, j)] += av * bd[boff(bb, kk, j)];
      }
  Tensor o(Shape{B, nrow, m}, std::move(out));
  if (track(a) || track(b)) {
    o.impl()->requires_grad = true;
    o.impl()->grad.assign(o.numel(), 0.0);
    auto ai = a.impl();
    auto bi = b.impl();
    auto oi = o.impl();
    Tape::active().record(oi, [ai, bi, oi, B, nrow, k, m, aoff, boff, ooff]() {
      const auto& g = oi->grad;
      if (ai->requires_grad) {
        for (int bb = 0; bb < B; ++bb)
          for (int i = 0; i < nrow; ++i)
            for (int kk = 0; kk < k; ++kk) {
              double acc = 0.0;
              for (int j = 0; j < m; ++j) acc += g[ooff(bb, i, j)] * bi->data[boff(bb, kk, j)];
              ai->grad[aoff(bb, i, kk)] += acc;
            }
      }
      if (bi->requires_grad) {
        for (int bb = 0; bb < B; ++bb)
          for (int kk = 0; kk < k; ++kk)
            for (int j = 0; j < m; ++j) {
              double acc = 0.0;
              for (int i = 0; i < nrow; ++i) acc += ai->data[aoff(bb, i, kk)] * g[ooff(bb, i, j)];
              bi->grad[boff(bb, kk, j)] += acc;
            }
      }
    });
  }
  return o;
}

Tensor transpose_12(const Tensor& x) {
  check_defined(x, "transpose_12");
  if (x.rank() != 3) throw std::invalid_argument("transpose_12: expected rank 3, got " + shape_str(x.shape()));
  const int B = x.dim(0), n = x.dim(1), m = x.dim(2);
  std::vector<double> out(x.numel());
  const auto& xd = x.data();
  for (int bb = 0; bb < B; ++bb)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j)
        out[(static_cast<std::size_t>(bb) * m + j) * n + i] = xd[(static_cast<std::size_t>(bb) * n + i) * m + j];
  Tensor o(Shape{B, m, n}, std::move(out));
  if (track(x)) {
    o.impl()->requires_grad = true;
    o.impl()->grad.assign(o.numel(), 0.0);
    auto xi = x.impl();
    auto oi = o.impl();
    Tape::active().record(oi, [xi, oi, B, n, m]() {
      if (!xi->requires_grad) return;
      for (int bb = 0; bb < B; ++bb)
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < m; ++j)
            xi->grad[(static_cast<std::size_t>(bb) * n + i) * m + j] +=
                oi->grad[(static_cast<std::size_t>(bb) * m + j) * n + i];
    });
  }
  return o;
}

// ---------------------------------------------------------------------------
// Reductions.

Tensor sum(const Tensor& x) {
  check_defined(x, "sum");
  double acc = 0.0;
  for (double v : x.data()) acc += v;
  Tensor o = Tensor::scalar(acc);
  if (track(x)) {
    o.impl()->requires_grad = true;
    o.impl()->grad.assign(1, 0.0);
    auto xi = x.impl();
    auto oi = o.impl();
    Tape::active().record(oi, [xi, oi]() {
      if (!xi->requires_grad) return;
      const double g = oi->grad[0];
      for (auto& gv : xi->grad) gv += g;
    });
  }
  return o;
}

Tensor mean(const Tensor& x) {
  check_defined(x, "mean");
  return mul_scalar(sum(x), 1.0 / static_cast<double>(x.numel()));
}

// ---------------------------------------------------------------------------
// Softmax-family ops.

namespace {

// Writes log-softmax of one row; returns nothing. Stable via max subtraction.
void row_log_softmax(const double* x, int c, double* out) {
  double m = x[0];
  for (int j = 1; j < c; ++j) m = std::max(m, x[j]);
  double lse = 0.0;
  for (int j = 0; j < c; ++j) lse += std::exp(x[j] - m);
  lse = m + std::log(lse);
  for (int j = 0; j < c; ++j) out[j] = x[j] - lse;
}

int last_dim(const Tensor& t) { return t.shape().back(); }

}  // namespace

Tensor softmax(const Tensor& logits) {
  check_defined(logits, "softmax");
  if (logits.rank() < 2 || last_dim(logits) < 2) {
    throw std::invalid_argument("softmax: need rank >= 2 with last dim >= 2, got " + shape_str(logits.shape()));
  }
  const int c = last_dim(logits);
  const std::size_t rows = logits.numel() / static_cast<std::size_t>(c);
  std::vector<double> out(logits.numel());
  const auto& xd = logits.data();
  std::vector<double> ls(static_cast<std::size_t>(c));
  for (std::size_t r = 0; r < rows; ++r) {
    row_log_softmax(xd.data() + r * c, c, ls.data());
    for (int j = 0; j < c; ++j) out[r * c + j] = std::exp(ls[static_cast<std::size_t>(j)]);
  }
  Tensor o(logits.shape(), std::move(out));
  if (track(logits)) {
    o.impl()->requires_grad = true;
    o.impl()->grad.assign(o.numel(), 0.0);
    auto xi = logits.impl();
    auto oi = o.impl();
    Tape::active().record(oi, [xi, oi, rows, c]() {
      if (!xi->requires_grad) return;
      for (std::size_t r = 0; r < rows; ++r) {
        const double* p = oi->data.data() + r * c;
        const double* g = oi->grad.data() + r * c;
        double dot = 0.0;
        for (int j = 0; j < c; ++j) dot += g[j] * p[j];
        double* gx = xi->grad.data() + r * c;
        for (int j = 0; j < c; ++j) gx[j] += p[j] * (g[j] - dot);
      }
    });
  }
  return o;
}

Tensor cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
  check_defined(logits, "cross_entropy");
  if (logits.rank() != 2) throw std::invalid_argument("cross_entropy: logits must be rank 2");
  const int b = logits.dim(0), c = logits.dim(1);
  if (static_cast<int>(labels.size()) != b) {
    throw std::invalid_argument("cross_entropy: label count " + std::to_string(labels.size()) +
                                " != batch size " + std::to_string(b));
  }
  for (int y : labels) {
    if (y < 0 || y >= c) throw std::out_of_range("cross_entropy: label " + std::to_string(y) +
                                                 " outside [0," + std::to_string(c) + ")");
  }
  const auto& xd = logits.data();
  std::vector<double> probs(logits.numel());
  double loss = 0.0;
  std::vector<double> ls(static_cast<std::size_t>(c));
  for (int r = 0; r < b; ++r) {
    row_log_softmax(xd.data() + static_cast<std::size_t>(r) * c, c, ls.data());
    loss -= ls[static_cast<std::size_t>(labels[static_cast<std::size_t>(r)])];
    for (int j = 0; j < c; ++j) probs[static_cast<std::size_t>(r) * c + j] = std::exp(ls[static_cast<std::size_t>(j)]);
  }
  loss /= static_cast<double>(b);
  Tensor o = Tensor::scalar(loss);
  if (track(logits)) {
    o.impl()->requires_grad = true;
    o.impl()->grad.assign(1, 0.0);
    auto xi = logits.impl();
    auto oi = o.impl();
    auto lab = labels;
    Tape::active().record(oi, [xi, oi, probs = std::move(probs), lab = std::move(lab), b, c]() {
      if (!xi->requires_grad) return;
      const double g = oi->grad[0] / static_cast<double>(b);
      for (int r = 0; r < b; ++r) {
        for (int j = 0; j < c; ++j) {
          const double onehot = (j == lab[static_cast<std::size_t>(r)]) ? 1.0 : 0.0;
          xi->grad[static_cast<std::size_t>(r) * c + j] +=
              g * (probs[static_cast<std::size_t>(r) * c + j] - onehot);
        }
      }
    });
  }
  return o;
}

Tensor cross_entropy_soft(const Tensor& logits, const Tensor& soft_labels) {
  check_defined(logits, "cross_entropy_soft");
  check_defined(soft_labels, "cross_entropy_soft");
  if (logits.rank() != 2 || soft_labels.shape() != logits.shape()) {
    dim_error("cross_entropy_soft", logits.shape(), soft_labels.shape());
  }
  const int b = logits.dim(0), c = logits.dim(1);
  const auto& xd = logits.data();
  const auto& sd = soft_labels.data();
  std::vector<double> probs(logits.numel());
  double loss = 0.0;
  std::vector<double> ls(static_cast<std::size_t>(c));
  for (int r = 0; r < b; ++r) {
    row_log_softmax(xd.data() + static_cast<std::size_t>(r) * c, c, ls.data());
    for (int j = 0; j < c; ++j) {
      loss -= sd[static_cast<std::size_t>(r) * c + j] * ls[static_cast<std::size_t>(j)];
      probs[static_cast<std::size_t>(r) * c + j] = std::exp(ls[static_cast<std::size_t>(j)]);
    }
  }
  loss /= static_cast<double>(b);
  Tensor o = Tensor::scalar(loss);
  if (track(logits)) {  // soft labels are targets, never differentiated
    o.impl()->requires_grad = true;
    o.impl()->grad.assign(1, 0.0);
    auto xi = logits.impl();
    auto si = soft_labels.impl();
    auto oi = o.impl();
    Tape::active().record(oi, [xi, si, oi, probs = std::move(probs), b, c]() {
      if (!xi->requires_grad) return;
      const double g = oi->grad[0] / static_cast<double>(b);
      for (std::size_t i = 0; i < xi->grad.size(); ++i) {
        xi->grad[i] += g * (probs[i] - si->data[i]);
      }
    });
  }
  return o;
}

Tensor kl_divergence(const Tensor& p_logits, const Tensor& q_logits, const std::vector<bool>& mask) {
  check_defined(p_logits, "kl_divergence");
  check_defined(q_logits, "kl_divergence");
  if (p_logits.rank() != 2 || p_logits.shape() != q_logits.shape()) {
    dim_error("kl_divergence", p_logits.shape(), q_logits.shape());
  }
  const int b = p_logits.dim(0), c = p_logits.dim(1);
  if (static_cast<int>(mask.size()) != b) {
    throw std::invalid_argument("kl_divergence: mask length " + std::to_string(mask.size()) +
                                " != batch size " + std::to_string(b));
  }
  int m = 0;
  for (bool v : mask) m += v ? 1 : 0;
  if (m == 0) return Tensor::scalar(0.0);

  const auto& pd = p_logits.data();
  const auto& qd = q_logits.data();
  std::vector<double> pprob(p_logits.numel(), 0.0);
  std::vector<double> qprob(q_logits.numel(), 0.0);
  double loss = 0.0;
  std::vector<double> lp(static_cast<std::size_t>(c)), lq(static_cast<std::size_t>(c));
  for (int r = 0; r < b; ++r) {
    if (!mask[static_cast<std::size_t>(r)]) continue;
    row_log_softmax(pd.data() + static_cast<std::size_t>(r) * c, c, lp.data());
    row_log_softmax(qd.data() + static_cast<std::size_t>(r) * c, c, lq.data());
    for (int j = 0; j < c; ++j) {
      const double pj = std::exp(lp[static_cast<std::size_t>(j)]);
      pprob[static_cast<std::size_t>(r) * c + j] = pj;
      qprob[static_cast<std::size_t>(r) * c + j] = std::exp(lq[static_cast<std::size_t>(j)]);
      loss += pj * (lp[static_cast<std::size_t>(j)] - lq[static_cast<std::size_t>(j)]);
    }
  }
  loss /= static_cast<double>(m);
  Tensor o = Tensor::scalar(loss);
  if (track(q_logits)) {  // p side is a constant target
    o.impl()->requires_grad = true;
    o.impl()->grad.assign(1, 0.0);
    auto qi = q_logits.impl();
    auto oi = o.impl();
    auto msk = mask;
    Tape::active().record(oi, [qi, oi, pprob = std::move(pprob), qprob = std::move(qprob),
                               msk = std::move(msk), b, c, m]() {
      if (!qi->requires_grad) return;
      const double g = oi->grad[0] / static_cast<double>(m);
      for (int r = 0; r < b; ++r) {
        if (!msk[static_cast<std::size_t>(r)]) continue;
        for (int j = 0; j < c; ++j) {
          const std::size_t k = static_cast<std::size_t>(r) * c + j;
          qi->grad[k] += g * (qprob[k] - pprob[k]);
        }
      }
    });
  }
  return o;
}

// ---------------------------------------------------------------------------
// Shape plumbing.

Tensor reshape(const Tensor& x, Shape new_shape) {
  check_defined(x, "reshape");
  if (shape_numel(new_shape) != x.numel()) {
    dim_error("reshape", x.shape(), new_shape);
  }
  Tensor o(std::move(new_shape), x.data());
  if (track(x)) {
    o.impl()->requires_grad = true;
    o.impl()->grad.assign(o.numel(), 0.0);
    auto xi = x.impl();
    auto oi = o.impl();
    Tape::active().record(oi, [xi, oi]() {
      if (!xi->requires_grad) return;
      for (std::size_t i = 0; i < oi->grad.size(); ++i) xi->grad[i] += oi->grad[i];
    });
  }
  return o;
}

Tensor permute_rows(const Tensor& x, const std::vector<int>& perm) {
  check_defined(x, "permute_rows");
  if (x.rank() != 2) throw std::invalid_argument("permute_rows: expected rank 2, got " + shape_str(x.shape()));
  const int b = x.dim(0), d = x.dim(1);
  if (static_cast<int>(perm.size()) != b) {
    throw std::invalid_argument("permute_rows: permutation length " + std::to_string(perm.size()) +
                                " != batch size " + std::to_string(b));
  }
  std::vector<double> out(x.numel());
  for (int r = 0; r < b; ++r) {
    const int src = perm[static_cast<std::size_t>(r)];
    if (src < 0 || src >= b) throw std::out_of_range("permute_rows: index out of range");
    std::copy_n(x.data().data() + static_cast<std::size_t>(src) * d, d,
                out.data() + static_cast<std::size_t>(r) * d);
  }
  Tensor o(x.shape(), std::move(out));
  if (track(x)) {
    o.impl()->requires_grad = true;
    o.impl()->grad.assign(o.numel(), 0.0);
    auto xi = x.impl();
    auto oi = o.impl();
    auto p = perm;
    Tape::active().record(oi, [xi, oi, p = std::move(p), b, d]() {
      if (!xi->requires_grad) return;
      for (int r = 0; r < b; ++r) {
        const int src = p[static_cast<std::size_t>(r)];
        for (int j = 0; j < d; ++j) {
          xi->grad[static_cast<std::size_t>(src) * d + j] += oi->grad[static_cast<std::size_t>(r) * d + j];
        }
      }
    });
  }
  return o;
}

Tensor concat_cols(const std::vector<Tensor>& xs) {
  if (xs.empty()) throw std::invalid_argument("concat_cols: empty input list");
  const int b = xs[0].dim(0);
  int total = 0;
  bool any_grad = false;
  for (const auto& x : xs) {
    check_defined(x, "concat_cols");
    if (x.rank() != 2 || x.dim(0) != b) dim_error("concat_cols", xs[0].shape(), x.shape());
    total += x.dim(1);
    any_grad = any_grad || track(x);
  }
  std::vector<double> out(static_cast<std::size_t>(b) * total);
  int off = 0;
  for (const auto& x : xs) {
    const int d = x.dim(1);
    for (int r = 0; r < b; ++r) {
      std::copy_n(x.data().data() + static_cast<std::size_t>(r) * d, d,
                  out.data() + static_cast<std::size_t>(r) * total + off);
    }
    off += d;
  }
  Tensor o(Shape{b, total}, std::move(out));
  if (any_grad) {
    o.impl()->requires_grad = true;
    o.impl()->grad.assign(o.numel(), 0.0);
    std::vector<std::shared_ptr<TensorImpl>> inputs;
    inputs.reserve(xs.size());
    for (const auto& x : xs) inputs.push_back(x.impl());
    auto oi = o.impl();
    Tape::active().record(oi, [inputs = std::move(inputs), oi, b, total]() {
      int off2 = 0;
      for (const auto& xi : inputs) {
        const int d = xi->shape[1];
        if (xi->requires_grad) {
          for (int r = 0; r < b; ++r)
            for (int j = 0; j < d; ++j)
              xi->grad[static_cast<std::size_t>(r) * d + j] +=
                  oi->grad[static_cast<std::size_t>(r) * total + off2 + j];
        }
        off2 += d;
      }
    });
  }
  return o;
}

Tensor slice_cols(const Tensor& x, int start, int len) {
  check_defined(x, "slice_cols");
  if (x.rank() != 2) throw std::invalid_argument("slice_cols: expected rank 2, got " + shape_str(x.shape()));
  const int b = x.dim(0), d = x.dim(1);
  if (start < 0 || len <= 0 || start + len > d) {
    throw std::invalid_argument("slice_cols: slice [" + std::to_string(start) + "," +
                                std::to_string(start + len) + ") outside width " + std::to_string(d));
  }
  std::vector<double> out(static_cast<std::size_t>(b) * len);
  for (int r = 0; r < b; ++r) {
    std::copy_n(x.data().data() + static_cast<std::size_t>(r) * d + start, len,
                out.data() + static_cast<std::size_t>(r) * len);
  }
  Tensor o(Shape{b, len}, std::move(out));
  if (track(x)) {
    o.impl()->requires_grad = true;
    o.impl()->grad.assign(o.numel(), 0.0);
    auto xi = x.impl();
    auto oi = o.impl();
    Tape::active().record(oi, [xi, oi, b, d, start, len]() {
      if (!xi->requires_grad) return;
      for (int r = 0; r < b; ++r)
        for (int j = 0; j < len; ++j)
          xi->grad[static_cast<std::size_t>(r) * d + start + j] +=
              oi->grad[static_cast<std::size_t>(r) * len + j];
    });
  }
  return o;
}

Tensor stack_tokens(const std::vector<Tensor>& xs) {
  if (xs.empty()) throw std::invalid_argument("stack_tokens: empty input list");
  const int b = xs[0].dim(0), d = xs[0].dim(1);
  bool any_grad = false;
  for (const auto& x : xs) {
    check_defined(x, "stack_tokens");
    if (x.rank() != 2 || x.dim(0) != b || x.dim(1) != d) dim_error("stack_tokens", xs[0].shape(), x.shape());
    any_grad = any_grad || track(x);
  }
  const int n = static_cast<int>(xs.size());
  std::vector<double> out(static_cast<std::size_t>(b) * n * d);
  for (int t = 0; t < n; ++t)
    for (int r = 0; r < b; ++r)
      std::copy_n(xs[static_cast<std::size_t>(t)].data().data() + static_cast<std::size_t>(r) * d, d,
                  out.data() + (static_cast<std::size_t>(r) * n + t) * d);
  Tensor o(Shape{b, n, d}, std::move(out));
  if (any_grad) {
    o.impl()->requires_grad = true;
    o.impl()->grad.assign(o.numel(), 0.0);
    std::vector<std::shared_ptr<TensorImpl>> inputs;
    for (const auto& x : xs) inputs.push_back(x.impl());
    auto oi = o.impl();
    Tape::active().record(oi, [inputs = std::move(inputs), oi, b, n, d]() {
      for (int t = 0; t < n; ++t) {
        const auto& xi = inputs[static_cast<std::size_t>(t)];
        if (!xi->requires_grad) continue;
        for (int r = 0; r < b; ++r)
          for (int j = 0; j < d; ++j)
            xi->grad[static_cast<std::size_t>(r) * d + j] +=
                oi->grad[(static_cast<std::size_t>(r) * n + t) * d + j];
      }
    });
  }
  return o;
}

std::vector<Tensor> unstack_tokens(const Tensor& x) {
  check_defined(x, "unstack_tokens");
  if (x.rank() != 3) throw std::invalid_argument("unstack_tokens: expected rank 3, got " + shape_str(x.shape()));
  const int b = x.dim(0), n = x.dim(1), d = x.dim(2);
  std::vector<Tensor> outs;
  outs.reserve(static_cast<std::size_t>(n));
  for (int t = 0; t < n; ++t) {
    std::vector<double> out(static_cast<std::size_t>(b) * d);
    for (int r = 0; r < b; ++r)
      std::copy_n(x.data().data() + (static_cast<std::size_t>(r) * n + t) * d, d,
                  out.data() + static_cast<std::size_t>(r) * d);
    Tensor o(Shape{b, d}, std::move(out));
    if (track(x)) {
      o.impl()->requires_grad = true;
      o.impl()->grad.assign(o.numel(), 0.0);
      auto xi = x.impl();
      auto oi = o.impl();
      Tape::active().record(oi, [xi, oi, b, n, d, t]() {
        if (!xi->requires_grad) return;
        for (int r = 0; r < b; ++r)
          for (int j = 0; j < d; ++j)
            xi->grad[(static_cast<std::size_t>(r) * n + t) * d + j] +=
                oi->grad[static_cast<std::size_t>(r) * d + j];
      });
    }
    outs.push_back(std::move(o));
  }
  return outs;
}

Tensor split_heads(const Tensor& x, int heads) {
  check_defined(x, "split_heads");
  if (x.rank() != 3 || heads <= 0 || x.dim(2) % heads != 0) {
    throw std::invalid_argument("split_heads: shape " + shape_str(x.shape()) + " not divisible into " +
                                std::to_string(heads) + " heads");
  }
  const int b = x.dim(0), n = x.dim(1), d = x.dim(2), dh = d / heads;
  std::vector<double> out(x.numel());
  const auto& xd = x.data();
  auto src = [&](int bb, int i, int h, int j) {
    return (static_cast<std::size_t>(bb) * n + i) * d + static_cast<std::size_t>(h) * dh + j;
  };
  auto dst = [&](int bb, int h, int i, int j) {
    return ((static_cast<std::size_t>(bb) * heads + h) * n + i) * dh + j;
  };
  for (int bb = 0; bb < b; ++bb)
    for (int h = 0; h < heads; ++h)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < dh; ++j) out[dst(bb, h, i, j)] = xd[src(bb, i, h, j)];
  Tensor o(Shape{b * heads, n, dh}, std::move(out));
  if (track(x)) {
    o.impl()->requires_grad = true;
    o.impl()->grad.assign(o.numel(), 0.0);
    auto xi = x.impl();
    auto oi = o.impl();
    Tape::active().record(oi, [xi, oi, b, n, heads, dh, src, dst]() {
      if (!xi->requires_grad) return;
      for (int bb = 0; bb < b; ++bb)
        for (int h = 0; h < heads; ++h)
          for (int i = 0; i < n; ++i)
            for (int j = 0; j < dh; ++j) xi->grad[src(bb, i, h, j)] += oi->grad[dst(bb, h, i, j)];
    });
  }
  return o;
}

Tensor merge_heads(const Tensor& x, int heads) {
  check_defined(x, "merge_heads");
  if (x.rank() != 3 || heads <= 0 || x.dim(0) % heads != 0) {
    throw std::invalid_argument("merge_heads: shape " + shape_str(x.shape()) + " not divisible by " +
                                std::to_string(heads) + " heads");
  }
  const int b = x.dim(0) / heads, n = x.dim(1), dh = x.dim(2), d = dh * heads;
  std::vector<double> out(x.numel());
  const auto& xd = x.data();
  auto src = [&](int bb, int h, int i, int j) {
    return ((static_cast<std::size_t>(bb) * heads + h) * n + i) * dh + j;
  };
  auto dst = [&](int bb, int i, int h, int j) {
    return (static_cast<std::size_t>(bb) * n + i) * d + static_cast<std::size_t>(h) * dh + j;
  };
  for (int bb = 0; bb < b; ++bb)
    for (int h = 0; h < heads; ++h)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < dh; ++j) out[dst(bb, i, h, j)] = xd[src(bb, h, i, j)];
  Tensor o(Shape{b, n, d}, std::move(out));
  if (track(x)) {
    o.impl()->requires_grad = true;
    o.impl()->grad.assign(o.numel(), 0.0);
    auto xi = x.impl();
    auto oi = o.impl();
    Tape::active().record(oi, [xi, oi, b, n, heads, dh, src, dst]() {
      if (!xi->requires_grad) return;
      for (int bb = 0; bb < b; ++bb)
        for (int h = 0; h < heads; ++h)
          for (int i = 0; i < n; ++i)
            for (int j = 0; j < dh; ++j) xi->grad[src(bb, h, i, j)] += oi->grad[dst(bb, i, h, j)];
    });
  }
  return o;
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  check_defined(x, "layer_norm");
  check_defined(gamma, "layer_norm");
  check_defined(beta, "layer_norm");
  const int d = last_dim(x);
  if (x.rank() < 2 || gamma.shape() != Shape{d} || beta.shape() != Shape{d}) {
    dim_error("layer_norm", x.shape(), gamma.shape());
  }
  const std::size_t rows = x.numel() / static_cast<std::size_t>(d);
  const auto& xd = x.data();
  const auto& gd = gamma.data();
  const auto& bd = beta.data();
  std::vector<double> out(x.numel());
  std::vector<double> xhat(x.numel());
  std::vector<double> inv_sigma(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = xd.data() + r * d;
    double mu = 0.0;
    for (int j = 0; j < d; ++j) mu += row[j];
    mu /= d;
    double var = 0.0;
    for (int j = 0; j < d; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= d;
    const double is = 1.0 / std::sqrt(var + eps);
    inv_sigma[r] = is;
    for (int j = 0; j < d; ++j) {
      const double xh = (row[j] - mu) * is;
      xhat[r * d + j] = xh;
      out[r * d + j] = gd[static_cast<std::size_t>(j)] * xh + bd[static_cast<std::size_t>(j)];
    }
  }
  Tensor o(x.shape(), std::move(out));
  if (track(x) || track(gamma) || track(beta)) {
    o.impl()->requires_grad = true;
    o.impl()->grad.assign(o.numel(), 0.0);
    auto xi = x.impl();
    auto gi = gamma.impl();
    auto bi = beta.impl();
    auto oi = o.impl();
    Tape::active().record(oi, [xi, gi, bi, oi, xhat = std::move(xhat),
                               inv_sigma = std::move(inv_sigma), rows, d]() {
      const auto& g = oi->grad;
      for (std::size_t r = 0; r < rows; ++r) {
        const double* grow = g.data() + r * d;
        const double* xh = xhat.data() + r * d;
        if (bi->requires_grad) {
          for (int j = 0; j < d; ++j) bi->grad[static_cast<std::size_t>(j)] += grow[j];
        }
        if (gi->requires_grad) {
          for (int j = 0; j < d; ++j) gi->grad[static_cast<std::size_t>(j)] += grow[j] * xh[j];
        }
        if (xi->requires_grad) {
          double mean_gg = 0.0, mean_ggx = 0.0;
          for (int j = 0; j < d; ++j) {
            const double gg = grow[j] * gi->data[static_cast<std::size_t>(j)];
            mean_gg += gg;
            mean_ggx += gg * xh[j];
          }
          mean_gg /= d;
          mean_ggx /= d;
          for (int j = 0; j < d; ++j) {
            const double gg = grow[j] * gi->data[static_cast<std::size_t>(j)];
            xi->grad[r * d + j] += inv_sigma[r] * (gg - mean_gg - xh[j] * mean_ggx);
          }
        }
      }
    });
  }
  return o;
}

Tensor embedding_mean(const Tensor& table, const std::vector<std::vector<int>>& tokens) {
  check_defined(table, "embedding_mean");
  if (table.rank() != 2) throw std::invalid_argument("embedding_mean: table must be rank 2");
  const int vocab = table.dim(0), d = table.dim(1);
  const int b = static_cast<int>(tokens.size());
  if (b == 0) throw std::invalid_argument("embedding_mean: empty batch");
  std::vector<double> out(static_cast<std::size_t>(b) * d, 0.0);
  for (int r = 0; r < b; ++r) {
    const auto& seq = tokens[static_cast<std::size_t>(r)];
    if (seq.empty()) throw std::invalid_argument("embedding_mean: empty token sequence at row " + std::to_string(r));
    for (int tok : seq) {
      if (tok < 0 || tok >= vocab) {
        throw std::out_of_range("embedding_mean: token " + std::to_string(tok) + " outside vocab " +
                                std::to_string(vocab));
      }
      for (int j = 0; j < d; ++j)
        out[static_cast<std::size_t>(r) * d + j] += table.data()[static_cast<std::size_t>(tok) * d + j];
    }
    const double inv = 1.0 / static_cast<double>(seq.size());
    for (int j = 0; j < d; ++j) out[static_cast<std::size_t>(r) * d + j] *= inv;
  }
  Tensor o(Shape{b, d}, std::move(out));
  if (track(table)) {
    o.impl()->requires_grad = true;
    o.impl()->grad.assign(o.numel(), 0.0);
    auto ti = table.impl();
    auto oi = o.impl();
    auto toks = tokens;
    Tape::active().record(oi, [ti, oi, toks = std::move(toks), d]() {
      if (!ti->requires_grad) return;
      for (std::size_t r = 0; r < toks.size(); ++r) {
        const double inv = 1.0 / static_cast<double>(toks[r].size());
        for (int tok : toks[r]) {
          for (int j = 0; j < d; ++j)
            ti->grad[static_cast<std::size_t>(tok) * d + j] += inv * oi->grad[r * d + j];
        }
      }
    });
  }
  return o;
}

Tensor dropout(const Tensor& x, double p, Rng& rng, bool train) {
  check_defined(x, "dropout");
  if (p < 0.0 || p >= 1.0) throw std::invalid_argument("dropout: p must lie in [0,1)");
  if (!train || p == 0.0) return x;
  const double scale = 1.0 / (1.0 - p);
  std::vector<double> mask(x.numel());
  for (auto& m : mask) m = rng.bernoulli(p) ? 0.0 : scale;
  std::vector<double> out(x.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.data()[i] * mask[i];
  Tensor o(x.shape(), std::move(out));
  if (track(x)) {
    o.impl()->requires_grad = true;
    o.impl()->grad.assign(o.numel(), 0.0);
    auto xi = x.impl();
    auto oi = o.impl();
    Tape::active().record(oi, [xi, oi, mask = std::move(mask)]() {
      if (!xi->requires_grad) return;
      for (std::size_t i = 0; i < oi->grad.size(); ++i) xi->grad[i] += oi->grad[i] * mask[i];
    });
  }
  return o;
}

Tensor gaussian_sample(const Tensor& mu, const Tensor& log_var, Rng& rng) {
  check_defined(mu, "gaussian_sample");
  check_defined(log_var, "gaussian_sample");
  if (mu.shape() != log_var.shape()) dim_error("gaussian_sample", mu.shape(), log_var.shape());
  Tensor eps = Tensor::randn(mu.shape(), rng);
  Tensor std_dev = exp(mul_scalar(clamp(log_var, -30.0, 30.0), 0.5));
  return add(mu, mul(std_dev, eps));
}

Tensor one_hot(const std::vector<int>& labels, int num_classes) {
  if (num_classes < 2) throw std::invalid_argument("one_hot: need at least 2 classes");
  std::vector<double> out(labels.size() * static_cast<std::size_t>(num_classes), 0.0);
  for (std::size_t r = 0; r < labels.size(); ++r) {
    const int y = labels[r];
    if (y < 0 || y >= num_classes) throw std::out_of_range("one_hot: label out of range");
    out[r * static_cast<std::size_t>(num_classes) + static_cast<std::size_t>(y)] = 1.0;
  }
  return Tensor(Shape{static_cast<int>(labels.size()), num_classes}, std::move(out));
}

bool all_finite(const Tensor& x) {
  for (double v : x.data()) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace lemda
