#include "tdm/autodiff.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace tdm::ad {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;

thread_local Tape* g_active_tape = nullptr;
thread_local int g_no_grad_depth = 0;

std::size_t product(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? ", " : "") << shape[i];
  os << ']';
  return os.str();
}

void check_defined(const Tensor& t, const char* op) {
  if (!t.defined()) throw ShapeError(std::string(op) + ": undefined tensor operand");
}

void check_finite(const std::vector<double>& data, const char* op) {
  for (double v : data) {
    if (!std::isfinite(v)) throw NonFiniteError(std::string(op) + ": non-finite output");
  }
}

bool should_record(const std::vector<Tensor>& inputs) {
  if (g_active_tape == nullptr || g_no_grad_depth > 0) return false;
  return std::any_of(inputs.begin(), inputs.end(),
                     [](const Tensor& t) { return t.requires_grad(); });
}

Tensor make_result(const char* op, Shape shape, std::vector<double> data,
                   std::vector<Tensor> inputs, BackwardFn fn) {
  check_finite(data, op);
  const bool record = should_record(inputs);
  auto node = std::make_shared<Node>(Node{std::move(shape), std::move(data), record});
  Tensor out = Tensor::wrap(std::move(node));
  if (record) g_active_tape->record(out, std::move(inputs), std::move(fn));
  return out;
}

enum class Broadcast { same, rows };

Broadcast broadcast_kind(const Tensor& a, const Tensor& b, const char* op) {
  check_defined(a, op);
  check_defined(b, op);
  if (a.shape() == b.shape()) return Broadcast::same;
  if (a.dim() == b.dim() + 1 && std::equal(b.shape().begin(), b.shape().end(), a.shape().begin() + 1)) {
    return Broadcast::rows;
  }
  throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                   shape_str(b.shape()));
}

// Reduces a gradient of a's shape onto b's shape for row broadcasting.
void accumulate_broadcast(std::span<const double> g, std::vector<double>& acc, Broadcast kind) {
  if (kind == Broadcast::same) {
    for (std::size_t i = 0; i < g.size(); ++i) acc[i] += g[i];
    return;
  }
  const std::size_t m = acc.size();
  for (std::size_t i = 0; i < g.size(); ++i) acc[i % m] += g[i];
}

template <typename F>
Tensor unary(const char* op, const Tensor& a, F&& value_fn, BackwardFn fn) {
  check_defined(a, op);
  std::vector<double> out(a.numel());
  auto in = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = value_fn(in[i]);
  return make_result(op, a.shape(), std::move(out), {a}, std::move(fn));
}

}  // namespace

// ---------------------------------------------------------------------------
// Tensor

Tensor Tensor::from(Shape shape, std::vector<double> data, bool requires_grad) {
  if (product(shape) != data.size()) {
    throw ShapeError("tensor data length " + std::to_string(data.size()) +
                     " does not match shape " + shape_str(shape));
  }
  check_finite(data, "tensor");
  return Tensor(std::make_shared<Node>(Node{std::move(shape), std::move(data), requires_grad}));
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  const std::size_t n = product(shape);
  return from(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

Tensor Tensor::full(Shape shape, double value) {
  const std::size_t n = product(shape);
  return from(std::move(shape), std::vector<double>(n, value));
}

Tensor Tensor::scalar(double value, bool requires_grad) { return from({}, {value}, requires_grad); }

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> data,
                      bool requires_grad) {
  return from({rows, cols}, std::move(data), requires_grad);
}

std::size_t Tensor::rows() const { return dim() == 0 ? 1 : shape()[0]; }

std::size_t Tensor::cols() const {
  if (dim() <= 1) return 1;
  return numel() / shape()[0];
}

double Tensor::item() const {
  if (numel() != 1) throw ShapeError("item() on tensor with shape " + shape_str(shape()));
  return node_->data[0];
}

Tensor Tensor::with_requires_grad(bool flag) const {
  return Tensor(std::make_shared<Node>(Node{shape(), node_->data, flag}));
}

// ---------------------------------------------------------------------------
// Gradients / Tape

Tensor Gradients::of(const Tensor& leaf) const {
  auto it = grads_.find(leaf.node());
  if (it != grads_.end()) return it->second;
  return Tensor::zeros(leaf.shape());
}

bool Gradients::contains(const Tensor& leaf) const { return grads_.count(leaf.node()) != 0; }

Tape::Tape() : parent_(g_active_tape) { g_active_tape = this; }

Tape::~Tape() { g_active_tape = parent_; }

Tape* Tape::active() { return g_active_tape; }

void Tape::record(const Tensor& out, std::vector<Tensor> inputs, BackwardFn fn) {
  entries_.push_back(Entry{out, std::move(inputs), std::move(fn)});
}

Gradients Tape::backward(const Tensor& loss) {
  check_defined(loss, "backward");
  if (loss.numel() != 1) {
    throw ShapeError("backward: loss must be scalar, got shape " + shape_str(loss.shape()));
  }
  if (entries_.empty()) throw TapeError("backward: tape is empty (no recorded forward pass)");
  if (!loss.requires_grad()) throw TapeError("backward: loss was not recorded on this tape");

  std::unordered_map<const Node*, std::vector<double>> acc;
  acc[loss.node()] = {1.0};

  std::vector<std::vector<double>*> slots;
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    auto found = acc.find(it->out.node());
    if (found == acc.end()) continue;
    // The output's accumulator is final once we reach its producing entry.
    const std::vector<double> grad_out = std::move(found->second);
    acc.erase(found);
    slots.assign(it->inputs.size(), nullptr);
    for (std::size_t k = 0; k < it->inputs.size(); ++k) {
      const Tensor& in = it->inputs[k];
      if (!in.requires_grad()) continue;
      auto& slot = acc[in.node()];
      if (slot.empty()) slot.assign(in.numel(), 0.0);
      slots[k] = &slot;
    }
    it->fn(grad_out, slots);
  }

  Gradients result;
  // Whatever remains un-consumed are leaves (nodes without a producing entry).
  std::unordered_map<const Node*, Shape> leaf_shapes;
  for (const auto& e : entries_) {
    for (const auto& in : e.inputs) leaf_shapes.emplace(in.node(), in.shape());
  }
  for (auto& [node, grad] : acc) {
    auto shape_it = leaf_shapes.find(node);
    if (shape_it == leaf_shapes.end()) continue;
    auto n = std::make_shared<Node>(Node{shape_it->second, std::move(grad), false});
    result.grads_.emplace(node, Tensor::wrap(std::move(n)));
  }
  entries_.clear();
  return result;
}

NoGradGuard::NoGradGuard() { ++g_no_grad_depth; }
NoGradGuard::~NoGradGuard() { --g_no_grad_depth; }

bool grad_enabled() { return g_no_grad_depth == 0; }

// ---------------------------------------------------------------------------
// Ops

Tensor matmul(const Tensor& a, const Tensor& b) {
  check_defined(a, "matmul");
  check_defined(b, "matmul");
  if (a.dim() != 2 || (b.dim() != 2 && b.dim() != 1) || a.shape()[1] != b.shape()[0]) {
    throw ShapeError("matmul: shape mismatch " + shape_str(a.shape()) + " x " +
                     shape_str(b.shape()));
  }
  const Eigen::Index n = a.shape()[0];
  const Eigen::Index k = a.shape()[1];
  const Eigen::Index m = b.dim() == 2 ? b.shape()[1] : 1;
  Shape out_shape = b.dim() == 2 ? Shape{a.shape()[0], b.shape()[1]} : Shape{a.shape()[0]};

  std::vector<double> out(n * m);
  CMapMat A(a.data().data(), n, k);
  CMapMat B(b.data().data(), k, m);
  MapMat(out.data(), n, m).noalias() = A * B;

  return make_result("matmul", std::move(out_shape), std::move(out), {a, b},
                     [a, b, n, k, m](std::span<const double> g, std::span<std::vector<double>*> gi) {
                       CMapMat G(g.data(), n, m);
                       if (gi[0]) {
                         CMapMat B(b.data().data(), k, m);
                         MapMat(gi[0]->data(), n, k).noalias() += G * B.transpose();
                       }
                       if (gi[1]) {
                         CMapMat A(a.data().data(), n, k);
                         MapMat(gi[1]->data(), k, m).noalias() += A.transpose() * G;
                       }
                     });
}

Tensor add(const Tensor& a, const Tensor& b) {
  const Broadcast kind = broadcast_kind(a, b, "add");
  std::vector<double> out(a.data().begin(), a.data().end());
  auto bd = b.data();
  const std::size_t m = bd.size();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bd[i % m];
  return make_result("add", a.shape(), std::move(out), {a, b},
                     [kind](std::span<const double> g, std::span<std::vector<double>*> gi) {
                       if (gi[0]) accumulate_broadcast(g, *gi[0], Broadcast::same);
                       if (gi[1]) accumulate_broadcast(g, *gi[1], kind);
                     });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  const Broadcast kind = broadcast_kind(a, b, "sub");
  std::vector<double> out(a.data().begin(), a.data().end());
  auto bd = b.data();
  const std::size_t m = bd.size();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bd[i % m];
  return make_result("sub", a.shape(), std::move(out), {a, b},
                     [kind](std::span<const double> g, std::span<std::vector<double>*> gi) {
                       if (gi[0]) accumulate_broadcast(g, *gi[0], Broadcast::same);
                       if (gi[1]) {
                         std::vector<double> neg(g.begin(), g.end());
                         for (double& v : neg) v = -v;
                         accumulate_broadcast(neg, *gi[1], kind);
                       }
                     });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  const Broadcast kind = broadcast_kind(a, b, "mul");
  std::vector<double> out(a.data().begin(), a.data().end());
  auto bd = b.data();
  const std::size_t m = bd.size();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bd[i % m];
  return make_result("mul", a.shape(), std::move(out), {a, b},
                     [a, b, kind](std::span<const double> g, std::span<std::vector<double>*> gi) {
                       auto ad = a.data();
                       auto bd = b.data();
                       const std::size_t m = bd.size();
                       if (gi[0]) {
                         auto& acc = *gi[0];
                         for (std::size_t i = 0; i < g.size(); ++i) acc[i] += g[i] * bd[i % m];
                       }
                       if (gi[1]) {
                         std::vector<double> ga(g.size());
                         for (std::size_t i = 0; i < g.size(); ++i) ga[i] = g[i] * ad[i];
                         accumulate_broadcast(ga, *gi[1], kind);
                       }
                     });
}

Tensor scale(const Tensor& a, double factor) {
  return unary("scale", a, [factor](double v) { return v * factor; },
               [factor](std::span<const double> g, std::span<std::vector<double>*> gi) {
                 auto& acc = *gi[0];
                 for (std::size_t i = 0; i < g.size(); ++i) acc[i] += g[i] * factor;
               });
}

Tensor add_scalar(const Tensor& a, double value) {
  return unary("add_scalar", a, [value](double v) { return v + value; },
               [](std::span<const double> g, std::span<std::vector<double>*> gi) {
                 accumulate_broadcast(g, *gi[0], Broadcast::same);
               });
}

Tensor concat(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat: no operands");
  for (const auto& p : parts) {
    check_defined(p, "concat");
    if (p.dim() != 2 || p.shape()[0] != parts[0].shape()[0]) {
      throw ShapeError("concat: operands must be 2-D with equal rows, got " +
                       shape_str(p.shape()));
    }
  }
  const std::size_t n = parts[0].shape()[0];
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const auto& p : parts) {
    widths.push_back(p.shape()[1]);
    total += p.shape()[1];
  }
  std::vector<double> out(n * total);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    auto d = parts[k].data();
    for (std::size_t r = 0; r < n; ++r) {
      std::copy_n(d.begin() + r * widths[k], widths[k], out.begin() + r * total + offset);
    }
    offset += widths[k];
  }
  return make_result("concat", {n, total}, std::move(out), parts,
                     [n, total, widths](std::span<const double> g,
                                        std::span<std::vector<double>*> gi) {
                       std::size_t offset = 0;
                       for (std::size_t k = 0; k < widths.size(); ++k) {
                         if (gi[k]) {
                           auto& acc = *gi[k];
                           for (std::size_t r = 0; r < n; ++r) {
                             for (std::size_t c = 0; c < widths[k]; ++c) {
                               acc[r * widths[k] + c] += g[r * total + offset + c];
                             }
                           }
                         }
                         offset += widths[k];
                       }
                     });
}

Tensor silu(const Tensor& a) {
  return unary("silu", a, [](double v) { return v / (1.0 + std::exp(-v)); },
               [a](std::span<const double> g, std::span<std::vector<double>*> gi) {
                 auto& acc = *gi[0];
                 auto x = a.data();
                 for (std::size_t i = 0; i < g.size(); ++i) {
                   const double s = 1.0 / (1.0 + std::exp(-x[i]));
                   acc[i] += g[i] * s * (1.0 + x[i] * (1.0 - s));
                 }
               });
}

Tensor sum(const Tensor& a) {
  check_defined(a, "sum");
  double total = 0.0;
  for (double v : a.data()) total += v;
  return make_result("sum", {}, {total}, {a},
                     [](std::span<const double> g, std::span<std::vector<double>*> gi) {
                       for (double& v : *gi[0]) v += g[0];
                     });
}

Tensor row_sum(const Tensor& a) {
  check_defined(a, "row_sum");
  if (a.dim() != 2) throw ShapeError("row_sum: expected 2-D tensor, got " + shape_str(a.shape()));
  const std::size_t n = a.shape()[0];
  const std::size_t m = a.shape()[1];
  std::vector<double> out(n, 0.0);
  auto d = a.data();
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < m; ++c) out[r] += d[r * m + c];
  }
  return make_result("row_sum", {n}, std::move(out), {a},
                     [m](std::span<const double> g, std::span<std::vector<double>*> gi) {
                       auto& acc = *gi[0];
                       for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += g[i / m];
                     });
}

Tensor mean(const Tensor& a) {
  check_defined(a, "mean");
  const double n = static_cast<double>(a.numel());
  double total = 0.0;
  for (double v : a.data()) total += v;
  return make_result("mean", {}, {total / n}, {a},
                     [n](std::span<const double> g, std::span<std::vector<double>*> gi) {
                       for (double& v : *gi[0]) v += g[0] / n;
                     });
}

Tensor sqrt_eps(const Tensor& a) {
  return unary("sqrt_eps", a, [](double v) { return std::sqrt(v + kSqrtEps); },
               [a](std::span<const double> g, std::span<std::vector<double>*> gi) {
                 auto& acc = *gi[0];
                 auto x = a.data();
                 for (std::size_t i = 0; i < g.size(); ++i) {
                   acc[i] += g[i] * 0.5 / std::sqrt(x[i] + kSqrtEps);
                 }
               });
}

Tensor sqrt(const Tensor& a) {
  check_defined(a, "sqrt");
  for (double v : a.data()) {
    if (!(v > 0.0)) throw NonFiniteError("sqrt: input must be strictly positive");
  }
  return unary("sqrt", a, [](double v) { return std::sqrt(v); },
               [a](std::span<const double> g, std::span<std::vector<double>*> gi) {
                 auto& acc = *gi[0];
                 auto x = a.data();
                 for (std::size_t i = 0; i < g.size(); ++i) acc[i] += g[i] * 0.5 / std::sqrt(x[i]);
               });
}

Tensor square(const Tensor& a) {
  return unary("square", a, [](double v) { return v * v; },
               [a](std::span<const double> g, std::span<std::vector<double>*> gi) {
                 auto& acc = *gi[0];
                 auto x = a.data();
                 for (std::size_t i = 0; i < g.size(); ++i) acc[i] += 2.0 * g[i] * x[i];
               });
}

Tensor detach(const Tensor& a) {
  check_defined(a, "detach");
  return a.with_requires_grad(false);
}

}  // namespace tdm::ad
