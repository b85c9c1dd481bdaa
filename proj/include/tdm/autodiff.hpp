#pragma once

// Minimal reverse-mode automatic differentiation over dense float64 arrays.
//
// Tensors are immutable values backed by shared storage. An op records itself
// on the innermost live Tape of the calling thread whenever one of its
// operands requires a gradient; otherwise it only computes values. A Tape is
// single use: backward() consumes every recorded entry.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace tdm::ad {

using Shape = std::vector<std::size_t>;

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NonFiniteError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class TapeError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Numerical floor added inside sqrt_eps.
inline constexpr double kSqrtEps = 1e-12;

struct Node {
  Shape shape;
  std::vector<double> data;
  bool requires_grad = false;
};

class Tensor {
 public:
  Tensor() = default;

  static Tensor from(Shape shape, std::vector<double> data, bool requires_grad = false);
  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value);
  static Tensor scalar(double value, bool requires_grad = false);
  /// Row-major [rows, cols] matrix.
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> data,
                       bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t dim() const { return node_->shape.size(); }
  std::size_t numel() const { return node_->data.size(); }
  std::span<const double> data() const { return node_->data; }
  bool requires_grad() const { return node_->requires_grad; }
  const Node* node() const { return node_.get(); }

  /// Leading (batch) dimension; 1 for scalars.
  std::size_t rows() const;
  /// Product of the trailing dimensions.
  std::size_t cols() const;
  double item() const;
  double at(std::size_t row, std::size_t col) const { return node_->data[row * cols() + col]; }

  /// Same values, new leaf with the requested grad flag.
  Tensor with_requires_grad(bool flag) const;

  static Tensor wrap(std::shared_ptr<const Node> node) { return Tensor(std::move(node)); }

 private:
  explicit Tensor(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

  std::shared_ptr<const Node> node_;
};

/// Receives the output gradient and one accumulator per input (nullptr when
/// that input does not require a gradient).
using BackwardFn =
    std::function<void(std::span<const double> grad_out, std::span<std::vector<double>*> grad_in)>;

class Gradients {
 public:
  /// Gradient of the loss w.r.t. a leaf. Leaves the loss did not depend on
  /// get zeros of the right shape.
  Tensor of(const Tensor& leaf) const;
  bool contains(const Tensor& leaf) const;

 private:
  friend class Tape;
  std::unordered_map<const Node*, Tensor> grads_;
};

class Tape {
 public:
  Tape();
  ~Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Innermost live tape on this thread, or nullptr.
  static Tape* active();

  std::size_t size() const { return entries_.size(); }

  /// Runs the reverse sweep from a scalar loss and clears the tape.
  Gradients backward(const Tensor& loss);

  void record(const Tensor& out, std::vector<Tensor> inputs, BackwardFn fn);

 private:
  struct Entry {
    Tensor out;
    std::vector<Tensor> inputs;
    BackwardFn fn;
  };
  std::vector<Entry> entries_;
  Tape* parent_ = nullptr;
};

/// Disables recording on this thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;
};

bool grad_enabled();

// Forward ops. Binary elementwise ops accept identical shapes or a right
// operand whose shape equals the trailing dimensions of the left one
// (broadcast over the leading batch dimension).
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor add_scalar(const Tensor& a, double value);
/// Concatenation along the last axis of 2-D tensors with equal row counts.
Tensor concat(const std::vector<Tensor>& parts);
Tensor silu(const Tensor& a);
Tensor sum(const Tensor& a);
/// Sum over the last axis: [n, m] -> [n].
Tensor row_sum(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor sqrt_eps(const Tensor& a);
/// Plain square root; input must be strictly positive.
Tensor sqrt(const Tensor& a);
Tensor square(const Tensor& a);
Tensor detach(const Tensor& a);

}  // namespace tdm::ad
