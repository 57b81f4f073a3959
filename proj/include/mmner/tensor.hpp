#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mmner/rng.hpp"

namespace mmner {

using Shape = std::vector<int64_t>;

int64_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // sized like value iff requires_grad
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;  // pulls this->grad into parents
};

}  // namespace detail

/// Dense row-major tensor of doubles. Copying a Tensor copies the handle;
/// results of operations record the tape needed for backward().
class Tensor {
 public:
  Tensor() = default;

  static Tensor leaf(Shape shape, std::vector<double> data, bool requires_grad = false);
  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double v, bool requires_grad = false);
  static Tensor scalar(double v);
  static Tensor uniform(Shape shape, double lo, double hi, Rng& rng, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int ndim() const { return static_cast<int>(node_->shape.size()); }
  int64_t dim(int i) const { return node_->shape[static_cast<size_t>(i)]; }
  int64_t numel() const { return static_cast<int64_t>(node_->value.size()); }
  bool requires_grad() const { return node_->requires_grad; }

  std::span<const double> data() const { return node_->value; }
  std::span<double> data() { return node_->value; }
  std::span<const double> grad() const;
  std::span<double> grad();

  /// Value of a single-element tensor.
  double item() const;
  double at(int64_t i) const { return node_->value[static_cast<size_t>(i)]; }
  double at(int64_t i, int64_t j) const;

  void zero_grad();

  std::shared_ptr<detail::Node> node() const { return node_; }
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<detail::Node> node_;
};

enum class Padding { same, valid };

// Elementwise binary ops accept equal shapes or a single-element operand on
// either side (scalar broadcast).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor add_scalar(const Tensor& a, double c);
Tensor mul_scalar(const Tensor& a, double c);

Tensor tanh(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);
Tensor relu(const Tensor& x);

/// Numerically stabilized softmax along `axis`. Slices sum to 1.
Tensor softmax(const Tensor& x, int axis);

/// log(softmax(x)) computed stably (never underflows to log 0).
Tensor log_softmax(const Tensor& x, int axis);

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& x);

/// x: [len x ch_in], kernels: [ks x ch_in x ch_out] -> [len' x ch_out].
Tensor conv1d(const Tensor& x, const Tensor& kernels, Padding padding);

/// x: [len x ch] -> [ceil(len/pool) x ch]; gradient routes to the argmax.
Tensor maxpool1d(const Tensor& x, int64_t pool);

Tensor concat_rows(std::span<const Tensor> parts);
Tensor concat_cols(std::span<const Tensor> parts);
Tensor concat_rows(std::initializer_list<Tensor> parts);
Tensor concat_cols(std::initializer_list<Tensor> parts);
Tensor slice_rows(const Tensor& x, int64_t start, int64_t len);
Tensor slice_cols(const Tensor& x, int64_t start, int64_t len);

/// Row gather from a 2-D table; backward scatter-adds into the table rows.
Tensor gather_rows(const Tensor& table, std::span<const int64_t> ids);

/// x: [m x n] plus row vector [1 x n] broadcast over the rows.
Tensor add_rowwise(const Tensor& x, const Tensor& b);

Tensor reshape(const Tensor& x, Shape shape);
Tensor sum(const Tensor& x);  // -> [1]

/// Reverse-mode sweep from a scalar loss. Gradients accumulate additively;
/// callers zero them explicitly. Returns the number of nodes visited (each
/// reachable node is visited exactly once).
size_t backward(const Tensor& loss);

}  // namespace mmner
