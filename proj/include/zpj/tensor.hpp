#pragma once

// Reverse-mode automatic differentiation over dense row-major arrays.
//
// A Tensor is a cheap handle to a graph node. Every op records its parents
// and a backward closure when any input requires a gradient; the graph is
// released when the last handle to the loss goes away. Values are 64-bit.
// Ops treat rank-1 tensors of length n as 1 x n rows.

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace zpj {

using Shape = std::vector<int>;

std::string shape_str(const Shape& s);

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // sized iff requires_grad
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;  // empty for leaves

  int rows() const { return shape.size() == 2 ? shape[0] : 1; }
  int cols() const { return shape.empty() ? 1 : shape.back(); }
};

}  // namespace detail

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values,
                     bool requires_grad = false);
  static Tensor scalar(double v, bool requires_grad = false);
  // Rank-2 column of the given values; used for masks and weights.
  static Tensor column(std::vector<double> values);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int rows() const { return node_->rows(); }
  int cols() const { return node_->cols(); }
  std::size_t size() const { return node_->value.size(); }
  bool requires_grad() const { return node_->requires_grad; }

  std::span<const double> values() const { return node_->value; }
  std::span<double> mutable_values() { return node_->value; }
  std::span<const double> grad() const { return node_->grad; }
  std::span<double> mutable_grad() { return node_->grad; }

  double item() const;
  double at(int r, int c) const { return node_->value[std::size_t(r) * cols() + c]; }
  void zero_grad();

  // Copy of the values with no graph history.
  Tensor detach() const;

  detail::Node* node() const { return node_.get(); }
  const std::shared_ptr<detail::Node>& ptr() const { return node_; }

  explicit Tensor(std::shared_ptr<detail::Node> n) : node_(std::move(n)) {}

 private:
  std::shared_ptr<detail::Node> node_;
};

// While alive, ops on this thread record no graph.
class NoGrad {
 public:
  NoGrad();
  ~NoGrad();
  NoGrad(const NoGrad&) = delete;
  NoGrad& operator=(const NoGrad&) = delete;

 private:
  bool previous_;
};

// Populates grads of every requires_grad tensor reachable from a scalar loss.
// Leaf grads accumulate across calls; intermediate grads are reset per call.
void backward(const Tensor& loss);

// --- ops -------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
// a + b; b may be a 1 x n row broadcast over the rows of a.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
// x W + b in one node, b broadcast over rows.
Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b);
Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);

// Row-wise softmax. An optional 0/1 mask (same shape) removes entries from
// the support; masked outputs are exactly zero.
Tensor softmax(const Tensor& a, std::span<const double> mask = {});
Tensor log_softmax(const Tensor& a);

// -log(max(probs[target], 1e-12)) for a single distribution.
Tensor cross_entropy(const Tensor& probs, int target_index);

Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor slice_cols(const Tensor& a, int begin, int end);
// Rows of `table` selected by ids.
Tensor embedding(const Tensor& table, std::span<const int> ids);
// out[i] = a[i, index[i]], shape rows x 1.
Tensor pick(const Tensor& a, std::span<const int> index);
// Each row of a scaled by the matching entry of the column s.
Tensor mul_col(const Tensor& a, const Tensor& s);
// Rows where mask[i] == 1 take `next`, others keep `prev`.
Tensor masked_update(const Tensor& next, const Tensor& prev,
                     std::span<const double> mask);
// out[b] = sum_t alpha[b, t] * states[t][b].
Tensor weighted_states(const Tensor& alpha, const std::vector<Tensor>& states);
Tensor sum(const Tensor& a);
// sum_i w_i a_i for constant weights.
Tensor weighted_sum(const Tensor& a, std::span<const double> w);

}  // namespace zpj
