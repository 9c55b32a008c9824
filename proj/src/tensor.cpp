#include "zpj/tensor.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "zpj/error.hpp"

namespace zpj {

using detail::Node;
using NodePtr = std::shared_ptr<Node>;

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapC = Eigen::Map<const RowMat>;
using Map = Eigen::Map<RowMat>;

std::size_t product(const Shape& s) {
  std::size_t n = 1;
  for (int d : s) n *= static_cast<std::size_t>(d);
  return n;
}

void check_shape(const Shape& s) {
  if (s.empty() || s.size() > 2)
    throw DimensionError("tensor rank must be 1 or 2, got " + shape_str(s));
  for (int d : s)
    if (d <= 0) throw DimensionError("non-positive dimension in " + shape_str(s));
}

thread_local bool grad_enabled = true;

NodePtr make_node(Shape shape, std::vector<double> value, bool requires_grad) {
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  n->requires_grad = requires_grad;
  if (requires_grad) n->grad.assign(n->value.size(), 0.0);
  return n;
}

// Result node of an op over `inputs`; grads are tracked iff any input needs them.
NodePtr make_result(Shape shape, std::vector<double> value,
                    std::initializer_list<const Tensor*> inputs) {
  bool rg = false;
  for (auto* t : inputs) rg = rg || t->requires_grad();
  rg = rg && grad_enabled;
  auto n = make_node(std::move(shape), std::move(value), rg);
  if (rg)
    for (auto* t : inputs) n->parents.push_back(t->ptr());
  return n;
}

NodePtr make_result_vec(Shape shape, std::vector<double> value,
                        const std::vector<Tensor>& inputs) {
  bool rg = false;
  for (auto& t : inputs) rg = rg || t.requires_grad();
  rg = rg && grad_enabled;
  auto n = make_node(std::move(shape), std::move(value), rg);
  if (rg)
    for (auto& t : inputs) n->parents.push_back(t.ptr());
  return n;
}

Shape shape2(int r, int c) { return {r, c}; }

void require_same(const Tensor& a, const Tensor& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                         " vs " + shape_str(b.shape()));
}

// Applies f elementwise and records df as a function of (x, y).
template <class F, class DF>
Tensor unary(const Tensor& a, F f, DF df) {
  std::vector<double> out(a.size());
  auto in = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(in[i]);
  auto n = make_result(a.shape(), std::move(out), {&a});
  if (n->requires_grad) {
    n->backward = [df](Node& self) {
      Node& p = *self.parents[0];
      if (!p.requires_grad) return;
      for (std::size_t i = 0; i < self.value.size(); ++i)
        p.grad[i] += self.grad[i] * df(p.value[i], self.value[i]);
    };
  }
  return Tensor(n);
}

}  // namespace

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
  os << ']';
  return os.str();
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  check_shape(shape);
  auto n = product(shape);
  return Tensor(make_node(std::move(shape), std::vector<double>(n, 0.0), requires_grad));
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  check_shape(shape);
  if (product(shape) != values.size())
    throw DimensionError("shape " + shape_str(shape) + " needs " +
                         std::to_string(product(shape)) + " values, got " +
                         std::to_string(values.size()));
  return Tensor(make_node(std::move(shape), std::move(values), requires_grad));
}

Tensor Tensor::scalar(double v, bool requires_grad) { return from({1}, {v}, requires_grad); }

Tensor Tensor::column(std::vector<double> values) {
  int n = static_cast<int>(values.size());
  return from({n, 1}, std::move(values));
}

double Tensor::item() const {
  if (size() != 1) throw ContractError("item() on tensor of shape " + shape_str(shape()));
  return node_->value[0];
}

void Tensor::zero_grad() { std::fill(node_->grad.begin(), node_->grad.end(), 0.0); }

Tensor Tensor::detach() const { return Tensor(make_node(shape(), node_->value, false)); }

NoGrad::NoGrad() : previous_(grad_enabled) { grad_enabled = false; }
NoGrad::~NoGrad() { grad_enabled = previous_; }

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1)
    throw ContractError("backward requires a scalar loss, got " +
                        (loss.defined() ? shape_str(loss.shape()) : std::string("undefined")));
  if (!loss.requires_grad()) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack{{loss.node(), 0}};
  seen.insert(loss.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  for (Node* n : order)
    if (n->backward) std::fill(n->grad.begin(), n->grad.end(), 0.0);
  loss.node()->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    if ((*it)->backward) (*it)->backward(**it);
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows())
    throw DimensionError("matmul: inner dimensions disagree, " + shape_str(a.shape()) +
                         " x " + shape_str(b.shape()));
  int m = a.rows(), k = a.cols(), n = b.cols();
  std::vector<double> out(std::size_t(m) * n);
  Map(out.data(), m, n).noalias() =
      MapC(a.values().data(), m, k) * MapC(b.values().data(), k, n);
  auto node = make_result(shape2(m, n), std::move(out), {&a, &b});
  if (node->requires_grad) {
    node->backward = [m, k, n](Node& self) {
      Node& pa = *self.parents[0];
      Node& pb = *self.parents[1];
      MapC g(self.grad.data(), m, n);
      if (pa.requires_grad)
        Map(pa.grad.data(), m, k).noalias() += g * MapC(pb.value.data(), k, n).transpose();
      if (pb.requires_grad)
        Map(pb.grad.data(), k, n).noalias() += MapC(pa.value.data(), m, k).transpose() * g;
    };
  }
  return Tensor(node);
}

Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b) {
  if (x.cols() != w.rows())
    throw DimensionError("affine: inner dimensions disagree, " + shape_str(x.shape()) +
                         " x " + shape_str(w.shape()));
  if (b.size() != std::size_t(w.cols()))
    throw DimensionError("affine: bias " + shape_str(b.shape()) + " does not match " +
                         shape_str(w.shape()));
  int m = x.rows(), k = x.cols(), n = w.cols();
  std::vector<double> out(std::size_t(m) * n);
  Map o(out.data(), m, n);
  o.noalias() = MapC(x.values().data(), m, k) * MapC(w.values().data(), k, n);
  o.rowwise() += MapC(b.values().data(), 1, n).row(0);
  auto node = make_result(shape2(m, n), std::move(out), {&x, &w, &b});
  if (node->requires_grad) {
    node->backward = [m, k, n](Node& self) {
      Node& px = *self.parents[0];
      Node& pw = *self.parents[1];
      Node& pb = *self.parents[2];
      MapC g(self.grad.data(), m, n);
      if (px.requires_grad)
        Map(px.grad.data(), m, k).noalias() += g * MapC(pw.value.data(), k, n).transpose();
      if (pw.requires_grad)
        Map(pw.grad.data(), k, n).noalias() += MapC(px.value.data(), m, k).transpose() * g;
      if (pb.requires_grad) Map(pb.grad.data(), 1, n) += g.colwise().sum();
    };
  }
  return Tensor(node);
}

Tensor add(const Tensor& a, const Tensor& b) {
  bool broadcast = b.rows() == 1 && a.rows() > 1 && b.cols() == a.cols();
  if (!broadcast) require_same(a, b, "add");
  std::size_t cols = a.cols();
  std::vector<double> out(a.values().begin(), a.values().end());
  auto bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[broadcast ? i % cols : i];
  auto node = make_result(a.shape(), std::move(out), {&a, &b});
  if (node->requires_grad) {
    node->backward = [broadcast, cols](Node& self) {
      Node& pa = *self.parents[0];
      Node& pb = *self.parents[1];
      if (pa.requires_grad)
        for (std::size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += self.grad[i];
      if (pb.requires_grad)
        for (std::size_t i = 0; i < self.grad.size(); ++i)
          pb.grad[broadcast ? i % cols : i] += self.grad[i];
    };
  }
  return Tensor(node);
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same(a, b, "sub");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] - b.values()[i];
  auto node = make_result(a.shape(), std::move(out), {&a, &b});
  if (node->requires_grad) {
    node->backward = [](Node& self) {
      Node& pa = *self.parents[0];
      Node& pb = *self.parents[1];
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        if (pa.requires_grad) pa.grad[i] += self.grad[i];
        if (pb.requires_grad) pb.grad[i] -= self.grad[i];
      }
    };
  }
  return Tensor(node);
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same(a, b, "mul");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * b.values()[i];
  auto node = make_result(a.shape(), std::move(out), {&a, &b});
  if (node->requires_grad) {
    node->backward = [](Node& self) {
      Node& pa = *self.parents[0];
      Node& pb = *self.parents[1];
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        if (pa.requires_grad) pa.grad[i] += self.grad[i] * pb.value[i];
        if (pb.requires_grad) pb.grad[i] += self.grad[i] * pa.value[i];
      }
    };
  }
  return Tensor(node);
}

Tensor scale(const Tensor& a, double c) {
  return unary(a, [c](double x) { return c * x; }, [c](double, double) { return c; });
}

Tensor sigmoid(const Tensor& a) {
  return unary(
      a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh(const Tensor& a) {
  return unary(
      a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor softmax(const Tensor& a, std::span<const double> mask) {
  if (!mask.empty() && mask.size() != a.size())
    throw DimensionError("softmax: mask of size " + std::to_string(mask.size()) +
                         " for tensor " + shape_str(a.shape()));
  int m = a.rows(), n = a.cols();
  auto in = a.values();
  std::vector<double> out(a.size(), 0.0);
  for (int r = 0; r < m; ++r) {
    const double* x = in.data() + std::size_t(r) * n;
    double* y = out.data() + std::size_t(r) * n;
    auto live = [&](int c) { return mask.empty() || mask[std::size_t(r) * n + c] != 0.0; };
    double mx = -INFINITY;
    for (int c = 0; c < n; ++c) {
      if (!std::isfinite(x[c])) throw NumericError("softmax: non-finite input");
      if (live(c)) mx = std::max(mx, x[c]);
    }
    if (mx == -INFINITY) throw ContractError("softmax: row with empty support");
    double z = 0.0;
    for (int c = 0; c < n; ++c)
      if (live(c)) z += (y[c] = std::exp(x[c] - mx));
    for (int c = 0; c < n; ++c) y[c] /= z;
  }
  auto node = make_result(a.shape(), std::move(out), {&a});
  if (node->requires_grad) {
    node->backward = [m, n](Node& self) {
      Node& p = *self.parents[0];
      if (!p.requires_grad) return;
      for (int r = 0; r < m; ++r) {
        const double* y = self.value.data() + std::size_t(r) * n;
        const double* g = self.grad.data() + std::size_t(r) * n;
        double dot = 0.0;
        for (int c = 0; c < n; ++c) dot += y[c] * g[c];
        double* pg = p.grad.data() + std::size_t(r) * n;
        for (int c = 0; c < n; ++c) pg[c] += y[c] * (g[c] - dot);
      }
    };
  }
  return Tensor(node);
}

Tensor log_softmax(const Tensor& a) {
  int m = a.rows(), n = a.cols();
  auto in = a.values();
  std::vector<double> out(a.size());
  for (int r = 0; r < m; ++r) {
    const double* x = in.data() + std::size_t(r) * n;
    double* y = out.data() + std::size_t(r) * n;
    double mx = -INFINITY;
    for (int c = 0; c < n; ++c) {
      if (!std::isfinite(x[c])) throw NumericError("log_softmax: non-finite input");
      mx = std::max(mx, x[c]);
    }
    double z = 0.0;
    for (int c = 0; c < n; ++c) z += std::exp(x[c] - mx);
    double lz = mx + std::log(z);
    for (int c = 0; c < n; ++c) y[c] = x[c] - lz;
  }
  auto node = make_result(a.shape(), std::move(out), {&a});
  if (node->requires_grad) {
    node->backward = [m, n](Node& self) {
      Node& p = *self.parents[0];
      if (!p.requires_grad) return;
      for (int r = 0; r < m; ++r) {
        const double* y = self.value.data() + std::size_t(r) * n;
        const double* g = self.grad.data() + std::size_t(r) * n;
        double gs = 0.0;
        for (int c = 0; c < n; ++c) gs += g[c];
        double* pg = p.grad.data() + std::size_t(r) * n;
        for (int c = 0; c < n; ++c) pg[c] += g[c] - std::exp(y[c]) * gs;
      }
    };
  }
  return Tensor(node);
}

Tensor cross_entropy(const Tensor& probs, int target_index) {
  if (probs.rows() != 1)
    throw DimensionError("cross_entropy: expected a single distribution, got " +
                         shape_str(probs.shape()));
  if (target_index < 0 || target_index >= probs.cols())
    throw std::out_of_range("cross_entropy: target index " + std::to_string(target_index) +
                            " outside [0, " + std::to_string(probs.cols()) + ")");
  constexpr double kFloor = 1e-12;
  double p = probs.values()[target_index];
  bool clamped = p < kFloor;
  auto node = make_result({1}, {-std::log(clamped ? kFloor : p)}, {&probs});
  if (node->requires_grad) {
    node->backward = [target_index, clamped](Node& self) {
      Node& pp = *self.parents[0];
      if (pp.requires_grad && !clamped)
        pp.grad[target_index] -= self.grad[0] / pp.value[target_index];
    };
  }
  return Tensor(node);
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ContractError("concat_cols: no inputs");
  int m = parts[0].rows(), n = 0;
  std::vector<int> offsets;
  for (auto& p : parts) {
    if (p.rows() != m)
      throw DimensionError("concat_cols: row mismatch " + shape_str(parts[0].shape()) +
                           " vs " + shape_str(p.shape()));
    offsets.push_back(n);
    n += p.cols();
  }
  std::vector<double> out(std::size_t(m) * n);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    int w = parts[k].cols();
    auto v = parts[k].values();
    for (int r = 0; r < m; ++r)
      std::copy_n(v.data() + std::size_t(r) * w, w, out.data() + std::size_t(r) * n + offsets[k]);
  }
  auto node = make_result_vec(shape2(m, n), std::move(out), parts);
  if (node->requires_grad) {
    node->backward = [m, n, offsets](Node& self) {
      for (std::size_t k = 0; k < self.parents.size(); ++k) {
        Node& p = *self.parents[k];
        if (!p.requires_grad) continue;
        int w = p.cols();
        for (int r = 0; r < m; ++r) {
          const double* g = self.grad.data() + std::size_t(r) * n + offsets[k];
          double* pg = p.grad.data() + std::size_t(r) * w;
          for (int c = 0; c < w; ++c) pg[c] += g[c];
        }
      }
    };
  }
  return Tensor(node);
}

Tensor slice_cols(const Tensor& a, int begin, int end) {
  if (begin < 0 || end > a.cols() || begin >= end)
    throw DimensionError("slice_cols: [" + std::to_string(begin) + ", " + std::to_string(end) +
                         ") out of " + shape_str(a.shape()));
  int m = a.rows(), n = a.cols(), w = end - begin;
  std::vector<double> out(std::size_t(m) * w);
  for (int r = 0; r < m; ++r)
    std::copy_n(a.values().data() + std::size_t(r) * n + begin, w, out.data() + std::size_t(r) * w);
  auto node = make_result(shape2(m, w), std::move(out), {&a});
  if (node->requires_grad) {
    node->backward = [m, n, w, begin](Node& self) {
      Node& p = *self.parents[0];
      if (!p.requires_grad) return;
      for (int r = 0; r < m; ++r)
        for (int c = 0; c < w; ++c)
          p.grad[std::size_t(r) * n + begin + c] += self.grad[std::size_t(r) * w + c];
    };
  }
  return Tensor(node);
}

Tensor embedding(const Tensor& table, std::span<const int> ids) {
  int v = table.rows(), e = table.cols();
  int m = static_cast<int>(ids.size());
  if (m == 0) throw ContractError("embedding: empty id list");
  std::vector<double> out(std::size_t(m) * e);
  for (int r = 0; r < m; ++r) {
    if (ids[r] < 0 || ids[r] >= v)
      throw std::out_of_range("embedding: id " + std::to_string(ids[r]) + " outside table of " +
                              std::to_string(v) + " rows");
    std::copy_n(table.values().data() + std::size_t(ids[r]) * e, e, out.data() + std::size_t(r) * e);
  }
  auto node = make_result(shape2(m, e), std::move(out), {&table});
  if (node->requires_grad) {
    std::vector<int> idv(ids.begin(), ids.end());
    node->backward = [idv = std::move(idv), e](Node& self) {
      Node& p = *self.parents[0];
      if (!p.requires_grad) return;
      for (std::size_t r = 0; r < idv.size(); ++r)
        for (int c = 0; c < e; ++c) p.grad[std::size_t(idv[r]) * e + c] += self.grad[r * e + c];
    };
  }
  return Tensor(node);
}

Tensor pick(const Tensor& a, std::span<const int> index) {
  int m = a.rows(), n = a.cols();
  if (int(index.size()) != m)
    throw DimensionError("pick: " + std::to_string(index.size()) + " indices for " +
                         shape_str(a.shape()));
  std::vector<double> out(m);
  for (int r = 0; r < m; ++r) {
    if (index[r] < 0 || index[r] >= n)
      throw std::out_of_range("pick: index " + std::to_string(index[r]) + " outside row of " +
                              std::to_string(n));
    out[r] = a.values()[std::size_t(r) * n + index[r]];
  }
  auto node = make_result(shape2(m, 1), std::move(out), {&a});
  if (node->requires_grad) {
    std::vector<int> idx(index.begin(), index.end());
    node->backward = [idx = std::move(idx), n](Node& self) {
      Node& p = *self.parents[0];
      if (!p.requires_grad) return;
      for (std::size_t r = 0; r < idx.size(); ++r) p.grad[r * n + idx[r]] += self.grad[r];
    };
  }
  return Tensor(node);
}

Tensor mul_col(const Tensor& a, const Tensor& s) {
  int m = a.rows(), n = a.cols();
  if (s.rows() != m || s.cols() != 1)
    throw DimensionError("mul_col: " + shape_str(s.shape()) + " does not scale rows of " +
                         shape_str(a.shape()));
  std::vector<double> out(a.size());
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < n; ++c)
      out[std::size_t(r) * n + c] = a.values()[std::size_t(r) * n + c] * s.values()[r];
  auto node = make_result(a.shape(), std::move(out), {&a, &s});
  if (node->requires_grad) {
    node->backward = [m, n](Node& self) {
      Node& pa = *self.parents[0];
      Node& ps = *self.parents[1];
      for (int r = 0; r < m; ++r)
        for (int c = 0; c < n; ++c) {
          std::size_t i = std::size_t(r) * n + c;
          if (pa.requires_grad) pa.grad[i] += self.grad[i] * ps.value[r];
          if (ps.requires_grad) ps.grad[r] += self.grad[i] * pa.value[i];
        }
    };
  }
  return Tensor(node);
}

Tensor masked_update(const Tensor& next, const Tensor& prev, std::span<const double> mask) {
  require_same(next, prev, "masked_update");
  int m = next.rows(), n = next.cols();
  if (int(mask.size()) != m)
    throw DimensionError("masked_update: mask of " + std::to_string(mask.size()) +
                         " rows for " + shape_str(next.shape()));
  std::vector<double> out(next.size());
  for (int r = 0; r < m; ++r) {
    const auto& src = mask[r] != 0.0 ? next : prev;
    std::copy_n(src.values().data() + std::size_t(r) * n, n, out.data() + std::size_t(r) * n);
  }
  auto node = make_result(next.shape(), std::move(out), {&next, &prev});
  if (node->requires_grad) {
    std::vector<double> mk(mask.begin(), mask.end());
    node->backward = [mk = std::move(mk), n](Node& self) {
      for (std::size_t r = 0; r < mk.size(); ++r) {
        Node& p = *self.parents[mk[r] != 0.0 ? 0 : 1];
        if (!p.requires_grad) continue;
        for (int c = 0; c < n; ++c) p.grad[r * n + c] += self.grad[r * n + c];
      }
    };
  }
  return Tensor(node);
}

Tensor weighted_states(const Tensor& alpha, const std::vector<Tensor>& states) {
  int b = alpha.rows(), t = alpha.cols();
  if (int(states.size()) != t)
    throw DimensionError("weighted_states: " + std::to_string(states.size()) +
                         " states for weights " + shape_str(alpha.shape()));
  int d = states[0].cols();
  std::vector<double> out(std::size_t(b) * d, 0.0);
  for (int k = 0; k < t; ++k) {
    if (states[k].rows() != b || states[k].cols() != d)
      throw DimensionError("weighted_states: state " + shape_str(states[k].shape()));
    auto s = states[k].values();
    for (int r = 0; r < b; ++r) {
      double w = alpha.values()[std::size_t(r) * t + k];
      if (w == 0.0) continue;
      for (int c = 0; c < d; ++c) out[std::size_t(r) * d + c] += w * s[std::size_t(r) * d + c];
    }
  }
  std::vector<Tensor> inputs{alpha};
  inputs.insert(inputs.end(), states.begin(), states.end());
  auto node = make_result_vec(shape2(b, d), std::move(out), inputs);
  if (node->requires_grad) {
    node->backward = [b, t, d](Node& self) {
      Node& pa = *self.parents[0];
      for (int k = 0; k < t; ++k) {
        Node& ps = *self.parents[k + 1];
        for (int r = 0; r < b; ++r) {
          const double* g = self.grad.data() + std::size_t(r) * d;
          const double* s = ps.value.data() + std::size_t(r) * d;
          double w = pa.value[std::size_t(r) * t + k];
          if (pa.requires_grad) {
            double dot = 0.0;
            for (int c = 0; c < d; ++c) dot += g[c] * s[c];
            pa.grad[std::size_t(r) * t + k] += dot;
          }
          if (ps.requires_grad && w != 0.0) {
            double* sg = ps.grad.data() + std::size_t(r) * d;
            for (int c = 0; c < d; ++c) sg[c] += w * g[c];
          }
        }
      }
    };
  }
  return Tensor(node);
}

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.values()) s += v;
  auto node = make_result({1}, {s}, {&a});
  if (node->requires_grad) {
    node->backward = [](Node& self) {
      Node& p = *self.parents[0];
      if (!p.requires_grad) return;
      for (double& g : p.grad) g += self.grad[0];
    };
  }
  return Tensor(node);
}

Tensor weighted_sum(const Tensor& a, std::span<const double> w) {
  if (w.size() != a.size())
    throw DimensionError("weighted_sum: " + std::to_string(w.size()) + " weights for " +
                         shape_str(a.shape()));
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i)
    if (w[i] != 0.0) s += w[i] * a.values()[i];
  auto node = make_result({1}, {s}, {&a});
  if (node->requires_grad) {
    std::vector<double> wv(w.begin(), w.end());
    node->backward = [wv = std::move(wv)](Node& self) {
      Node& p = *self.parents[0];
      if (!p.requires_grad) return;
      for (std::size_t i = 0; i < wv.size(); ++i) p.grad[i] += self.grad[0] * wv[i];
    };
  }
  return Tensor(node);
}

}  // namespace zpj
