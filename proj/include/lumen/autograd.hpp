#pragma once

#include "lumen/tensor.hpp"

#include <functional>
#include <memory>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

namespace lumen {

template <typename Scalar>
struct Node {
  Tensor<Scalar> value;
  Tensor<Scalar> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this node's grad and accumulates into the parents' grads.
  std::function<void(Node&)> backward_fn;
  std::string label;

  Tensor<Scalar>& ensure_grad() {
    if (grad.shape() != value.shape() || grad.empty()) grad = Tensor<Scalar>(value.shape());
    return grad;
  }
};

namespace detail {
inline bool& grad_mode() {
  thread_local bool enabled = true;
  return enabled;
}
}  // namespace detail

/// Disables graph recording on this thread for the guard's lifetime.
class NoGradGuard {
 public:
  NoGradGuard() : previous_(detail::grad_mode()) { detail::grad_mode() = false; }
  ~NoGradGuard() { detail::grad_mode() = previous_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

inline bool grad_enabled() { return detail::grad_mode(); }

/// Handle to a value in the computation graph. Copies share the node.
template <typename Scalar>
class Var {
 public:
  using NodeType = Node<Scalar>;

  Var() = default;
  explicit Var(Tensor<Scalar> value, bool requires_grad = false, std::string label = {})
      : node_(std::make_shared<NodeType>()) {
    node_->value = std::move(value);
    node_->requires_grad = requires_grad;
    node_->label = std::move(label);
  }

  /// Creates the result of an op. The backward closure is kept only when some
  /// parent participates in differentiation.
  static Var make(Tensor<Scalar> value, std::vector<Var> parents,
                  std::function<void(NodeType&)> backward_fn) {
    Var out(std::move(value));
    if (!grad_enabled()) return out;
    bool any = false;
    for (const auto& p : parents) any = any || p.requires_grad();
    if (!any) return out;
    out.node_->requires_grad = true;
    out.node_->parents.reserve(parents.size());
    for (auto& p : parents) out.node_->parents.push_back(p.node_);
    out.node_->backward_fn = std::move(backward_fn);
    return out;
  }

  bool defined() const { return static_cast<bool>(node_); }
  const Tensor<Scalar>& value() const { return node_->value; }
  Tensor<Scalar>& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  void set_requires_grad(bool on) { node_->requires_grad = on; }
  Tensor<Scalar>& grad() { return node_->ensure_grad(); }
  bool has_grad() const { return node_->grad.size() == node_->value.size() && !node_->grad.empty(); }
  void zero_grad() {
    if (has_grad()) node_->grad.set_zero();
  }
  Scalar item() const { return node_->value.item(); }

  const std::string& label() const { return node_->label; }
  Var& set_label(std::string label) {
    node_->label = std::move(label);
    return *this;
  }

  NodeType* node() const { return node_.get(); }
  const std::shared_ptr<NodeType>& node_ptr() const { return node_; }

  /// A constant copy sharing no graph history.
  Var detach() const { return Var(node_->value, false, node_->label); }

 private:
  std::shared_ptr<NodeType> node_;
};

/// Backpropagates d(root)/d(.) into every reachable node requiring grad.
/// Root must be a scalar. Leaf grads accumulate across calls.
template <typename Scalar>
void backward(const Var<Scalar>& root) {
  if (root.value().size() != 1) throw ConfigError("backward() needs a scalar root, got " + root.shape().str());
  if (!root.requires_grad()) return;
  using NodeType = Node<Scalar>;

  std::vector<NodeType*> order;
  std::unordered_set<NodeType*> seen;
  std::vector<std::pair<NodeType*, std::size_t>> stack;
  stack.emplace_back(root.node(), 0);
  seen.insert(root.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      NodeType* parent = node->parents[next++].get();
      if (parent->requires_grad && seen.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root.node()->ensure_grad().array() += Scalar(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    NodeType* node = *it;
    if (!node->backward_fn) continue;
    for (auto& p : node->parents)
      if (p->requires_grad) p->ensure_grad();
    node->backward_fn(*node);
    // Interior grads are not needed after propagation.
    node->grad = Tensor<Scalar>();
  }
}

}  // namespace lumen
