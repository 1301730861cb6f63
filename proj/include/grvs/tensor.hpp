#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace grvs {

using Shape = std::vector<int64_t>;

int64_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

template <typename T>
class TensorT;

namespace detail {

template <typename T>
struct Node {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;  // empty until something flows into it
  bool requires_grad = false;
  bool is_leaf = true;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this node's grad and accumulates into the parents' grads.
  std::function<void(const Node&)> backward;

  std::vector<T>& ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), T(0));
    return grad;
  }
};

}  // namespace detail

/// Dense row-major tensor with reverse-mode gradients recorded on a dynamic
/// tape. Copies share storage; once a tensor has been used as an operand its
/// data must be treated as immutable.
template <typename T>
class TensorT {
 public:
  using value_type = T;
  using NodePtr = std::shared_ptr<detail::Node<T>>;
  using BackwardFn = std::function<void(const detail::Node<T>&)>;

  TensorT() = default;
  TensorT(Shape shape, std::vector<T> data, bool requires_grad = false);

  static TensorT zeros(Shape shape, bool requires_grad = false);
  static TensorT full(Shape shape, T value, bool requires_grad = false);
  static TensorT scalar(T value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  int rank() const { return static_cast<int>(shape().size()); }
  int64_t dim(int axis) const;
  int64_t numel() const { return static_cast<int64_t>(node_->data.size()); }

  std::span<const T> data() const { return node_->data; }
  /// Writable view of a leaf tensor's data (weights, inputs under test).
  std::span<T> mutable_data();
  T item() const;

  bool requires_grad() const { return node_ && node_->requires_grad; }
  TensorT& set_requires_grad(bool on);
  bool is_leaf() const { return node_->is_leaf; }

  bool has_grad() const { return node_ && !node_->grad.empty(); }
  std::span<const T> grad() const { return node_->grad; }
  std::span<T> mutable_grad() { return node_->ensure_grad(); }
  void zero_grad();

  /// Reverse pass from a single-element tensor, seeded with 1.
  void backward() const;

  /// Same storage contents in a fresh leaf that blocks gradient flow.
  TensorT detach() const;
  TensorT clone() const;

  template <typename U>
  TensorT<U> cast() const;

  const NodePtr& node() const { return node_; }

  /// Builds an op result. Parents are only recorded (and `backward` kept)
  /// when at least one of them requires a gradient.
  static TensorT make_result(Shape shape, std::vector<T> data,
                             std::initializer_list<TensorT> parents,
                             BackwardFn backward);
  static TensorT make_result(Shape shape, std::vector<T> data,
                             const std::vector<TensorT>& parents,
                             BackwardFn backward);

 private:
  explicit TensorT(NodePtr node) : node_(std::move(node)) {}
  NodePtr node_;
};

using Tensor = TensorT<float>;
using Tensor64 = TensorT<double>;

template <typename T>
template <typename U>
TensorT<U> TensorT<T>::cast() const {
  std::vector<U> out(node_->data.begin(), node_->data.end());
  return TensorT<U>(shape(), std::move(out), requires_grad());
}

extern template class TensorT<float>;
extern template class TensorT<double>;

}  // namespace grvs
