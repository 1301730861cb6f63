#include "grvs/tensor.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "grvs/errors.hpp"

namespace grvs {

int64_t numel(const Shape& shape) {
  int64_t n = 1;
  for (int64_t d : shape) {
    if (d < 0) throw ShapeError("negative dimension in shape " + to_string(shape));
    n *= d;
  }
  return n;
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ')';
  return os.str();
}

template <typename T>
TensorT<T>::TensorT(Shape shape, std::vector<T> data, bool requires_grad) {
  if (grvs::numel(shape) != static_cast<int64_t>(data.size())) {
    throw ShapeError("data length " + std::to_string(data.size()) +
                     " does not match shape " + to_string(shape));
  }
  node_ = std::make_shared<detail::Node<T>>();
  node_->shape = std::move(shape);
  node_->data = std::move(data);
  node_->requires_grad = requires_grad;
}

template <typename T>
TensorT<T> TensorT<T>::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), T(0), requires_grad);
}

template <typename T>
TensorT<T> TensorT<T>::full(Shape shape, T value, bool requires_grad) {
  const int64_t n = grvs::numel(shape);
  return TensorT(std::move(shape), std::vector<T>(static_cast<size_t>(n), value),
                 requires_grad);
}

template <typename T>
TensorT<T> TensorT<T>::scalar(T value, bool requires_grad) {
  return TensorT(Shape{}, std::vector<T>{value}, requires_grad);
}

template <typename T>
const Shape& TensorT<T>::shape() const {
  if (!node_) throw ShapeError("use of an undefined tensor");
  return node_->shape;
}

template <typename T>
int64_t TensorT<T>::dim(int axis) const {
  const Shape& s = shape();
  if (axis < 0) axis += static_cast<int>(s.size());
  if (axis < 0 || axis >= static_cast<int>(s.size())) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " +
                     to_string(s));
  }
  return s[static_cast<size_t>(axis)];
}

template <typename T>
std::span<T> TensorT<T>::mutable_data() {
  if (!node_->is_leaf) throw ShapeError("mutable_data() on a non-leaf tensor");
  return node_->data;
}

template <typename T>
T TensorT<T>::item() const {
  if (numel() != 1) throw ShapeError("item() on tensor of shape " + to_string(shape()));
  return node_->data[0];
}

template <typename T>
TensorT<T>& TensorT<T>::set_requires_grad(bool on) {
  if (!node_->is_leaf) throw ShapeError("requires_grad can only be toggled on leaves");
  node_->requires_grad = on;
  return *this;
}

template <typename T>
void TensorT<T>::zero_grad() {
  if (node_) std::fill(node_->grad.begin(), node_->grad.end(), T(0));
}

template <typename T>
void TensorT<T>::backward() const {
  if (numel() != 1) {
    throw ShapeError("backward() needs a single-element tensor, got " + to_string(shape()));
  }
  if (!node_->requires_grad) return;

  // Iterative post-order DFS gives a topological order (parents before children).
  std::vector<detail::Node<T>*> order;
  std::unordered_set<detail::Node<T>*> seen;
  std::vector<std::pair<detail::Node<T>*, size_t>> stack{{node_.get(), 0}};
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      detail::Node<T>* p = n->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  for (detail::Node<T>* n : order) {
    if (!n->is_leaf) n->grad.assign(n->data.size(), T(0));
  }
  node_->ensure_grad()[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node<T>* n = *it;
    if (n->backward) n->backward(*n);
  }
}

template <typename T>
TensorT<T> TensorT<T>::detach() const {
  auto n = std::make_shared<detail::Node<T>>();
  n->shape = node_->shape;
  n->data = node_->data;
  return TensorT(std::move(n));
}

template <typename T>
TensorT<T> TensorT<T>::clone() const {
  TensorT out = detach();
  out.node_->requires_grad = requires_grad();
  return out;
}

template <typename T>
TensorT<T> TensorT<T>::make_result(Shape shape, std::vector<T> data,
                                   std::initializer_list<TensorT> parents,
                                   BackwardFn backward) {
  return make_result(std::move(shape), std::move(data), std::vector<TensorT>(parents),
                     std::move(backward));
}

template <typename T>
TensorT<T> TensorT<T>::make_result(Shape shape, std::vector<T> data,
                                   const std::vector<TensorT>& parents,
                                   BackwardFn backward) {
  TensorT out(std::move(shape), std::move(data));
  out.node_->is_leaf = false;
  const bool any = std::any_of(parents.begin(), parents.end(),
                               [](const TensorT& p) { return p.requires_grad(); });
  if (any) {
    out.node_->requires_grad = true;
    for (const TensorT& p : parents) out.node_->parents.push_back(p.node_);
    out.node_->backward = std::move(backward);
  }
  return out;
}

template class TensorT<float>;
template class TensorT<double>;

}  // namespace grvs
