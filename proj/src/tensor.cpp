#include "mxl/tensor.hpp"

#include <numeric>
#include <unordered_set>

namespace mxl::ad {
namespace {

thread_local bool t_grad_enabled = true;

std::size_t shape_numel(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

}  // namespace

Tensor Tensor::zeros(std::vector<std::size_t> shape, bool requires_grad) {
  auto n = std::make_shared<TensorNode>();
  n->value.assign(shape_numel(shape), 0.0);
  n->shape = std::move(shape);
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

Tensor Tensor::full(std::vector<std::size_t> shape, double v, bool requires_grad) {
  Tensor t = zeros(std::move(shape), requires_grad);
  for (auto& x : t.node()->value) x = v;
  return t;
}

Tensor Tensor::from_vector(std::vector<std::size_t> shape, std::vector<double> data,
                           bool requires_grad) {
  if (shape_numel(shape) != data.size())
    throw std::invalid_argument("Tensor::from_vector: data length does not match shape");
  auto n = std::make_shared<TensorNode>();
  n->shape = std::move(shape);
  n->value = std::move(data);
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

Tensor Tensor::scalar(double v, bool requires_grad) {
  return from_vector({1}, {v}, requires_grad);
}

bool grad_enabled() { return t_grad_enabled; }

NoGradGuard::NoGradGuard() : prev_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = prev_; }

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1)
    throw std::invalid_argument("backward: loss must be a defined scalar tensor");

  // iterative post-order DFS for a topological order
  std::vector<TensorNode*> order;
  std::unordered_set<TensorNode*> visited;
  std::vector<std::pair<TensorNode*, std::size_t>> stack;
  stack.emplace_back(loss.node().get(), 0);
  visited.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      TensorNode* p = node->parents[next++].get();
      if (visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  // fresh gradients for interior nodes; leaves accumulate across calls
  for (TensorNode* n : order) {
    if (n->is_leaf()) {
      if (n->requires_grad) n->ensure_grad();
    } else {
      n->grad.assign(n->value.size(), 0.0);
    }
  }
  TensorNode* root = loss.node().get();
  root->ensure_grad();
  root->grad[0] += 1.0;

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorNode* n = *it;
    if (n->backward_fn && !n->parents.empty()) n->backward_fn(*n);
  }
}

}  // namespace mxl::ad
