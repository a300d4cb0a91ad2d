#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

namespace mxl::ad {

struct TensorNode {
  std::vector<std::size_t> shape;
  std::vector<double> value;
  std::vector<double> grad;  // allocated lazily by backward
  bool requires_grad = false;
  std::vector<std::shared_ptr<TensorNode>> parents;
  std::function<void(TensorNode&)> backward_fn;

  std::size_t numel() const { return value.size(); }
  bool is_leaf() const { return parents.empty(); }
  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  }
};

/// Value-semantics handle to a tape node. Real-valued, f64, row-major.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<TensorNode> n) : node_(std::move(n)) {}

  static Tensor zeros(std::vector<std::size_t> shape, bool requires_grad = false);
  static Tensor full(std::vector<std::size_t> shape, double v, bool requires_grad = false);
  static Tensor from_vector(std::vector<std::size_t> shape, std::vector<double> data,
                            bool requires_grad = false);
  static Tensor scalar(double v, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const std::vector<std::size_t>& shape() const { return node_->shape; }
  std::size_t numel() const { return node_->numel(); }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t i) const { return node_->shape.at(i); }

  double* data() { return node_->value.data(); }
  const double* data() const { return node_->value.data(); }
  std::vector<double>& values() { return node_->value; }
  const std::vector<double>& values() const { return node_->value; }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool rg) { node_->requires_grad = rg; }

  const std::vector<double>& grad() const { return node_->grad; }
  bool grad_populated() const { return node_->grad.size() == node_->value.size(); }
  void zero_grad() { node_->grad.clear(); }

  /// Scalar extraction; throws unless numel() == 1.
  double item() const {
    if (numel() != 1) throw std::invalid_argument("Tensor::item: not a scalar");
    return node_->value[0];
  }

  std::shared_ptr<TensorNode> node() const { return node_; }

 private:
  std::shared_ptr<TensorNode> node_;
};

/// Tape recording is on by default; disable for inference / finite differences.
bool grad_enabled();
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

/// Reverse pass from a scalar loss. Leaf gradients accumulate across calls;
/// intermediate gradients are reset per call.
void backward(const Tensor& loss);

}  // namespace mxl::ad
