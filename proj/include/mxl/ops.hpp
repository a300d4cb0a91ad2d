#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "mxl/tensor.hpp"

namespace mxl::ad {

// Shapes must match exactly, or b may be a row vector [d] / [1,d] broadcast
// over the last dimension of a.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor relu(const Tensor& a);

/// C = A [m,k] * B [k,n], 2-D only.
Tensor matmul(const Tensor& a, const Tensor& b);

Tensor softmax_lastdim(const Tensor& a);
Tensor layer_norm_lastdim(const Tensor& a, const Tensor& gain, const Tensor& bias);

/// Inverted dropout; identity when train == false or p == 0.
Tensor dropout(const Tensor& a, double p, bool train, std::uint64_t seed);

Tensor embedding_lookup(const Tensor& table, const std::vector<std::size_t>& idx);

/// x [C,H,W], w [O,C,k,k] (k odd), bias [O]; same zero padding.
Tensor conv2d_same(const Tensor& x, const Tensor& w, const Tensor& bias);

Tensor reshape(const Tensor& a, std::vector<std::size_t> shape);
Tensor transpose(const Tensor& a);  // 2-D
Tensor permute(const Tensor& a, const std::vector<std::size_t>& perm);
Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
Tensor slice(const Tensor& a, std::size_t axis, std::size_t start, std::size_t len);

/// out[i] = a[map[i]] where map is a permutation of 0..numel-1.
Tensor gather_bijection(const Tensor& a, std::shared_ptr<const std::vector<std::size_t>> map,
                        std::vector<std::size_t> out_shape);

Tensor sum_all(const Tensor& a);  // -> scalar

/// Central-difference check of the analytic gradients of f over the given
/// inputs (which must have requires_grad set). Returns the max relative
/// error over sampled coordinates. f must be deterministic.
double grad_check(const std::function<Tensor(const std::vector<Tensor>&)>& f,
                  const std::vector<Tensor>& inputs, double eps = 1e-5,
                  std::size_t max_coords_per_input = 64, std::uint64_t seed = 12345);

}  // namespace mxl::ad
