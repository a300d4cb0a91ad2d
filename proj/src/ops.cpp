#include "mxl/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <stdexcept>
#include <string>

#include "mxl/kernels.hpp"
#include "mxl/rng.hpp"

namespace mxl::ad {
namespace {

std::string shape_str(const std::vector<std::size_t>& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
  return out + "]";
}

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
  throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                              " vs " + shape_str(b.shape()));
}

Tensor make_op(std::vector<std::size_t> shape, std::vector<double> value,
               std::vector<Tensor> parents, std::function<void(TensorNode&)> bwd) {
  auto n = std::make_shared<TensorNode>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  bool track = grad_enabled();
  if (track) {
    bool any = false;
    for (const auto& p : parents) any = any || p.requires_grad();
    track = any;
  }
  if (track) {
    n->requires_grad = true;
    n->parents.reserve(parents.size());
    for (auto& p : parents) n->parents.push_back(p.node());
    n->backward_fn = std::move(bwd);
  }
  return Tensor(std::move(n));
}

enum class Bcast { Same, RowVec };

Bcast broadcast_kind(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() == b.shape()) return Bcast::Same;
  const std::size_t d = a.shape().empty() ? 1 : a.shape().back();
  if (b.numel() == d && (b.rank() == 1 || (b.rank() == 2 && b.dim(0) == 1))) return Bcast::RowVec;
  shape_error(op, a, b);
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  const Bcast kind = broadcast_kind("add", a, b);
  std::vector<double> out(a.numel());
  if (kind == Bcast::Same) {
    kern::ops().add(a.data(), b.data(), out.data(), a.numel());
  } else {
    const std::size_t d = a.shape().back();
    const std::size_t rows = a.numel() / d;
    for (std::size_t r = 0; r < rows; ++r)
      kern::ops().add(a.data() + r * d, b.data(), out.data() + r * d, d);
  }
  return make_op(a.shape(), std::move(out), {a, b}, [kind](TensorNode& n) {
    auto& pa = *n.parents[0];
    auto& pb = *n.parents[1];
    if (pa.requires_grad || !pa.is_leaf()) {
      pa.ensure_grad();
      kern::ops().axpy(1.0, n.grad.data(), pa.grad.data(), n.grad.size());
    }
    if (pb.requires_grad || !pb.is_leaf()) {
      pb.ensure_grad();
      if (kind == Bcast::Same) {
        kern::ops().axpy(1.0, n.grad.data(), pb.grad.data(), n.grad.size());
      } else {
        const std::size_t d = pb.numel();
        const std::size_t rows = n.grad.size() / d;
        for (std::size_t r = 0; r < rows; ++r)
          kern::ops().axpy(1.0, n.grad.data() + r * d, pb.grad.data(), d);
      }
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_error("sub", a, b);
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] - b.data()[i];
  return make_op(a.shape(), std::move(out), {a, b}, [](TensorNode& n) {
    auto& pa = *n.parents[0];
    auto& pb = *n.parents[1];
    if (pa.requires_grad || !pa.is_leaf()) {
      pa.ensure_grad();
      kern::ops().axpy(1.0, n.grad.data(), pa.grad.data(), n.grad.size());
    }
    if (pb.requires_grad || !pb.is_leaf()) {
      pb.ensure_grad();
      kern::ops().axpy(-1.0, n.grad.data(), pb.grad.data(), n.grad.size());
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  const Bcast kind = broadcast_kind("mul", a, b);
  std::vector<double> out(a.numel());
  if (kind == Bcast::Same) {
    kern::ops().mul(a.data(), b.data(), out.data(), a.numel());
  } else {
    const std::size_t d = a.shape().back();
    const std::size_t rows = a.numel() / d;
    for (std::size_t r = 0; r < rows; ++r)
      kern::ops().mul(a.data() + r * d, b.data(), out.data() + r * d, d);
  }
  return make_op(a.shape(), std::move(out), {a, b}, [kind](TensorNode& n) {
    auto& pa = *n.parents[0];
    auto& pb = *n.parents[1];
    const std::size_t total = n.grad.size();
    if (pa.requires_grad || !pa.is_leaf()) {
      pa.ensure_grad();
      if (kind == Bcast::Same) {
        for (std::size_t i = 0; i < total; ++i) pa.grad[i] += n.grad[i] * pb.value[i];
      } else {
        const std::size_t d = pb.numel();
        for (std::size_t i = 0; i < total; ++i) pa.grad[i] += n.grad[i] * pb.value[i % d];
      }
    }
    if (pb.requires_grad || !pb.is_leaf()) {
      pb.ensure_grad();
      if (kind == Bcast::Same) {
        for (std::size_t i = 0; i < total; ++i) pb.grad[i] += n.grad[i] * pa.value[i];
      } else {
        const std::size_t d = pb.numel();
        for (std::size_t i = 0; i < total; ++i) pb.grad[i % d] += n.grad[i] * pa.value[i];
      }
    }
  });
}

Tensor scale(const Tensor& a, double s) {
  std::vector<double> out(a.numel());
  kern::ops().scale(a.data(), s, out.data(), a.numel());
  return make_op(a.shape(), std::move(out), {a}, [s](TensorNode& n) {
    auto& pa = *n.parents[0];
    pa.ensure_grad();
    kern::ops().axpy(s, n.grad.data(), pa.grad.data(), n.grad.size());
  });
}

Tensor relu(const Tensor& a) {
  std::vector<double> out(a.numel());
  kern::ops().relu(a.data(), out.data(), a.numel());
  return make_op(a.shape(), std::move(out), {a}, [](TensorNode& n) {
    auto& pa = *n.parents[0];
    pa.ensure_grad();
    kern::ops().relu_bwd(pa.value.data(), n.grad.data(), pa.grad.data(), n.grad.size());
  });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) shape_error("matmul", a, b);
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<double> out(m * n);
  kern::ops().matmul_nn(a.data(), b.data(), out.data(), m, k, n, false);
  kern::bump_mac_count(static_cast<std::uint64_t>(m) * k * n);
  return make_op({m, n}, std::move(out), {a, b}, [m, k, n](TensorNode& node) {
    auto& pa = *node.parents[0];
    auto& pb = *node.parents[1];
    if (pa.requires_grad || !pa.is_leaf()) {
      pa.ensure_grad();
      kern::ops().matmul_nt(node.grad.data(), pb.value.data(), pa.grad.data(), m, n, k, true);
      kern::bump_mac_count(static_cast<std::uint64_t>(m) * n * k);
    }
    if (pb.requires_grad || !pb.is_leaf()) {
      pb.ensure_grad();
      kern::ops().matmul_tn(pa.value.data(), node.grad.data(), pb.grad.data(), k, m, n, true);
      kern::bump_mac_count(static_cast<std::uint64_t>(m) * n * k);
    }
  });
}

Tensor softmax_lastdim(const Tensor& a) {
  if (a.rank() == 0 || a.shape().back() == 0)
    throw std::invalid_argument("softmax_lastdim: empty last dimension");
  const std::size_t d = a.shape().back();
  const std::size_t rows = a.numel() / d;
  std::vector<double> out(a.numel());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = a.data() + r * d;
    double* y = out.data() + r * d;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < d; ++j) mx = std::max(mx, x[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      y[j] = std::exp(x[j] - mx);
      sum += y[j];
    }
    const double inv = 1.0 / sum;
    for (std::size_t j = 0; j < d; ++j) y[j] *= inv;
  }
  return make_op(a.shape(), std::move(out), {a}, [d](TensorNode& n) {
    auto& pa = *n.parents[0];
    pa.ensure_grad();
    const std::size_t rows = n.value.size() / d;
    for (std::size_t r = 0; r < rows; ++r) {
      const double* y = n.value.data() + r * d;
      const double* dy = n.grad.data() + r * d;
      double* dx = pa.grad.data() + r * d;
      const double dot = kern::ops().dot(dy, y, d);
      for (std::size_t j = 0; j < d; ++j) dx[j] += y[j] * (dy[j] - dot);
    }
  });
}

Tensor layer_norm_lastdim(const Tensor& a, const Tensor& gain, const Tensor& bias) {
  const std::size_t d = a.shape().back();
  if (gain.numel() != d || bias.numel() != d)
    throw std::invalid_argument("layer_norm_lastdim: gain/bias length must match the last dim");
  const std::size_t rows = a.numel() / d;
  std::vector<double> out(a.numel());
  auto yhat = std::make_shared<std::vector<double>>(a.numel());
  auto inv_sigma = std::make_shared<std::vector<double>>(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = a.data() + r * d;
    double mu = kern::ops().sum(x, d) / static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) var += (x[j] - mu) * (x[j] - mu);
    var /= static_cast<double>(d);
    const double sigma = std::max(std::sqrt(var), 1e-30);
    const double inv = 1.0 / sigma;
    (*inv_sigma)[r] = inv;
    for (std::size_t j = 0; j < d; ++j) {
      const double yh = (x[j] - mu) * inv;
      (*yhat)[r * d + j] = yh;
      out[r * d + j] = yh * gain.data()[j] + bias.data()[j];
    }
  }
  return make_op(a.shape(), std::move(out), {a, gain, bias},
                 [d, yhat, inv_sigma](TensorNode& n) {
                   auto& pa = *n.parents[0];
                   auto& pg = *n.parents[1];
                   auto& pb = *n.parents[2];
                   const std::size_t rows = n.value.size() / d;
                   const bool want_a = pa.requires_grad || !pa.is_leaf();
                   const bool want_g = pg.requires_grad || !pg.is_leaf();
                   const bool want_b = pb.requires_grad || !pb.is_leaf();
                   if (want_a) pa.ensure_grad();
                   if (want_g) pg.ensure_grad();
                   if (want_b) pb.ensure_grad();
                   std::vector<double> dyh(d);
                   for (std::size_t r = 0; r < rows; ++r) {
                     const double* dy = n.grad.data() + r * d;
                     const double* yh = yhat->data() + r * d;
                     if (want_g)
                       for (std::size_t j = 0; j < d; ++j) pg.grad[j] += dy[j] * yh[j];
                     if (want_b)
                       for (std::size_t j = 0; j < d; ++j) pb.grad[j] += dy[j];
                     if (want_a) {
                       for (std::size_t j = 0; j < d; ++j) dyh[j] = dy[j] * pg.value[j];
                       const double m1 = kern::ops().sum(dyh.data(), d) / static_cast<double>(d);
                       const double m2 = kern::ops().dot(dyh.data(), yh, d) / static_cast<double>(d);
                       const double inv = (*inv_sigma)[r];
                       double* dx = pa.grad.data() + r * d;
                       for (std::size_t j = 0; j < d; ++j)
                         dx[j] += (dyh[j] - m1 - yh[j] * m2) * inv;
                     }
                   }
                 });
}

Tensor dropout(const Tensor& a, double p, bool train, std::uint64_t seed) {
  if (!train || p <= 0.0) return a;
  if (p >= 1.0) throw std::invalid_argument("dropout: p must be < 1");
  Rng rng(seed);
  auto mask = std::make_shared<std::vector<double>>(a.numel());
  const double keep_scale = 1.0 / (1.0 - p);
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double m = rng.uniform() >= p ? keep_scale : 0.0;
    (*mask)[i] = m;
    out[i] = a.data()[i] * m;
  }
  return make_op(a.shape(), std::move(out), {a}, [mask](TensorNode& n) {
    auto& pa = *n.parents[0];
    pa.ensure_grad();
    for (std::size_t i = 0; i < n.grad.size(); ++i) pa.grad[i] += n.grad[i] * (*mask)[i];
  });
}

Tensor embedding_lookup(const Tensor& table, const std::vector<std::size_t>& idx) {
  if (table.rank() != 2) throw std::invalid_argument("embedding_lookup: table must be 2-D");
  const std::size_t rows = table.dim(0), d = table.dim(1);
  for (auto i : idx)
    if (i >= rows)
      throw std::out_of_range("embedding_lookup: index " + std::to_string(i) +
                              " out of range for table with " + std::to_string(rows) + " rows");
  std::vector<double> out(idx.size() * d);
  for (std::size_t r = 0; r < idx.size(); ++r)
    std::memcpy(out.data() + r * d, table.data() + idx[r] * d, d * sizeof(double));
  auto idx_copy = std::make_shared<std::vector<std::size_t>>(idx);
  return make_op({idx.size(), d}, std::move(out), {table}, [idx_copy, d](TensorNode& n) {
    auto& pt = *n.parents[0];
    pt.ensure_grad();
    for (std::size_t r = 0; r < idx_copy->size(); ++r)
      kern::ops().axpy(1.0, n.grad.data() + r * d, pt.grad.data() + (*idx_copy)[r] * d, d);
  });
}

Tensor conv2d_same(const Tensor& x, const Tensor& w, const Tensor& bias) {
  if (x.rank() != 3 || w.rank() != 4) shape_error("conv2d_same", x, w);
  const std::size_t C = x.dim(0), H = x.dim(1), W = x.dim(2);
  const std::size_t O = w.dim(0), k = w.dim(2);
  if (w.dim(1) != C || w.dim(3) != k || bias.numel() != O) shape_error("conv2d_same", x, w);
  if (k % 2 == 0) throw std::invalid_argument("conv2d_same: kernel size must be odd");
  const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(k / 2);
  std::vector<double> out(O * H * W);
  const std::ptrdiff_t sh = static_cast<std::ptrdiff_t>(H), sw = static_cast<std::ptrdiff_t>(W);
  for (std::size_t o = 0; o < O; ++o)
    for (std::size_t h = 0; h < H; ++h)
      for (std::size_t ww = 0; ww < W; ++ww) {
        double acc = bias.data()[o];
        for (std::size_t c = 0; c < C; ++c)
          for (std::size_t u = 0; u < k; ++u) {
            const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(h + u) - pad;
            if (ih < 0 || ih >= sh) continue;
            for (std::size_t v = 0; v < k; ++v) {
              const std::ptrdiff_t iw = static_cast<std::ptrdiff_t>(ww + v) - pad;
              if (iw < 0 || iw >= sw) continue;
              acc += x.data()[(c * H + ih) * W + iw] * w.data()[((o * C + c) * k + u) * k + v];
            }
          }
        out[(o * H + h) * W + ww] = acc;
      }
  return make_op({O, H, W}, std::move(out), {x, w, bias}, [C, H, W, O, k, pad](TensorNode& n) {
    auto& px = *n.parents[0];
    auto& pw = *n.parents[1];
    auto& pb = *n.parents[2];
    const bool want_x = px.requires_grad || !px.is_leaf();
    const bool want_w = pw.requires_grad || !pw.is_leaf();
    const bool want_b = pb.requires_grad || !pb.is_leaf();
    if (want_x) px.ensure_grad();
    if (want_w) pw.ensure_grad();
    if (want_b) pb.ensure_grad();
    const std::ptrdiff_t sh = static_cast<std::ptrdiff_t>(H), sw = static_cast<std::ptrdiff_t>(W);
    for (std::size_t o = 0; o < O; ++o)
      for (std::size_t h = 0; h < H; ++h)
        for (std::size_t ww = 0; ww < W; ++ww) {
          const double g = n.grad[(o * H + h) * W + ww];
          if (g == 0.0) continue;
          if (want_b) pb.grad[o] += g;
          for (std::size_t c = 0; c < C; ++c)
            for (std::size_t u = 0; u < k; ++u) {
              const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(h + u) - pad;
              if (ih < 0 || ih >= sh) continue;
              for (std::size_t v = 0; v < k; ++v) {
                const std::ptrdiff_t iw = static_cast<std::ptrdiff_t>(ww + v) - pad;
                if (iw < 0 || iw >= sw) continue;
                const std::size_t xi = (c * H + ih) * W + iw;
                const std::size_t wi = ((o * C + c) * k + u) * k + v;
                if (want_w) pw.grad[wi] += g * px.value[xi];
                if (want_x) px.grad[xi] += g * pw.value[wi];
              }
            }
        }
  });
}

Tensor reshape(const Tensor& a, std::vector<std::size_t> shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  if (n != a.numel())
    throw std::invalid_argument("reshape: element count mismatch for " + shape_str(a.shape()));
  std::vector<double> out(a.values());
  return make_op(std::move(shape), std::move(out), {a}, [](TensorNode& node) {
    auto& pa = *node.parents[0];
    pa.ensure_grad();
    kern::ops().axpy(1.0, node.grad.data(), pa.grad.data(), node.grad.size());
  });
}

Tensor permute(const Tensor& a, const std::vector<std::size_t>& perm) {
  const auto& s = a.shape();
  if (perm.size() != s.size()) throw std::invalid_argument("permute: rank mismatch");
  std::vector<std::size_t> out_shape(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) out_shape[i] = s.at(perm[i]);
  // strides of the input in output-axis order
  std::vector<std::size_t> in_strides(s.size(), 1);
  for (std::size_t i = s.size() - 1; i-- > 0;) in_strides[i] = in_strides[i + 1] * s[i + 1];
  std::vector<std::size_t> strides(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) strides[i] = in_strides[perm[i]];
  auto map = std::make_shared<std::vector<std::size_t>>(a.numel());
  std::vector<std::size_t> ix(perm.size(), 0);
  for (std::size_t o = 0; o < a.numel(); ++o) {
    std::size_t src = 0;
    for (std::size_t i = 0; i < perm.size(); ++i) src += ix[i] * strides[i];
    (*map)[o] = src;
    for (std::size_t i = perm.size(); i-- > 0;) {
      if (++ix[i] < out_shape[i]) break;
      ix[i] = 0;
    }
  }
  return gather_bijection(a, map, out_shape);
}

Tensor transpose(const Tensor& a) {
  if (a.rank() != 2) throw std::invalid_argument("transpose: expected a 2-D tensor");
  return permute(a, {1, 0});
}

Tensor gather_bijection(const Tensor& a, std::shared_ptr<const std::vector<std::size_t>> map,
                        std::vector<std::size_t> out_shape) {
  if (map->size() != a.numel())
    throw std::invalid_argument("gather_bijection: map length must equal element count");
  std::vector<double> out(map->size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[(*map)[i]];
  return make_op(std::move(out_shape), std::move(out), {a}, [map](TensorNode& n) {
    auto& pa = *n.parents[0];
    pa.ensure_grad();
    for (std::size_t i = 0; i < n.grad.size(); ++i) pa.grad[(*map)[i]] += n.grad[i];
  });
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  if (parts.empty()) throw std::invalid_argument("concat: no inputs");
  const auto& s0 = parts[0].shape();
  if (axis >= s0.size()) throw std::invalid_argument("concat: axis out of range");
  std::vector<std::size_t> out_shape = s0;
  std::size_t axis_total = 0;
  for (const auto& p : parts) {
    const auto& s = p.shape();
    if (s.size() != s0.size()) throw std::invalid_argument("concat: rank mismatch");
    for (std::size_t i = 0; i < s.size(); ++i)
      if (i != axis && s[i] != s0[i]) throw std::invalid_argument("concat: shape mismatch");
    axis_total += s[axis];
  }
  out_shape[axis] = axis_total;

  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= s0[i];
  for (std::size_t i = axis + 1; i < s0.size(); ++i) inner *= s0[i];

  std::vector<double> out(outer * axis_total * inner);
  std::size_t off = 0;
  std::vector<std::size_t> offsets;
  for (const auto& p : parts) {
    offsets.push_back(off);
    const std::size_t len = p.dim(axis);
    for (std::size_t o = 0; o < outer; ++o)
      std::memcpy(out.data() + (o * axis_total + off) * inner, p.data() + o * len * inner,
                  len * inner * sizeof(double));
    off += len;
  }
  auto lens = std::make_shared<std::vector<std::size_t>>();
  for (const auto& p : parts) lens->push_back(p.dim(axis));
  return make_op(std::move(out_shape), std::move(out), parts,
                 [outer, inner, axis_total, lens](TensorNode& n) {
                   std::size_t off = 0;
                   for (std::size_t pi = 0; pi < n.parents.size(); ++pi) {
                     auto& p = *n.parents[pi];
                     const std::size_t len = (*lens)[pi];
                     if (p.requires_grad || !p.is_leaf()) {
                       p.ensure_grad();
                       for (std::size_t o = 0; o < outer; ++o)
                         kern::ops().axpy(1.0, n.grad.data() + (o * axis_total + off) * inner,
                                          p.grad.data() + o * len * inner, len * inner);
                     }
                     off += len;
                   }
                 });
}

Tensor slice(const Tensor& a, std::size_t axis, std::size_t start, std::size_t len) {
  const auto& s = a.shape();
  if (axis >= s.size() || start + len > s[axis])
    throw std::invalid_argument("slice: out of range on axis " + std::to_string(axis));
  std::vector<std::size_t> out_shape = s;
  out_shape[axis] = len;
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
  const std::size_t src_axis = s[axis];
  std::vector<double> out(outer * len * inner);
  for (std::size_t o = 0; o < outer; ++o)
    std::memcpy(out.data() + o * len * inner, a.data() + (o * src_axis + start) * inner,
                len * inner * sizeof(double));
  return make_op(std::move(out_shape), std::move(out), {a},
                 [outer, inner, src_axis, start, len](TensorNode& n) {
                   auto& pa = *n.parents[0];
                   pa.ensure_grad();
                   for (std::size_t o = 0; o < outer; ++o)
                     kern::ops().axpy(1.0, n.grad.data() + o * len * inner,
                                      pa.grad.data() + (o * src_axis + start) * inner, len * inner);
                 });
}

Tensor sum_all(const Tensor& a) {
  const double s = kern::ops().sum(a.data(), a.numel());
  return make_op({1}, {s}, {a}, [](TensorNode& n) {
    auto& pa = *n.parents[0];
    pa.ensure_grad();
    const double g = n.grad[0];
    for (auto& v : pa.grad) v += g;
  });
}

double grad_check(const std::function<Tensor(const std::vector<Tensor>&)>& f,
                  const std::vector<Tensor>& inputs, double eps, std::size_t max_coords_per_input,
                  std::uint64_t seed) {
  for (const auto& in : inputs)
    if (!in.requires_grad())
      throw std::invalid_argument("grad_check: all inputs must have requires_grad set");
  for (const auto& in : inputs) in.node()->grad.clear();
  Tensor loss = f(inputs);
  backward(loss);
  std::vector<std::vector<double>> analytic;
  for (const auto& in : inputs)
    analytic.push_back(in.grad_populated() ? in.grad() : std::vector<double>(in.numel(), 0.0));

  Rng rng(seed);
  double max_rel = 0.0;
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    const Tensor& in = inputs[t];
    std::vector<std::size_t> coords;
    if (in.numel() <= max_coords_per_input) {
      coords.resize(in.numel());
      for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
    } else {
      for (std::size_t i = 0; i < max_coords_per_input; ++i) coords.push_back(rng.index(in.numel()));
    }
    for (std::size_t c : coords) {
      double& x = in.node()->value[c];
      const double saved = x;
      NoGradGuard guard;
      x = saved + eps;
      const double up = f(inputs).item();
      x = saved - eps;
      const double dn = f(inputs).item();
      x = saved;
      const double g_num = (up - dn) / (2.0 * eps);
      const double g_ana = analytic[t][c];
      const double rel =
          std::abs(g_ana - g_num) / std::max({std::abs(g_ana), std::abs(g_num), 1e-8});
      max_rel = std::max(max_rel, rel);
    }
  }
  return max_rel;
}

}  // namespace mxl::ad
