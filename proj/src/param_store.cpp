#include "mxl/param_store.hpp"

#include <cmath>
#include <stdexcept>

#include "mxl/io_container.hpp"

namespace mxl::ad {

Tensor& ParamStore::create(const std::string& name, std::vector<std::size_t> shape) {
  if (params_.count(name))
    throw std::invalid_argument("ParamStore: duplicate parameter '" + name + "'");
  auto [it, ok] = params_.emplace(name, Tensor::zeros(std::move(shape), true));
  return it->second;
}

Tensor& ParamStore::at(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end())
    throw std::out_of_range("ParamStore: unknown parameter '" + name + "'");
  return it->second;
}

const Tensor& ParamStore::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end())
    throw std::out_of_range("ParamStore: unknown parameter '" + name + "'");
  return it->second;
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(params_.size());
  for (const auto& [k, v] : params_) out.push_back(k);
  return out;
}

std::size_t ParamStore::total_params() const {
  std::size_t n = 0;
  for (const auto& [k, v] : params_) n += v.numel();
  return n;
}

void ParamStore::zero_grads() {
  for (auto& [k, v] : params_) v.zero_grad();
}

void ParamStore::reset_optimizer() {
  moments_.clear();
  step_ = 0;
}

void ParamStore::save(const std::string& path, bool as_f32) const {
  std::vector<io::Record> records;
  records.reserve(params_.size());
  for (const auto& [name, t] : params_) {
    io::Record r;
    r.name = name;
    r.dtype = as_f32 ? io::ElemType::kF32 : io::ElemType::kF64;
    for (auto d : t.shape()) r.dims.push_back(static_cast<std::uint32_t>(d));
    r.real = t.values();
    records.push_back(std::move(r));
  }
  io::write_container(path, records);
}

void ParamStore::load(const std::string& path) {
  const auto records = io::read_container(path);
  for (const auto& r : records) {
    if (r.dtype != io::ElemType::kF32 && r.dtype != io::ElemType::kF64)
      throw std::runtime_error("ParamStore: checkpoint record '" + r.name + "' is not real-valued");
    std::vector<std::size_t> shape(r.dims.begin(), r.dims.end());
    Tensor* t;
    if (params_.count(r.name)) {
      t = &params_.at(r.name);
      if (t->shape() != shape)
        throw std::runtime_error("ParamStore: shape mismatch for '" + r.name + "' in " + path);
    } else {
      t = &create(r.name, shape);
    }
    t->values() = r.real;
    t->zero_grad();
  }
}

void adam_step(ParamStore& store, double lr, double beta1, double beta2, double eps) {
  std::string missing;
  for (const auto& [name, t] : store.params_)
    if (!t.grad_populated()) missing += missing.empty() ? name : ", " + name;
  if (!missing.empty())
    throw std::runtime_error("adam_step: missing gradients for: " + missing);

  store.step_ += 1;
  const double t = static_cast<double>(store.step_);
  const double bc1 = 1.0 - std::pow(beta1, t);
  const double bc2 = 1.0 - std::pow(beta2, t);
  for (auto& [name, p] : store.params_) {
    auto& mom = store.moments_[name];
    const std::size_t n = p.numel();
    if (mom.m.size() != n) {
      mom.m.assign(n, 0.0);
      mom.v.assign(n, 0.0);
    }
    const auto& g = p.grad();
    auto& val = p.values();
    for (std::size_t i = 0; i < n; ++i) {
      mom.m[i] = beta1 * mom.m[i] + (1.0 - beta1) * g[i];
      mom.v[i] = beta2 * mom.v[i] + (1.0 - beta2) * g[i] * g[i];
      const double mhat = mom.m[i] / bc1;
      const double vhat = mom.v[i] / bc2;
      val[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
    p.zero_grad();
  }
}

void init_uniform(Tensor& t, Rng& rng, double lo, double hi) {
  for (auto& v : t.values()) v = rng.uniform(lo, hi);
}

void init_xavier(Tensor& t, Rng& rng) {
  const auto& s = t.shape();
  const double fan_in = static_cast<double>(s.size() >= 1 ? s[0] : 1);
  const double fan_out = static_cast<double>(s.size() >= 2 ? s[1] : 1);
  const double a = std::sqrt(6.0 / (fan_in + fan_out));
  init_uniform(t, rng, -a, a);
}

void init_constant(Tensor& t, double v) {
  for (auto& x : t.values()) x = v;
}

}  // namespace mxl::ad
