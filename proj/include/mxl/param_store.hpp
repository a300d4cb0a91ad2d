#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mxl/rng.hpp"
#include "mxl/tensor.hpp"

namespace mxl::ad {

/// Named trainable tensors plus adaptive-moment optimizer state.
class ParamStore {
 public:
  Tensor& create(const std::string& name, std::vector<std::size_t> shape);
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  bool has(const std::string& name) const { return params_.count(name) != 0; }

  std::vector<std::string> names() const;
  std::size_t total_params() const;
  std::size_t param_count(const std::string& name) const { return at(name).numel(); }

  void zero_grads();
  std::uint64_t step() const { return step_; }
  void reset_optimizer();

  void save(const std::string& path, bool as_f32 = false) const;
  void load(const std::string& path);

  friend void adam_step(ParamStore& store, double lr, double beta1, double beta2, double eps);

 private:
  struct Moments {
    std::vector<double> m, v;
  };
  std::map<std::string, Tensor> params_;
  std::map<std::string, Moments> moments_;
  std::uint64_t step_ = 0;
};

/// Bias-corrected adaptive-moment update; clears gradients afterwards.
/// Throws listing any parameter whose gradient was never populated.
void adam_step(ParamStore& store, double lr, double beta1 = 0.9, double beta2 = 0.999,
               double eps = 1e-8);

// init helpers
void init_uniform(Tensor& t, Rng& rng, double lo, double hi);
void init_xavier(Tensor& t, Rng& rng);      // fan-based uniform for 2-D weights
void init_constant(Tensor& t, double v);

}  // namespace mxl::ad
