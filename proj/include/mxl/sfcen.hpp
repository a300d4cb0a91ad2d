#pragma once

#include <string>

#include "mxl/baselines.hpp"
#include "mxl/ops.hpp"
#include "mxl/param_store.hpp"
#include "mxl/pilots.hpp"

namespace mxl::sfcen {

using ad::ParamStore;
using ad::Tensor;

/// One attention-based sub-element extrapolation block.
struct AseemConfig {
  std::size_t n_in = 0;     // input elements
  std::size_t d_rep = 64;   // representation width
  std::size_t n_heads = 4;
  std::size_t upscale = 2;  // sub-elements generated per element
  double p_attn = 0.5;
  double p_seg = 0.5;

  void validate() const;
};

/// Learnable positional encoding rows 0..n_in-1 from the table at
/// prefix + "pe".
Tensor positional_encoding(std::size_t n_in, std::size_t d_rep, const ParamStore& store,
                           const std::string& prefix);

/// Multi-head self-attention; mask (if given) is added to the attention
/// logits before the softmax.
Tensor mhsa(const Tensor& x_tilde, const AseemConfig& cfg, const ParamStore& store,
            const std::string& prefix, bool train, Rng* drop_rng,
            const Tensor* mask = nullptr);

/// Sub-element generation plus its projected residual and layer norm;
/// widens each element to upscale * d_rep.
Tensor seg(const Tensor& x_ln1, const AseemConfig& cfg, const ParamStore& store,
           const std::string& prefix, bool train, Rng* drop_rng);

/// [n, r*d] -> [r*n, d]: output row r*n+j, column c takes input (n, c*r+j).
Tensor sub_element_shuffle(const Tensor& x_ln2, std::size_t r);
Tensor sub_element_unshuffle(const Tensor& x_e, std::size_t r);

Tensor aseem_forward(const Tensor& x, const AseemConfig& cfg, const ParamStore& store,
                     const std::string& prefix, bool train, Rng* drop_rng);

void aseem_init(const AseemConfig& cfg, ParamStore& store, const std::string& prefix, Rng& rng);

/// Progressive spatial-then-frequency extrapolator configuration.
struct SfcenConfig {
  std::size_t r_s_up = 2;  // spatial upscale per stage
  std::size_t r_f_up = 2;  // frequency upscale per stage
  std::size_t n_se = 0;    // spatial stage count
  std::size_t n_fe = 0;    // frequency stage count
  std::size_t n_si = 0;    // initial spatial elements (observed antennas)
  std::size_t n_fi = 0;    // initial frequency elements (pilot subcarriers)
  std::size_t d_sr = 64;
  std::size_t d_fr = 64;
  std::size_t n_heads = 4;
  double p_attn = 0.5;
  double p_seg = 0.5;

  static SfcenConfig derive(const sim::SystemConfig& sys, const pilots::SrsPattern& pattern,
                            std::size_t d_sr, std::size_t d_fr, std::size_t n_heads,
                            std::size_t r_s_up = 2, std::size_t r_f_up = 2, double p_attn = 0.5,
                            double p_seg = 0.5);
  void validate(const sim::SystemConfig& sys) const;
};

std::size_t ceil_log(std::size_t ratio, std::size_t base);

/// LS coarse estimate -> full-grid uplink CSI with a nearest-neighbor
/// broadcast of the LS estimate as a global residual.
class SfcenNet {
 public:
  SfcenNet(SfcenConfig cfg, sim::SystemConfig sys, pilots::SrsPattern pattern);

  void init_params(ParamStore& store, Rng& rng) const;

  /// Output layout [n_tx, n_rx, n_sc, 2] (re/im last).
  Tensor forward(const baselines::CoarseEstimate& coarse, const ParamStore& store, bool train,
                 Rng* drop_rng) const;

  /// Inference convenience (no tape, dropout off).
  CArray estimate(const baselines::CoarseEstimate& coarse, const ParamStore& store) const;

  const SfcenConfig& config() const { return cfg_; }

  Tensor coarse_input(const baselines::CoarseEstimate& coarse) const;
  Tensor broadcast_ls(const baselines::CoarseEstimate& coarse) const;

 private:
  SfcenConfig cfg_;
  sim::SystemConfig sys_;
  pilots::SrsPattern pattern_;
};

/// Real [.., 2]-packed view of complex CSI and back.
Tensor carray_to_tensor(const CArray& a);
CArray tensor_to_carray(const Tensor& t);

}  // namespace mxl::sfcen
