#pragma once

#include <memory>
#include <vector>

#include "mxl/sfcen.hpp"

namespace mxl::tudcen {

using ad::ParamStore;
using ad::Tensor;

/// Convolution-based uplink-downlink calibration network.
struct UdccnConfig {
  std::size_t kernel = 3;  // odd
  std::size_t d_feat = 32;

  void validate() const;
};

/// Spatial-frequency sampling embedding (strided antenna/subcarrier groups).
struct SfseConfig {
  std::size_t n1 = 4;   // spatial sampling factor
  std::size_t n2 = 12;  // frequency sampling factor
  std::size_t d_emb = 512;

  void validate(const sim::SystemConfig& sys) const;
  std::size_t group_width(const sim::SystemConfig& sys) const {
    return 2 * sys.n_rx * (sys.n_tx / n1) * (sys.n_sc / n2);
  }
  std::size_t n_groups() const { return n1 * n2; }
  /// Learnable weight count of the embedding linear layer.
  std::size_t linear_param_count(const sim::SystemConfig& sys) const {
    return group_width(sys) * d_emb;
  }
};

struct GenTransformerConfig {
  std::size_t n_layers = 4;
  std::size_t d_rep = 512;
  std::size_t n_heads = 4;
  std::size_t d_ff = 2048;
  double p_attn = 0.5;
  double p_ff = 0.5;
  std::size_t max_tokens = 7;  // n_slot - 1

  void validate() const;
};

/// [n,n] additive attention mask: -inf strictly above the diagonal.
Tensor causal_mask(std::size_t n_tokens);

/// The slot-level extrapolation stack: calibration, embedding, and the
/// autoregressive generative transformer.
class TudcenNet {
 public:
  TudcenNet(UdccnConfig ucfg, SfseConfig scfg, GenTransformerConfig gcfg, sim::SystemConfig sys);

  void init_params(ParamStore& store, Rng& rng) const;
  /// Staged training keeps calibration and extrapolation in separate stores.
  void init_udccn_params(ParamStore& store, Rng& rng) const;
  void init_dcen_params(ParamStore& store, Rng& rng) const;

  /// Uplink estimate [n_tx, n_rx, n_sc, 2] -> calibrated downlink slot-1
  /// estimate [n_rx, n_tx, n_sc, 2].
  Tensor udccn_forward(const Tensor& h_ul_hat, const ParamStore& store, bool train,
                       Rng* drop_rng) const;

  /// Downlink channel [n_rx, n_tx, n_sc, 2] -> tokens [n1*n2, d_emb].
  Tensor sfse_embed(const Tensor& h_dl, const ParamStore& store) const;
  /// Tokens [n1*n2, d_emb] -> downlink channel [n_rx, n_tx, n_sc, 2].
  Tensor sfse_inverse(const Tensor& tokens, const ParamStore& store) const;

  /// One token sequence [n_tokens, d_rep] through the masked decoder stack.
  Tensor gen_transformer_forward(const Tensor& tokens, const ParamStore& store, bool train,
                                 Rng* drop_rng) const;

  /// Teacher forcing: ground-truth slot channels 1..n_slot-2 in, predicted
  /// channels for slots 2..n_slot-1 out (position t predicts slot t+2).
  std::vector<Tensor> teacher_forced_predictions(const std::vector<Tensor>& dl_slots,
                                                 const ParamStore& store, bool train,
                                                 Rng* drop_rng) const;

  /// Free-running rollout from the calibrated slot-1 channel; returns
  /// n_slot-2 extrapolated downlink channels (slots 2..n_slot-1).
  std::vector<CArray> extrapolate_slots(const CArray& h_dl_slot1, const ParamStore& store,
                                        std::size_t n_slot) const;

  const UdccnConfig& udccn_config() const { return ucfg_; }
  const SfseConfig& sfse_config() const { return scfg_; }
  const GenTransformerConfig& gen_config() const { return gcfg_; }

 private:
  UdccnConfig ucfg_;
  SfseConfig scfg_;
  GenTransformerConfig gcfg_;
  sim::SystemConfig sys_;
  std::shared_ptr<std::vector<std::size_t>> embed_map_;    // rearrangement
  std::shared_ptr<std::vector<std::size_t>> inverse_map_;  // its inverse
};

}  // namespace mxl::tudcen
