#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mxl/baselines.hpp"
#include "mxl/sfcen.hpp"
#include "mxl/tudcen.hpp"

namespace mxl::train {

using ad::ParamStore;
using ad::Tensor;

struct TrainConfig {
  std::size_t batch = 64;
  double lr0 = 6e-5;
  std::size_t epochs = 200;
  std::size_t patience = 20;
  std::uint64_t seed = 7;
  std::size_t window_len = 8;  // sliding window, == n_slot
  std::size_t stride = 8;
  std::size_t n_train_traces = 0;
  std::size_t n_valid_traces = 0;
  std::size_t n_test_traces = 0;
  bool joint_tudcen = false;
  bool snr_randomize = false;
  double snr_lo = -5.0;
  double snr_hi = 20.0;

  void validate(const sim::SystemConfig& sys) const;
};

/// One sample: a whole sub-frame (uplink slot 0, downlink slots 1..n_slot-1).
struct Window {
  std::size_t trace = 0;
  std::size_t subframe = 0;
};

struct Dataset {
  sim::SystemConfig sys;
  sim::ChannelModelConfig model;  // calibration shared by every trace
  pilots::SrsPattern pattern;
  std::vector<sim::ChannelTrace> traces;
  std::vector<std::size_t> train_traces, valid_traces, test_traces;

  CArray uplink_slot(const Window& w, std::size_t slot) const;
  CArray downlink_slot(const Window& w, std::size_t slot) const;
};

/// Traces are generated with per-trace seeds derived from model.seed; splits
/// are by trace to avoid temporal leakage.
Dataset build_dataset(const sim::SystemConfig& sys, const sim::ChannelModelConfig& model,
                      const pilots::SrsPattern& pattern, const TrainConfig& cfg);

std::vector<Window> make_windows(const Dataset& ds, const std::vector<std::size_t>& trace_ids);
/// Spec form: one trace, one window per sub-frame.
std::vector<Window> make_windows(const sim::ChannelTrace& trace, const sim::SystemConfig& sys);

/// Deterministic per-window observation seed.
std::uint64_t window_seed(std::uint64_t base, const Window& w);

// Losses on the real/imag view. Truths are constants.
Tensor loss_mse_sfcen(const std::vector<Tensor>& preds, const std::vector<Tensor>& truths);
Tensor loss_nmse_udccn(const std::vector<Tensor>& preds, const std::vector<Tensor>& truths);
/// preds/truths: per window, slots 2..n_slot-1 in order.
Tensor loss_nmse_dcen(const std::vector<std::vector<Tensor>>& preds,
                      const std::vector<std::vector<Tensor>>& truths);

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double valid_loss = 0.0;
  double lr = 0.0;
};

struct TrainResult {
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
  double best_valid = 0.0;
};

void write_loss_csv(const std::string& path, const TrainResult& result);

double cosine_lr(double lr0, std::size_t epoch, std::size_t total_epochs);

struct SfcenHyper {
  std::size_t d_rep = 512;  // d_SR = d_FR
  std::size_t n_heads = 4;
  double p_attn = 0.5;
  double p_seg = 0.5;
  std::size_t r_s_up = 2;
  std::size_t r_f_up = 2;
};

struct TudcenHyper {
  std::size_t kernel = 3;
  std::size_t d_feat = 32;
  std::size_t n1 = 4;
  std::size_t n2 = 12;
  std::size_t d_emb = 512;
  std::size_t n_layers = 4;
  std::size_t n_heads = 4;
  std::size_t d_ff = 1024;
  double p_attn = 0.5;
  double p_ff = 0.5;
};

struct SfcenTrainOutput {
  sfcen::SfcenConfig cfg;
  ParamStore store;
  TrainResult result;
};

SfcenTrainOutput train_sfcen(const Dataset& ds, const TrainConfig& cfg, const SfcenHyper& hyper);

struct TudcenTrainOutput {
  tudcen::UdccnConfig ucfg;
  tudcen::SfseConfig scfg;
  tudcen::GenTransformerConfig gcfg;
  ParamStore udccn_store;
  ParamStore dcen_store;  // sfse + transformer (joint mode: everything here)
  TrainResult udccn_result;
  TrainResult dcen_result;
};

/// Trains UDCCN then DCEN sequentially (or jointly with cfg.joint_tudcen).
/// When sfcen_ctx is given, UDCCN consumes KDD-SFCEN slot-0 estimates;
/// otherwise ground-truth uplink (recorded by the caller in the manifest).
TudcenTrainOutput train_tudcen(const Dataset& ds, const TrainConfig& cfg,
                               const TudcenHyper& hyper, const SfcenTrainOutput* sfcen_ctx);

}  // namespace mxl::train
