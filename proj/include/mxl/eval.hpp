#pragma once

#include <string>
#include <vector>

#include "mxl/training.hpp"

namespace mxl::eval {

/// Per-sample normalized-error aggregator for Eq.-style NMSE in dB.
/// Zero-power truth samples are excluded and counted.
class NmseAgg {
 public:
  void add(const CArray& truth, const CArray& estimate);
  void add_ratio(double ratio);
  double db() const;
  double ratio_mean() const;
  std::size_t samples() const { return n_; }
  std::size_t excluded() const { return excluded_; }

 private:
  double sum_ratio_ = 0.0;
  std::size_t n_ = 0;
  std::size_t excluded_ = 0;
};

double clamp_nmse_db(double db);  // [-120, +40]

/// First n_streams right singular vectors of h_dl [n_rx, n_tx]; columns
/// orthonormal (no power scaling applied here).
CArray svd_precoder(const CArray& h_dl, std::size_t n_streams);

/// Equal per-stream power with unit total power. precoders holds one
/// [n_tx, n_s] matrix per subcarrier; rate is averaged over subcarriers.
double sum_rate(const CArray& h_true_slot, const std::vector<CArray>& precoders,
                double sigma_n2);

/// Per-subcarrier SVD precoders built from a downlink estimate [n_rx,n_tx,n_sc].
std::vector<CArray> precoders_from_estimate(const CArray& h_dl_est, std::size_t n_streams);

enum class SweepKind { FreqCR, SpatCR, Snr, Velocity, SlotIndex };

struct MetricsReport {
  std::string sweep;
  std::vector<double> axes;
  struct Row {
    double axis;
    int slot;
    std::string method;
    double nmse_db;
    double sum_rate;
  };
  std::vector<Row> rows;
  pilots::OverheadCount overhead;
  double runtime_s = 0.0;
  std::string header_note;

  double value(double axis, int slot, const std::string& method) const;  // nmse_db lookup
  bool has(double axis, int slot, const std::string& method) const;
};

struct EvalContext {
  const train::Dataset* dataset = nullptr;
  const train::SfcenTrainOutput* sfcen = nullptr;
  const train::TudcenTrainOutput* tudcen = nullptr;
  std::uint64_t seed = 99;
};

MetricsReport run_sweep(SweepKind kind, const EvalContext& ctx);

void write_csv(const MetricsReport& report, const std::string& path);
void write_svg(const MetricsReport& report, const std::string& path);

const char* sweep_name(SweepKind kind);

}  // namespace mxl::eval
