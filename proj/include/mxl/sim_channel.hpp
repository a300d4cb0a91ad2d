#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mxl/carray.hpp"
#include "mxl/kvconfig.hpp"
#include "mxl/rng.hpp"

namespace mxl::sim {

/// System-level parameters (antenna counts, OFDM grid, frame numerology).
struct SystemConfig {
  std::size_t n_tx = 32;       // BS antennas
  std::size_t n_rx = 4;        // UE antennas
  std::size_t n_rf = 16;       // BS RF chains
  std::size_t n_rb = 52;       // resource blocks
  std::size_t n_sc = 624;      // subcarriers, 12 * n_rb
  double carrier_hz = 28e9;
  double scs_hz = 120e3;
  unsigned numerology = 3;
  std::size_t n_slot = 8;      // slots per sub-frame, 2^numerology
  std::size_t n_subframes = 100;
  double srs_period_ms = 1.0;
  double ue_velocity_kmh = 60.0;
  double snr_db = 5.0;

  void validate() const;
  double slot_duration_s() const { return 1e-3 / static_cast<double>(n_slot); }
};

/// Clustered multipath model parameters plus transceiver calibration
/// coefficients (hardware asymmetry between uplink and downlink chains).
struct ChannelModelConfig {
  std::size_t n_clusters = 5;
  std::size_t rays_per_cluster = 4;
  double delay_spread_s = 100e-9;
  std::uint64_t seed = 1;
  std::vector<cplx> calib_bs;  // length n_tx
  std::vector<cplx> calib_ue;  // length n_rx
  double bs_sector_rad = 1.0471975511965976;  // +-60 deg AoD by default
  double ue_sector_rad = 1.5707963267948966;  // +-90 deg AoA
  double intra_cluster_spread_rad = 0.035;
  double cluster_shadow_db = 3.0;

  void validate(const SystemConfig& cfg) const;
};

enum class SlotRole : std::uint8_t { Special, Downlink };

struct FrameSchedule {
  std::vector<SlotRole> slot_roles;     // one sub-frame, reused for all
  std::size_t pilot_symbol_index = 13;  // last OFDM symbol of the special slot
};

/// Ground-truth CSI for every slot of every sub-frame.
/// uplink  : [n_subframes, n_slot, n_tx, n_rx, n_sc]
/// downlink: [n_subframes, n_slot, n_rx, n_tx, n_sc]
struct ChannelTrace {
  CArray uplink;
  CArray downlink;
  double doppler_hz = 0.0;
};

FrameSchedule build_frame_schedule(const SystemConfig& cfg);

/// Maximum Doppler shift f_d = (v/3.6) * f_c / c.
double max_doppler_hz(const SystemConfig& cfg);

/// Diagnostic coherence time 0.5 / f_d (infinity for a static UE).
double coherence_time_s(const SystemConfig& cfg);

ChannelTrace generate_channel_trace(const SystemConfig& cfg, const ChannelModelConfig& model);

/// H^d[r,t,i] = calib_ue[r] * calib_bs[t] * H[t,r,i] for one slot.
CArray derive_downlink(const CArray& uplink_slot, const ChannelModelConfig& model);

struct CalibSpec {
  double global_phase_spread_rad = 3.141592653589793;
  double phase_ripple_rad = 0.1745329251994330;  // +-10 deg
  double mag_lo = 0.9;
  double mag_hi = 1.1;
  double global_mag_lo = 0.9;
  double global_mag_hi = 1.3;
};

/// One global complex offset times bounded per-antenna ripple.
std::vector<cplx> make_calibration(std::size_t n, Rng& rng, const CalibSpec& spec = {});

std::vector<std::size_t> trace_dims(const SystemConfig& cfg);

void system_to_kv(const SystemConfig& cfg, KvConfig& kv);
SystemConfig system_from_kv(const KvConfig& kv);
void model_to_kv(const ChannelModelConfig& m, KvConfig& kv);
ChannelModelConfig model_from_kv(const KvConfig& kv);

void save_trace(const std::string& path, const ChannelTrace& trace);
/// Rebuilds the downlink side from the manifest's calibration coefficients.
ChannelTrace load_trace(const std::string& path, const SystemConfig& cfg,
                        const ChannelModelConfig& model);

}  // namespace mxl::sim
