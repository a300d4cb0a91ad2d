#pragma once

#include <cstdint>
#include <vector>

#include "mxl/carray.hpp"
#include "mxl/sim_channel.hpp"

namespace mxl::pilots {

/// Comb SRS layout with fd-CDM codes and the fixed RF-chain antenna subset.
struct SrsPattern {
  std::size_t comb = 2;                        // transmission comb number N_TC
  std::vector<std::size_t> pilot_sc_indices;   // stride-comb subcarriers
  CArray cdm_codes;                            // [n_rx, n_rx] DFT rows
  std::vector<std::size_t> rf_antenna_set;     // stride-r_s antenna indices
  std::uint64_t seed = 0;

  std::size_t n_pilot_sc() const { return pilot_sc_indices.size(); }
  std::size_t spatial_stride() const;          // R_s
};

/// comb in {1,2,4,8,16}; comb=1 is the degenerate full-sounding pattern.
SrsPattern build_srs_pattern(const sim::SystemConfig& cfg, std::size_t comb, std::size_t r_s,
                             std::uint64_t seed);

/// Received comb pilots: s_matrix holds per-subcarrier diagonal pilot values
/// [n_pilot_sc, n_rx]; y_matrix is [n_pilot_sc, n_rf, n_rx].
struct PilotObservation {
  CArray s_matrix;
  CArray y_matrix;
  double snr_db = 0.0;
  bool noiseless = false;

  /// Concatenated view [n_rf, n_rx * n_pilot_sc].
  CArray flattened_y() const;
};

/// Y_i = H_i[rf_set,:] S_i + N_i with noise scaled to the realized signal
/// power. Pass snr_db = +infinity to disable noise.
PilotObservation observe_pilots(const CArray& uplink_slot, const SrsPattern& pattern,
                                double snr_db, std::uint64_t seed);

struct OverheadCount {
  std::uint64_t c_sl = 0;  // REs per sounding
  std::uint64_t c_o = 0;   // REs over the horizon
};

OverheadCount overhead(const sim::SystemConfig& cfg, const SrsPattern& pattern,
                       double horizon_ms);

}  // namespace mxl::pilots
