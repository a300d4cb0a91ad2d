#pragma once

#include "mxl/carray.hpp"
#include "mxl/pilots.hpp"

namespace mxl::baselines {

/// LS coarse estimate on the observed pilot grid: [n_rf, n_rx, n_pilot_sc].
struct CoarseEstimate {
  CArray h_ls;
};

/// H_i = Y_i S_i^{-1} per pilot subcarrier (diagonal inversion).
CoarseEstimate ls_estimate(const pilots::PilotObservation& obs);

enum class InterpMethod { Linear, Spline, Dft };

/// Interpolate [n_a, n_rx, n_pilot_sc] along the subcarrier axis up to
/// n_sc_full (pilots at stride n_sc_full / n_pilot_sc starting at 0).
CArray interp_frequency(const CArray& h_partial, InterpMethod method, std::size_t n_sc_full);

/// Interpolate [n_rf, n_rx, n_sc] along the BS-antenna axis up to n_tx_full
/// (pilot antennas at stride n_tx_full / n_rf). Dft works in the angular domain.
CArray interp_spatial(const CArray& h_partial, InterpMethod method, std::size_t n_tx_full);

/// Frequency-then-spatial composition, LS grid -> full [n_tx, n_rx, n_sc].
CArray baseline_estimate(const CoarseEstimate& coarse, const pilots::SrsPattern& pattern,
                         const sim::SystemConfig& cfg, InterpMethod method);

}  // namespace mxl::baselines
