#include "mxl/pilots.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "mxl/rng.hpp"

namespace mxl::pilots {
namespace {
constexpr double kPi = std::numbers::pi;
}

std::size_t SrsPattern::spatial_stride() const {
  return rf_antenna_set.size() > 1 ? rf_antenna_set[1] - rf_antenna_set[0] : 1;
}

SrsPattern build_srs_pattern(const sim::SystemConfig& cfg, std::size_t comb, std::size_t r_s,
                             std::uint64_t seed) {
  cfg.validate();
  if (comb != 1 && comb != 2 && comb != 4 && comb != 8 && comb != 16)
    throw std::invalid_argument("build_srs_pattern: comb must be in {1,2,4,8,16}");
  if (cfg.n_sc % comb != 0)
    throw std::invalid_argument("build_srs_pattern: invalid comb, " + std::to_string(comb) +
                                " does not divide 12*n_rb");
  if (r_s == 0 || cfg.n_tx % r_s != 0)
    throw std::invalid_argument("build_srs_pattern: r_s must divide n_tx");

  SrsPattern p;
  p.comb = comb;
  p.seed = seed;
  for (std::size_t i = 0; i < cfg.n_sc; i += comb) p.pilot_sc_indices.push_back(i);

  p.cdm_codes = CArray({cfg.n_rx, cfg.n_rx});
  for (std::size_t k = 0; k < cfg.n_rx; ++k)
    for (std::size_t n = 0; n < cfg.n_rx; ++n) {
      const double ph = -2.0 * kPi * static_cast<double>(k * n) / static_cast<double>(cfg.n_rx);
      p.cdm_codes.at(k, n) = cplx(std::cos(ph), std::sin(ph));
    }

  for (std::size_t a = 0; a < cfg.n_tx; a += r_s) p.rf_antenna_set.push_back(a);
  return p;
}

CArray PilotObservation::flattened_y() const {
  const std::size_t n_sc = y_matrix.dim(0), n_rf = y_matrix.dim(1), n_rx = y_matrix.dim(2);
  CArray out({n_rf, n_rx * n_sc});
  for (std::size_t i = 0; i < n_sc; ++i)
    for (std::size_t a = 0; a < n_rf; ++a)
      for (std::size_t r = 0; r < n_rx; ++r) out.at(a, i * n_rx + r) = y_matrix.at(i, a, r);
  return out;
}

PilotObservation observe_pilots(const CArray& uplink_slot, const SrsPattern& pattern,
                                double snr_db, std::uint64_t seed) {
  const auto& d = uplink_slot.dims();
  if (d.size() != 3) throw std::invalid_argument("observe_pilots: expected [n_tx, n_rx, n_sc]");
  const std::size_t n_rx = d[1], n_sc = d[2];
  const std::size_t n_rf = pattern.rf_antenna_set.size();
  const std::size_t n_p = pattern.n_pilot_sc();
  for (auto i : pattern.pilot_sc_indices)
    if (i >= n_sc) throw std::invalid_argument("observe_pilots: pilot subcarrier out of range");

  PilotObservation obs;
  obs.snr_db = snr_db;
  obs.noiseless = std::isinf(snr_db);
  obs.s_matrix = CArray({n_p, n_rx});
  obs.y_matrix = CArray({n_p, n_rf, n_rx});

  Rng rng = Rng(pattern.seed).fork(seed);
  // unit-modulus random-phase diagonal pilots keep LS noise-preserving
  for (std::size_t i = 0; i < n_p; ++i)
    for (std::size_t r = 0; r < n_rx; ++r) {
      const double ph = rng.uniform(0.0, 2.0 * kPi);
      obs.s_matrix.at(i, r) = cplx(std::cos(ph), std::sin(ph));
    }

  double sig_power = 0.0;
  for (std::size_t i = 0; i < n_p; ++i) {
    const std::size_t sc = pattern.pilot_sc_indices[i];
    for (std::size_t a = 0; a < n_rf; ++a) {
      const std::size_t ant = pattern.rf_antenna_set[a];
      for (std::size_t r = 0; r < n_rx; ++r) {
        const cplx v = uplink_slot.at(ant, r, sc) * obs.s_matrix.at(i, r);
        obs.y_matrix.at(i, a, r) = v;
        sig_power += std::norm(v);
      }
    }
  }

  if (!obs.noiseless) {
    const std::size_t n_entries = n_p * n_rf * n_rx;
    const double snr_lin = std::pow(10.0, snr_db / 10.0);
    const double sigma2 = (sig_power / static_cast<double>(n_entries)) / snr_lin;
    const double sigma = std::sqrt(sigma2);
    for (std::size_t i = 0; i < obs.y_matrix.size(); ++i)
      obs.y_matrix[i] += sigma * rng.cnormal();
  }
  return obs;
}

OverheadCount overhead(const sim::SystemConfig& cfg, const SrsPattern& pattern,
                       double horizon_ms) {
  const double periods = horizon_ms / cfg.srs_period_ms;
  const double rounded = std::round(periods);
  if (std::abs(periods - rounded) > 1e-9 || rounded < 1.0)
    throw std::invalid_argument("overhead: horizon_ms must be a positive multiple of srs_period_ms");
  OverheadCount c;
  c.c_sl = static_cast<std::uint64_t>(pattern.rf_antenna_set.size()) * cfg.n_rx *
           pattern.n_pilot_sc();
  c.c_o = static_cast<std::uint64_t>(rounded) * c.c_sl;
  return c;
}

}  // namespace mxl::pilots
