#include "mxl/baselines.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace mxl::baselines {
namespace {

constexpr double kPi = std::numbers::pi;

// Piecewise-linear on knots 0, s, 2s, ...; boundary segments extended.
void linear_interp_row(const std::vector<cplx>& y, std::size_t stride, std::vector<cplx>& out) {
  const std::size_t n_p = y.size();
  const std::size_t n_full = out.size();
  for (std::size_t i = 0; i < n_full; ++i) {
    const double x = static_cast<double>(i) / static_cast<double>(stride);
    std::size_t seg = static_cast<std::size_t>(std::floor(x));
    if (seg >= n_p - 1) seg = n_p - 2;
    const double t = x - static_cast<double>(seg);
    out[i] = y[seg] + t * (y[seg + 1] - y[seg]);
  }
}

// Natural cubic spline second derivatives via the Thomas algorithm.
// Knots are uniform with unit spacing in pilot-index coordinates.
void spline_interp_row(const std::vector<cplx>& y, std::size_t stride, std::vector<cplx>& out) {
  const std::size_t n_p = y.size();
  std::vector<cplx> m(n_p, 0.0);  // second derivatives, natural ends
  if (n_p > 2) {
    const std::size_t n_int = n_p - 2;
    std::vector<double> diag(n_int, 2.0 / 3.0);
    std::vector<cplx> rhs(n_int);
    for (std::size_t i = 0; i < n_int; ++i) rhs[i] = y[i + 2] - 2.0 * y[i + 1] + y[i];
    // off-diagonals are all 1/6 for unit spacing
    for (std::size_t i = 1; i < n_int; ++i) {
      const double w = (1.0 / 6.0) / diag[i - 1];
      diag[i] -= w * (1.0 / 6.0);
      rhs[i] -= w * rhs[i - 1];
    }
    m[n_p - 2] = rhs[n_int - 1] / diag[n_int - 1];
    for (std::size_t i = n_int - 1; i-- > 0;)
      m[i + 1] = (rhs[i] - (1.0 / 6.0) * m[i + 2]) / diag[i];
  }
  const std::size_t n_full = out.size();
  for (std::size_t i = 0; i < n_full; ++i) {
    const double x = static_cast<double>(i) / static_cast<double>(stride);
    std::size_t seg = static_cast<std::size_t>(std::floor(x));
    if (seg >= n_p - 1) seg = n_p - 2;
    const double a = static_cast<double>(seg) + 1.0 - x;  // distance to right knot
    const double b = x - static_cast<double>(seg);
    out[i] = m[seg] * (a * a * a - a) / 6.0 + m[seg + 1] * (b * b * b - b) / 6.0 +
             y[seg] * a + y[seg + 1] * b;
  }
}

// Inverse DFT to the delay/angular domain, centered zero-padding (lower bins
// at the head, upper bins at the tail so negative frequencies survive), then
// synthesis on the full grid. Exact at pilot points by construction.
void dft_interp_row(const std::vector<cplx>& y, std::size_t stride, std::vector<cplx>& out) {
  const std::size_t n_p = y.size();
  const std::size_t n_full = out.size();
  std::vector<cplx> d(n_p, 0.0);
  for (std::size_t k = 0; k < n_p; ++k) {
    cplx acc = 0.0;
    for (std::size_t mm = 0; mm < n_p; ++mm) {
      const double ph = 2.0 * kPi * static_cast<double>(mm * k) / static_cast<double>(n_p);
      acc += y[mm] * cplx(std::cos(ph), std::sin(ph));
    }
    d[k] = acc / static_cast<double>(n_p);
  }
  const std::size_t head = (n_p + 1) / 2;
  for (std::size_t i = 0; i < n_full; ++i) {
    cplx acc = 0.0;
    for (std::size_t k = 0; k < n_p; ++k) {
      const std::size_t pos = k < head ? k : n_full - n_p + k;
      const double ph = -2.0 * kPi * static_cast<double>(i) * static_cast<double>(pos) /
                        static_cast<double>(n_full);
      acc += d[k] * cplx(std::cos(ph), std::sin(ph));
    }
    out[i] = acc;
  }
  (void)stride;
}

void interp_row(const std::vector<cplx>& y, InterpMethod method, std::size_t stride,
                std::vector<cplx>& out) {
  switch (method) {
    case InterpMethod::Linear:
      if (y.size() < 2)
        throw std::invalid_argument("interp: insufficient points for linear (need >= 2)");
      linear_interp_row(y, stride, out);
      break;
    case InterpMethod::Spline:
      if (y.size() < 4)
        throw std::invalid_argument("interp: insufficient points for spline (need >= 4)");
      spline_interp_row(y, stride, out);
      break;
    case InterpMethod::Dft:
      dft_interp_row(y, stride, out);
      break;
  }
}

}  // namespace

CoarseEstimate ls_estimate(const pilots::PilotObservation& obs) {
  const std::size_t n_p = obs.y_matrix.dim(0);
  const std::size_t n_rf = obs.y_matrix.dim(1);
  const std::size_t n_rx = obs.y_matrix.dim(2);
  for (std::size_t i = 0; i < obs.s_matrix.size(); ++i)
    if (std::abs(obs.s_matrix[i]) < 1e-12)
      throw std::domain_error("ls_estimate: singular pilot, diagonal entry magnitude < 1e-12");
  CoarseEstimate est;
  est.h_ls = CArray({n_rf, n_rx, n_p});
  for (std::size_t i = 0; i < n_p; ++i)
    for (std::size_t a = 0; a < n_rf; ++a)
      for (std::size_t r = 0; r < n_rx; ++r)
        est.h_ls.at(a, r, i) = obs.y_matrix.at(i, a, r) / obs.s_matrix.at(i, r);
  return est;
}

CArray interp_frequency(const CArray& h_partial, InterpMethod method, std::size_t n_sc_full) {
  const auto& d = h_partial.dims();
  if (d.size() != 3) throw std::invalid_argument("interp_frequency: expected [n_a, n_rx, n_p]");
  const std::size_t n_a = d[0], n_rx = d[1], n_p = d[2];
  if (n_sc_full % n_p != 0)
    throw std::invalid_argument("interp_frequency: pilot count must divide n_sc_full");
  const std::size_t stride = n_sc_full / n_p;
  CArray out({n_a, n_rx, n_sc_full});
  std::vector<cplx> row(n_p), full(n_sc_full);
  for (std::size_t a = 0; a < n_a; ++a)
    for (std::size_t r = 0; r < n_rx; ++r) {
      for (std::size_t i = 0; i < n_p; ++i) row[i] = h_partial.at(a, r, i);
      interp_row(row, method, stride, full);
      for (std::size_t i = 0; i < n_sc_full; ++i) out.at(a, r, i) = full[i];
    }
  return out;
}

CArray interp_spatial(const CArray& h_partial, InterpMethod method, std::size_t n_tx_full) {
  const auto& d = h_partial.dims();
  if (d.size() != 3) throw std::invalid_argument("interp_spatial: expected [n_rf, n_rx, n_sc]");
  const std::size_t n_rf = d[0], n_rx = d[1], n_sc = d[2];
  if (n_tx_full % n_rf != 0)
    throw std::invalid_argument("interp_spatial: pilot antenna count must divide n_tx_full");
  const std::size_t stride = n_tx_full / n_rf;
  if (stride == 1) return h_partial;
  CArray out({n_tx_full, n_rx, n_sc});
  std::vector<cplx> row(n_rf), full(n_tx_full);
  for (std::size_t r = 0; r < n_rx; ++r)
    for (std::size_t i = 0; i < n_sc; ++i) {
      for (std::size_t a = 0; a < n_rf; ++a) row[a] = h_partial.at(a, r, i);
      interp_row(row, method, stride, full);
      for (std::size_t a = 0; a < n_tx_full; ++a) out.at(a, r, i) = full[a];
    }
  return out;
}

CArray baseline_estimate(const CoarseEstimate& coarse, const pilots::SrsPattern& pattern,
                         const sim::SystemConfig& cfg, InterpMethod method) {
  if (coarse.h_ls.dim(0) != pattern.rf_antenna_set.size() ||
      coarse.h_ls.dim(2) != pattern.n_pilot_sc())
    throw std::invalid_argument("baseline_estimate: coarse grid does not match the SRS pattern");
  const CArray freq_full = interp_frequency(coarse.h_ls, method, cfg.n_sc);
  return interp_spatial(freq_full, method, cfg.n_tx);
}

}  // namespace mxl::baselines
