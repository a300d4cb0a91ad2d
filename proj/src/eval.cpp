#include "mxl/eval.hpp"

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <stdexcept>

#include "mxl/parallel.hpp"

namespace mxl::eval {
namespace {

using Clock = std::chrono::steady_clock;

Eigen::MatrixXcd to_eigen(const CArray& a) {
  if (a.rank() != 2) throw std::invalid_argument("to_eigen: expected a 2-D array");
  Eigen::MatrixXcd m(a.dim(0), a.dim(1));
  for (std::size_t r = 0; r < a.dim(0); ++r)
    for (std::size_t c = 0; c < a.dim(1); ++c) m(static_cast<long>(r), static_cast<long>(c)) = a.at(r, c);
  return m;
}

CArray slot_view(const CArray& h_slot, std::size_t sc) {
  // h_slot [n_rx, n_tx, n_sc] -> [n_rx, n_tx] at one subcarrier
  CArray out({h_slot.dim(0), h_slot.dim(1)});
  for (std::size_t r = 0; r < h_slot.dim(0); ++r)
    for (std::size_t t = 0; t < h_slot.dim(1); ++t) out.at(r, t) = h_slot.at(r, t, sc);
  return out;
}

/// Downlink layout from an uplink estimate with no calibration compensation.
CArray transpose_uplink(const CArray& up) {
  CArray dl({up.dim(1), up.dim(0), up.dim(2)});
  for (std::size_t t = 0; t < up.dim(0); ++t)
    for (std::size_t r = 0; r < up.dim(1); ++r)
      for (std::size_t i = 0; i < up.dim(2); ++i) dl.at(r, t, i) = up.at(t, r, i);
  return dl;
}

struct MethodAgg {
  NmseAgg nmse;
  double rate_sum = 0.0;
  std::size_t rate_n = 0;
  void add_rate(double r) {
    rate_sum += r;
    ++rate_n;
  }
  double rate_mean() const { return rate_n ? rate_sum / static_cast<double>(rate_n) : 0.0; }
};

}  // namespace

void NmseAgg::add(const CArray& truth, const CArray& estimate) {
  const double den = power_sum(truth);
  if (den <= 0.0) {
    ++excluded_;
    return;
  }
  double num = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) num += std::norm(truth[i] - estimate[i]);
  sum_ratio_ += num / den;
  ++n_;
}

void NmseAgg::add_ratio(double ratio) {
  sum_ratio_ += ratio;
  ++n_;
}

double NmseAgg::ratio_mean() const {
  return n_ ? sum_ratio_ / static_cast<double>(n_) : 0.0;
}

double NmseAgg::db() const {
  const double r = ratio_mean();
  if (r <= 0.0) return -120.0;
  return clamp_nmse_db(10.0 * std::log10(r));
}

double clamp_nmse_db(double db) { return std::min(40.0, std::max(-120.0, db)); }

CArray svd_precoder(const CArray& h_dl, std::size_t n_streams) {
  if (h_dl.rank() != 2) throw std::invalid_argument("svd_precoder: expected [n_rx, n_tx]");
  const std::size_t n_rx = h_dl.dim(0), n_tx = h_dl.dim(1);
  if (n_streams > n_rx)
    throw std::invalid_argument("svd_precoder: n_streams must be <= n_rx");
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(to_eigen(h_dl),
                                         Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success)
    throw std::runtime_error("svd_precoder: SVD failed to converge");
  const Eigen::MatrixXcd v = svd.matrixV();  // n_tx x min(n_rx, n_tx)
  CArray f({n_tx, n_streams});
  for (std::size_t t = 0; t < n_tx; ++t)
    for (std::size_t s = 0; s < n_streams; ++s)
      f.at(t, s) = v(static_cast<long>(t), static_cast<long>(s));
  return f;
}

std::vector<CArray> precoders_from_estimate(const CArray& h_dl_est, std::size_t n_streams) {
  if (h_dl_est.rank() != 3)
    throw std::invalid_argument("precoders_from_estimate: expected [n_rx, n_tx, n_sc]");
  std::vector<CArray> out;
  out.reserve(h_dl_est.dim(2));
  for (std::size_t sc = 0; sc < h_dl_est.dim(2); ++sc)
    out.push_back(svd_precoder(slot_view(h_dl_est, sc), n_streams));
  return out;
}

double sum_rate(const CArray& h_true_slot, const std::vector<CArray>& precoders,
                double sigma_n2) {
  if (h_true_slot.rank() != 3 || precoders.size() != h_true_slot.dim(2))
    throw std::invalid_argument("sum_rate: need one precoder per subcarrier");
  const std::size_t n_rx = h_true_slot.dim(0);
  const std::size_t n_sc = h_true_slot.dim(2);
  double acc = 0.0;
  for (std::size_t sc = 0; sc < n_sc; ++sc) {
    const Eigen::MatrixXcd h = to_eigen(slot_view(h_true_slot, sc));
    const Eigen::MatrixXcd f = to_eigen(precoders[sc]);
    const double n_s = static_cast<double>(f.cols());
    const Eigen::MatrixXcd hf = h * f / std::sqrt(n_s);
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Identity(n_rx, n_rx) +
                         hf * hf.adjoint() / (static_cast<double>(n_rx) * sigma_n2);
    a = 0.5 * (a + a.adjoint().eval());  // PSD guard before the determinant
    const std::complex<double> det = a.determinant();
    acc += std::log2(std::max(det.real(), 1.0));
  }
  return acc / static_cast<double>(n_sc);
}

double MetricsReport::value(double axis, int slot, const std::string& method) const {
  for (const auto& r : rows)
    if (r.axis == axis && r.slot == slot && r.method == method) return r.nmse_db;
  throw std::out_of_range("MetricsReport: no row for method '" + method + "'");
}

bool MetricsReport::has(double axis, int slot, const std::string& method) const {
  for (const auto& r : rows)
    if (r.axis == axis && r.slot == slot && r.method == method) return true;
  return false;
}

const char* sweep_name(SweepKind kind) {
  switch (kind) {
    case SweepKind::FreqCR: return "freq_cr";
    case SweepKind::SpatCR: return "spat_cr";
    case SweepKind::Snr: return "snr";
    case SweepKind::Velocity: return "velocity";
    case SweepKind::SlotIndex: return "slot_index";
  }
  return "unknown";
}

namespace {

struct UplinkMethods {
  // method name -> estimate [n_tx, n_rx, n_sc]
  std::vector<std::pair<std::string, CArray>> estimates;
};

UplinkMethods uplink_estimates(const train::Dataset& ds, const pilots::SrsPattern& pattern,
                               const CArray& up_truth, double snr_db, std::uint64_t obs_seed,
                               const train::SfcenTrainOutput* sfcen_ckpt) {
  UplinkMethods out;
  const auto obs = pilots::observe_pilots(up_truth, pattern, snr_db, obs_seed);
  const auto ls = baselines::ls_estimate(obs);
  const std::pair<const char*, baselines::InterpMethod> kBaselines[] = {
      {"ls_linear", baselines::InterpMethod::Linear},
      {"ls_spline", baselines::InterpMethod::Spline},
      {"ls_dft", baselines::InterpMethod::Dft}};
  for (const auto& [name, method] : kBaselines) {
    try {
      out.estimates.emplace_back(name, baselines::baseline_estimate(ls, pattern, ds.sys, method));
    } catch (const std::invalid_argument&) {
      // insufficient pilot points for this interpolator at this axis
    }
  }
  if (sfcen_ckpt && pattern.comb == ds.pattern.comb &&
      pattern.spatial_stride() == ds.pattern.spatial_stride()) {
    const sfcen::SfcenNet net(sfcen_ckpt->cfg, ds.sys, pattern);
    out.estimates.emplace_back("kdd_sfcen", net.estimate(ls, sfcen_ckpt->store));
  }
  return out;
}

void uplink_sweep(SweepKind kind, const EvalContext& ctx, const std::vector<double>& axes,
                  MetricsReport& report) {
  const train::Dataset& ds = *ctx.dataset;
  const auto test_windows = train::make_windows(ds, ds.test_traces);
  for (std::size_t ai = 0; ai < axes.size(); ++ai) {
    const double axis = axes[ai];
    pilots::SrsPattern pattern = ds.pattern;
    double snr_db = ds.sys.snr_db;
    const std::vector<sim::ChannelTrace>* traces = &ds.traces;
    std::vector<sim::ChannelTrace> regen;  // velocity axis rebuilds test traces
    sim::SystemConfig sys = ds.sys;

    if (kind == SweepKind::FreqCR) {
      pattern = pilots::build_srs_pattern(ds.sys, static_cast<std::size_t>(axis),
                                          ds.pattern.spatial_stride(), ds.pattern.seed);
    } else if (kind == SweepKind::SpatCR) {
      pattern = pilots::build_srs_pattern(ds.sys, ds.pattern.comb,
                                          static_cast<std::size_t>(axis), ds.pattern.seed);
    } else if (kind == SweepKind::Snr) {
      snr_db = axis;
    } else if (kind == SweepKind::Velocity) {
      sys.ue_velocity_kmh = axis;
      regen.resize(ds.test_traces.size());
      parallel_for(ds.test_traces.size(), [&](std::size_t i) {
        sim::ChannelModelConfig m = ds.model;
        m.seed = Rng(ds.model.seed).fork(1000 + ds.test_traces[i]).seed();
        regen[i] = sim::generate_channel_trace(sys, m);
      });
      traces = &regen;
    }

    std::map<std::string, NmseAgg> agg;
    Rng sweep_rng = Rng(ctx.seed).fork(static_cast<std::uint64_t>(kind) * 1000 + ai);
    for (std::size_t wi = 0; wi < test_windows.size(); ++wi) {
      train::Window w = test_windows[wi];
      CArray up_truth;
      if (kind == SweepKind::Velocity) {
        // regenerated traces are indexed 0..n_test-1
        const std::size_t local = w.trace - ds.test_traces.front();
        train::Window lw{0, w.subframe};
        const auto& tr = (*traces)[local];
        CArray slot({sys.n_tx, sys.n_rx, sys.n_sc});
        const std::size_t slot_len = slot.size();
        const cplx* src = tr.uplink.data() + (lw.subframe * sys.n_slot + 0) * slot_len;
        for (std::size_t i = 0; i < slot_len; ++i) slot[i] = src[i];
        up_truth = std::move(slot);
      } else {
        up_truth = ds.uplink_slot(w, 0);
      }
      const auto methods =
          uplink_estimates(ds, pattern, up_truth, snr_db, sweep_rng.next_u64(), ctx.sfcen);
      for (const auto& [name, est] : methods.estimates) agg[name].add(up_truth, est);
    }
    for (const auto& [name, a] : agg)
      report.rows.push_back({axis, 0, name, a.db(), 0.0});
  }
}

void slot_sweep(const EvalContext& ctx, MetricsReport& report) {
  const train::Dataset& ds = *ctx.dataset;
  if (!ctx.tudcen) {
    report.header_note += "missing checkpoint: tudcen (slot sweep skipped); ";
    return;
  }
  const auto test_windows = train::make_windows(ds, ds.test_traces);
  const std::size_t n_slot = ds.sys.n_slot;
  const double sigma_n2 = std::pow(10.0, -ds.sys.snr_db / 10.0);
  const std::size_t n_streams = ds.sys.n_rx;
  const tudcen::TudcenNet net(ctx.tudcen->ucfg, ctx.tudcen->scfg, ctx.tudcen->gcfg, ds.sys);
  const bool have_sfcen = ctx.sfcen != nullptr;
  if (!have_sfcen) report.header_note += "missing checkpoint: kdd_sfcen (ls_dft input used); ";

  std::map<std::pair<std::string, int>, MethodAgg> agg;
  Rng sweep_rng = Rng(ctx.seed).fork(77);

  for (const auto& w : test_windows) {
    const CArray up_truth = ds.uplink_slot(w, 0);
    const auto obs =
        pilots::observe_pilots(up_truth, ds.pattern, ds.sys.snr_db, sweep_rng.next_u64());
    const auto ls = baselines::ls_estimate(obs);

    std::vector<std::pair<std::string, CArray>> uplinks;
    if (have_sfcen) {
      const sfcen::SfcenNet snet(ctx.sfcen->cfg, ds.sys, ds.pattern);
      uplinks.emplace_back("sfcen", snet.estimate(ls, ctx.sfcen->store));
    }
    uplinks.emplace_back(
        "lsdft", baselines::baseline_estimate(ls, ds.pattern, ds.sys, baselines::InterpMethod::Dft));

    for (const auto& [uname, up_est] : uplinks) {
      CArray dl_calib;
      {
        ad::NoGradGuard guard;
        dl_calib = sfcen::tensor_to_carray(net.udccn_forward(
            sfcen::carray_to_tensor(up_est), ctx.tudcen->udccn_store, false, nullptr));
      }
      const CArray dl_nocalib = transpose_uplink(up_est);

      std::vector<CArray> rollout;
      if (uname == "sfcen" || !have_sfcen)
        rollout = net.extrapolate_slots(dl_calib, ctx.tudcen->dcen_store, n_slot);

      for (std::size_t t = 1; t < n_slot; ++t) {
        const CArray truth = ds.downlink_slot(w, t);
        const int slot = static_cast<int>(t);
        auto add = [&](const std::string& m, const CArray& est) {
          auto& a = agg[{m, slot}];
          a.nmse.add(truth, est);
          a.add_rate(sum_rate(truth, precoders_from_estimate(est, n_streams), sigma_n2));
        };
        add(uname + "_udccn_hold1", dl_calib);
        add(uname + "_nocalib_hold1", dl_nocalib);
        if (!rollout.empty())
          add(uname + "_udccn_tudcen", t == 1 ? dl_calib : rollout[t - 2]);
        if (uname == uplinks.front().first) {
          auto& p = agg[{"perfect", slot}];
          p.nmse.add_ratio(0.0);
          p.add_rate(sum_rate(truth, precoders_from_estimate(truth, n_streams), sigma_n2));
        }
      }
    }
  }
  for (const auto& [key, a] : agg)
    report.rows.push_back({static_cast<double>(key.second), key.second, key.first, a.nmse.db(),
                           a.rate_mean()});
}

}  // namespace

MetricsReport run_sweep(SweepKind kind, const EvalContext& ctx) {
  if (!ctx.dataset) throw std::invalid_argument("run_sweep: dataset required");
  const auto t0 = Clock::now();
  MetricsReport report;
  report.sweep = sweep_name(kind);
  report.header_note =
      "per-slot values averaged over test samples and sub-frames; "
      "baseline order: frequency then spatial interpolation; ";
  switch (kind) {
    case SweepKind::FreqCR: report.axes = {2, 4, 8}; break;
    case SweepKind::SpatCR: report.axes = {1, 2, 4}; break;
    case SweepKind::Snr: report.axes = {-5, 0, 5, 10, 15, 20}; break;
    case SweepKind::Velocity: report.axes = {5, 15, 30, 60, 90, 120}; break;
    case SweepKind::SlotIndex: {
      report.axes.clear();
      for (std::size_t t = 1; t < ctx.dataset->sys.n_slot; ++t)
        report.axes.push_back(static_cast<double>(t));
      break;
    }
  }
  if (kind == SweepKind::SlotIndex)
    slot_sweep(ctx, report);
  else
    uplink_sweep(kind, ctx, report.axes, report);

  report.overhead =
      pilots::overhead(ctx.dataset->sys, ctx.dataset->pattern, 10.0 * ctx.dataset->sys.srs_period_ms);
  report.runtime_s = std::chrono::duration<double>(Clock::now() - t0).count();
  return report;
}

void write_csv(const MetricsReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("write_csv: cannot write " + path);
  out << "# " << report.header_note << "\n";
  out << "# overhead_c_sl=" << report.overhead.c_sl << " overhead_c_o=" << report.overhead.c_o
      << "\n";
  out << "sweep,axis,slot,method,nmse_db,sum_rate\n";
  char buf[200];
  for (const auto& r : report.rows) {
    std::snprintf(buf, sizeof(buf), "%s,%.17g,%d,%s,%.17g,%.17g\n", report.sweep.c_str(), r.axis,
                  r.slot, r.method.c_str(), r.nmse_db, r.sum_rate);
    out << buf;
  }
}

void write_svg(const MetricsReport& report, const std::string& path) {
  // minimal polyline chart: nmse_db vs axis, one series per method
  std::map<std::string, std::vector<std::pair<double, double>>> series;
  for (const auto& r : report.rows)
    if (r.method != "perfect") series[r.method].emplace_back(r.axis, r.nmse_db);
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (auto& [m, pts] : series)
    for (auto& [x, y] : pts) {
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  if (series.empty() || xmin >= xmax) {
    xmin = 0;
    xmax = 1;
  }
  if (ymin >= ymax) {
    ymin -= 1;
    ymax += 1;
  }
  const double w = 640, h = 420, ml = 60, mr = 160, mt = 20, mb = 40;
  auto sx = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (w - ml - mr); };
  auto sy = [&](double y) { return h - mb - (y - ymin) / (ymax - ymin) * (h - mt - mb); };
  static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                 "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("write_svg: cannot write " + path);
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h << "'>\n";
  out << "<rect width='100%' height='100%' fill='white'/>\n";
  out << "<line x1='" << ml << "' y1='" << h - mb << "' x2='" << w - mr << "' y2='" << h - mb
      << "' stroke='black'/>\n";
  out << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='" << h - mb
      << "' stroke='black'/>\n";
  out << "<text x='" << (ml + (w - ml - mr) / 2) << "' y='" << h - 8
      << "' font-size='12' text-anchor='middle'>" << report.sweep << "</text>\n";
  out << "<text x='14' y='" << (mt + (h - mt - mb) / 2)
      << "' font-size='12' transform='rotate(-90 14 " << (mt + (h - mt - mb) / 2)
      << ")' text-anchor='middle'>NMSE (dB)</text>\n";
  std::size_t ci = 0;
  double legend_y = mt + 10;
  for (auto& [m, pts] : series) {
    std::sort(pts.begin(), pts.end());
    const char* color = colors[ci % 8];
    out << "<polyline fill='none' stroke='" << color << "' stroke-width='1.5' points='";
    for (auto& [x, y] : pts) out << sx(x) << "," << sy(y) << " ";
    out << "'/>\n";
    out << "<text x='" << w - mr + 10 << "' y='" << legend_y << "' font-size='11' fill='" << color
        << "'>" << m << "</text>\n";
    legend_y += 14;
    ++ci;
  }
  out << "</svg>\n";
}

}  // namespace mxl::eval
