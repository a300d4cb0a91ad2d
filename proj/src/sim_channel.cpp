#include "mxl/sim_channel.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "mxl/io_container.hpp"

namespace mxl::sim {
namespace {

constexpr double kSpeedOfLight = 2.998e8;
constexpr double kPi = std::numbers::pi;

struct Ray {
  cplx gain;
  double delay_s;
  double aod_rad;
  double aoa_rad;
  double doppler_hz;
};

std::vector<Ray> draw_rays(const SystemConfig& cfg, const ChannelModelConfig& model) {
  Rng rng = Rng(model.seed).fork(0x52415953 /* ray stream */);
  const double f_d = max_doppler_hz(cfg);
  std::vector<Ray> rays;
  rays.reserve(model.n_clusters * model.rays_per_cluster);
  for (std::size_t c = 0; c < model.n_clusters; ++c) {
    const double delay = rng.exponential(model.delay_spread_s);
    const double power = std::pow(10.0, rng.normal() * model.cluster_shadow_db / 10.0);
    const double aod0 = rng.uniform(-model.bs_sector_rad, model.bs_sector_rad);
    const double aoa0 = rng.uniform(-model.ue_sector_rad, model.ue_sector_rad);
    for (std::size_t r = 0; r < model.rays_per_cluster; ++r) {
      Ray ray;
      ray.delay_s = delay;
      ray.aod_rad = aod0 + rng.uniform(-model.intra_cluster_spread_rad,
                                       model.intra_cluster_spread_rad);
      ray.aoa_rad = aoa0 + rng.uniform(-model.intra_cluster_spread_rad,
                                       model.intra_cluster_spread_rad);
      const double phase = rng.uniform(0.0, 2.0 * kPi);
      ray.gain = std::sqrt(power / static_cast<double>(model.rays_per_cluster)) *
                 cplx(std::cos(phase), std::sin(phase));
      ray.doppler_hz = f_d * std::cos(rng.uniform(-kPi, kPi));
      rays.push_back(ray);
    }
  }
  // unit total ray power before the per-slot normalization
  double total = 0.0;
  for (const auto& r : rays) total += std::norm(r.gain);
  const double s = 1.0 / std::sqrt(total);
  for (auto& r : rays) r.gain *= s;
  return rays;
}

}  // namespace

void SystemConfig::validate() const {
  if (n_slot != (std::size_t{1} << numerology))
    throw std::invalid_argument("SystemConfig: n_slot must equal 2^numerology");
  if (n_sc != 12 * n_rb) throw std::invalid_argument("SystemConfig: n_sc must equal 12*n_rb");
  if (n_rf == 0 || n_tx % n_rf != 0 || n_rf > n_tx)
    throw std::invalid_argument("SystemConfig: n_rf must divide n_tx and be <= n_tx");
  if (n_tx == 0 || n_rx == 0 || n_rb == 0 || n_subframes == 0)
    throw std::invalid_argument("SystemConfig: counts must be >= 1");
  if (carrier_hz <= 0.0 || scs_hz <= 0.0)
    throw std::invalid_argument("SystemConfig: carrier_hz and scs_hz must be positive");
  if (ue_velocity_kmh < 0.0) throw std::invalid_argument("SystemConfig: velocity must be >= 0");
}

void ChannelModelConfig::validate(const SystemConfig& cfg) const {
  if (n_clusters < 1 || rays_per_cluster < 1)
    throw std::invalid_argument("ChannelModelConfig: need at least one cluster and ray");
  if (calib_bs.size() != cfg.n_tx || calib_ue.size() != cfg.n_rx)
    throw std::invalid_argument("ChannelModelConfig: calibration vector lengths must match antennas");
  for (const auto& c : calib_bs)
    if (std::abs(c) < 0.5 || std::abs(c) > 2.0)
      throw std::invalid_argument("ChannelModelConfig: calib_bs magnitude outside [0.5, 2.0]");
  for (const auto& c : calib_ue)
    if (std::abs(c) < 0.5 || std::abs(c) > 2.0)
      throw std::invalid_argument("ChannelModelConfig: calib_ue magnitude outside [0.5, 2.0]");
}

FrameSchedule build_frame_schedule(const SystemConfig& cfg) {
  FrameSchedule sched;
  sched.slot_roles.assign(cfg.n_slot, SlotRole::Downlink);
  sched.slot_roles[0] = SlotRole::Special;
  sched.pilot_symbol_index = 13;
  return sched;
}

double max_doppler_hz(const SystemConfig& cfg) {
  return (cfg.ue_velocity_kmh / 3.6) * cfg.carrier_hz / kSpeedOfLight;
}

double coherence_time_s(const SystemConfig& cfg) {
  const double f_d = max_doppler_hz(cfg);
  return f_d > 0.0 ? 0.5 / f_d : std::numeric_limits<double>::infinity();
}

std::vector<cplx> make_calibration(std::size_t n, Rng& rng, const CalibSpec& spec) {
  const double gp = rng.uniform(-spec.global_phase_spread_rad, spec.global_phase_spread_rad);
  const double gm = rng.uniform(spec.global_mag_lo, spec.global_mag_hi);
  const cplx global = gm * cplx(std::cos(gp), std::sin(gp));
  std::vector<cplx> out(n);
  for (auto& c : out) {
    const double ph = rng.uniform(-spec.phase_ripple_rad, spec.phase_ripple_rad);
    const double mg = rng.uniform(spec.mag_lo, spec.mag_hi);
    c = global * mg * cplx(std::cos(ph), std::sin(ph));
  }
  return out;
}

CArray derive_downlink(const CArray& uplink_slot, const ChannelModelConfig& model) {
  const auto& d = uplink_slot.dims();
  if (d.size() != 3) throw std::invalid_argument("derive_downlink: expected [n_tx, n_rx, n_sc]");
  const std::size_t n_tx = d[0], n_rx = d[1], n_sc = d[2];
  if (model.calib_bs.size() != n_tx || model.calib_ue.size() != n_rx)
    throw std::invalid_argument("derive_downlink: calibration length mismatch");
  CArray dl({n_rx, n_tx, n_sc});
  for (std::size_t r = 0; r < n_rx; ++r)
    for (std::size_t t = 0; t < n_tx; ++t) {
      const cplx c = model.calib_ue[r] * model.calib_bs[t];
      for (std::size_t i = 0; i < n_sc; ++i) dl.at(r, t, i) = c * uplink_slot.at(t, r, i);
    }
  return dl;
}

std::vector<std::size_t> trace_dims(const SystemConfig& cfg) {
  return {cfg.n_subframes, cfg.n_slot, cfg.n_tx, cfg.n_rx, cfg.n_sc};
}

ChannelTrace generate_channel_trace(const SystemConfig& cfg, const ChannelModelConfig& model) {
  cfg.validate();
  model.validate(cfg);
  const auto rays = draw_rays(cfg, model);

  double tau_max = 0.0;
  for (const auto& r : rays) tau_max = std::max(tau_max, r.delay_s);
  if (tau_max > 1.0 / cfg.scs_hz)
    throw std::invalid_argument("generate_channel_trace: invalid config, max path delay " +
                                std::to_string(tau_max) + " s aliases across the subcarrier grid");

  const std::size_t n_rays = rays.size();
  // per-ray factors are slot-invariant; only the Doppler phasor moves
  std::vector<std::vector<cplx>> bs(n_rays), ue(n_rays), freq(n_rays);
  for (std::size_t p = 0; p < n_rays; ++p) {
    bs[p].resize(cfg.n_tx);
    const double su = kPi * std::sin(rays[p].aod_rad);
    for (std::size_t t = 0; t < cfg.n_tx; ++t)
      bs[p][t] = cplx(std::cos(su * t), std::sin(su * t));
    ue[p].resize(cfg.n_rx);
    const double sv = kPi * std::sin(rays[p].aoa_rad);
    for (std::size_t r = 0; r < cfg.n_rx; ++r)
      ue[p][r] = cplx(std::cos(sv * r), std::sin(sv * r));
    freq[p].resize(cfg.n_sc);
    for (std::size_t i = 0; i < cfg.n_sc; ++i) {
      const double ph = -2.0 * kPi * (cfg.scs_hz * i) * rays[p].delay_s;
      freq[p][i] = cplx(std::cos(ph), std::sin(ph));
    }
  }

  ChannelTrace trace;
  trace.doppler_hz = max_doppler_hz(cfg);
  trace.uplink = CArray(trace_dims(cfg));
  trace.downlink = CArray({cfg.n_subframes, cfg.n_slot, cfg.n_rx, cfg.n_tx, cfg.n_sc});

  const std::size_t slot_len = cfg.n_tx * cfg.n_rx * cfg.n_sc;
  CArray slot({cfg.n_tx, cfg.n_rx, cfg.n_sc});
  for (std::size_t s = 0; s < cfg.n_subframes; ++s) {
    for (std::size_t t = 0; t < cfg.n_slot; ++t) {
      const double t_abs =
          (static_cast<double>(s) * cfg.n_slot + t) * cfg.slot_duration_s();
      for (std::size_t i = 0; i < slot_len; ++i) slot[i] = 0.0;
      for (std::size_t p = 0; p < n_rays; ++p) {
        const double ph = 2.0 * kPi * rays[p].doppler_hz * t_abs;
        const cplx coef = rays[p].gain * cplx(std::cos(ph), std::sin(ph));
        std::size_t off = 0;
        for (std::size_t a = 0; a < cfg.n_tx; ++a) {
          const cplx ca = coef * bs[p][a];
          for (std::size_t r = 0; r < cfg.n_rx; ++r) {
            const cplx car = ca * ue[p][r];
            const cplx* f = freq[p].data();
            for (std::size_t i = 0; i < cfg.n_sc; ++i) slot[off + i] += car * f[i];
            off += cfg.n_sc;
          }
        }
      }
      // whole-tensor average power 1 for this slot (recorded in the manifest)
      const double p_avg = power_sum(slot) / static_cast<double>(slot_len);
      if (p_avg <= 0.0)
        throw std::runtime_error("generate_channel_trace: zero-power slot");
      const double scale = 1.0 / std::sqrt(p_avg);
      for (std::size_t i = 0; i < slot_len; ++i) slot[i] *= scale;

      cplx* up = trace.uplink.data() + (s * cfg.n_slot + t) * slot_len;
      for (std::size_t i = 0; i < slot_len; ++i) up[i] = slot[i];
      const CArray dl = derive_downlink(slot, model);
      cplx* dp = trace.downlink.data() + (s * cfg.n_slot + t) * slot_len;
      for (std::size_t i = 0; i < slot_len; ++i) dp[i] = dl[i];
    }
  }
  return trace;
}

void system_to_kv(const SystemConfig& cfg, KvConfig& kv) {
  kv.set_int("system.n_tx", static_cast<std::int64_t>(cfg.n_tx));
  kv.set_int("system.n_rx", static_cast<std::int64_t>(cfg.n_rx));
  kv.set_int("system.n_rf", static_cast<std::int64_t>(cfg.n_rf));
  kv.set_int("system.n_rb", static_cast<std::int64_t>(cfg.n_rb));
  kv.set_int("system.n_sc", static_cast<std::int64_t>(cfg.n_sc));
  kv.set_num("system.carrier_hz", cfg.carrier_hz);
  kv.set_num("system.scs_hz", cfg.scs_hz);
  kv.set_int("system.numerology", cfg.numerology);
  kv.set_int("system.n_slot", static_cast<std::int64_t>(cfg.n_slot));
  kv.set_int("system.n_subframes", static_cast<std::int64_t>(cfg.n_subframes));
  kv.set_num("system.srs_period_ms", cfg.srs_period_ms);
  kv.set_num("system.ue_velocity_kmh", cfg.ue_velocity_kmh);
  kv.set_num("system.snr_db", cfg.snr_db);
}

SystemConfig system_from_kv(const KvConfig& kv) {
  SystemConfig cfg;
  cfg.n_tx = static_cast<std::size_t>(kv.integer("system.n_tx"));
  cfg.n_rx = static_cast<std::size_t>(kv.integer("system.n_rx"));
  cfg.n_rf = static_cast<std::size_t>(kv.integer("system.n_rf"));
  cfg.n_rb = static_cast<std::size_t>(kv.integer("system.n_rb"));
  cfg.n_sc = static_cast<std::size_t>(kv.integer_or("system.n_sc", 12 * cfg.n_rb));
  cfg.carrier_hz = kv.num("system.carrier_hz");
  cfg.scs_hz = kv.num("system.scs_hz");
  cfg.numerology = static_cast<unsigned>(kv.integer("system.numerology"));
  cfg.n_slot = static_cast<std::size_t>(
      kv.integer_or("system.n_slot", std::int64_t{1} << cfg.numerology));
  cfg.n_subframes = static_cast<std::size_t>(kv.integer("system.n_subframes"));
  cfg.srs_period_ms = kv.num_or("system.srs_period_ms", 1.0);
  cfg.ue_velocity_kmh = kv.num("system.ue_velocity_kmh");
  cfg.snr_db = kv.num("system.snr_db");
  cfg.validate();
  return cfg;
}

void model_to_kv(const ChannelModelConfig& m, KvConfig& kv) {
  kv.set_int("model.n_clusters", static_cast<std::int64_t>(m.n_clusters));
  kv.set_int("model.rays_per_cluster", static_cast<std::int64_t>(m.rays_per_cluster));
  kv.set_num("model.delay_spread_s", m.delay_spread_s);
  kv.set_int("model.seed", static_cast<std::int64_t>(m.seed));
  kv.set_num("model.bs_sector_rad", m.bs_sector_rad);
  kv.set_num("model.ue_sector_rad", m.ue_sector_rad);
  kv.set_num("model.intra_cluster_spread_rad", m.intra_cluster_spread_rad);
  kv.set_num("model.cluster_shadow_db", m.cluster_shadow_db);
  kv.set_cvec("model.calib_bs", m.calib_bs);
  kv.set_cvec("model.calib_ue", m.calib_ue);
  kv.set("model.normalization", "per-slot whole-tensor average power = 1");
}

ChannelModelConfig model_from_kv(const KvConfig& kv) {
  ChannelModelConfig m;
  m.n_clusters = static_cast<std::size_t>(kv.integer("model.n_clusters"));
  m.rays_per_cluster = static_cast<std::size_t>(kv.integer("model.rays_per_cluster"));
  m.delay_spread_s = kv.num("model.delay_spread_s");
  m.seed = static_cast<std::uint64_t>(kv.integer("model.seed"));
  m.bs_sector_rad = kv.num_or("model.bs_sector_rad", m.bs_sector_rad);
  m.ue_sector_rad = kv.num_or("model.ue_sector_rad", m.ue_sector_rad);
  m.intra_cluster_spread_rad =
      kv.num_or("model.intra_cluster_spread_rad", m.intra_cluster_spread_rad);
  m.cluster_shadow_db = kv.num_or("model.cluster_shadow_db", m.cluster_shadow_db);
  if (kv.has("model.calib_bs")) m.calib_bs = kv.cvec("model.calib_bs");
  if (kv.has("model.calib_ue")) m.calib_ue = kv.cvec("model.calib_ue");
  return m;
}

void save_trace(const std::string& path, const ChannelTrace& trace) {
  io::write_tensor_file(path, io::make_complex_record("uplink", trace.uplink, true));
}

ChannelTrace load_trace(const std::string& path, const SystemConfig& cfg,
                        const ChannelModelConfig& model) {
  const auto rec = io::read_tensor_file(path);
  ChannelTrace trace;
  trace.uplink = io::to_carray(rec);
  if (trace.uplink.dims() != trace_dims(cfg))
    throw std::runtime_error("load_trace: dims in " + path + " do not match the manifest config");
  trace.doppler_hz = max_doppler_hz(cfg);
  trace.downlink = CArray({cfg.n_subframes, cfg.n_slot, cfg.n_rx, cfg.n_tx, cfg.n_sc});
  const std::size_t slot_len = cfg.n_tx * cfg.n_rx * cfg.n_sc;
  CArray slot({cfg.n_tx, cfg.n_rx, cfg.n_sc});
  for (std::size_t s = 0; s < cfg.n_subframes; ++s)
    for (std::size_t t = 0; t < cfg.n_slot; ++t) {
      const cplx* up = trace.uplink.data() + (s * cfg.n_slot + t) * slot_len;
      for (std::size_t i = 0; i < slot_len; ++i) slot[i] = up[i];
      const CArray dl = derive_downlink(slot, model);
      cplx* dp = trace.downlink.data() + (s * cfg.n_slot + t) * slot_len;
      for (std::size_t i = 0; i < slot_len; ++i) dp[i] = dl[i];
    }
  return trace;
}

}  // namespace mxl::sim
