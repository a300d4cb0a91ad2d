#include "mxl/training.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <stdexcept>

namespace mxl::train {
namespace {

CArray copy_slot(const CArray& tensor5d, std::size_t s, std::size_t t,
                 std::vector<std::size_t> slot_dims) {
  CArray out(slot_dims);
  const std::size_t slot_len = out.size();
  const cplx* src = tensor5d.data() + (s * tensor5d.dim(1) + t) * slot_len;
  for (std::size_t i = 0; i < slot_len; ++i) out[i] = src[i];
  return out;
}

double tensor_sq_err(const Tensor& pred, const Tensor& truth) {
  double acc = 0.0;
  const double* p = pred.data();
  const double* q = truth.data();
  for (std::size_t i = 0; i < pred.numel(); ++i) acc += (p[i] - q[i]) * (p[i] - q[i]);
  return acc;
}

double tensor_sq_norm(const Tensor& t) {
  double acc = 0.0;
  for (std::size_t i = 0; i < t.numel(); ++i) acc += t.data()[i] * t.data()[i];
  return acc;
}

Tensor sq_err_tensor(const Tensor& pred, const Tensor& truth) {
  const Tensor d = ad::sub(pred, truth);
  return ad::sum_all(ad::mul(d, d));
}

struct SampleRunner {
  // runs forward+backward for train window idx (loss pre-scaled by inv_batch)
  // and returns the unscaled loss value
  std::function<double(std::size_t idx, double inv_batch, Rng* drop_rng)> train_sample;
  std::function<double(std::size_t idx)> valid_sample;
};

TrainResult run_epochs(ParamStore& store, const TrainConfig& cfg, std::size_t n_train,
                       std::size_t n_valid, const SampleRunner& runner) {
  if (n_train == 0 || n_valid == 0)
    throw std::invalid_argument("training: empty train or validation split");
  Rng master(cfg.seed);
  TrainResult result;
  result.best_valid = std::numeric_limits<double>::infinity();
  std::map<std::string, std::vector<double>> best;
  std::size_t since_best = 0;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = cosine_lr(cfg.lr0, epoch, cfg.epochs);
    Rng shuffle_rng = master.fork(2 * epoch);
    Rng drop_rng = master.fork(2 * epoch + 1);
    std::vector<std::size_t> order(n_train);
    for (std::size_t i = 0; i < n_train; ++i) order[i] = i;
    shuffle_rng.shuffle(order);

    double train_loss = 0.0;
    std::size_t pos = 0;
    while (pos < n_train) {
      const std::size_t bsz = std::min(cfg.batch, n_train - pos);
      const double inv_batch = 1.0 / static_cast<double>(bsz);
      for (std::size_t b = 0; b < bsz; ++b)
        train_loss += runner.train_sample(order[pos + b], inv_batch, &drop_rng);
      adam_step(store, lr);
      pos += bsz;
    }
    train_loss /= static_cast<double>(n_train);
    if (!std::isfinite(train_loss))
      throw std::runtime_error("training diverged: non-finite loss at epoch " +
                               std::to_string(epoch));

    double valid_loss = 0.0;
    {
      ad::NoGradGuard guard;
      for (std::size_t i = 0; i < n_valid; ++i) valid_loss += runner.valid_sample(i);
    }
    valid_loss /= static_cast<double>(n_valid);

    result.log.push_back({epoch, train_loss, valid_loss, lr});
    if (valid_loss < result.best_valid) {
      result.best_valid = valid_loss;
      result.best_epoch = epoch;
      best.clear();
      for (const auto& name : store.names()) best[name] = store.at(name).values();
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  for (auto& [name, vals] : best) store.at(name).values() = vals;
  store.zero_grads();
  return result;
}

}  // namespace

void TrainConfig::validate(const sim::SystemConfig& sys) const {
  if (window_len != sys.n_slot || stride != sys.n_slot)
    throw std::invalid_argument("TrainConfig: window_len and stride must equal n_slot");
  if (batch < 1) throw std::invalid_argument("TrainConfig: batch must be >= 1");
  if (n_train_traces == 0 || n_valid_traces == 0)
    throw std::invalid_argument("TrainConfig: need train and validation traces");
}

CArray Dataset::uplink_slot(const Window& w, std::size_t slot) const {
  return copy_slot(traces.at(w.trace).uplink, w.subframe, slot, {sys.n_tx, sys.n_rx, sys.n_sc});
}

CArray Dataset::downlink_slot(const Window& w, std::size_t slot) const {
  return copy_slot(traces.at(w.trace).downlink, w.subframe, slot, {sys.n_rx, sys.n_tx, sys.n_sc});
}

Dataset build_dataset(const sim::SystemConfig& sys, const sim::ChannelModelConfig& model,
                      const pilots::SrsPattern& pattern, const TrainConfig& cfg) {
  Dataset ds;
  ds.sys = sys;
  ds.model = model;
  ds.pattern = pattern;
  const std::size_t n_traces = cfg.n_train_traces + cfg.n_valid_traces + cfg.n_test_traces;
  ds.traces.reserve(n_traces);
  for (std::size_t i = 0; i < n_traces; ++i) {
    sim::ChannelModelConfig m = model;  // same calibration, new multipath draw
    m.seed = Rng(model.seed).fork(1000 + i).seed();
    ds.traces.push_back(sim::generate_channel_trace(sys, m));
  }
  for (std::size_t i = 0; i < cfg.n_train_traces; ++i) ds.train_traces.push_back(i);
  for (std::size_t i = 0; i < cfg.n_valid_traces; ++i)
    ds.valid_traces.push_back(cfg.n_train_traces + i);
  for (std::size_t i = 0; i < cfg.n_test_traces; ++i)
    ds.test_traces.push_back(cfg.n_train_traces + cfg.n_valid_traces + i);
  return ds;
}

std::vector<Window> make_windows(const Dataset& ds, const std::vector<std::size_t>& trace_ids) {
  std::vector<Window> out;
  out.reserve(trace_ids.size() * ds.sys.n_subframes);
  for (auto t : trace_ids)
    for (std::size_t s = 0; s < ds.sys.n_subframes; ++s) out.push_back({t, s});
  return out;
}

std::vector<Window> make_windows(const sim::ChannelTrace& trace, const sim::SystemConfig& sys) {
  if (trace.uplink.dim(0) != sys.n_subframes)
    throw std::invalid_argument("make_windows: trace does not match the config");
  std::vector<Window> out;
  for (std::size_t s = 0; s < sys.n_subframes; ++s) out.push_back({0, s});
  return out;
}

std::uint64_t window_seed(std::uint64_t base, const Window& w) {
  return Rng(base).fork(w.trace * 1000003ull + w.subframe).seed();
}

Tensor loss_mse_sfcen(const std::vector<Tensor>& preds, const std::vector<Tensor>& truths) {
  if (preds.empty() || preds.size() != truths.size())
    throw std::invalid_argument("loss_mse_sfcen: batch size mismatch");
  Tensor acc;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    Tensor term = sq_err_tensor(preds[i], truths[i]);
    acc = acc.defined() ? ad::add(acc, term) : term;
  }
  return ad::scale(acc, 1.0 / static_cast<double>(preds.size()));
}

Tensor loss_nmse_udccn(const std::vector<Tensor>& preds, const std::vector<Tensor>& truths) {
  if (preds.empty() || preds.size() != truths.size())
    throw std::invalid_argument("loss_nmse_udccn: batch size mismatch");
  Tensor acc;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double den = tensor_sq_norm(truths[i]);
    if (den <= 0.0) throw std::domain_error("loss_nmse_udccn: zero-power truth");
    Tensor term = ad::scale(sq_err_tensor(preds[i], truths[i]), 1.0 / den);
    acc = acc.defined() ? ad::add(acc, term) : term;
  }
  return ad::scale(acc, 1.0 / static_cast<double>(preds.size()));
}

Tensor loss_nmse_dcen(const std::vector<std::vector<Tensor>>& preds,
                      const std::vector<std::vector<Tensor>>& truths) {
  if (preds.empty() || preds.size() != truths.size())
    throw std::invalid_argument("loss_nmse_dcen: batch size mismatch");
  Tensor acc;
  for (std::size_t w = 0; w < preds.size(); ++w) {
    if (preds[w].empty() || preds[w].size() != truths[w].size())
      throw std::invalid_argument("loss_nmse_dcen: slot count mismatch");
    Tensor slot_acc;
    for (std::size_t t = 0; t < preds[w].size(); ++t) {
      const double den = tensor_sq_norm(truths[w][t]);
      if (den <= 0.0) throw std::domain_error("loss_nmse_dcen: zero-power truth");
      Tensor term = ad::scale(sq_err_tensor(preds[w][t], truths[w][t]), 1.0 / den);
      slot_acc = slot_acc.defined() ? ad::add(slot_acc, term) : term;
    }
    Tensor term = ad::scale(slot_acc, 1.0 / static_cast<double>(preds[w].size()));
    acc = acc.defined() ? ad::add(acc, term) : term;
  }
  return ad::scale(acc, 1.0 / static_cast<double>(preds.size()));
}

void write_loss_csv(const std::string& path, const TrainResult& result) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("write_loss_csv: cannot write " + path);
  out << "epoch,train_loss,valid_loss,lr\n";
  char buf[160];
  for (const auto& e : result.log) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g\n", e.epoch, e.train_loss,
                  e.valid_loss, e.lr);
    out << buf;
  }
}

double cosine_lr(double lr0, std::size_t epoch, std::size_t total_epochs) {
  if (total_epochs <= 1) return lr0;
  const double x = static_cast<double>(epoch) / static_cast<double>(total_epochs - 1);
  return lr0 * (0.1 + 0.9 * 0.5 * (1.0 + std::cos(std::numbers::pi * x)));
}

SfcenTrainOutput train_sfcen(const Dataset& ds, const TrainConfig& cfg, const SfcenHyper& hyper) {
  cfg.validate(ds.sys);
  const auto scfg =
      sfcen::SfcenConfig::derive(ds.sys, ds.pattern, hyper.d_rep, hyper.d_rep, hyper.n_heads,
                                 hyper.r_s_up, hyper.r_f_up, hyper.p_attn, hyper.p_seg);
  SfcenTrainOutput out{scfg, {}, {}};
  const sfcen::SfcenNet net(scfg, ds.sys, ds.pattern);
  Rng init_rng = Rng(cfg.seed).fork(101);
  net.init_params(out.store, init_rng);

  struct Sample {
    baselines::CoarseEstimate ls;
    Tensor truth;
  };
  Rng snr_rng = Rng(cfg.seed).fork(55);
  auto make_sample = [&](const Window& w) {
    const double snr = cfg.snr_randomize ? snr_rng.uniform(cfg.snr_lo, cfg.snr_hi) : ds.sys.snr_db;
    const auto obs = pilots::observe_pilots(ds.uplink_slot(w, 0), ds.pattern, snr,
                                            window_seed(cfg.seed, w));
    return Sample{baselines::ls_estimate(obs), sfcen::carray_to_tensor(ds.uplink_slot(w, 0))};
  };
  std::vector<Sample> tr, va;
  for (const auto& w : make_windows(ds, ds.train_traces)) tr.push_back(make_sample(w));
  for (const auto& w : make_windows(ds, ds.valid_traces)) va.push_back(make_sample(w));

  SampleRunner runner;
  runner.train_sample = [&](std::size_t idx, double inv_batch, Rng* drop_rng) {
    const Tensor pred = net.forward(tr[idx].ls, out.store, true, drop_rng);
    const Tensor loss = sq_err_tensor(pred, tr[idx].truth);
    ad::backward(ad::scale(loss, inv_batch));
    return loss.item();
  };
  runner.valid_sample = [&](std::size_t idx) {
    const Tensor pred = net.forward(va[idx].ls, out.store, false, nullptr);
    return tensor_sq_err(pred, va[idx].truth);
  };
  out.result = run_epochs(out.store, cfg, tr.size(), va.size(), runner);
  return out;
}

TudcenTrainOutput train_tudcen(const Dataset& ds, const TrainConfig& cfg,
                               const TudcenHyper& hyper, const SfcenTrainOutput* sfcen_ctx) {
  cfg.validate(ds.sys);
  TudcenTrainOutput out;
  out.ucfg = {hyper.kernel, hyper.d_feat};
  out.scfg = {hyper.n1, hyper.n2, hyper.d_emb};
  out.gcfg = {hyper.n_layers, hyper.d_emb,  hyper.n_heads,
              hyper.d_ff,     hyper.p_attn, hyper.p_ff,
              ds.sys.n_slot - 1};
  const tudcen::TudcenNet net(out.ucfg, out.scfg, out.gcfg, ds.sys);

  // slot-0 uplink estimates feeding the calibration stage
  std::unique_ptr<sfcen::SfcenNet> sfcen_net;
  if (sfcen_ctx)
    sfcen_net = std::make_unique<sfcen::SfcenNet>(sfcen_ctx->cfg, ds.sys, ds.pattern);
  auto uplink_estimate = [&](const Window& w) {
    if (!sfcen_ctx) return sfcen::carray_to_tensor(ds.uplink_slot(w, 0));
    const auto obs = pilots::observe_pilots(ds.uplink_slot(w, 0), ds.pattern, ds.sys.snr_db,
                                            window_seed(cfg.seed, w));
    const auto ls = baselines::ls_estimate(obs);
    ad::NoGradGuard guard;
    return sfcen_net->forward(ls, sfcen_ctx->store, false, nullptr);
  };

  struct Sample {
    Tensor uplink_est;                // slot-0 estimate (input to UDCCN)
    std::vector<Tensor> dl_truth;     // slots 1..n_slot-1
  };
  auto make_sample = [&](const Window& w) {
    Sample s;
    s.uplink_est = uplink_estimate(w);
    for (std::size_t t = 1; t < ds.sys.n_slot; ++t)
      s.dl_truth.push_back(sfcen::carray_to_tensor(ds.downlink_slot(w, t)));
    return s;
  };
  std::vector<Sample> tr, va;
  for (const auto& w : make_windows(ds, ds.train_traces)) tr.push_back(make_sample(w));
  for (const auto& w : make_windows(ds, ds.valid_traces)) va.push_back(make_sample(w));

  const std::size_t n_slot = ds.sys.n_slot;
  const std::size_t m = n_slot >= 3 ? n_slot - 2 : 0;  // teacher tokens / predictions

  auto teacher_inputs = [&](const Sample& s) {
    // ground-truth downlink slots 1..n_slot-2
    std::vector<Tensor> in;
    for (std::size_t t = 0; t < m; ++t) in.push_back(s.dl_truth[t]);
    return in;
  };
  auto dcen_loss = [&](const Sample& s, const std::vector<Tensor>& preds) {
    // Eq.-style per-slot normalized errors, slots 2..n_slot-1
    Tensor acc;
    for (std::size_t t = 0; t < preds.size(); ++t) {
      const Tensor& truth = s.dl_truth[t + 1];
      const double den = tensor_sq_norm(truth);
      Tensor term = ad::scale(sq_err_tensor(preds[t], truth), 1.0 / den);
      acc = acc.defined() ? ad::add(acc, term) : term;
    }
    return ad::scale(acc, 1.0 / static_cast<double>(preds.size()));
  };

  if (!cfg.joint_tudcen) {
    Rng init_u = Rng(cfg.seed).fork(201);
    net.init_udccn_params(out.udccn_store, init_u);
    SampleRunner ur;
    ur.train_sample = [&](std::size_t idx, double inv_batch, Rng* drop_rng) {
      const Tensor pred = net.udccn_forward(tr[idx].uplink_est, out.udccn_store, true, drop_rng);
      const double den = tensor_sq_norm(tr[idx].dl_truth[0]);
      const Tensor loss = ad::scale(sq_err_tensor(pred, tr[idx].dl_truth[0]), 1.0 / den);
      ad::backward(ad::scale(loss, inv_batch));
      return loss.item();
    };
    ur.valid_sample = [&](std::size_t idx) {
      const Tensor pred = net.udccn_forward(va[idx].uplink_est, out.udccn_store, false, nullptr);
      return tensor_sq_err(pred, va[idx].dl_truth[0]) / tensor_sq_norm(va[idx].dl_truth[0]);
    };
    out.udccn_result = run_epochs(out.udccn_store, cfg, tr.size(), va.size(), ur);

    if (m > 0) {
      Rng init_d = Rng(cfg.seed).fork(202);
      net.init_dcen_params(out.dcen_store, init_d);
      SampleRunner dr;
      dr.train_sample = [&](std::size_t idx, double inv_batch, Rng* drop_rng) {
        const auto preds =
            net.teacher_forced_predictions(teacher_inputs(tr[idx]), out.dcen_store, true, drop_rng);
        const Tensor loss = dcen_loss(tr[idx], preds);
        ad::backward(ad::scale(loss, inv_batch));
        return loss.item();
      };
      dr.valid_sample = [&](std::size_t idx) {
        const auto preds =
            net.teacher_forced_predictions(teacher_inputs(va[idx]), out.dcen_store, false, nullptr);
        return dcen_loss(va[idx], preds).item();
      };
      out.dcen_result = run_epochs(out.dcen_store, cfg, tr.size(), va.size(), dr);
    }
    return out;
  }

  // joint: one store, summed losses; slot-1 teacher token is the UDCCN output
  Rng init_j = Rng(cfg.seed).fork(203);
  net.init_params(out.dcen_store, init_j);
  SampleRunner jr;
  auto joint_loss = [&](const Sample& s, ParamStore& store, bool train_flag, Rng* drop_rng) {
    const Tensor dl1 = net.udccn_forward(s.uplink_est, store, train_flag, drop_rng);
    const double den1 = tensor_sq_norm(s.dl_truth[0]);
    Tensor loss = ad::scale(sq_err_tensor(dl1, s.dl_truth[0]), 1.0 / den1);
    if (m > 0) {
      std::vector<Tensor> inputs;
      inputs.push_back(dl1);
      for (std::size_t t = 1; t < m; ++t) inputs.push_back(s.dl_truth[t]);
      const auto preds = net.teacher_forced_predictions(inputs, store, train_flag, drop_rng);
      loss = ad::add(loss, dcen_loss(s, preds));
    }
    return loss;
  };
  jr.train_sample = [&](std::size_t idx, double inv_batch, Rng* drop_rng) {
    const Tensor loss = joint_loss(tr[idx], out.dcen_store, true, drop_rng);
    ad::backward(ad::scale(loss, inv_batch));
    return loss.item();
  };
  jr.valid_sample = [&](std::size_t idx) {
    return joint_loss(va[idx], out.dcen_store, false, nullptr).item();
  };
  out.dcen_result = run_epochs(out.dcen_store, cfg, tr.size(), va.size(), jr);
  out.udccn_result = out.dcen_result;

  // mirror calibration weights so downstream consumers see one layout
  Rng mirror_rng(0);
  net.init_udccn_params(out.udccn_store, mirror_rng);
  for (const char* name : {"udccn.conv.w", "udccn.conv.b", "udccn.wd"})
    out.udccn_store.at(name).values() = out.dcen_store.at(name).values();
  return out;
}

}  // namespace mxl::train
