#include "mxl/sfcen.hpp"

#include <cmath>
#include <stdexcept>

namespace mxl::sfcen {
namespace {

using ad::concat;
using ad::embedding_lookup;
using ad::gather_bijection;
using ad::layer_norm_lastdim;
using ad::matmul;
using ad::permute;
using ad::reshape;
using ad::slice;
using ad::softmax_lastdim;
using ad::transpose;

std::uint64_t draw_seed(Rng* rng) { return rng ? rng->next_u64() : 0; }

}  // namespace

void AseemConfig::validate() const {
  if (n_in == 0 || d_rep == 0) throw std::invalid_argument("AseemConfig: empty dims");
  if (n_heads == 0 || d_rep % n_heads != 0)
    throw std::invalid_argument("AseemConfig: d_rep must be divisible by n_heads");
  if (upscale < 1) throw std::invalid_argument("AseemConfig: upscale must be >= 1");
}

Tensor positional_encoding(std::size_t n_in, std::size_t d_rep, const ParamStore& store,
                           const std::string& prefix) {
  const Tensor& table = store.at(prefix + "pe");
  if (table.dim(1) != d_rep)
    throw std::invalid_argument("positional_encoding: table width mismatch");
  std::vector<std::size_t> idx(n_in);
  for (std::size_t i = 0; i < n_in; ++i) idx[i] = i;
  return embedding_lookup(table, idx);
}

Tensor mhsa(const Tensor& x_tilde, const AseemConfig& cfg, const ParamStore& store,
            const std::string& prefix, bool train, Rng* drop_rng, const Tensor* mask) {
  cfg.validate();
  const std::size_t d = cfg.d_rep;
  const std::size_t dk = d / cfg.n_heads;
  if (x_tilde.rank() != 2 || x_tilde.dim(1) != d)
    throw std::invalid_argument("mhsa: input must be [n_in, d_rep]");
  const Tensor q = matmul(x_tilde, store.at(prefix + "wq"));
  const Tensor k = matmul(x_tilde, store.at(prefix + "wk"));
  const Tensor v = matmul(x_tilde, store.at(prefix + "wv"));
  std::vector<Tensor> heads;
  heads.reserve(cfg.n_heads);
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(dk));
  for (std::size_t h = 0; h < cfg.n_heads; ++h) {
    const Tensor qi = slice(q, 1, h * dk, dk);
    const Tensor ki = slice(k, 1, h * dk, dk);
    const Tensor vi = slice(v, 1, h * dk, dk);
    Tensor logits = ad::scale(matmul(qi, transpose(ki)), inv_sqrt_dk);
    if (mask) logits = ad::add(logits, *mask);
    Tensor probs = softmax_lastdim(logits);
    probs = ad::dropout(probs, cfg.p_attn, train, draw_seed(drop_rng));
    heads.push_back(matmul(probs, vi));
  }
  const Tensor merged = cfg.n_heads == 1 ? heads[0] : concat(heads, 1);
  return matmul(merged, store.at(prefix + "wo"));
}

Tensor seg(const Tensor& x_ln1, const AseemConfig& cfg, const ParamStore& store,
           const std::string& prefix, bool train, Rng* drop_rng) {
  Tensor h = ad::relu(ad::add(matmul(x_ln1, store.at(prefix + "wg1")), store.at(prefix + "bg1")));
  h = ad::dropout(h, cfg.p_seg, train, draw_seed(drop_rng));
  const Tensor x_g = ad::add(matmul(h, store.at(prefix + "wg2")), store.at(prefix + "bg2"));
  const Tensor res = matmul(x_ln1, store.at(prefix + "w_rc2"));
  const Tensor x_rc2 = ad::add(x_g, res);
  return layer_norm_lastdim(x_rc2, store.at(prefix + "ln2_g"), store.at(prefix + "ln2_b"));
}

Tensor sub_element_shuffle(const Tensor& x_ln2, std::size_t r) {
  if (x_ln2.rank() != 2 || x_ln2.dim(1) % r != 0)
    throw std::invalid_argument("sub_element_shuffle: width not divisible by upscale");
  const std::size_t n = x_ln2.dim(0);
  const std::size_t d = x_ln2.dim(1) / r;
  auto map = std::make_shared<std::vector<std::size_t>>(n * r * d);
  for (std::size_t e = 0; e < n; ++e)
    for (std::size_t j = 0; j < r; ++j)
      for (std::size_t c = 0; c < d; ++c)
        (*map)[(r * e + j) * d + c] = e * (r * d) + c * r + j;
  return gather_bijection(x_ln2, map, {r * n, d});
}

Tensor sub_element_unshuffle(const Tensor& x_e, std::size_t r) {
  if (x_e.rank() != 2 || x_e.dim(0) % r != 0)
    throw std::invalid_argument("sub_element_unshuffle: rows not divisible by upscale");
  const std::size_t n = x_e.dim(0) / r;
  const std::size_t d = x_e.dim(1);
  auto map = std::make_shared<std::vector<std::size_t>>(n * r * d);
  for (std::size_t e = 0; e < n; ++e)
    for (std::size_t j = 0; j < r; ++j)
      for (std::size_t c = 0; c < d; ++c)
        (*map)[e * (r * d) + c * r + j] = (r * e + j) * d + c;
  return gather_bijection(x_e, map, {n, r * d});
}

Tensor aseem_forward(const Tensor& x, const AseemConfig& cfg, const ParamStore& store,
                     const std::string& prefix, bool train, Rng* drop_rng) {
  cfg.validate();
  if (x.rank() != 2 || x.dim(0) != cfg.n_in || x.dim(1) != cfg.d_rep)
    throw std::invalid_argument("aseem_forward: input must be [n_in, d_rep]");
  const Tensor p = positional_encoding(cfg.n_in, cfg.d_rep, store, prefix);
  const Tensor x_tilde = ad::add(x, p);
  const Tensor x_mhsa = mhsa(x_tilde, cfg, store, prefix, train, drop_rng);
  const Tensor x_rc1 = ad::add(x_mhsa, x_tilde);
  const Tensor x_ln1 =
      layer_norm_lastdim(x_rc1, store.at(prefix + "ln1_g"), store.at(prefix + "ln1_b"));
  const Tensor x_ln2 = seg(x_ln1, cfg, store, prefix, train, drop_rng);
  return sub_element_shuffle(x_ln2, cfg.upscale);
}

void aseem_init(const AseemConfig& cfg, ParamStore& store, const std::string& prefix, Rng& rng) {
  const std::size_t d = cfg.d_rep;
  const std::size_t rd = cfg.upscale * d;
  ad::init_uniform(store.create(prefix + "pe", {cfg.n_in, d}), rng, -0.02, 0.02);
  for (const char* w : {"wq", "wk", "wv", "wo"})
    ad::init_xavier(store.create(prefix + w, {d, d}), rng);
  ad::init_constant(store.create(prefix + "ln1_g", {d}), 1.0);
  store.create(prefix + "ln1_b", {d});
  ad::init_xavier(store.create(prefix + "wg1", {d, d}), rng);
  store.create(prefix + "bg1", {d});
  ad::init_xavier(store.create(prefix + "wg2", {d, rd}), rng);
  store.create(prefix + "bg2", {rd});
  // sub-elements start as copies of their parent element
  Tensor& w_rc2 = store.create(prefix + "w_rc2", {d, rd});
  for (std::size_t c = 0; c < d; ++c)
    for (std::size_t j = 0; j < cfg.upscale; ++j)
      w_rc2.values()[c * rd + c * cfg.upscale + j] = 1.0;
  ad::init_constant(store.create(prefix + "ln2_g", {rd}), 1.0);
  store.create(prefix + "ln2_b", {rd});
}

std::size_t ceil_log(std::size_t ratio, std::size_t base) {
  if (base < 2) throw std::invalid_argument("ceil_log: base must be >= 2");
  std::size_t n = 0, v = 1;
  while (v < ratio) {
    v *= base;
    ++n;
  }
  return n;
}

SfcenConfig SfcenConfig::derive(const sim::SystemConfig& sys, const pilots::SrsPattern& pattern,
                                std::size_t d_sr, std::size_t d_fr, std::size_t n_heads,
                                std::size_t r_s_up, std::size_t r_f_up, double p_attn,
                                double p_seg) {
  SfcenConfig cfg;
  cfg.r_s_up = r_s_up;
  cfg.r_f_up = r_f_up;
  cfg.n_si = pattern.rf_antenna_set.size();
  cfg.n_fi = pattern.n_pilot_sc();
  const std::size_t big_rs = sys.n_tx / cfg.n_si;
  const std::size_t big_rf = pattern.comb;
  cfg.n_se = ceil_log(big_rs, r_s_up);
  cfg.n_fe = ceil_log(big_rf, r_f_up);
  cfg.d_sr = d_sr;
  cfg.d_fr = d_fr;
  cfg.n_heads = n_heads;
  cfg.p_attn = p_attn;
  cfg.p_seg = p_seg;
  cfg.validate(sys);
  return cfg;
}

void SfcenConfig::validate(const sim::SystemConfig& sys) const {
  if (d_sr % n_heads != 0 || d_fr % n_heads != 0)
    throw std::invalid_argument("SfcenConfig: representation dims must be divisible by n_heads");
  std::size_t rows = n_si;
  for (std::size_t i = 0; i < n_se; ++i) rows *= r_s_up;
  if (rows < sys.n_tx) throw std::invalid_argument("SfcenConfig: spatial stages undershoot n_tx");
  rows = n_fi;
  for (std::size_t i = 0; i < n_fe; ++i) rows *= r_f_up;
  if (rows < sys.n_sc)
    throw std::invalid_argument("SfcenConfig: frequency stages undershoot n_sc");
}

SfcenNet::SfcenNet(SfcenConfig cfg, sim::SystemConfig sys, pilots::SrsPattern pattern)
    : cfg_(std::move(cfg)), sys_(std::move(sys)), pattern_(std::move(pattern)) {
  cfg_.validate(sys_);
}

void SfcenNet::init_params(ParamStore& store, Rng& rng) const {
  const std::size_t in_w = 2 * sys_.n_rx * cfg_.n_fi;
  ad::init_xavier(store.create("sfcen.in.w", {in_w, cfg_.d_sr}), rng);
  store.create("sfcen.in.b", {cfg_.d_sr});

  AseemConfig a;
  a.d_rep = cfg_.d_sr;
  a.n_heads = cfg_.n_heads;
  a.upscale = cfg_.r_s_up;
  a.p_attn = cfg_.p_attn;
  a.p_seg = cfg_.p_seg;
  std::size_t rows = cfg_.n_si;
  for (std::size_t i = 0; i < cfg_.n_se; ++i) {
    a.n_in = rows;
    aseem_init(a, store, "sfcen.se" + std::to_string(i) + ".", rng);
    rows *= cfg_.r_s_up;
  }

  const std::size_t c_tr = 2 * sys_.n_rx;
  ad::init_xavier(store.create("sfcen.tr.w1", {cfg_.d_sr, cfg_.n_fi * c_tr}), rng);
  store.create("sfcen.tr.b1", {cfg_.n_fi * c_tr});
  ad::init_xavier(store.create("sfcen.tr.w2", {sys_.n_tx * c_tr, cfg_.d_fr}), rng);
  store.create("sfcen.tr.b2", {cfg_.d_fr});

  a.d_rep = cfg_.d_fr;
  a.upscale = cfg_.r_f_up;
  rows = cfg_.n_fi;
  for (std::size_t j = 0; j < cfg_.n_fe; ++j) {
    a.n_in = rows;
    aseem_init(a, store, "sfcen.fe" + std::to_string(j) + ".", rng);
    rows *= cfg_.r_f_up;
  }

  const std::size_t out_w = 2 * sys_.n_rx * sys_.n_tx;
  Tensor& w_out = store.create("sfcen.out.w", {cfg_.d_fr, out_w});
  ad::init_xavier(w_out, rng);
  for (auto& v : w_out.values()) v *= 0.1;  // start near the LS broadcast
  store.create("sfcen.out.b", {out_w});
}

Tensor SfcenNet::coarse_input(const baselines::CoarseEstimate& coarse) const {
  const std::size_t n_rf = cfg_.n_si, n_rx = sys_.n_rx, n_p = cfg_.n_fi;
  if (coarse.h_ls.dim(0) != n_rf || coarse.h_ls.dim(1) != n_rx || coarse.h_ls.dim(2) != n_p)
    throw std::invalid_argument("sfcen: coarse estimate grid does not match the config");
  std::vector<double> data(n_rf * 2 * n_rx * n_p);
  std::size_t o = 0;
  for (std::size_t a = 0; a < n_rf; ++a)
    for (std::size_t r = 0; r < n_rx; ++r)
      for (std::size_t i = 0; i < n_p; ++i) {
        const cplx v = coarse.h_ls.at(a, r, i);
        data[o++] = v.real();
        data[o++] = v.imag();
      }
  return Tensor::from_vector({n_rf, 2 * n_rx * n_p}, std::move(data));
}

Tensor SfcenNet::broadcast_ls(const baselines::CoarseEstimate& coarse) const {
  const std::size_t r_s = pattern_.spatial_stride();
  const std::size_t comb = pattern_.comb;
  const std::size_t n_rf = cfg_.n_si, n_p = cfg_.n_fi;
  std::vector<double> data(sys_.n_tx * sys_.n_rx * sys_.n_sc * 2);
  std::size_t o = 0;
  for (std::size_t t = 0; t < sys_.n_tx; ++t) {
    const std::size_t ta = std::min((t + r_s / 2) / r_s, n_rf - 1);
    for (std::size_t r = 0; r < sys_.n_rx; ++r)
      for (std::size_t i = 0; i < sys_.n_sc; ++i) {
        const std::size_t fi = std::min((i + comb / 2) / comb, n_p - 1);
        const cplx v = coarse.h_ls.at(ta, r, fi);
        data[o++] = v.real();
        data[o++] = v.imag();
      }
  }
  return Tensor::from_vector({sys_.n_tx, sys_.n_rx, sys_.n_sc, 2}, std::move(data));
}

Tensor SfcenNet::forward(const baselines::CoarseEstimate& coarse, const ParamStore& store, bool train,
                         Rng* drop_rng) const {
  Tensor x = ad::add(matmul(coarse_input(coarse), store.at("sfcen.in.w")), store.at("sfcen.in.b"));

  AseemConfig a;
  a.d_rep = cfg_.d_sr;
  a.n_heads = cfg_.n_heads;
  a.upscale = cfg_.r_s_up;
  a.p_attn = cfg_.p_attn;
  a.p_seg = cfg_.p_seg;
  for (std::size_t i = 0; i < cfg_.n_se; ++i) {
    a.n_in = x.dim(0);
    x = aseem_forward(x, a, store, "sfcen.se" + std::to_string(i) + ".", train, drop_rng);
  }
  if (x.dim(0) > sys_.n_tx) x = slice(x, 0, 0, sys_.n_tx);

  const std::size_t c_tr = 2 * sys_.n_rx;
  Tensor g = ad::add(matmul(x, store.at("sfcen.tr.w1")), store.at("sfcen.tr.b1"));
  g = reshape(g, {sys_.n_tx, cfg_.n_fi, c_tr});
  g = permute(g, {1, 0, 2});
  g = reshape(g, {cfg_.n_fi, sys_.n_tx * c_tr});
  Tensor f = ad::add(matmul(g, store.at("sfcen.tr.w2")), store.at("sfcen.tr.b2"));

  a.d_rep = cfg_.d_fr;
  a.upscale = cfg_.r_f_up;
  for (std::size_t j = 0; j < cfg_.n_fe; ++j) {
    a.n_in = f.dim(0);
    f = aseem_forward(f, a, store, "sfcen.fe" + std::to_string(j) + ".", train, drop_rng);
  }
  if (f.dim(0) > sys_.n_sc) f = slice(f, 0, 0, sys_.n_sc);

  Tensor y = ad::add(matmul(f, store.at("sfcen.out.w")), store.at("sfcen.out.b"));
  y = reshape(y, {sys_.n_sc, sys_.n_rx, sys_.n_tx, 2});
  y = permute(y, {2, 1, 0, 3});  // -> [n_tx, n_rx, n_sc, 2]
  return ad::add(y, broadcast_ls(coarse));
}

CArray SfcenNet::estimate(const baselines::CoarseEstimate& coarse, const ParamStore& store) const {
  ad::NoGradGuard guard;
  return tensor_to_carray(forward(coarse, store, false, nullptr));
}

Tensor carray_to_tensor(const CArray& a) {
  std::vector<std::size_t> shape = a.dims();
  shape.push_back(2);
  std::vector<double> data(a.size() * 2);
  for (std::size_t i = 0; i < a.size(); ++i) {
    data[2 * i] = a[i].real();
    data[2 * i + 1] = a[i].imag();
  }
  return Tensor::from_vector(std::move(shape), std::move(data));
}

CArray tensor_to_carray(const Tensor& t) {
  if (t.rank() < 1 || t.shape().back() != 2)
    throw std::invalid_argument("tensor_to_carray: trailing dim must be 2 (re/im)");
  std::vector<std::size_t> dims(t.shape().begin(), t.shape().end() - 1);
  CArray out(dims);
  const double* d = t.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = cplx(d[2 * i], d[2 * i + 1]);
  return out;
}

}  // namespace mxl::sfcen
