#include "mxl/tudcen.hpp"

#include <limits>
#include <stdexcept>

namespace mxl::tudcen {
namespace {

using ad::concat;
using ad::gather_bijection;
using ad::layer_norm_lastdim;
using ad::matmul;
using ad::permute;
using ad::reshape;
using ad::slice;

std::uint64_t draw_seed(Rng* rng) { return rng ? rng->next_u64() : 0; }

}  // namespace

void UdccnConfig::validate() const {
  if (kernel % 2 == 0) throw std::invalid_argument("UdccnConfig: kernel must be odd");
  if (d_feat < 1) throw std::invalid_argument("UdccnConfig: d_feat must be >= 1");
}

void SfseConfig::validate(const sim::SystemConfig& sys) const {
  if (n1 == 0 || sys.n_tx % n1 != 0)
    throw std::invalid_argument("SfseConfig: n1 must divide n_tx");
  if (n2 == 0 || sys.n_sc % n2 != 0)
    throw std::invalid_argument("SfseConfig: n2 must divide n_sc");
  if (d_emb == 0) throw std::invalid_argument("SfseConfig: d_emb must be >= 1");
}

void GenTransformerConfig::validate() const {
  if (n_heads == 0 || d_rep % n_heads != 0)
    throw std::invalid_argument("GenTransformerConfig: d_rep must be divisible by n_heads");
  if (d_ff < d_rep) throw std::invalid_argument("GenTransformerConfig: d_ff must be >= d_rep");
  if (max_tokens < 1) throw std::invalid_argument("GenTransformerConfig: max_tokens must be >= 1");
}

Tensor causal_mask(std::size_t n_tokens) {
  if (n_tokens < 1) throw std::invalid_argument("causal_mask: need at least one token");
  const double ninf = -std::numeric_limits<double>::infinity();
  std::vector<double> m(n_tokens * n_tokens, 0.0);
  for (std::size_t i = 0; i < n_tokens; ++i)
    for (std::size_t j = i + 1; j < n_tokens; ++j) m[i * n_tokens + j] = ninf;
  return Tensor::from_vector({n_tokens, n_tokens}, std::move(m));
}

TudcenNet::TudcenNet(UdccnConfig ucfg, SfseConfig scfg, GenTransformerConfig gcfg,
                     sim::SystemConfig sys)
    : ucfg_(ucfg), scfg_(scfg), gcfg_(gcfg), sys_(std::move(sys)) {
  ucfg_.validate();
  scfg_.validate(sys_);
  gcfg_.validate();

  // rearrangement: group (g1,g2) collects antennas == g1 (mod n1) and
  // subcarriers == g2 (mod n2); row features ordered (rx, antenna, sc, re/im)
  const std::size_t n_rx = sys_.n_rx, n_tx = sys_.n_tx, n_sc = sys_.n_sc;
  const std::size_t A = n_tx / scfg_.n1, S = n_sc / scfg_.n2;
  const std::size_t w = scfg_.group_width(sys_);
  embed_map_ = std::make_shared<std::vector<std::size_t>>(scfg_.n_groups() * w);
  inverse_map_ = std::make_shared<std::vector<std::size_t>>(scfg_.n_groups() * w);
  for (std::size_t g1 = 0; g1 < scfg_.n1; ++g1)
    for (std::size_t g2 = 0; g2 < scfg_.n2; ++g2) {
      const std::size_t row = g1 * scfg_.n2 + g2;
      for (std::size_t r = 0; r < n_rx; ++r)
        for (std::size_t al = 0; al < A; ++al)
          for (std::size_t sl = 0; sl < S; ++sl)
            for (std::size_t c = 0; c < 2; ++c) {
              const std::size_t dst = row * w + (((r * A + al) * S + sl) * 2 + c);
              const std::size_t ant = g1 + al * scfg_.n1;
              const std::size_t sc = g2 + sl * scfg_.n2;
              const std::size_t src = ((r * n_tx + ant) * n_sc + sc) * 2 + c;
              (*embed_map_)[dst] = src;
              (*inverse_map_)[src] = dst;
            }
    }
}

void TudcenNet::init_params(ParamStore& store, Rng& rng) const {
  init_udccn_params(store, rng);
  init_dcen_params(store, rng);
}

void TudcenNet::init_udccn_params(ParamStore& store, Rng& rng) const {
  const std::size_t k = ucfg_.kernel, df = ucfg_.d_feat;
  Tensor& cw = store.create("udccn.conv.w", {df, 2, k, k});
  ad::init_uniform(cw, rng, -0.05, 0.05);
  store.create("udccn.conv.b", {df});
  Tensor& wd = store.create("udccn.wd", {2 + df, 2});
  wd.values()[0 * 2 + 0] = 1.0;  // passthrough identity: start at the pure transpose
  wd.values()[1 * 2 + 1] = 1.0;
}

void TudcenNet::init_dcen_params(ParamStore& store, Rng& rng) const {
  const std::size_t w = scfg_.group_width(sys_);
  const std::size_t d = scfg_.d_emb;
  ad::init_constant(store.create("sfse.ln_in_g", {w}), 1.0);
  store.create("sfse.ln_in_b", {w});
  ad::init_xavier(store.create("sfse.w", {w, d}), rng);
  store.create("sfse.b", {d});
  ad::init_constant(store.create("sfse.ln_out_g", {d}), 1.0);
  store.create("sfse.ln_out_b", {d});
  ad::init_constant(store.create("sfse.inv.ln_in_g", {d}), 1.0);
  store.create("sfse.inv.ln_in_b", {d});
  ad::init_xavier(store.create("sfse.inv.w", {d, w}), rng);
  store.create("sfse.inv.b", {w});
  ad::init_constant(store.create("sfse.inv.ln_out_g", {w}), 1.0);
  store.create("sfse.inv.ln_out_b", {w});

  const std::size_t dr = gcfg_.d_rep;
  if (dr != d)
    throw std::invalid_argument("TudcenNet: transformer d_rep must match sfse d_emb");
  ad::init_uniform(store.create("dcen.pe", {gcfg_.max_tokens, dr}), rng, -0.02, 0.02);
  for (std::size_t l = 0; l < gcfg_.n_layers; ++l) {
    const std::string p = "dcen.l" + std::to_string(l) + ".";
    for (const char* w2 : {"wq", "wk", "wv", "wo"})
      ad::init_xavier(store.create(p + w2, {dr, dr}), rng);
    ad::init_constant(store.create(p + "ln1_g", {dr}), 1.0);
    store.create(p + "ln1_b", {dr});
    ad::init_xavier(store.create(p + "w1", {dr, gcfg_.d_ff}), rng);
    store.create(p + "b1", {gcfg_.d_ff});
    ad::init_xavier(store.create(p + "w2", {gcfg_.d_ff, dr}), rng);
    store.create(p + "b2", {dr});
    Tensor& w_rc2 = store.create(p + "w_rc2", {dr, dr});
    for (std::size_t c = 0; c < dr; ++c) w_rc2.values()[c * dr + c] = 1.0;
    ad::init_constant(store.create(p + "ln2_g", {dr}), 1.0);
    store.create(p + "ln2_b", {dr});
  }
}

Tensor TudcenNet::udccn_forward(const Tensor& h_ul_hat, const ParamStore& store, bool train,
                                Rng* drop_rng) const {
  (void)train;
  (void)drop_rng;
  const std::size_t n_tx = sys_.n_tx, n_rx = sys_.n_rx, n_sc = sys_.n_sc;
  if (h_ul_hat.shape() != std::vector<std::size_t>{n_tx, n_rx, n_sc, 2})
    throw std::invalid_argument("udccn_forward: expected [n_tx, n_rx, n_sc, 2]");
  // real grid view: channels (re/im) x (antenna pair) x subcarrier
  Tensor xu = permute(h_ul_hat, {3, 0, 1, 2});
  xu = reshape(xu, {2, n_tx * n_rx, n_sc});
  Tensor feat = ad::relu(
      ad::conv2d_same(xu, store.at("udccn.conv.w"), store.at("udccn.conv.b")));
  Tensor joined = concat({xu, feat}, 0);  // [2+d_f, H, W]
  const std::size_t ch = 2 + ucfg_.d_feat;
  joined = reshape(joined, {ch, n_tx * n_rx * n_sc});
  joined = ad::transpose(joined);
  Tensor out = matmul(joined, store.at("udccn.wd"));  // [(H*W), 2]
  out = reshape(out, {n_tx, n_rx, n_sc, 2});
  return permute(out, {1, 0, 2, 3});  // downlink layout [n_rx, n_tx, n_sc, 2]
}

Tensor TudcenNet::sfse_embed(const Tensor& h_dl, const ParamStore& store) const {
  const std::size_t w = scfg_.group_width(sys_);
  if (h_dl.shape() != std::vector<std::size_t>{sys_.n_rx, sys_.n_tx, sys_.n_sc, 2})
    throw std::invalid_argument("sfse_embed: expected [n_rx, n_tx, n_sc, 2]");
  Tensor x = gather_bijection(h_dl, embed_map_, {scfg_.n_groups(), w});
  x = layer_norm_lastdim(x, store.at("sfse.ln_in_g"), store.at("sfse.ln_in_b"));
  x = ad::add(matmul(x, store.at("sfse.w")), store.at("sfse.b"));
  return layer_norm_lastdim(x, store.at("sfse.ln_out_g"), store.at("sfse.ln_out_b"));
}

Tensor TudcenNet::sfse_inverse(const Tensor& tokens, const ParamStore& store) const {
  const std::size_t w = scfg_.group_width(sys_);
  if (tokens.shape() != std::vector<std::size_t>{scfg_.n_groups(), scfg_.d_emb})
    throw std::invalid_argument("sfse_inverse: expected [n1*n2, d_emb]");
  Tensor x = layer_norm_lastdim(tokens, store.at("sfse.inv.ln_in_g"), store.at("sfse.inv.ln_in_b"));
  x = ad::add(matmul(x, store.at("sfse.inv.w")), store.at("sfse.inv.b"));
  x = layer_norm_lastdim(x, store.at("sfse.inv.ln_out_g"), store.at("sfse.inv.ln_out_b"));
  return gather_bijection(x, inverse_map_, {sys_.n_rx, sys_.n_tx, sys_.n_sc, 2});
}

Tensor TudcenNet::gen_transformer_forward(const Tensor& tokens, const ParamStore& store, bool train,
                                          Rng* drop_rng) const {
  if (tokens.rank() != 2 || tokens.dim(1) != gcfg_.d_rep)
    throw std::invalid_argument("gen_transformer_forward: expected [n_tokens, d_rep]");
  const std::size_t n = tokens.dim(0);
  if (n > gcfg_.max_tokens)
    throw std::invalid_argument("gen_transformer_forward: token overflow, " + std::to_string(n) +
                                " > " + std::to_string(gcfg_.max_tokens));
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  Tensor x = ad::add(tokens, ad::embedding_lookup(store.at("dcen.pe"), idx));
  const Tensor mask = causal_mask(n);

  sfcen::AseemConfig attn;
  attn.n_in = n;
  attn.d_rep = gcfg_.d_rep;
  attn.n_heads = gcfg_.n_heads;
  attn.upscale = 1;
  attn.p_attn = gcfg_.p_attn;
  for (std::size_t l = 0; l < gcfg_.n_layers; ++l) {
    const std::string p = "dcen.l" + std::to_string(l) + ".";
    const Tensor a = sfcen::mhsa(x, attn, store, p, train, drop_rng, &mask);
    const Tensor rc1 = ad::add(a, x);
    const Tensor ln1 = layer_norm_lastdim(rc1, store.at(p + "ln1_g"), store.at(p + "ln1_b"));
    Tensor h = ad::relu(ad::add(matmul(ln1, store.at(p + "w1")), store.at(p + "b1")));
    h = ad::dropout(h, gcfg_.p_ff, train, draw_seed(drop_rng));
    const Tensor ff = ad::add(matmul(h, store.at(p + "w2")), store.at(p + "b2"));
    const Tensor rc2 = ad::add(ff, matmul(ln1, store.at(p + "w_rc2")));
    x = layer_norm_lastdim(rc2, store.at(p + "ln2_g"), store.at(p + "ln2_b"));
  }
  return x;
}

std::vector<Tensor> TudcenNet::teacher_forced_predictions(const std::vector<Tensor>& dl_slots,
                                                          const ParamStore& store, bool train,
                                                          Rng* drop_rng) const {
  const std::size_t m = dl_slots.size();
  if (m == 0) return {};
  const std::size_t groups = scfg_.n_groups();
  std::vector<Tensor> embeds;
  embeds.reserve(m);
  for (const auto& h : dl_slots) embeds.push_back(sfse_embed(h, store));

  // one causal sequence per spatial-frequency group
  std::vector<Tensor> outputs(groups);
  for (std::size_t g = 0; g < groups; ++g) {
    std::vector<Tensor> rows;
    rows.reserve(m);
    for (std::size_t t = 0; t < m; ++t) rows.push_back(slice(embeds[t], 0, g, 1));
    const Tensor seq = m == 1 ? rows[0] : concat(rows, 0);
    outputs[g] = gen_transformer_forward(seq, store, train, drop_rng);
  }

  std::vector<Tensor> preds;
  preds.reserve(m);
  for (std::size_t t = 0; t < m; ++t) {
    std::vector<Tensor> rows;
    rows.reserve(groups);
    for (std::size_t g = 0; g < groups; ++g) rows.push_back(slice(outputs[g], 0, t, 1));
    const Tensor tok = groups == 1 ? rows[0] : concat(rows, 0);
    preds.push_back(sfse_inverse(tok, store));
  }
  return preds;
}

std::vector<CArray> TudcenNet::extrapolate_slots(const CArray& h_dl_slot1, const ParamStore& store,
                                                 std::size_t n_slot) const {
  ad::NoGradGuard guard;
  std::vector<CArray> out;
  if (n_slot < 3) return out;
  const std::size_t groups = scfg_.n_groups();
  std::vector<Tensor> seqs(groups);
  {
    const Tensor e = sfse_embed(sfcen::carray_to_tensor(h_dl_slot1), store);
    for (std::size_t g = 0; g < groups; ++g) seqs[g] = slice(e, 0, g, 1);
  }
  for (std::size_t target = 2; target < n_slot; ++target) {
    std::vector<Tensor> last_rows(groups);
    for (std::size_t g = 0; g < groups; ++g) {
      const Tensor o = gen_transformer_forward(seqs[g], store, false, nullptr);
      last_rows[g] = slice(o, 0, o.dim(0) - 1, 1);
    }
    const Tensor tok = groups == 1 ? last_rows[0] : concat(last_rows, 0);
    const Tensor pred = sfse_inverse(tok, store);
    out.push_back(sfcen::tensor_to_carray(pred));
    if (target + 1 < n_slot) {
      const Tensor e = sfse_embed(pred, store);
      for (std::size_t g = 0; g < groups; ++g)
        seqs[g] = concat({seqs[g], slice(e, 0, g, 1)}, 0);
    }
  }
  return out;
}

}  // namespace mxl::tudcen
