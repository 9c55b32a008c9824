#include "zpj/model.hpp"

#include <map>
#include <random>

#include "zpj/error.hpp"

namespace zpj {

namespace {

Tensor zeros_like_rows(int rows, int cols) { return Tensor::zeros({rows, cols}); }

// -sum_b mask_b log p_b(target_b) / norm as a scalar node.
Tensor masked_nll(const Tensor& log_probs, const std::vector<int>& targets,
                  const std::vector<double>& mask, double norm) {
  std::vector<double> w(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) w[i] = -mask[i] / norm;
  return weighted_sum(pick(log_probs, targets), w);
}

Tensor accumulate(const Tensor& total, const Tensor& term) {
  return total.defined() ? add(total, term) : term;
}

std::string module_of(const std::string& name) {
  auto dot = name.find('.');
  if (dot == std::string::npos) return name;
  auto second = name.find('.', dot + 1);
  if (second == std::string::npos) return name.substr(0, dot);
  return name.substr(0, second);
}

}  // namespace

// --- config -------------------------------------------------------------------------

ModelConfig ModelConfig::from(const KeyValues& kv) {
  ModelConfig c;
  c.src_vocab = kv.get_int("src_vocab", c.src_vocab);
  c.tgt_vocab = kv.get_int("tgt_vocab", c.tgt_vocab);
  c.labels = kv.get_int("labels", c.labels);
  c.embed = kv.get_int("embed", c.embed);
  c.hidden = kv.get_int("hidden", c.hidden);
  c.rec_hidden = kv.get_int("rec_hidden", c.rec_hidden);
  c.attention = kv.get_int("attention", c.attention);
  c.context = kv.get_int("context", c.context);
  c.use_reconstructor = kv.get_bool("use_reconstructor", c.use_reconstructor);
  c.use_labeler = kv.get_bool("use_labeler", c.use_labeler);
  c.use_discourse = kv.get_bool("use_discourse", c.use_discourse);
  c.discourse_target = kv.get("discourse_target", c.discourse_target);
  c.interactive = kv.get_bool("interactive", c.interactive);
  c.w_rec = kv.get_double("w_rec", c.w_rec);
  c.w_lab = kv.get_double("w_lab", c.w_lab);
  return c;
}

KeyValues ModelConfig::to_kv() const {
  KeyValues kv;
  kv.set("src_vocab", std::to_string(src_vocab));
  kv.set("tgt_vocab", std::to_string(tgt_vocab));
  kv.set("labels", std::to_string(labels));
  kv.set("embed", std::to_string(embed));
  kv.set("hidden", std::to_string(hidden));
  kv.set("rec_hidden", std::to_string(rec_hidden));
  kv.set("attention", std::to_string(attention));
  kv.set("context", std::to_string(context));
  kv.set("use_reconstructor", use_reconstructor ? "true" : "false");
  kv.set("use_labeler", use_labeler ? "true" : "false");
  kv.set("use_discourse", use_discourse ? "true" : "false");
  kv.set("discourse_target", discourse_target);
  kv.set("interactive", interactive ? "true" : "false");
  kv.set("w_rec", format_double(w_rec));
  kv.set("w_lab", format_double(w_lab));
  return kv;
}

void ModelConfig::validate() const {
  if (src_vocab <= 4 || tgt_vocab <= 4)
    throw ContractError("model: vocabularies must hold more than the reserved tokens");
  if (embed <= 0 || hidden <= 0 || rec_hidden <= 0 || attention <= 0)
    throw ContractError("model: dimensions must be positive");
  if (context < 0) throw ContractError("model: context size K must be >= 0");
  if (use_labeler && !use_reconstructor)
    throw ContractError("model: use_labeler requires use_reconstructor");
  if (use_labeler && labels < 2) throw ContractError("model: labeler needs at least one pronoun");
  if (discourse_target != "reconstructor" && discourse_target != "decoder")
    throw ContractError("model: discourse_target must be reconstructor or decoder, got " +
                        discourse_target);
  if (discourse_to_reconstructor() && !use_reconstructor)
    throw ContractError("model: discourse_target=reconstructor requires use_reconstructor");
  if (w_rec < 0 || w_lab < 0) throw ContractError("model: loss weights must be >= 0");
}

// --- construction ------------------------------------------------------------------

Model::Model(ModelConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  std::mt19937_64 rng(seed);
  auto& c = config_;
  const Group th = Group::theta;
  int e = c.embed, h = c.hidden, hr = c.rec_hidden, a = c.attention;
  params_.add("src_emb", {c.src_vocab, e}, th, rng);
  params_.add("tgt_emb", {c.tgt_vocab, e}, th, rng);
  GruCell::create(params_, "enc.fwd", e, h, th, rng);
  GruCell::create(params_, "enc.bwd", e, h, th, rng);
  Linear::create(params_, "dec.init", h, h, th, rng);
  AdditiveAttention::create(params_, "dec.att", 2 * h, h, a, th, rng);
  GruCell::create(params_, "dec.gru", e + 2 * h, h, th, rng);
  Linear::create(params_, "dec.readout", h + 2 * h + e, h, th, rng);
  Linear::create(params_, "dec.out", h, c.tgt_vocab, th, rng);
  if (c.use_reconstructor) {
    AdditiveAttention::create(params_, "rec.att_enc", 2 * h, e + hr, a, th, rng);
    AdditiveAttention::create(params_, "rec.att_dec", h, e + hr + 2 * h, a, th, rng);
    GruCell::create(params_, "rec.gru", e + 2 * h + h, hr, th, rng);
    Linear::create(params_, "rec.readout", hr + e + 2 * h + h, hr, th, rng);
    Linear::create(params_, "rec.out", hr, c.src_vocab, th, rng);
  }
  if (c.use_labeler) {
    Linear::create(params_, "lab.hidden", hr, hr, Group::gamma, rng);
    Linear::create(params_, "lab.out", hr, c.labels, Group::gamma, rng);
  }
  if (c.use_discourse) {
    GruCell::create(params_, "disc.gru", 2 * h, h, th, rng);
    params_.add("disc.c0", {1, h}, th, rng);
    if (c.discourse_to_reconstructor()) Linear::create(params_, "disc.combine", hr + h, hr, th, rng);
    else params_.add("dec.init_ctx.W", {h, h}, th, rng);
  }
  bind();
}

Model::Model(ModelConfig config, ParameterStore params)
    : config_(std::move(config)), params_(std::move(params)) {
  config_.validate();
  bind();
}

void Model::bind() {
  auto& c = config_;
  auto& p = params_;
  src_emb_ = p.get("src_emb");
  tgt_emb_ = p.get("tgt_emb");
  if (src_emb_.rows() != c.src_vocab || tgt_emb_.rows() != c.tgt_vocab)
    throw ContractError("model: embedding tables do not match the configured vocabularies");
  enc_fwd_ = GruCell::bind(p, "enc.fwd");
  enc_bwd_ = GruCell::bind(p, "enc.bwd");
  dec_init_ = Linear::bind(p, "dec.init");
  dec_att_ = AdditiveAttention::bind(p, "dec.att");
  dec_gru_ = GruCell::bind(p, "dec.gru");
  dec_readout_ = Linear::bind(p, "dec.readout");
  dec_out_ = Linear::bind(p, "dec.out");
  if (c.use_reconstructor) {
    rec_att_enc_ = AdditiveAttention::bind(p, "rec.att_enc");
    rec_att_dec_ = AdditiveAttention::bind(p, "rec.att_dec");
    rec_gru_ = GruCell::bind(p, "rec.gru");
    rec_readout_ = Linear::bind(p, "rec.readout");
    rec_out_ = Linear::bind(p, "rec.out");
  }
  if (c.use_labeler) {
    lab_hidden_ = Linear::bind(p, "lab.hidden");
    lab_out_ = Linear::bind(p, "lab.out");
  }
  if (c.use_discourse) {
    disc_gru_ = GruCell::bind(p, "disc.gru");
    disc_c0_ = p.get("disc.c0");
    if (c.discourse_to_reconstructor()) combine_ = Linear::bind(p, "disc.combine");
    else dec_init_ctx_ = p.get("dec.init_ctx.W");
  }
}

// --- encoder ------------------------------------------------------------------------

EncoderStates Model::encode(const std::vector<const Ids*>& x, bool project_keys) const {
  if (x.empty()) throw ContractError("encode: empty batch");
  for (auto* s : x)
    if (s->empty() || s->back() != kEosId)
      throw ContractError("encode: every source must be non-empty and end with <eos>");
  EncoderStates enc;
  enc.src = pad(x);
  int b = enc.src.rows, t_len = enc.src.cols, h = config_.hidden;
  std::vector<Tensor> emb(t_len);
  for (int t = 0; t < t_len; ++t) emb[t] = embedding(src_emb_, enc.src.column(t));
  enc.fwd.resize(t_len);
  enc.bwd.resize(t_len);
  Tensor state = zeros_like_rows(b, h);
  for (int t = 0; t < t_len; ++t) {
    state = masked_update(gru_step(emb[t], state, enc_fwd_), state, enc.src.column_mask(t));
    enc.fwd[t] = state;
  }
  state = zeros_like_rows(b, h);
  for (int t = t_len - 1; t >= 0; --t) {
    state = masked_update(gru_step(emb[t], state, enc_bwd_), state, enc.src.column_mask(t));
    enc.bwd[t] = state;
  }
  enc.states.resize(t_len);
  for (int t = 0; t < t_len; ++t) enc.states[t] = concat_cols({enc.fwd[t], enc.bwd[t]});
  if (project_keys) {
    enc.dec_keys = dec_att_.project_keys(enc.states);
    if (config_.use_reconstructor) enc.rec_keys = rec_att_enc_.project_keys(enc.states);
  }
  return enc;
}

Tensor Model::summarize(const EncoderStates& enc) const {
  return concat_cols({enc.fwd.back(), enc.bwd.front()});
}

Tensor Model::encode_discourse(const std::vector<const Context*>& contexts) const {
  if (!config_.use_discourse) throw ContractError("encode_discourse: discourse is disabled");
  int b = static_cast<int>(contexts.size());
  int k = config_.context;
  Tensor state = embedding(disc_c0_, std::vector<int>(b, 0));
  if (k == 0) return state;
  std::vector<const Ids*> flat;
  // slot_index[j][row] = position in `flat`, or -1 when the slot is empty.
  std::vector<std::vector<int>> slot_index(k, std::vector<int>(b, -1));
  for (int r = 0; r < b; ++r) {
    const auto& ctx = *contexts[r];
    int n = std::min<int>(k, static_cast<int>(ctx.size()));
    for (int i = 0; i < n; ++i) {
      slot_index[k - n + i][r] = static_cast<int>(flat.size());
      flat.push_back(&ctx[ctx.size() - n + i]);
    }
  }
  if (flat.empty()) return state;
  Tensor summaries = summarize(encode(flat, false));
  for (int j = 0; j < k; ++j) {
    std::vector<int> ids(b, 0);
    std::vector<double> mask(b, 0.0);
    bool any = false;
    for (int r = 0; r < b; ++r)
      if (slot_index[j][r] >= 0) {
        ids[r] = slot_index[j][r];
        mask[r] = 1.0;
        any = true;
      }
    if (!any) continue;
    state = masked_update(gru_step(embedding(summaries, ids), state, disc_gru_), state, mask);
  }
  return state;
}

Tensor Model::combine_context(const Tensor& h_rec, const Tensor& c) const {
  if (!config_.discourse_to_reconstructor())
    throw ContractError("combine_context: discourse does not feed the reconstructor");
  return tanh(combine_(concat_cols({h_rec, c})));
}

// --- decoder ------------------------------------------------------------------------

Tensor Model::initial_state(const EncoderStates& enc, const Tensor* discourse) const {
  Tensor pre = dec_init_(enc.bwd.front());
  if (config_.discourse_to_decoder()) {
    if (!discourse) throw ContractError("initial_state: model needs a discourse vector");
    pre = add(pre, matmul(*discourse, dec_init_ctx_));
  }
  return tanh(pre);
}

DecoderStep Model::decoder_step(std::span<const int> prev, const Tensor& state,
                                const EncoderStates& enc) const {
  Tensor e = embedding(tgt_emb_, prev);
  Tensor alpha = dec_att_.weights(enc.dec_keys, state, enc.src.mask);
  Tensor ctx = weighted_states(alpha, enc.states);
  Tensor next = gru_step(concat_cols({e, ctx}), state, dec_gru_);
  Tensor readout = tanh(dec_readout_(concat_cols({next, ctx, e})));
  return {log_softmax(dec_out_(readout)), next, alpha};
}

DecoderStates Model::force_decode(const EncoderStates& enc, const std::vector<const Ids*>& y,
                                  const Tensor* discourse) const {
  if (int(y.size()) != enc.src.rows)
    throw ContractError("force_decode: " + std::to_string(y.size()) + " targets for " +
                        std::to_string(enc.src.rows) + " sources");
  DecoderStates dec;
  dec.tgt = pad(y);
  Tensor state = initial_state(enc, discourse);
  std::vector<int> prev(dec.tgt.rows, kBosId);
  for (int t = 0; t < dec.tgt.cols; ++t) {
    if (t > 0) prev = dec.tgt.column(t - 1);
    auto step = decoder_step(prev, state, enc);
    state = step.state;
    dec.states.push_back(step.state);
    dec.log_probs.push_back(step.log_probs);
  }
  return dec;
}

// --- reconstructor and labeler ---------------------------------------------------------

ReconstructorStates Model::reconstruct(const EncoderStates& enc, const DecoderStates& dec,
                                       const Tensor* discourse) const {
  if (!config_.use_reconstructor) throw ContractError("reconstruct: model has no reconstructor");
  if (enc.src.rows != dec.tgt.rows)
    throw ContractError("reconstruct: encoder batch of " + std::to_string(enc.src.rows) +
                        " against decoder batch of " + std::to_string(dec.tgt.rows));
  if (int(dec.states.size()) != dec.tgt.cols)
    throw ContractError("reconstruct: decoder states do not match the target length");
  bool combine = config_.discourse_to_reconstructor();
  if (combine && !discourse) throw ContractError("reconstruct: model needs a discourse vector");
  int b = enc.src.rows;
  ReconstructorStates rec;
  auto dec_keys = rec_att_dec_.project_keys(dec.states);
  Tensor h = zeros_like_rows(b, config_.rec_hidden);
  std::vector<int> prev(b, kBosId);
  for (int t = 0; t < enc.src.cols; ++t) {
    if (t > 0) prev = enc.src.column(t - 1);
    Tensor e = embedding(src_emb_, prev);
    Tensor a_enc = rec_att_enc_.weights(enc.rec_keys, concat_cols({e, h}), enc.src.mask);
    Tensor c_enc = weighted_states(a_enc, enc.states);
    Tensor coupling = config_.interactive ? c_enc : c_enc.detach();
    Tensor a_dec = rec_att_dec_.weights(dec_keys, concat_cols({e, h, coupling}), dec.tgt.mask);
    Tensor c_dec = weighted_states(a_dec, dec.states);
    h = gru_step(concat_cols({e, c_enc, c_dec}), h, rec_gru_);
    Tensor out = combine ? combine_context(h, *discourse) : h;
    Tensor readout = tanh(rec_readout_(concat_cols({out, e, c_enc, c_dec})));
    rec.h.push_back(h);
    rec.out.push_back(out);
    rec.alpha_enc.push_back(a_enc);
    rec.alpha_dec.push_back(a_dec);
    rec.log_probs.push_back(log_softmax(rec_out_(readout)));
  }
  return rec;
}

std::vector<double> Model::reconstruction_scores(const EncoderStates& enc,
                                                 const ReconstructorStates& rec) const {
  std::vector<double> scores(enc.src.rows, 0.0);
  int v = config_.src_vocab;
  for (int t = 0; t < enc.src.cols; ++t) {
    auto lp = rec.log_probs[t].values();
    for (int r = 0; r < enc.src.rows; ++r)
      if (enc.src.mask[std::size_t(r) * enc.src.cols + t] != 0.0)
        scores[r] += lp[std::size_t(r) * v + enc.src.id(r, t)];
  }
  return scores;
}

std::vector<Tensor> Model::label_zp(const ReconstructorStates& rec) const {
  if (!config_.use_labeler) throw ContractError("label_zp: model has no labeler");
  std::vector<Tensor> out;
  out.reserve(rec.out.size());
  for (auto& o : rec.out) out.push_back(log_softmax(lab_out_(tanh(lab_hidden_(o)))));
  return out;
}

// --- loss ---------------------------------------------------------------------------

Tensor Model::discourse_for(const std::vector<const Example*>& batch) const {
  std::vector<const Context*> ctx;
  ctx.reserve(batch.size());
  for (auto* e : batch) ctx.push_back(&e->context);
  return encode_discourse(ctx);
}

LossTerms Model::joint_loss(const std::vector<const Example*>& batch) const {
  if (batch.empty()) throw ContractError("joint_loss: empty batch");
  std::vector<const Ids*> xs, ys, zs;
  for (auto* e : batch) {
    xs.push_back(&e->x);
    ys.push_back(&e->y);
    if (config_.use_labeler) {
      if (e->zp.size() != e->x.size())
        throw ContractError("joint_loss: example " + e->doc_id + ":" + std::to_string(e->position) +
                            " lacks ZP labels required by the labeler");
      zs.push_back(&e->zp);
    }
  }
  LossTerms out;
  EncoderStates enc = encode(xs);
  Tensor disc;
  if (config_.use_discourse) disc = discourse_for(batch);
  const Tensor* disc_ptr = disc.defined() ? &disc : nullptr;
  DecoderStates dec = force_decode(enc, ys, disc_ptr);

  for (double m : dec.tgt.mask) out.target_tokens += m != 0.0;
  for (double m : enc.src.mask) out.source_tokens += m != 0.0;
  double nt = double(out.target_tokens), ns = double(out.source_tokens);

  Tensor nll;
  for (int t = 0; t < dec.tgt.cols; ++t)
    nll = accumulate(nll, masked_nll(dec.log_probs[t], dec.tgt.column(t), dec.tgt.column_mask(t), nt));
  out.likelihood = nll.item();
  out.total = nll;

  if (config_.use_reconstructor) {
    ReconstructorStates rec = reconstruct(enc, dec, disc_ptr);
    Tensor r;
    for (int t = 0; t < enc.src.cols; ++t)
      r = accumulate(r, masked_nll(rec.log_probs[t], enc.src.column(t), enc.src.column_mask(t), ns));
    out.reconstruction = r.item();
    out.total = add(out.total, scale(r, config_.w_rec));
    if (config_.use_labeler) {
      auto labels = pad(zs);
      auto lp = label_zp(rec);
      Tensor p;
      for (int t = 0; t < labels.cols; ++t)
        p = accumulate(p, masked_nll(lp[t], labels.column(t), labels.column_mask(t), ns));
      out.labeling = p.item();
      out.total = add(out.total, scale(p, config_.w_lab));
    }
  }
  return out;
}

std::vector<ParamCount> Model::describe() const {
  std::vector<ParamCount> out;
  std::map<std::pair<std::string, Group>, std::size_t> index;
  for (auto& p : params_.entries()) {
    auto key = std::make_pair(module_of(p.name), p.group);
    auto it = index.find(key);
    if (it == index.end()) {
      index[key] = out.size();
      out.push_back({key.first, p.group, p.value.size()});
    } else {
      out[it->second].count += p.value.size();
    }
  }
  return out;
}

}  // namespace zpj
