#include "zpj/decode.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "zpj/error.hpp"

namespace zpj {

namespace {

bool generatable(int id) { return id != kPadId && id != kBosId; }

// Encoder states with row 0 repeated n times.
EncoderStates replicate(const EncoderStates& enc, int n) {
  std::vector<int> rows(n, 0);
  auto rep = [&](const std::vector<Tensor>& v) {
    std::vector<Tensor> out;
    out.reserve(v.size());
    for (auto& t : v) out.push_back(embedding(t, rows));
    return out;
  };
  EncoderStates out;
  out.src.rows = n;
  out.src.cols = enc.src.cols;
  for (int r = 0; r < n; ++r) {
    out.src.ids.insert(out.src.ids.end(), enc.src.ids.begin(), enc.src.ids.begin() + enc.src.cols);
    out.src.mask.insert(out.src.mask.end(), enc.src.mask.begin(),
                        enc.src.mask.begin() + enc.src.cols);
  }
  out.states = rep(enc.states);
  out.fwd = rep(enc.fwd);
  out.bwd = rep(enc.bwd);
  out.dec_keys = rep(enc.dec_keys);
  if (!enc.rec_keys.empty()) out.rec_keys = rep(enc.rec_keys);
  return out;
}

Tensor discourse_of(const Model& model, const Context& context, int rows) {
  if (!model.config().use_discourse) return {};
  std::vector<const Context*> ctx(rows, &context);
  return model.encode_discourse(ctx);
}

int max_steps(const Ids& x, double ratio) {
  return std::max(1, int(std::ceil(ratio * double(x.size()))));
}

std::vector<Hypothesis> greedy(const Model& model, const EncoderStates& enc, const Tensor* disc,
                               int steps) {
  Tensor state = model.initial_state(enc, disc);
  Hypothesis h;
  int prev = kBosId;
  for (int t = 0; t < steps; ++t) {
    auto step = model.decoder_step(std::vector<int>{prev}, state, enc);
    auto lp = step.log_probs.values();
    int best = kEosId;
    if (t + 1 < steps)
      for (int w = 0; w < int(lp.size()); ++w)
        if (generatable(w) && lp[w] > lp[best]) best = w;
    h.tokens.push_back(best);
    h.loglik += lp[best];
    if (best == kEosId) break;
    prev = best;
    state = step.state;
  }
  h.combined = h.normalized();
  return {h};
}

}  // namespace

std::vector<Hypothesis> beam_search(const Model& model, const Ids& x, const Context& context,
                                    const BeamOptions& options) {
  if (options.beam < 1) throw ContractError("beam_search: beam size must be >= 1");
  if (!(options.max_ratio > 0)) throw ContractError("beam_search: max_ratio must be positive");
  NoGrad no_grad;
  EncoderStates enc = model.encode({&x});
  Tensor disc = discourse_of(model, context, 1);
  const Tensor* disc_ptr = disc.defined() ? &disc : nullptr;
  int steps = max_steps(x, options.max_ratio);
  if (options.beam == 1) return greedy(model, enc, disc_ptr, steps);

  struct Live {
    Ids tokens;
    double loglik;
  };
  std::vector<Live> live{{{}, 0.0}};
  Tensor state = model.initial_state(enc, disc_ptr);
  std::vector<Hypothesis> finished;
  double best_finished = -std::numeric_limits<double>::infinity();
  int vocab = model.config().tgt_vocab;

  for (int t = 0; t < steps && !live.empty(); ++t) {
    int n = int(live.size());
    EncoderStates rep = replicate(enc, n);
    std::vector<int> prev(n);
    for (int i = 0; i < n; ++i) prev[i] = live[i].tokens.empty() ? kBosId : live[i].tokens.back();
    auto step = model.decoder_step(prev, state, rep);
    auto lp = step.log_probs.values();
    for (int i = 0; i < n; ++i) {
      Hypothesis h;
      h.tokens = live[i].tokens;
      h.tokens.push_back(kEosId);
      h.loglik = live[i].loglik + lp[std::size_t(i) * vocab + kEosId];
      h.combined = h.normalized();
      best_finished = std::max(best_finished, h.combined);
      finished.push_back(std::move(h));
    }
    if (t + 1 == steps) break;

    struct Cand {
      double score;
      int parent;
      int word;
    };
    std::vector<Cand> cands;
    for (int i = 0; i < n; ++i)
      for (int w = 0; w < vocab; ++w)
        if (generatable(w) && w != kEosId)
          cands.push_back({live[i].loglik + lp[std::size_t(i) * vocab + w], i, w});
    auto better = [](const Cand& a, const Cand& b) {
      if (a.score != b.score) return a.score > b.score;
      if (a.parent != b.parent) return a.parent < b.parent;
      return a.word < b.word;
    };
    std::size_t keep = std::min<std::size_t>(options.beam, cands.size());
    std::partial_sort(cands.begin(), cands.begin() + keep, cands.end(), better);
    cands.resize(keep);

    // A live prefix with log-likelihood L cannot finish above L / steps.
    double best_live = -std::numeric_limits<double>::infinity();
    for (auto& c : cands) best_live = std::max(best_live, c.score / double(steps));
    if (best_finished >= best_live) break;

    std::vector<Live> next;
    std::vector<int> parents;
    for (auto& c : cands) {
      Live l{live[c.parent].tokens, c.score};
      l.tokens.push_back(c.word);
      next.push_back(std::move(l));
      parents.push_back(c.parent);
    }
    state = embedding(step.state, parents);
    live = std::move(next);
  }
  std::stable_sort(finished.begin(), finished.end(),
                   [](const Hypothesis& a, const Hypothesis& b) { return a.combined > b.combined; });
  if (int(finished.size()) > options.beam) finished.resize(options.beam);
  return finished;
}

std::vector<Hypothesis> rescore(std::vector<Hypothesis> hyps, const Ids& x,
                                const Context& context, const Model& model, double beta) {
  if (!model.config().use_reconstructor)
    throw ContractError("rescore: model has no reconstructor");
  if (hyps.empty()) return hyps;
  NoGrad no_grad;
  int n = int(hyps.size());
  std::vector<const Ids*> xs(n, &x), ys;
  for (auto& h : hyps) ys.push_back(&h.tokens);
  EncoderStates enc = model.encode(xs);
  Tensor disc = discourse_of(model, context, n);
  const Tensor* disc_ptr = disc.defined() ? &disc : nullptr;
  DecoderStates dec = model.force_decode(enc, ys, disc_ptr);
  auto rec = model.reconstruct(enc, dec, disc_ptr);
  auto scores = model.reconstruction_scores(enc, rec);
  for (int i = 0; i < n; ++i) {
    hyps[i].rec_score = scores[i];
    hyps[i].combined = hyps[i].normalized() + beta * scores[i] / double(x.size());
  }
  std::stable_sort(hyps.begin(), hyps.end(),
                   [](const Hypothesis& a, const Hypothesis& b) { return a.combined > b.combined; });
  return hyps;
}

std::vector<int> argmax_labels(const std::vector<std::vector<double>>& distributions) {
  std::vector<int> labels;
  for (auto& v : distributions) {
    if (v.empty()) throw ContractError("argmax_labels: empty distribution");
    labels.push_back(int(std::max_element(v.begin(), v.end()) - v.begin()));
  }
  return labels;
}

std::vector<int> predict_labels(const Model& model, const Ids& x, const Context& context,
                                const Ids& translation) {
  if (!model.config().use_labeler) throw ContractError("predict_labels: model has no labeler");
  NoGrad no_grad;
  Ids y = translation;
  if (y.empty() || y.back() != kEosId) y.push_back(kEosId);
  EncoderStates enc = model.encode({&x});
  Tensor disc = discourse_of(model, context, 1);
  const Tensor* disc_ptr = disc.defined() ? &disc : nullptr;
  DecoderStates dec = model.force_decode(enc, {&y}, disc_ptr);
  auto rec = model.reconstruct(enc, dec, disc_ptr);
  std::vector<std::vector<double>> dists;
  for (auto& t : model.label_zp(rec)) {
    auto v = t.values();
    dists.emplace_back(v.begin(), v.end());
  }
  return argmax_labels(dists);
}

Translation translate(const Model& model, const Ids& x, const Context& context,
                      const TranslateOptions& options) {
  auto hyps = beam_search(model, x, context, options.beam);
  if (options.rescore_beta != 0.0) hyps = rescore(std::move(hyps), x, context, model, options.rescore_beta);
  Translation out;
  out.tokens = hyps.front().tokens;
  if (options.labels) out.labels = predict_labels(model, x, context, out.tokens);
  if (!out.tokens.empty() && out.tokens.back() == kEosId) out.tokens.pop_back();
  return out;
}

std::vector<Translation> translate_all(const Model& model, const std::vector<Ids>& sources,
                                       const std::vector<Context>& contexts,
                                       const TranslateOptions& options) {
  if (sources.size() != contexts.size())
    throw ContractError("translate_all: one context per source sentence required");
  std::vector<Translation> out(sources.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < sources.size();)
      out[i] = translate(model, sources[i], contexts[i], options);
  };
  int threads = std::max(1, options.threads);
  if (threads == 1) {
    worker();
    return out;
  }
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return out;
}

}  // namespace zpj
