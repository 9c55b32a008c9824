#pragma once

// Joint translation and ZP prediction model.
//
//   encoder        bidirectional GRU, h_enc[t] = [fwd_t ; bwd_t]
//   decoder        attention GRU fed with the previous target word
//   reconstructor  regenerates x from h_enc and h_dec through two attentions,
//                  the encoder-side context feeding the decoder-side query
//   labeler        per-position classifier over {N} + V_zp on reconstructor states
//   discourse      sentence-level GRU over encoder summaries of the previous
//                  K sentences, combined with reconstructor states by
//                  tanh(W [h_rec ; C] + b)
//
// All computations are batched: rows are examples, right padding is masked.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "zpj/config.hpp"
#include "zpj/corpus.hpp"
#include "zpj/nn.hpp"
#include "zpj/params.hpp"

namespace zpj {

struct ModelConfig {
  int src_vocab = 0;
  int tgt_vocab = 0;
  int labels = 1;  // |V_zp| + 1
  int embed = 32;
  int hidden = 64;
  int rec_hidden = 64;
  int attention = 64;
  int context = 3;  // K
  bool use_reconstructor = false;
  bool use_labeler = false;
  bool use_discourse = false;
  std::string discourse_target = "reconstructor";  // or "decoder"
  // false stops gradients through the encoder context in the decoder-side
  // reconstructor attention query (values are unchanged).
  bool interactive = true;
  double w_rec = 1.0;
  double w_lab = 1.0;

  static ModelConfig from(const KeyValues& kv);
  KeyValues to_kv() const;
  void validate() const;
  bool discourse_to_decoder() const { return use_discourse && discourse_target == "decoder"; }
  bool discourse_to_reconstructor() const {
    return use_discourse && discourse_target == "reconstructor";
  }
};

using Ids = std::vector<int>;
using Context = std::vector<Ids>;  // previous source sentences, oldest first

struct EncoderStates {
  Padded src;
  std::vector<Tensor> states;  // T x (B x 2H)
  std::vector<Tensor> fwd;
  std::vector<Tensor> bwd;
  std::vector<Tensor> dec_keys;  // decoder-attention key projections
  std::vector<Tensor> rec_keys;  // reconstructor encoder-attention key projections
};

struct DecoderStep {
  Tensor log_probs;  // B x V_tgt
  Tensor state;      // B x H, this step's h_dec
  Tensor alpha;      // B x T
};

struct DecoderStates {
  Padded tgt;
  std::vector<Tensor> states;     // T' x (B x H)
  std::vector<Tensor> log_probs;  // T' x (B x V_tgt)
};

struct ReconstructorStates {
  std::vector<Tensor> h;          // raw recurrent states
  std::vector<Tensor> out;        // after context combination (== h without discourse)
  std::vector<Tensor> alpha_enc;  // B x T
  std::vector<Tensor> alpha_dec;  // B x T'
  std::vector<Tensor> log_probs;  // B x V_src, predicting x_t
};

struct LossTerms {
  Tensor total;
  double likelihood = 0.0;      // per target token
  double reconstruction = 0.0;  // per source token
  double labeling = 0.0;        // per source position
  long target_tokens = 0;
  long source_tokens = 0;
};

struct ParamCount {
  std::string module;
  Group group;
  std::size_t count;
};

class Model {
 public:
  Model(ModelConfig config, std::uint64_t seed);
  // Binds to an existing store; every expected parameter must be present.
  Model(ModelConfig config, ParameterStore params);

  const ModelConfig& config() const { return config_; }
  ParameterStore& params() { return params_; }
  const ParameterStore& params() const { return params_; }

  EncoderStates encode(const std::vector<const Ids*>& x, bool project_keys = true) const;
  // Final forward state and first backward state, B x 2H.
  Tensor summarize(const EncoderStates& enc) const;
  // B x H discourse vectors; rows with no previous sentence get the learned c0.
  Tensor encode_discourse(const std::vector<const Context*>& contexts) const;
  Tensor combine_context(const Tensor& h_rec, const Tensor& c) const;

  Tensor initial_state(const EncoderStates& enc, const Tensor* discourse) const;
  DecoderStep decoder_step(std::span<const int> prev, const Tensor& state,
                           const EncoderStates& enc) const;
  DecoderStates force_decode(const EncoderStates& enc, const std::vector<const Ids*>& y,
                             const Tensor* discourse) const;

  ReconstructorStates reconstruct(const EncoderStates& enc, const DecoderStates& dec,
                                  const Tensor* discourse) const;
  // Per-sentence sum of log p(x_t), B entries.
  std::vector<double> reconstruction_scores(const EncoderStates& enc,
                                            const ReconstructorStates& rec) const;
  // Per position B x labels log-probabilities.
  std::vector<Tensor> label_zp(const ReconstructorStates& rec) const;

  LossTerms joint_loss(const std::vector<const Example*>& batch) const;

  std::vector<ParamCount> describe() const;

 private:
  void bind();
  Tensor discourse_for(const std::vector<const Example*>& batch) const;

  ModelConfig config_;
  ParameterStore params_;

  Tensor src_emb_, tgt_emb_;
  GruCell enc_fwd_, enc_bwd_;
  Linear dec_init_;
  Tensor dec_init_ctx_;
  AdditiveAttention dec_att_;
  GruCell dec_gru_;
  Linear dec_readout_, dec_out_;
  AdditiveAttention rec_att_enc_, rec_att_dec_;
  GruCell rec_gru_;
  Linear rec_readout_, rec_out_;
  Linear lab_hidden_, lab_out_;
  GruCell disc_gru_;
  Tensor disc_c0_;
  Linear combine_;
};

}  // namespace zpj
