#pragma once

#include <vector>

#include "zpj/model.hpp"

namespace zpj {

struct Hypothesis {
  Ids tokens;  // ends with <eos>
  double loglik = 0.0;
  double rec_score = 0.0;  // set by rescore
  double combined = 0.0;   // ranking score

  double normalized() const { return loglik / double(tokens.size()); }
};

struct BeamOptions {
  int beam = 4;
  double max_ratio = 2.0;
};

// At most ceil(max_ratio * len(x)) target tokens including <eos>, where len(x)
// counts the source <eos>. Every live hypothesis's <eos> extension is kept as
// finished, and the `beam` best non-final extensions stay live, so the search
// is exhaustive while the live prefixes fit in the beam. beam == 1 is greedy.
// Returns up to `beam` hypotheses by descending length-normalized likelihood.
std::vector<Hypothesis> beam_search(const Model& model, const Ids& x, const Context& context,
                                    const BeamOptions& options = {});

// combined = loglik / |y| + beta * rec / |x|; stable re-sort by combined.
std::vector<Hypothesis> rescore(std::vector<Hypothesis> hyps, const Ids& x,
                                const Context& context, const Model& model, double beta);

// Argmax per distribution; ties go to the lowest label id.
std::vector<int> argmax_labels(const std::vector<std::vector<double>>& distributions);

// Argmax label id per source position, conditioned on
// the decoder states of `translation`.
std::vector<int> predict_labels(const Model& model, const Ids& x, const Context& context,
                                const Ids& translation);

struct TranslateOptions {
  BeamOptions beam;
  double rescore_beta = 0.0;
  bool labels = false;
  int threads = 1;
};

struct Translation {
  Ids tokens;  // without <eos>
  std::vector<int> labels;
};

// Takes only source sentences and their preceding source sentences.
Translation translate(const Model& model, const Ids& x, const Context& context,
                      const TranslateOptions& options);
std::vector<Translation> translate_all(const Model& model, const std::vector<Ids>& sources,
                                       const std::vector<Context>& contexts,
                                       const TranslateOptions& options);

}  // namespace zpj
