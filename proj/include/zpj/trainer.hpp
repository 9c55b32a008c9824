#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "zpj/decode.hpp"
#include "zpj/eval.hpp"
#include "zpj/model.hpp"

namespace zpj {

inline constexpr const char* kVersion = "zpj 1.0.0";

struct TrainConfig {
  ModelConfig model;  // vocabulary sizes are filled in from the data
  int epochs = 30;
  int patience = 5;
  int batch = 16;
  int max_len = 50;
  int vocab = 30000;  // per side, excluding reserved ids
  double clip = 5.0;
  double rho = 0.95;
  double eps = 1e-6;
  int valid_beam = 4;
  std::uint64_t seed = 1;
  int threads = 1;

  // Keys without a "model." prefix configure training.
  static TrainConfig from(const KeyValues& kv);
  KeyValues to_kv() const;
  void validate() const;
};

// A trained model with everything needed to decode raw text.
struct Bundle {
  ModelConfig config;
  Vocab src;
  Vocab tgt;
  PronounVocab pronouns;
  ParameterStore params;
  std::map<std::string, std::string> meta;

  Model model() const;
  void save(const std::filesystem::path& path) const;
  static Bundle load(const std::filesystem::path& path);
};

struct Split {
  std::vector<Document> docs;
  std::vector<Example> examples;
};

struct TrainData {
  Vocab src;
  Vocab tgt;
  PronounVocab pronouns;
  Split train;
  Split valid;
};

// Reads src.txt, tgt.txt and (when present) labels.txt of a split directory.
std::vector<Document> load_split(const std::filesystem::path& dir, const PronounVocab& pronouns,
                                 bool with_labels = true);
TrainData prepare_data(std::vector<Document> train, std::vector<Document> valid,
                       PronounVocab pronouns, const TrainConfig& config);
std::vector<Example> examples_for(const std::vector<Document>& docs, const Vocab& src,
                                  const Vocab& tgt, const PronounVocab& pronouns, int context);

struct EpochRecord {
  int epoch = 0;
  double likelihood = 0.0;
  double reconstruction = 0.0;
  double labeling = 0.0;
  double valid_bleu = 0.0;
  std::optional<double> valid_f1;  // word level; absent without a labeler
};

std::string format_epoch_header();
std::string format_epoch(const EpochRecord& r);

struct TrainResult {
  Bundle best;
  int best_epoch = 0;
  std::vector<EpochRecord> log;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Adadelta over shuffled batches with gradient-norm clipping. Keeps the
// epoch with the highest validation BLEU (earliest on ties) and stops after
// `patience` epochs without improvement. Non-finite losses raise
// NumericError naming the epoch and batch.
TrainResult train(const TrainConfig& config, const TrainData& data,
                  const EpochCallback& on_epoch = {});

// Decodes every sentence of every document from its source side and the
// preceding source sentences of the same document, in reading order.
std::vector<Translation> decode_documents(const Model& model, const Vocab& src,
                                          const std::vector<std::vector<Sentence>>& docs,
                                          const TranslateOptions& options);

struct SplitScores {
  double bleu = 0.0;
  std::optional<ZpScores> zp;
  std::vector<Sentence> hypotheses;
  std::vector<Sentence> labels;
};

// decode_documents on the source side, scored against the target side and
// the gold labels (if any).
SplitScores evaluate(const Model& model, const Vocab& src, const Vocab& tgt,
                     const PronounVocab& pronouns, const std::vector<Document>& docs,
                     const TranslateOptions& options);

struct AblationRow {
  std::string name;
  ModelConfig config;
  Bundle bundle;
  double seconds = 0.0;  // training wall time
  std::size_t params = 0;
  int best_epoch = 0;
  double bleu = 0.0;                 // likelihood ranking
  std::optional<double> bleu_rescored;  // with reconstruction re-scoring
  std::optional<ZpScores> zp;
  std::optional<ZpScores> zp_discourse;  // gold ZPs whose antecedent is in an earlier sentence
};

// Known rows: baseline, +reconstruction, joint, joint+discourse, plus
// joint+discourse(K=0) (no previous sentences) and joint+discourse(decoder)
// (the context feeds the decoder initial state instead).
std::vector<std::string> default_ablation_rows();
std::vector<std::string> extra_ablation_rows();

struct AblationOptions {
  double rescore_beta = 1.0;
  int beam = 4;
  std::vector<std::string> rows = default_ablation_rows();
};

// Trains every requested row with the same seed and data and scores it on
// `test_dir`, which may carry gold.txt for the discourse-only scores.
std::vector<AblationRow> ablation_matrix(const TrainConfig& base, const TrainData& data,
                                         const std::filesystem::path& test_dir,
                                         const AblationOptions& options,
                                         const std::function<void(const std::string&)>& log = {});
std::string format_ablation(const std::vector<AblationRow>& rows);

// Keeps only the labels of gold ZPs that refer to an earlier sentence; every
// other slot becomes N. `gold_dir` must contain gold.txt.
std::vector<Sentence> discourse_mask(const std::filesystem::path& gold_dir,
                                     const std::vector<Sentence>& labels);

}  // namespace zpj
