#pragma once

// Alignment-based ZP auto-annotation: a target pronoun that no source word
// aligns to marks a dropped pronoun; its slot is projected into the source and
// the source pronoun is recovered by language-model scoring.

#include <filesystem>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "zpj/corpus.hpp"

namespace zpj {

struct AnnotationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Interpolated n-gram model with add-delta smoothing at every order:
//   p(w | h) = sum_k lambda_k (c(h_k w) + delta) / (c(h_k) + delta |V|)
// where h_k is the last k-1 history words (lambda_1 is the unigram weight).
class NGramLM {
 public:
  static NGramLM train(const std::vector<Sentence>& corpus, int order = 3,
                       std::vector<double> lambdas = {0.1, 0.3, 0.6}, double delta = 0.01);
  static NGramLM load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  int order() const { return order_; }
  // `history` is the full left context; only the last order-1 words matter.
  double prob(const Sentence& history, const std::string& word) const;
  // Sum of log p over the words and the end-of-sentence marker.
  double sentence_logprob(const Sentence& s) const;
  double perplexity(const Sentence& s) const;
  const std::vector<std::string>& vocabulary() const { return vocab_; }

 private:
  std::string key(const Sentence& padded, std::size_t end, int n) const;
  std::string known(const std::string& w) const;

  int order_ = 3;
  std::vector<double> lambdas_;
  double delta_ = 0.01;
  std::vector<std::string> vocab_;  // includes </s> and <unk>
  std::unordered_map<std::string, long> ngram_counts_;    // "w1 w2 w3"
  std::unordered_map<std::string, long> history_counts_;  // "w1 w2" as a history
  long total_tokens_ = 0;
  std::unordered_map<std::string, bool> in_vocab_;
};

// t(target word | source word), with "" as the NULL source word.
class IBM1Table {
 public:
  // EM from uniform initialisation. When `log_likelihood` is given it
  // receives the data log-likelihood under the table entering each iteration.
  static IBM1Table train(const std::vector<std::pair<Sentence, Sentence>>& corpus, int iterations,
                         std::vector<double>* log_likelihood = nullptr);

  // Floor of 1e-9 for unseen pairs.
  double prob(const std::string& target, const std::string& source) const;
  // Sum over the target vocabulary for one source word.
  double total(const std::string& source) const;

 private:
  std::unordered_map<std::string, std::unordered_map<std::string, double>> table_;
  std::vector<std::string> target_vocab_;
};

// Intersection of the per-source-word and per-target-word argmax links.
Alignment align(const Sentence& source, const Sentence& target, const IBM1Table& table);

struct UnalignedPronoun {
  int target_index;
  std::string pronoun;
  bool operator==(const UnalignedPronoun&) const = default;
};

std::vector<UnalignedPronoun> detect_unaligned_pronouns(const Sentence& target,
                                                        const Alignment& alignment,
                                                        const PronounVocab& pronouns);

// Slot s in [0, src_len] meaning "before source token s" (src_len is the
// <eos> slot): one past the rightmost source token aligned to any target word
// left of target_index, or 0 when there is none.
int project_zp_position(int target_index, const Alignment& alignment, int src_len);

// Inserts each candidate at the slot and keeps the lowest-perplexity one;
// ties go to the earlier pronoun in the vocabulary.
std::string recover_zp_word(const Sentence& source, int slot, const std::string& target_pronoun,
                            const NGramLM& lm, const PronounVocab& pronouns);

struct AnnotationSummary {
  long sentences = 0;
  long touched = 0;     // sentences with at least one recovered ZP
  long zps = 0;
  long overt = 0;       // source pronouns present on the surface
  long skipped = 0;     // pairs that raised an annotation error
  long conflicts = 0;   // second ZP projected onto an occupied slot
  double zp_rate() const { return zps + overt ? double(zps) / double(zps + overt) : 0.0; }
};

using Aligner = std::function<Alignment(const Document&, std::size_t sentence)>;

// Rewrites the labels of every document. Only labels change.
AnnotationSummary annotate_corpus(std::vector<Document>& docs, const Aligner& aligner,
                                  const NGramLM& lm, const PronounVocab& pronouns);
// Uses the alignments stored in the documents.
AnnotationSummary annotate_corpus(std::vector<Document>& docs, const NGramLM& lm,
                                  const PronounVocab& pronouns);
AnnotationSummary annotate_corpus(std::vector<Document>& docs, const IBM1Table& table,
                                  const NGramLM& lm, const PronounVocab& pronouns);

}  // namespace zpj
