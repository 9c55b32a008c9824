#pragma once

// Toy pro-drop language. Every sentence is SUBJ VERB OBJ, where a noun phrase
// is an optional adjective plus a noun, the verb agrees with the subject's
// person, and the target side is an uppercase transliteration of the full
// source with pronouns always present.
//
//   subject pronouns  wo -> I, ni -> YOU      (recoverable from the verb suffix)
//   object pronouns   ta -> HIM, sha -> HER   (gender of the most recent noun)
//
// Nouns n<i> with i % 3 == 2 are feminine, so two thirds of the nouns are
// masculine. Object pronouns start from the second sentence of a document;
// with probability discourse_fraction the subject is a pronoun and the object
// refers back to a noun in an earlier sentence.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "zpj/config.hpp"
#include "zpj/corpus.hpp"

namespace zpj {

struct GenConfig {
  std::uint64_t seed = 1;
  int train_documents = 2000;
  int valid_documents = 200;
  int test_documents = 200;
  int sentences_per_document = 4;
  int nouns = 12;
  int verbs = 8;
  int adjectives = 4;
  double subject_drop_rate = 0.27;
  double object_drop_rate = 0.27;
  double discourse_fraction = 0.5;
  double subject_pronoun_rate = 0.4;
  double object_pronoun_rate = 0.5;
  double adjective_rate = 0.3;

  static GenConfig from(const KeyValues& kv);
  KeyValues to_kv() const;
  void validate() const;
};

struct PronounRecord {
  int index = 0;       // position in the full source
  std::string word;
  bool subject = false;
  int offset = -1;     // antecedent sentence offset for objects, -1 for subjects
  bool dropped = false;
  bool operator==(const PronounRecord&) const = default;
};

struct GoldRecord {
  Sentence full;
  std::vector<PronounRecord> pronouns;
  bool operator==(const GoldRecord&) const = default;
};

struct Synthetic {
  std::vector<Document> docs;  // labels and alignments are gold
  std::vector<std::vector<GoldRecord>> gold;
};

PronounVocab synth_pronouns();
bool is_feminine_noun(const std::string& token);

// `stream` separates the splits drawn from one seed.
Synthetic generate(const GenConfig& config, int documents, std::uint64_t stream = 0);

struct CorpusStats {
  long documents = 0;
  long sentences = 0;
  long pronouns = 0;
  long zps = 0;
  long object_pronouns = 0;
  long discourse_object_pronouns = 0;
  long object_zps = 0;
  long discourse_object_zps = 0;
  long source_vocab = 0;
  long target_vocab = 0;

  double zp_rate() const;
  double discourse_fraction() const;      // over object pronouns
  double discourse_zp_fraction() const;   // over object ZPs
  std::string to_text() const;
};

CorpusStats corpus_stats(const Synthetic& corpus);
// Reads src.txt, tgt.txt and the gold.txt sidecar of a split directory.
CorpusStats corpus_stats(const std::filesystem::path& split_dir);

void write_gold(const std::filesystem::path& path, const std::vector<std::vector<GoldRecord>>& gold);
std::vector<std::vector<GoldRecord>> read_gold(const std::filesystem::path& path);

// src.txt tgt.txt labels.txt align.txt full.txt gold.txt stats.txt
void write_split(const std::filesystem::path& dir, const Synthetic& corpus);
// train/ valid/ test/ plus pronouns.txt and config.txt at the top.
void write_corpus(const std::filesystem::path& out_dir, const GenConfig& config);

}  // namespace zpj
