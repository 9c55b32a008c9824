#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace zpj {

using Sentence = std::vector<std::string>;

inline constexpr int kPadId = 0;
inline constexpr int kUnkId = 1;
inline constexpr int kBosId = 2;
inline constexpr int kEosId = 3;
inline constexpr const char* kEosToken = "<eos>";

class Vocab {
 public:
  // Most frequent tokens first, ties broken lexicographically; ids 0..3 are
  // <pad>, <unk>, <bos>, <eos>. max_size caps the regular tokens; the
  // reserved entries come on top.
  static Vocab build(const std::vector<Sentence>& corpus, int max_size);
  static Vocab parse(const std::string& text);

  int id(const std::string& token) const;
  const std::string& token(int id) const;
  int size() const { return static_cast<int>(tokens_.size()); }
  bool contains(const std::string& token) const { return index_.count(token) > 0; }

  std::vector<int> encode(const Sentence& s, bool append_eos = true) const;
  // Stops at <eos>; drops <pad>/<bos>.
  Sentence decode(std::span<const int> ids) const;
  // One token per line, in id order.
  std::string serialize() const;

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, int> index_;
};

// Source-language pronouns V_zp in a fixed order, each with the target
// pronouns it can translate to. Label id 0 is "N"; pronoun i has label i+1.
struct PronounVocab {
  std::vector<std::string> pronouns;
  std::map<std::string, std::vector<std::string>> targets;

  // "source_pronoun<TAB>target1,target2" per line.
  static PronounVocab parse(const std::string& text);
  static PronounVocab load(const std::filesystem::path& path);
  std::string serialize() const;

  int label_count() const { return static_cast<int>(pronouns.size()) + 1; }
  // -1 for tokens that are neither N nor a pronoun.
  int label_id(const std::string& label) const;
  std::string label_token(int id) const;
  bool is_target_pronoun(const std::string& token) const;
  // Source pronouns that translate to `target`, in vocabulary order.
  std::vector<std::string> candidates_for(const std::string& target) const;
};

inline constexpr const char* kNoZp = "N";

// (source index, target index) links, zero-based.
using Alignment = std::set<std::pair<int, int>>;

std::string format_alignment(const Alignment& a);
Alignment parse_alignment(const std::string& line);

struct Document {
  std::string id;
  std::vector<Sentence> source;
  std::vector<Sentence> target;
  std::vector<Sentence> labels;        // empty, or len(source[i]) + 1 labels per sentence
  std::vector<Alignment> alignments;   // empty, or one per sentence
};

struct Example {
  std::vector<int> x;   // ends with <eos>
  std::vector<int> y;   // ends with <eos>
  std::vector<int> zp;  // label ids, len(x); empty when unlabeled
  std::vector<std::vector<int>> context;  // preceding source sentences, oldest first
  std::string doc_id;
  int position = 0;
};

// Parallel files with blank lines between documents. Labels and alignments
// are optional and must share the line structure of the source file.
std::vector<Document> load_documents(const std::filesystem::path& source,
                                     const std::filesystem::path& target,
                                     const std::optional<std::filesystem::path>& labels,
                                     const PronounVocab* pronouns = nullptr,
                                     const std::optional<std::filesystem::path>& alignments = {});

// Reads one side only, keeping document boundaries. "#" is an empty sentence.
std::vector<std::vector<Sentence>> read_tokenized(const std::filesystem::path& path);
void write_tokenized(const std::filesystem::path& path,
                     const std::vector<std::vector<Sentence>>& docs);
std::vector<std::vector<Alignment>> read_alignments(const std::filesystem::path& path);
void write_alignments(const std::filesystem::path& path,
                      const std::vector<std::vector<Alignment>>& docs);

// Validates one label line against its source sentence.
void check_labels(const Sentence& source, const Sentence& labels, const PronounVocab& pronouns,
                  const std::string& where);

std::vector<Example> make_examples(const std::vector<Document>& docs, const Vocab& src,
                                   const Vocab& tgt, const PronounVocab* pronouns,
                                   int context_size);

struct Batch {
  std::vector<std::size_t> items;  // indices into the example list
};

// Drops examples longer than max_len words on either side, shuffles with the
// seed, groups by source length and returns batches in shuffled order.
std::vector<Batch> make_batches(const std::vector<Example>& examples, int batch_size,
                                int max_len, std::uint64_t seed);

// Right-padded B x T id matrix with a 0/1 mask of the same layout.
struct Padded {
  int rows = 0;
  int cols = 0;
  std::vector<int> ids;
  std::vector<double> mask;

  int id(int r, int c) const { return ids[std::size_t(r) * cols + c]; }
  // Column c as a batch of ids and as a row mask.
  std::vector<int> column(int c) const;
  std::vector<double> column_mask(int c) const;
};

Padded pad(const std::vector<const std::vector<int>*>& seqs, int min_cols = 0);

}  // namespace zpj
