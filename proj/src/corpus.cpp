#include "zpj/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>
#include <unordered_map>

#include "zpj/error.hpp"

namespace zpj {

namespace {

const char* const kReserved[] = {"<pad>", "<unk>", "<bos>", kEosToken};

Sentence split(const std::string& line) {
  Sentence out;
  std::istringstream is(line);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

bool blank(const std::string& line) {
  return line.find_first_not_of(" \t\r") == std::string::npos;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(is, line)) lines.push_back(line);
  return lines;
}

std::string join(const Sentence& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? " " : "") + s[i];
  return out;
}

}  // namespace

// --- Vocab -------------------------------------------------------------------

Vocab Vocab::build(const std::vector<Sentence>& corpus, int max_size) {
  if (max_size <= 4) throw ContractError("build_vocab: max_size must exceed 4");
  std::unordered_map<std::string, long> counts;
  for (auto& s : corpus)
    for (auto& t : s) ++counts[t];
  if (counts.empty()) throw ContractError("build_vocab: empty corpus");
  std::vector<std::pair<std::string, long>> ranked(counts.begin(), counts.end());
  std::sort(ranked.begin(), ranked.end(), [](auto& a, auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  Vocab v;
  for (auto* r : kReserved) {
    v.index_[r] = v.size();
    v.tokens_.push_back(r);
  }
  for (auto& [tok, n] : ranked) {
    if (v.size() >= max_size + 4) break;
    if (v.index_.count(tok)) continue;
    v.index_[tok] = v.size();
    v.tokens_.push_back(tok);
  }
  return v;
}

Vocab Vocab::parse(const std::string& text) {
  Vocab v;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    v.index_[line] = v.size();
    v.tokens_.push_back(line);
  }
  for (int i = 0; i < 4; ++i)
    if (v.size() <= i || v.tokens_[i] != kReserved[i])
      throw FormatError("vocab: reserved token " + std::string(kReserved[i]) +
                        " missing at id " + std::to_string(i));
  return v;
}

int Vocab::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnkId : it->second;
}

const std::string& Vocab::token(int id) const {
  if (id < 0 || id >= size()) throw std::out_of_range("vocab id " + std::to_string(id));
  return tokens_[id];
}

std::vector<int> Vocab::encode(const Sentence& s, bool append_eos) const {
  std::vector<int> out;
  out.reserve(s.size() + 1);
  for (auto& t : s) out.push_back(id(t));
  if (append_eos) out.push_back(kEosId);
  return out;
}

Sentence Vocab::decode(std::span<const int> ids) const {
  Sentence out;
  for (int i : ids) {
    if (i == kEosId) break;
    if (i == kPadId || i == kBosId) continue;
    out.push_back(token(i));
  }
  return out;
}

std::string Vocab::serialize() const {
  std::string out;
  for (auto& t : tokens_) out += t + "\n";
  return out;
}

// --- PronounVocab --------------------------------------------------------------

PronounVocab PronounVocab::parse(const std::string& text) {
  PronounVocab pv;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (blank(line) || line[0] == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw FormatError("pronoun file line " + std::to_string(lineno) +
                        ": expected 'pronoun<TAB>targets'");
    auto src = line.substr(0, tab);
    if (src == kNoZp) throw FormatError("pronoun file: 'N' is reserved for no-ZP");
    if (pv.targets.count(src))
      throw FormatError("pronoun file line " + std::to_string(lineno) + ": duplicate " + src);
    std::vector<std::string> tgts;
    std::stringstream ts(line.substr(tab + 1));
    std::string t;
    while (std::getline(ts, t, ','))
      if (!blank(t)) tgts.push_back(split(t).at(0));
    if (tgts.empty())
      throw FormatError("pronoun file line " + std::to_string(lineno) + ": no target pronouns");
    pv.pronouns.push_back(src);
    pv.targets[src] = tgts;
  }
  if (pv.pronouns.empty()) throw FormatError("pronoun file: empty");
  return pv;
}

PronounVocab PronounVocab::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse(ss.str());
}

std::string PronounVocab::serialize() const {
  std::string out;
  for (auto& p : pronouns) {
    out += p + "\t";
    auto& t = targets.at(p);
    for (std::size_t i = 0; i < t.size(); ++i) out += (i ? "," : "") + t[i];
    out += "\n";
  }
  return out;
}

int PronounVocab::label_id(const std::string& label) const {
  if (label == kNoZp) return 0;
  auto it = std::find(pronouns.begin(), pronouns.end(), label);
  return it == pronouns.end() ? -1 : static_cast<int>(it - pronouns.begin()) + 1;
}

std::string PronounVocab::label_token(int id) const {
  if (id == 0) return kNoZp;
  if (id < 0 || id > static_cast<int>(pronouns.size()))
    throw std::out_of_range("label id " + std::to_string(id));
  return pronouns[id - 1];
}

bool PronounVocab::is_target_pronoun(const std::string& token) const {
  for (auto& [src, tgts] : targets)
    if (std::find(tgts.begin(), tgts.end(), token) != tgts.end()) return true;
  return false;
}

std::vector<std::string> PronounVocab::candidates_for(const std::string& target) const {
  std::vector<std::string> out;
  for (auto& p : pronouns) {
    auto& t = targets.at(p);
    if (std::find(t.begin(), t.end(), target) != t.end()) out.push_back(p);
  }
  return out;
}

// --- alignments ------------------------------------------------------------------

std::string format_alignment(const Alignment& a) {
  std::string out;
  for (auto& [s, t] : a) {
    if (!out.empty()) out += ' ';
    out += std::to_string(s) + "-" + std::to_string(t);
  }
  return out;
}

Alignment parse_alignment(const std::string& line) {
  Alignment a;
  for (auto& tok : split(line)) {
    auto dash = tok.find('-');
    try {
      if (dash == std::string::npos) throw std::invalid_argument(tok);
      std::size_t u1 = 0, u2 = 0;
      int s = std::stoi(tok.substr(0, dash), &u1);
      int t = std::stoi(tok.substr(dash + 1), &u2);
      if (u1 != dash || u2 != tok.size() - dash - 1 || s < 0 || t < 0)
        throw std::invalid_argument(tok);
      a.emplace(s, t);
    } catch (const std::exception&) {
      throw FormatError("bad alignment link '" + tok + "'");
    }
  }
  return a;
}

// --- document files ----------------------------------------------------------------

std::vector<std::vector<Sentence>> read_tokenized(const std::filesystem::path& path) {
  std::vector<std::vector<Sentence>> docs(1);
  for (auto& line : read_lines(path)) {
    if (blank(line)) {
      if (!docs.back().empty()) docs.emplace_back();
      continue;
    }
    docs.back().push_back(line == "#" ? Sentence{} : split(line));
  }
  if (docs.back().empty()) docs.pop_back();
  return docs;
}

void write_tokenized(const std::filesystem::path& path,
                     const std::vector<std::vector<Sentence>>& docs) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  for (std::size_t d = 0; d < docs.size(); ++d) {
    if (d) os << '\n';
    for (auto& s : docs[d]) os << (s.empty() ? std::string("#") : join(s)) << '\n';
  }
}

std::vector<std::vector<Alignment>> read_alignments(const std::filesystem::path& path) {
  // "#" stands for a sentence without links; blank lines are document breaks.
  std::vector<std::vector<Alignment>> docs(1);
  int lineno = 0;
  for (auto& line : read_lines(path)) {
    ++lineno;
    if (blank(line)) {
      if (!docs.back().empty()) docs.emplace_back();
      continue;
    }
    try {
      docs.back().push_back(line == "#" ? Alignment{} : parse_alignment(line));
    } catch (const FormatError& e) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (docs.back().empty()) docs.pop_back();
  return docs;
}

void write_alignments(const std::filesystem::path& path,
                      const std::vector<std::vector<Alignment>>& docs) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  for (std::size_t d = 0; d < docs.size(); ++d) {
    if (d) os << '\n';
    for (auto& a : docs[d]) os << (a.empty() ? std::string("#") : format_alignment(a)) << '\n';
  }
}

void check_labels(const Sentence& source, const Sentence& labels, const PronounVocab& pronouns,
                  const std::string& where) {
  if (labels.size() != source.size() + 1)
    throw FormatError(where + ": label line has " + std::to_string(labels.size()) +
                      " labels but the source has " + std::to_string(source.size() + 1) +
                      " tokens including <eos>");
  for (auto& l : labels)
    if (pronouns.label_id(l) < 0) throw FormatError(where + ": unknown label '" + l + "'");
}

std::vector<Document> load_documents(const std::filesystem::path& source,
                                     const std::filesystem::path& target,
                                     const std::optional<std::filesystem::path>& labels,
                                     const PronounVocab* pronouns,
                                     const std::optional<std::filesystem::path>& alignments) {
  auto src = read_lines(source);
  auto tgt = read_lines(target);
  std::vector<std::string> lab, ali;
  if (labels) {
    if (!pronouns) throw ContractError("load_documents: labels require a pronoun vocabulary");
    lab = read_lines(*labels);
  }
  if (alignments) ali = read_lines(*alignments);

  auto mismatch = [&](const std::filesystem::path& p, std::size_t n) {
    return FormatError(p.string() + " has " + std::to_string(n) + " lines, " + source.string() +
                       " has " + std::to_string(src.size()));
  };
  if (tgt.size() != src.size()) throw mismatch(target, tgt.size());
  if (labels && lab.size() != src.size()) throw mismatch(*labels, lab.size());
  if (alignments && ali.size() != src.size()) throw mismatch(*alignments, ali.size());

  std::vector<Document> docs;
  auto open_doc = [&] {
    if (docs.empty() || !docs.back().source.empty()) {
      docs.emplace_back();
      docs.back().id = "doc" + std::to_string(docs.size() - 1);
    }
  };
  open_doc();
  for (std::size_t i = 0; i < src.size(); ++i) {
    std::string where = source.string() + ":" + std::to_string(i + 1);
    bool b = blank(src[i]);
    if (blank(tgt[i]) != b || (labels && blank(lab[i]) != b) || (alignments && blank(ali[i]) != b))
      throw FormatError(where + ": document boundary not aligned across files");
    if (b) {
      open_doc();
      continue;
    }
    auto& d = docs.back();
    d.source.push_back(split(src[i]));
    d.target.push_back(split(tgt[i]));
    if (labels) {
      auto l = split(lab[i]);
      check_labels(d.source.back(), l, *pronouns, where);
      d.labels.push_back(std::move(l));
    }
    if (alignments) {
      auto a = ali[i] == "#" ? Alignment{} : parse_alignment(ali[i]);
      for (auto& [s, t] : a)
        if (s >= int(d.source.back().size()) || t >= int(d.target.back().size()))
          throw FormatError(where + ": alignment link " + std::to_string(s) + "-" +
                            std::to_string(t) + " outside the sentence pair");
      d.alignments.push_back(std::move(a));
    }
  }
  if (docs.back().source.empty()) docs.pop_back();
  return docs;
}

std::vector<Example> make_examples(const std::vector<Document>& docs, const Vocab& src,
                                   const Vocab& tgt, const PronounVocab* pronouns,
                                   int context_size) {
  if (context_size < 0) throw ContractError("make_examples: negative context size");
  std::vector<Example> out;
  for (auto& d : docs) {
    std::vector<std::vector<int>> encoded;
    for (auto& s : d.source) encoded.push_back(src.encode(s));
    for (std::size_t i = 0; i < d.source.size(); ++i) {
      Example ex;
      ex.x = encoded[i];
      ex.y = tgt.encode(d.target[i]);
      if (!d.labels.empty() && pronouns) {
        for (auto& l : d.labels[i]) ex.zp.push_back(pronouns->label_id(l));
      }
      std::size_t first = i >= std::size_t(context_size) ? i - context_size : 0;
      for (std::size_t k = first; k < i; ++k) ex.context.push_back(encoded[k]);
      ex.doc_id = d.id;
      ex.position = static_cast<int>(i);
      out.push_back(std::move(ex));
    }
  }
  return out;
}

std::vector<Batch> make_batches(const std::vector<Example>& examples, int batch_size,
                                int max_len, std::uint64_t seed) {
  if (batch_size < 1) throw ContractError("make_batches: batch_size must be >= 1");
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    // Lengths count words, not the <eos> marker.
    int xs = int(examples[i].x.size()) - 1, ys = int(examples[i].y.size()) - 1;
    if (xs <= max_len && ys <= max_len) keep.push_back(i);
  }
  if (keep.empty()) throw ContractError("make_batches: every example exceeds max_len");
  std::mt19937_64 rng(seed);
  std::shuffle(keep.begin(), keep.end(), rng);
  std::stable_sort(keep.begin(), keep.end(), [&](std::size_t a, std::size_t b) {
    return examples[a].x.size() < examples[b].x.size();
  });
  std::vector<Batch> batches;
  for (std::size_t i = 0; i < keep.size(); i += batch_size) {
    Batch b;
    b.items.assign(keep.begin() + i, keep.begin() + std::min(keep.size(), i + batch_size));
    batches.push_back(std::move(b));
  }
  std::shuffle(batches.begin(), batches.end(), rng);
  return batches;
}

std::vector<int> Padded::column(int c) const {
  std::vector<int> out(rows);
  for (int r = 0; r < rows; ++r) out[r] = id(r, c);
  return out;
}

std::vector<double> Padded::column_mask(int c) const {
  std::vector<double> out(rows);
  for (int r = 0; r < rows; ++r) out[r] = mask[std::size_t(r) * cols + c];
  return out;
}

Padded pad(const std::vector<const std::vector<int>*>& seqs, int min_cols) {
  Padded p;
  p.rows = static_cast<int>(seqs.size());
  p.cols = min_cols;
  for (auto* s : seqs) p.cols = std::max(p.cols, static_cast<int>(s->size()));
  p.ids.assign(std::size_t(p.rows) * p.cols, kPadId);
  p.mask.assign(p.ids.size(), 0.0);
  for (int r = 0; r < p.rows; ++r)
    for (std::size_t c = 0; c < seqs[r]->size(); ++c) {
      p.ids[std::size_t(r) * p.cols + c] = (*seqs[r])[c];
      p.mask[std::size_t(r) * p.cols + c] = 1.0;
    }
  return p;
}

}  // namespace zpj
