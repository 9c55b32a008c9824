#include "zpj/annotator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "zpj/error.hpp"

namespace zpj {

namespace {

constexpr const char* kBos = "<s>";
constexpr const char* kEos = "</s>";
constexpr const char* kUnk = "<unk>";
constexpr const char* kLmMagic = "#zpj-ngram-lm v1";
constexpr double kFloor = 1e-9;

}  // namespace

// --- NGramLM ---------------------------------------------------------------------

std::string NGramLM::known(const std::string& w) const {
  return in_vocab_.count(w) ? w : std::string(kUnk);
}

std::string NGramLM::key(const Sentence& padded, std::size_t end, int n) const {
  std::string k;
  for (std::size_t i = end + 1 - n; i <= end; ++i) {
    if (!k.empty()) k += ' ';
    k += padded[i];
  }
  return k;
}

NGramLM NGramLM::train(const std::vector<Sentence>& corpus, int order,
                       std::vector<double> lambdas, double delta) {
  if (order < 1) throw ContractError("ngram: order must be >= 1");
  if (int(lambdas.size()) != order) throw ContractError("ngram: need one weight per order");
  double lsum = std::accumulate(lambdas.begin(), lambdas.end(), 0.0);
  if (std::abs(lsum - 1.0) > 1e-9) throw ContractError("ngram: weights must sum to 1");
  if (!(delta > 0)) throw ContractError("ngram: delta must be positive");
  NGramLM lm;
  lm.order_ = order;
  lm.lambdas_ = std::move(lambdas);
  lm.delta_ = delta;
  std::set<std::string> vocab{kEos, kUnk};
  for (auto& s : corpus) vocab.insert(s.begin(), s.end());
  lm.vocab_.assign(vocab.begin(), vocab.end());
  for (auto& w : lm.vocab_) lm.in_vocab_[w] = true;
  for (auto& s : corpus) {
    Sentence padded(order - 1, kBos);
    padded.insert(padded.end(), s.begin(), s.end());
    padded.push_back(kEos);
    for (std::size_t i = order - 1; i < padded.size(); ++i) {
      ++lm.total_tokens_;
      for (int n = 1; n <= order; ++n) {
        ++lm.ngram_counts_[lm.key(padded, i, n)];
        if (n > 1) ++lm.history_counts_[lm.key(padded, i - 1, n - 1)];
      }
    }
  }
  return lm;
}

double NGramLM::prob(const Sentence& history, const std::string& word) const {
  Sentence padded(order_ - 1, kBos);
  for (auto& h : history) padded.push_back(known(h));
  padded.push_back(known(word));
  std::size_t end = padded.size() - 1;
  double v = static_cast<double>(vocab_.size());
  double p = 0.0;
  for (int n = 1; n <= order_; ++n) {
    auto it = ngram_counts_.find(key(padded, end, n));
    double c = it == ngram_counts_.end() ? 0.0 : double(it->second);
    double hc;
    if (n == 1) {
      hc = double(total_tokens_);
    } else {
      auto h = history_counts_.find(key(padded, end - 1, n - 1));
      hc = h == history_counts_.end() ? 0.0 : double(h->second);
    }
    p += lambdas_[n - 1] * (c + delta_) / (hc + delta_ * v);
  }
  return p;
}

double NGramLM::sentence_logprob(const Sentence& s) const {
  double lp = 0.0;
  Sentence hist;
  for (auto& w : s) {
    lp += std::log(prob(hist, w));
    hist.push_back(w);
  }
  return lp + std::log(prob(hist, kEos));
}

double NGramLM::perplexity(const Sentence& s) const {
  return std::exp(-sentence_logprob(s) / double(s.size() + 1));
}

void NGramLM::save(const std::filesystem::path& path) const {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << kLmMagic << "\norder\t" << order_ << "\ndelta\t" << delta_ << "\nlambdas";
  for (double l : lambdas_) os << '\t' << l;
  os << "\ntotal\t" << total_tokens_ << "\nvocab";
  for (auto& w : vocab_) os << '\t' << w;
  os << '\n';
  std::map<std::string, long> sorted(ngram_counts_.begin(), ngram_counts_.end());
  for (auto& [k, c] : sorted) os << "g\t" << k << '\t' << c << '\n';
  std::map<std::string, long> hs(history_counts_.begin(), history_counts_.end());
  for (auto& [k, c] : hs) os << "h\t" << k << '\t' << c << '\n';
}

NGramLM NGramLM::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(is, line) || line != kLmMagic)
    throw FormatError(path.string() + ": not an n-gram model file");
  NGramLM lm;
  auto fields = [](const std::string& l) {
    std::vector<std::string> f;
    std::stringstream ss(l);
    std::string x;
    while (std::getline(ss, x, '\t')) f.push_back(x);
    return f;
  };
  while (std::getline(is, line)) {
    auto f = fields(line);
    if (f.empty()) continue;
    try {
      if (f[0] == "order") lm.order_ = std::stoi(f.at(1));
      else if (f[0] == "delta") lm.delta_ = std::stod(f.at(1));
      else if (f[0] == "lambdas")
        for (std::size_t i = 1; i < f.size(); ++i) lm.lambdas_.push_back(std::stod(f[i]));
      else if (f[0] == "total") lm.total_tokens_ = std::stol(f.at(1));
      else if (f[0] == "vocab")
        lm.vocab_.assign(f.begin() + 1, f.end());
      else if (f[0] == "g") lm.ngram_counts_[f.at(1)] = std::stol(f.at(2));
      else if (f[0] == "h") lm.history_counts_[f.at(1)] = std::stol(f.at(2));
      else throw FormatError("unknown record");
    } catch (const std::exception&) {
      throw FormatError(path.string() + ": bad line '" + line + "'");
    }
  }
  if (int(lm.lambdas_.size()) != lm.order_) throw FormatError(path.string() + ": weight count");
  for (auto& w : lm.vocab_) lm.in_vocab_[w] = true;
  return lm;
}

// --- IBM model 1 ------------------------------------------------------------------

IBM1Table IBM1Table::train(const std::vector<std::pair<Sentence, Sentence>>& corpus,
                           int iterations, std::vector<double>* log_likelihood) {
  if (iterations < 1) throw ContractError("train_ibm1: iterations must be >= 1");
  if (corpus.empty()) throw ContractError("train_ibm1: empty corpus");
  IBM1Table t;
  std::set<std::string> tv;
  for (auto& [s, g] : corpus) tv.insert(g.begin(), g.end());
  if (tv.empty()) throw ContractError("train_ibm1: corpus has no target words");
  t.target_vocab_.assign(tv.begin(), tv.end());
  double uniform = 1.0 / double(tv.size());
  bool first = true;
  if (log_likelihood) log_likelihood->clear();

  for (int it = 0; it < iterations; ++it) {
    std::unordered_map<std::string, std::unordered_map<std::string, double>> counts;
    double ll = 0.0;
    for (auto& [src, tgt] : corpus) {
      Sentence sources{""};
      sources.insert(sources.end(), src.begin(), src.end());
      for (auto& f : tgt) {
        double z = 0.0;
        std::vector<double> p(sources.size());
        for (std::size_t i = 0; i < sources.size(); ++i) {
          p[i] = first ? uniform : t.table_[sources[i]][f];
          z += p[i];
        }
        ll += std::log(z / double(sources.size()));
        for (std::size_t i = 0; i < sources.size(); ++i) counts[sources[i]][f] += p[i] / z;
      }
    }
    if (log_likelihood) log_likelihood->push_back(ll);
    t.table_.clear();
    for (auto& [e, row] : counts) {
      double tot = 0.0;
      for (auto& [f, c] : row) tot += c;
      auto& out = t.table_[e];
      for (auto& [f, c] : row) out[f] = c / tot;
    }
    first = false;
  }
  return t;
}

double IBM1Table::prob(const std::string& target, const std::string& source) const {
  auto row = table_.find(source);
  if (row == table_.end()) return kFloor;
  auto it = row->second.find(target);
  return it == row->second.end() ? kFloor : std::max(it->second, kFloor);
}

double IBM1Table::total(const std::string& source) const {
  auto row = table_.find(source);
  if (row == table_.end()) return 0.0;
  double s = 0.0;
  for (auto& [f, p] : row->second) s += p;
  return s;
}

Alignment align(const Sentence& source, const Sentence& target, const IBM1Table& table) {
  Alignment out;
  if (source.empty() || target.empty()) return out;
  std::vector<int> best_tgt(source.size());
  for (std::size_t i = 0; i < source.size(); ++i) {
    int arg = 0;
    double best = -1.0;
    for (std::size_t j = 0; j < target.size(); ++j) {
      double p = table.prob(target[j], source[i]);
      if (p > best) {
        best = p;
        arg = int(j);
      }
    }
    best_tgt[i] = arg;
  }
  for (std::size_t j = 0; j < target.size(); ++j) {
    int arg = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < source.size(); ++i) {
      double p = table.prob(target[j], source[i]);
      if (p > best) {
        best = p;
        arg = int(i);
      }
    }
    // NULL takes the link only when strictly better than every real word.
    if (table.prob(target[j], "") > best) continue;
    if (best_tgt[arg] == int(j)) out.emplace(arg, int(j));
  }
  return out;
}

// --- ZP detection, projection, recovery ---------------------------------------------

std::vector<UnalignedPronoun> detect_unaligned_pronouns(const Sentence& target,
                                                        const Alignment& alignment,
                                                        const PronounVocab& pronouns) {
  std::vector<bool> linked(target.size(), false);
  for (auto& [s, t] : alignment)
    if (t >= 0 && t < int(target.size())) linked[t] = true;
  std::vector<UnalignedPronoun> out;
  for (std::size_t j = 0; j < target.size(); ++j)
    if (!linked[j] && pronouns.is_target_pronoun(target[j])) out.push_back({int(j), target[j]});
  return out;
}

int project_zp_position(int target_index, const Alignment& alignment, int src_len) {
  int rightmost = -1;
  for (auto& [s, t] : alignment)
    if (t < target_index) rightmost = std::max(rightmost, s);
  return std::min(rightmost + 1, src_len);
}

std::string recover_zp_word(const Sentence& source, int slot, const std::string& target_pronoun,
                            const NGramLM& lm, const PronounVocab& pronouns) {
  if (slot < 0 || slot > int(source.size()))
    throw AnnotationError("slot " + std::to_string(slot) + " outside sentence of " +
                          std::to_string(source.size()));
  auto candidates = pronouns.candidates_for(target_pronoun);
  if (candidates.empty()) candidates = pronouns.pronouns;
  if (candidates.empty()) throw AnnotationError("no pronoun candidates for " + target_pronoun);
  if (candidates.size() == 1) return candidates[0];
  std::string best;
  double best_ppl = INFINITY;
  for (auto& c : candidates) {
    Sentence s = source;
    s.insert(s.begin() + slot, c);
    double ppl = lm.perplexity(s);
    if (ppl < best_ppl) {
      best_ppl = ppl;
      best = c;
    }
  }
  return best;
}

AnnotationSummary annotate_corpus(std::vector<Document>& docs, const Aligner& aligner,
                                  const NGramLM& lm, const PronounVocab& pronouns) {
  AnnotationSummary sum;
  for (auto& d : docs) {
    d.labels.assign(d.source.size(), {});
    for (std::size_t i = 0; i < d.source.size(); ++i) {
      auto& src = d.source[i];
      Sentence labels(src.size() + 1, kNoZp);
      ++sum.sentences;
      for (auto& w : src) sum.overt += pronouns.label_id(w) > 0;
      try {
        auto links = aligner(d, i);
        int found = 0;
        for (auto& u : detect_unaligned_pronouns(d.target[i], links, pronouns)) {
          int slot = project_zp_position(u.target_index, links, int(src.size()));
          auto word = recover_zp_word(src, slot, u.pronoun, lm, pronouns);
          if (labels[slot] != kNoZp) {
            ++sum.conflicts;
            continue;
          }
          labels[slot] = word;
          ++found;
        }
        sum.zps += found;
        sum.touched += found > 0;
      } catch (const AnnotationError&) {
        ++sum.skipped;
        labels.assign(src.size() + 1, kNoZp);
      }
      d.labels[i] = std::move(labels);
    }
  }
  return sum;
}

AnnotationSummary annotate_corpus(std::vector<Document>& docs, const NGramLM& lm,
                                  const PronounVocab& pronouns) {
  return annotate_corpus(
      docs,
      [](const Document& d, std::size_t i) {
        if (d.alignments.size() != d.source.size())
          throw ContractError("annotate_corpus: document " + d.id + " has no gold alignments");
        return d.alignments[i];
      },
      lm, pronouns);
}

AnnotationSummary annotate_corpus(std::vector<Document>& docs, const IBM1Table& table,
                                  const NGramLM& lm, const PronounVocab& pronouns) {
  return annotate_corpus(
      docs, [&table](const Document& d, std::size_t i) { return align(d.source[i], d.target[i], table); },
      lm, pronouns);
}

}  // namespace zpj
