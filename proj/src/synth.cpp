#include "zpj/synth.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "zpj/error.hpp"

namespace zpj {

namespace fs = std::filesystem;

namespace {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  double uniform() { return double(gen_() >> 11) * 0x1.0p-53; }
  bool bernoulli(double p) { return uniform() < p; }
  int below(int n) { return int(gen_() % std::uint64_t(n)); }

 private:
  std::mt19937_64 gen_;
};

std::string upper(std::string s) {
  for (auto& c : s) c = char(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

struct Mention {
  std::string noun;
  int sentence;
};

struct Builder {
  Sentence full;
  Sentence target;
  std::vector<PronounRecord> pronouns;

  void word(const std::string& src, const std::string& tgt) {
    full.push_back(src);
    target.push_back(tgt);
  }
  void pronoun(const std::string& src, const std::string& tgt, bool subject, int offset,
               bool dropped) {
    pronouns.push_back({int(full.size()), src, subject, offset, dropped});
    word(src, tgt);
  }
};

}  // namespace

GenConfig GenConfig::from(const KeyValues& kv) {
  GenConfig c;
  c.seed = std::stoull(kv.get("seed", std::to_string(c.seed)));
  c.train_documents = kv.get_int("train_documents", c.train_documents);
  c.valid_documents = kv.get_int("valid_documents", c.valid_documents);
  c.test_documents = kv.get_int("test_documents", c.test_documents);
  c.sentences_per_document = kv.get_int("sentences_per_document", c.sentences_per_document);
  c.nouns = kv.get_int("nouns", c.nouns);
  c.verbs = kv.get_int("verbs", c.verbs);
  c.adjectives = kv.get_int("adjectives", c.adjectives);
  c.subject_drop_rate = kv.get_double("subject_drop_rate", c.subject_drop_rate);
  c.object_drop_rate = kv.get_double("object_drop_rate", c.object_drop_rate);
  c.discourse_fraction = kv.get_double("discourse_fraction", c.discourse_fraction);
  c.subject_pronoun_rate = kv.get_double("subject_pronoun_rate", c.subject_pronoun_rate);
  c.object_pronoun_rate = kv.get_double("object_pronoun_rate", c.object_pronoun_rate);
  c.adjective_rate = kv.get_double("adjective_rate", c.adjective_rate);
  c.validate();
  return c;
}

KeyValues GenConfig::to_kv() const {
  KeyValues kv;
  kv.set("seed", std::to_string(seed));
  kv.set("train_documents", std::to_string(train_documents));
  kv.set("valid_documents", std::to_string(valid_documents));
  kv.set("test_documents", std::to_string(test_documents));
  kv.set("sentences_per_document", std::to_string(sentences_per_document));
  kv.set("nouns", std::to_string(nouns));
  kv.set("verbs", std::to_string(verbs));
  kv.set("adjectives", std::to_string(adjectives));
  kv.set("subject_drop_rate", format_double(subject_drop_rate));
  kv.set("object_drop_rate", format_double(object_drop_rate));
  kv.set("discourse_fraction", format_double(discourse_fraction));
  kv.set("subject_pronoun_rate", format_double(subject_pronoun_rate));
  kv.set("object_pronoun_rate", format_double(object_pronoun_rate));
  kv.set("adjective_rate", format_double(adjective_rate));
  return kv;
}

void GenConfig::validate() const {
  auto rate = [](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) throw ContractError(std::string(name) + " must lie in [0,1]");
  };
  rate(subject_drop_rate, "subject_drop_rate");
  rate(object_drop_rate, "object_drop_rate");
  rate(discourse_fraction, "discourse_fraction");
  rate(subject_pronoun_rate, "subject_pronoun_rate");
  rate(object_pronoun_rate, "object_pronoun_rate");
  rate(adjective_rate, "adjective_rate");
  if (nouns < 2 || verbs < 2) throw ContractError("noun and verb inventories need >= 2 entries");
  if (adjectives < 0) throw ContractError("adjectives must be >= 0");
  if (sentences_per_document < 1) throw ContractError("sentences_per_document must be >= 1");
  if (train_documents < 0 || valid_documents < 0 || test_documents < 0)
    throw ContractError("document counts must be >= 0");
}

PronounVocab synth_pronouns() {
  return PronounVocab::parse("wo\tI\nni\tYOU\nta\tHIM\nsha\tHER\n");
}

bool is_feminine_noun(const std::string& token) {
  if (token.size() < 2 || token[0] != 'n' || !std::isdigit(static_cast<unsigned char>(token[1])))
    return false;
  return std::stoi(token.substr(1)) % 3 == 2;
}

Synthetic generate(const GenConfig& config, int documents, std::uint64_t stream) {
  config.validate();
  Rng rng(config.seed * 0x9E3779B97F4A7C15ULL + stream);
  Synthetic out;
  auto noun_phrase = [&](Builder& b, std::vector<Mention>& mentions, int sentence) {
    if (config.adjectives > 0 && rng.bernoulli(config.adjective_rate)) {
      auto a = "j" + std::to_string(rng.below(config.adjectives));
      b.word(a, upper(a));
    }
    auto n = "n" + std::to_string(rng.below(config.nouns));
    b.word(n, upper(n));
    mentions.push_back({n, sentence});
  };

  for (int d = 0; d < documents; ++d) {
    Document doc;
    doc.id = "doc" + std::to_string(d);
    std::vector<GoldRecord> gold;
    std::vector<Mention> mentions;
    for (int s = 0; s < config.sentences_per_document; ++s) {
      Builder b;
      bool object_pronoun = s > 0 && !mentions.empty() && rng.bernoulli(config.object_pronoun_rate);
      bool discourse = object_pronoun && rng.bernoulli(config.discourse_fraction);
      bool subject_pronoun =
          discourse || (!object_pronoun && rng.bernoulli(config.subject_pronoun_rate));
      // Antecedent of a discourse object: the most recent noun before this sentence.
      Mention earlier = mentions.empty() ? Mention{} : mentions.back();

      int person = 3;
      if (subject_pronoun) {
        person = 1 + rng.below(2);
        b.pronoun(person == 1 ? "wo" : "ni", person == 1 ? "I" : "YOU", true, -1,
                  rng.bernoulli(config.subject_drop_rate));
      } else {
        noun_phrase(b, mentions, s);
      }
      auto v = "v" + std::to_string(rng.below(config.verbs));
      b.word(v + "_" + std::to_string(person), upper(v));
      if (object_pronoun) {
        const Mention& ante = discourse ? earlier : mentions.back();
        bool fem = is_feminine_noun(ante.noun);
        b.pronoun(fem ? "sha" : "ta", fem ? "HER" : "HIM", false, s - ante.sentence,
                  rng.bernoulli(config.object_drop_rate));
      } else {
        noun_phrase(b, mentions, s);
      }

      Sentence x;
      Sentence labels;
      Alignment links;
      std::string pending = kNoZp;
      std::size_t next = 0;
      for (std::size_t i = 0; i < b.full.size(); ++i) {
        bool dropped = next < b.pronouns.size() && b.pronouns[next].index == int(i) &&
                       b.pronouns[next].dropped;
        if (next < b.pronouns.size() && b.pronouns[next].index == int(i)) ++next;
        if (dropped) {
          pending = b.full[i];
          continue;
        }
        links.emplace(int(x.size()), int(i));
        x.push_back(b.full[i]);
        labels.push_back(pending);
        pending = kNoZp;
      }
      labels.push_back(pending);

      doc.source.push_back(std::move(x));
      doc.target.push_back(b.target);
      doc.labels.push_back(std::move(labels));
      doc.alignments.push_back(std::move(links));
      gold.push_back({b.full, b.pronouns});
    }
    out.docs.push_back(std::move(doc));
    out.gold.push_back(std::move(gold));
  }
  return out;
}

double CorpusStats::zp_rate() const { return pronouns ? double(zps) / double(pronouns) : 0.0; }

double CorpusStats::discourse_fraction() const {
  return object_pronouns ? double(discourse_object_pronouns) / double(object_pronouns) : 0.0;
}

double CorpusStats::discourse_zp_fraction() const {
  return object_zps ? double(discourse_object_zps) / double(object_zps) : 0.0;
}

std::string CorpusStats::to_text() const {
  std::ostringstream os;
  os << "documents=" << documents << "\nsentences=" << sentences << "\npronouns=" << pronouns
     << "\nzps=" << zps << "\nzp_rate=" << format_double(zp_rate())
     << "\nobject_pronouns=" << object_pronouns
     << "\ndiscourse_object_pronouns=" << discourse_object_pronouns
     << "\ndiscourse_fraction=" << format_double(discourse_fraction())
     << "\nobject_zps=" << object_zps << "\ndiscourse_object_zps=" << discourse_object_zps
     << "\ndiscourse_zp_fraction=" << format_double(discourse_zp_fraction())
     << "\nsource_vocab=" << source_vocab << "\ntarget_vocab=" << target_vocab << "\n";
  return os.str();
}

namespace {

CorpusStats stats_of(const std::vector<std::vector<Sentence>>& src,
                     const std::vector<std::vector<Sentence>>& tgt,
                     const std::vector<std::vector<GoldRecord>>& gold) {
  CorpusStats st;
  std::set<std::string> sv, tv;
  st.documents = long(src.size());
  for (auto& d : src)
    for (auto& s : d) {
      ++st.sentences;
      sv.insert(s.begin(), s.end());
    }
  for (auto& d : tgt)
    for (auto& s : d) tv.insert(s.begin(), s.end());
  for (auto& d : gold)
    for (auto& g : d)
      for (auto& p : g.pronouns) {
        ++st.pronouns;
        st.zps += p.dropped;
        if (p.subject) continue;
        ++st.object_pronouns;
        st.discourse_object_pronouns += p.offset > 0;
        st.object_zps += p.dropped;
        st.discourse_object_zps += p.dropped && p.offset > 0;
      }
  st.source_vocab = long(sv.size());
  st.target_vocab = long(tv.size());
  return st;
}

}  // namespace

CorpusStats corpus_stats(const Synthetic& corpus) {
  std::vector<std::vector<Sentence>> src, tgt;
  for (auto& d : corpus.docs) {
    src.push_back(d.source);
    tgt.push_back(d.target);
  }
  return stats_of(src, tgt, corpus.gold);
}

CorpusStats corpus_stats(const fs::path& split_dir) {
  auto gold_path = split_dir / "gold.txt";
  if (!fs::exists(gold_path))
    throw ContractError("corpus_stats: missing gold sidecar " + gold_path.string());
  auto src = read_tokenized(split_dir / "src.txt");
  auto tgt = read_tokenized(split_dir / "tgt.txt");
  auto gold = read_gold(gold_path);
  if (gold.size() != src.size()) throw FormatError("gold sidecar does not match src.txt");
  return stats_of(src, tgt, gold);
}

// One line per sentence: full source, TAB, then index:word:S|O:offset:dropped.
void write_gold(const fs::path& path, const std::vector<std::vector<GoldRecord>>& gold) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  for (std::size_t d = 0; d < gold.size(); ++d) {
    if (d) os << '\n';
    for (auto& g : gold[d]) {
      for (std::size_t i = 0; i < g.full.size(); ++i) os << (i ? " " : "") << g.full[i];
      os << '\t';
      for (std::size_t i = 0; i < g.pronouns.size(); ++i) {
        auto& p = g.pronouns[i];
        os << (i ? " " : "") << p.index << ':' << p.word << ':' << (p.subject ? 'S' : 'O') << ':'
           << p.offset << ':' << int(p.dropped);
      }
      os << '\n';
    }
  }
}

std::vector<std::vector<GoldRecord>> read_gold(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::vector<GoldRecord>> out(1);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) {
      if (!out.back().empty()) out.emplace_back();
      continue;
    }
    auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": missing tab");
    GoldRecord g;
    std::istringstream full(line.substr(0, tab));
    for (std::string w; full >> w;) g.full.push_back(w);
    std::istringstream recs(line.substr(tab + 1));
    for (std::string r; recs >> r;) {
      std::vector<std::string> f;
      std::istringstream rs(r);
      for (std::string x; std::getline(rs, x, ':');) f.push_back(x);
      if (f.size() != 5 || (f[2] != "S" && f[2] != "O"))
        throw FormatError(path.string() + ":" + std::to_string(lineno) + ": bad record " + r);
      g.pronouns.push_back({std::stoi(f[0]), f[1], f[2] == "S", std::stoi(f[3]), f[4] == "1"});
    }
    out.back().push_back(std::move(g));
  }
  if (out.back().empty()) out.pop_back();
  return out;
}

void write_split(const fs::path& dir, const Synthetic& corpus) {
  fs::create_directories(dir);
  std::vector<std::vector<Sentence>> src, tgt, labels, full;
  std::vector<std::vector<Alignment>> align;
  for (std::size_t d = 0; d < corpus.docs.size(); ++d) {
    auto& doc = corpus.docs[d];
    src.push_back(doc.source);
    tgt.push_back(doc.target);
    labels.push_back(doc.labels);
    align.push_back(doc.alignments);
    full.emplace_back();
    for (auto& g : corpus.gold[d]) full.back().push_back(g.full);
  }
  write_tokenized(dir / "src.txt", src);
  write_tokenized(dir / "tgt.txt", tgt);
  write_tokenized(dir / "labels.txt", labels);
  write_tokenized(dir / "full.txt", full);
  write_alignments(dir / "align.txt", align);
  write_gold(dir / "gold.txt", corpus.gold);
  std::ofstream(dir / "stats.txt") << corpus_stats(corpus).to_text();
}

void write_corpus(const fs::path& out_dir, const GenConfig& config) {
  config.validate();
  fs::create_directories(out_dir);
  write_split(out_dir / "train", generate(config, config.train_documents, 0));
  write_split(out_dir / "valid", generate(config, config.valid_documents, 1));
  write_split(out_dir / "test", generate(config, config.test_documents, 2));
  std::ofstream(out_dir / "pronouns.txt") << synth_pronouns().serialize();
  std::ofstream(out_dir / "config.txt") << config.to_kv().str();
}

}  // namespace zpj
