#include <gtest/gtest.h>

#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "zpj/annotator.hpp"
#include "zpj/error.hpp"
#include "zpj/synth.hpp"

using namespace zpj;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// Re-inserts labelled pronouns into the dropped sentence.
Sentence restore(const Sentence& x, const Sentence& labels) {
  Sentence out;
  for (std::size_t i = 0; i <= x.size(); ++i) {
    if (labels[i] != kNoZp) out.push_back(labels[i]);
    if (i < x.size()) out.push_back(x[i]);
  }
  return out;
}

}  // namespace

TEST(Generate, NoDropsLeavesSourceIntact) {
  GenConfig c;
  c.subject_drop_rate = c.object_drop_rate = 0.0;
  auto s = generate(c, 50);
  for (std::size_t d = 0; d < s.docs.size(); ++d)
    for (std::size_t i = 0; i < s.docs[d].source.size(); ++i) {
      EXPECT_EQ(s.docs[d].source[i], s.gold[d][i].full);
      for (auto& l : s.docs[d].labels[i]) EXPECT_EQ(l, kNoZp);
    }
}

TEST(Generate, FullDropRemovesEveryPronoun) {
  GenConfig c;
  c.subject_drop_rate = c.object_drop_rate = 1.0;
  auto s = generate(c, 50);
  auto pv = synth_pronouns();
  long zps = 0;
  for (auto& d : s.docs)
    for (std::size_t i = 0; i < d.source.size(); ++i) {
      for (auto& w : d.source[i]) EXPECT_EQ(pv.label_id(w), -1) << w;
      for (auto& l : d.labels[i]) zps += l != kNoZp;
    }
  EXPECT_EQ(zps, corpus_stats(s).pronouns);
  EXPECT_GT(zps, 0);
}

TEST(Generate, GoldRecordsAreConsistent) {
  auto s = generate(GenConfig{}, 200);
  auto pv = synth_pronouns();
  for (std::size_t d = 0; d < s.docs.size(); ++d) {
    auto& doc = s.docs[d];
    for (std::size_t i = 0; i < doc.source.size(); ++i) {
      auto& full = s.gold[d][i].full;
      EXPECT_EQ(restore(doc.source[i], doc.labels[i]), full);
      check_labels(doc.source[i], doc.labels[i], pv, "gen");
      ASSERT_EQ(doc.target[i].size(), full.size());
      for (auto [a, b] : doc.alignments[i]) {
        ASSERT_LT(a, int(doc.source[i].size()));
        EXPECT_EQ(doc.source[i][a], full[b]);
      }
      EXPECT_EQ(doc.alignments[i].size(), doc.source[i].size());
      for (auto& p : s.gold[d][i].pronouns) {
        EXPECT_EQ(full[p.index], p.word);
        if (!p.subject) EXPECT_LT(p.offset, int(i) + 1);
      }
    }
  }
}

TEST(Generate, ObjectPronounFollowsMostRecentNoun) {
  auto s = generate(GenConfig{}, 300);
  for (std::size_t d = 0; d < s.docs.size(); ++d) {
    Sentence nouns;
    for (auto& g : s.gold[d]) {
      std::string last_before = nouns.empty() ? "" : nouns.back();
      for (auto& w : g.full)
        if (w[0] == 'n' && std::isdigit(static_cast<unsigned char>(w[1]))) nouns.push_back(w);
      for (auto& p : g.pronouns) {
        if (p.subject) continue;
        auto& ante = p.offset == 0 ? nouns.back() : last_before;
        EXPECT_EQ(p.word, is_feminine_noun(ante) ? "sha" : "ta");
      }
    }
  }
}

TEST(Generate, DefaultRatesMatchConfig) {
  GenConfig c;
  auto st = corpus_stats(generate(c, 2500));  // 10K sentences
  EXPECT_EQ(st.sentences, 10000);
  EXPECT_NEAR(st.zp_rate(), 0.27, 0.03);
  EXPECT_NEAR(st.discourse_fraction(), c.discourse_fraction, 0.03);
  EXPECT_GE(st.discourse_zp_fraction(), 0.4);
}

TEST(Generate, ConfigRoundTripAndValidation) {
  GenConfig c;
  c.seed = 99;
  c.object_drop_rate = 0.5;
  auto again = GenConfig::from(c.to_kv());
  EXPECT_EQ(again.seed, 99u);
  EXPECT_EQ(again.object_drop_rate, 0.5);
  c.subject_drop_rate = 1.5;
  EXPECT_THROW(c.validate(), ContractError);
  GenConfig d;
  d.nouns = 1;
  EXPECT_THROW(d.validate(), ContractError);
}

TEST(Files, SameSeedGivesIdenticalBytes) {
  GenConfig c;
  c.train_documents = 30;
  c.valid_documents = c.test_documents = 5;
  auto a = fs::temp_directory_path() / "zpj_gen_a";
  auto b = fs::temp_directory_path() / "zpj_gen_b";
  fs::remove_all(a);
  fs::remove_all(b);
  write_corpus(a, c);
  write_corpus(b, c);
  for (auto split : {"train", "valid", "test"})
    for (auto f : {"src.txt", "tgt.txt", "labels.txt", "align.txt", "full.txt", "gold.txt", "stats.txt"})
      EXPECT_EQ(slurp(a / split / f), slurp(b / split / f)) << split << "/" << f;
  EXPECT_NE(slurp(a / "train" / "src.txt"), slurp(a / "valid" / "src.txt"));
}

TEST(Files, StatsReproducibleFromFiles) {
  GenConfig c;
  auto s = generate(c, 40);
  auto dir = fs::temp_directory_path() / "zpj_gen_stats";
  fs::remove_all(dir);
  write_split(dir, s);
  EXPECT_EQ(corpus_stats(dir).to_text(), corpus_stats(s).to_text());
  EXPECT_EQ(read_gold(dir / "gold.txt"), s.gold);
  auto pv = synth_pronouns();
  auto docs = load_documents(dir / "src.txt", dir / "tgt.txt", dir / "labels.txt", &pv,
                             dir / "align.txt");
  ASSERT_EQ(docs.size(), s.docs.size());
  EXPECT_EQ(docs[3].labels, s.docs[3].labels);
  EXPECT_EQ(docs[3].alignments, s.docs[3].alignments);
  fs::remove(dir / "gold.txt");
  EXPECT_THROW(corpus_stats(dir), ContractError);
}

TEST(Stats, SmallCounts) {
  Synthetic s;
  s.docs.resize(1);
  s.gold.resize(1);
  for (int i = 0; i < 10; ++i) {
    s.docs[0].source.push_back({"v0_1"});
    s.docs[0].target.push_back({"I", "V0"});
    s.gold[0].push_back({{"wo", "v0_1"}, {{0, "wo", true, -1, i == 0}}});
  }
  auto st = corpus_stats(s);
  EXPECT_DOUBLE_EQ(st.zp_rate(), 0.1);
  EXPECT_DOUBLE_EQ(st.discourse_fraction(), 0.0);
}

// Gold alignments plus an LM trained on un-dropped text recover the gold labels.
TEST(Annotation, GoldAlignmentOracle) {
  GenConfig c;
  auto train = generate(c, 500, 0);
  auto test = generate(c, 200, 2);
  std::vector<Sentence> full;
  for (auto& d : train.gold)
    for (auto& g : d) full.push_back(g.full);
  auto lm = NGramLM::train(full);
  auto pv = synth_pronouns();
  auto docs = test.docs;
  auto sum = annotate_corpus(docs, lm, pv);
  long gold = 0, pos = 0, word = 0;
  for (std::size_t d = 0; d < docs.size(); ++d)
    for (std::size_t i = 0; i < docs[d].labels.size(); ++i)
      for (std::size_t k = 0; k < docs[d].labels[i].size(); ++k) {
        auto& g = test.docs[d].labels[i][k];
        auto& p = docs[d].labels[i][k];
        if (g == kNoZp) continue;
        ++gold;
        pos += p != kNoZp;
        word += p == g;
      }
  ASSERT_GT(gold, 0);
  EXPECT_GE(double(pos) / gold, 0.95);
  EXPECT_GE(double(word) / gold, 0.90);
  EXPECT_NEAR(sum.zp_rate(), 0.27, 0.03);
  EXPECT_EQ(sum.skipped, 0);
}

TEST(Annotation, IbmLikelihoodNonDecreasingOnSynthetic) {
  auto s = generate(GenConfig{}, 300);
  std::vector<std::pair<Sentence, Sentence>> pairs;
  for (auto& d : s.docs)
    for (std::size_t i = 0; i < d.source.size(); ++i) pairs.emplace_back(d.source[i], d.target[i]);
  std::vector<double> ll;
  IBM1Table::train(pairs, 10, &ll);
  for (std::size_t i = 1; i < ll.size(); ++i) EXPECT_GE(ll[i], ll[i - 1] - 1e-9);
}
