#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "zpj/annotator.hpp"
#include "zpj/error.hpp"

using namespace zpj;

namespace {

std::vector<Sentence> lm_corpus() {
  return {{"x", "ta", "y"}, {"x", "ta", "y"}, {"x", "sha", "z"}, {"sha", "y"}};
}

std::vector<std::pair<Sentence, Sentence>> repeat(const std::vector<std::pair<Sentence, Sentence>>& v,
                                                  int n) {
  std::vector<std::pair<Sentence, Sentence>> out;
  for (int i = 0; i < n; ++i) out.insert(out.end(), v.begin(), v.end());
  return out;
}

}  // namespace

TEST(NGramLM, ContinuationsSumToOne) {
  auto lm = NGramLM::train(lm_corpus());
  for (Sentence hist : {Sentence{}, Sentence{"x"}, Sentence{"x", "ta"}, Sentence{"q", "r"}}) {
    double s = 0.0;
    for (auto& w : lm.vocabulary()) s += lm.prob(hist, w);
    EXPECT_NEAR(s, 1.0, 1e-9);
  }
}

TEST(NGramLM, PerplexityMatchesCountOracle) {
  auto lm = NGramLM::train(lm_corpus());
  EXPECT_NEAR(lm.perplexity({"x", "ta", "y"}), 1.3158179305987865, 1e-12);
  EXPECT_NEAR(lm.perplexity({"x", "sha", "y"}), 2.3577471797791403, 1e-12);
}

TEST(NGramLM, SaveLoadPreservesScores) {
  auto lm = NGramLM::train(lm_corpus());
  auto p = std::filesystem::temp_directory_path() / "zpj_test.lm";
  lm.save(p);
  auto again = NGramLM::load(p);
  EXPECT_DOUBLE_EQ(again.perplexity({"x", "ta", "y"}), lm.perplexity({"x", "ta", "y"}));
  EXPECT_DOUBLE_EQ(again.perplexity({"unseen"}), lm.perplexity({"unseen"}));
}

TEST(NGramLM, RejectsBadWeights) {
  EXPECT_THROW(NGramLM::train(lm_corpus(), 3, {0.5, 0.5, 0.5}), ContractError);
  EXPECT_THROW(NGramLM::train(lm_corpus(), 2, {0.1, 0.3, 0.6}), ContractError);
}

TEST(IBM1, SingleWordPairConverges) {
  auto t = IBM1Table::train(repeat({{{"a"}, {"A"}}}, 3), 5);
  EXPECT_NEAR(t.prob("A", "a"), 1.0, 1e-6);
}

TEST(IBM1, CrossingCorpusFindsCorrectLinks) {
  auto corpus = repeat({{{"a", "b"}, {"B", "A"}}}, 5);
  auto extra = repeat({{{"a"}, {"A"}}}, 5);
  corpus.insert(corpus.end(), extra.begin(), extra.end());
  std::vector<double> ll;
  auto t = IBM1Table::train(corpus, 10, &ll);
  EXPECT_NEAR(t.prob("A", "a"), 0.9490356112177927, 1e-9);
  EXPECT_NEAR(t.prob("B", "b"), 0.9909382114293966, 1e-9);
  ASSERT_EQ(ll.size(), 10u);
  EXPECT_NEAR(ll[0], -10.39720770839918, 1e-9);
  EXPECT_NEAR(ll[9], -7.599528385451349, 1e-9);
  for (std::size_t i = 1; i < ll.size(); ++i) EXPECT_GE(ll[i], ll[i - 1]);
  EXPECT_EQ(align({"a", "b"}, {"B", "A"}, t), (Alignment{{0, 1}, {1, 0}}));
  for (auto w : {"", "a", "b"}) EXPECT_NEAR(t.total(w), 1.0, 1e-9);
}

TEST(IBM1, IdentityAndDegenerateAlignments) {
  auto t = IBM1Table::train(repeat({{{"p", "q"}, {"p", "q"}}, {{"q", "r"}, {"q", "r"}},
                                    {{"r", "p"}, {"r", "p"}}},
                                   4),
                            10);
  EXPECT_EQ(align({"p", "q", "r"}, {"p", "q", "r"}, t), (Alignment{{0, 0}, {1, 1}, {2, 2}}));
  EXPECT_TRUE(align({}, {"p"}, t).empty());
  EXPECT_THROW(IBM1Table::train({}, 3), ContractError);
  EXPECT_THROW(IBM1Table::train(repeat({{{"a"}, {"A"}}}, 1), 0), ContractError);
}

TEST(Detect, BakeExample) {
  auto pv = PronounVocab::parse("它\tit\n你\tyou\n");
  Sentence tgt{"did", "you", "bake", "it", "?"};
  Alignment a{{0, 1}, {1, 2}, {2, 0}, {3, 4}};
  EXPECT_EQ(detect_unaligned_pronouns(tgt, a, pv), (std::vector<UnalignedPronoun>{{3, "it"}}));
  a.emplace(3, 3);
  EXPECT_TRUE(detect_unaligned_pronouns(tgt, a, pv).empty());
  Alignment partial{{1, 2}, {2, 0}, {3, 4}};
  EXPECT_EQ(detect_unaligned_pronouns(tgt, partial, pv),
            (std::vector<UnalignedPronoun>{{1, "you"}, {3, "it"}}));
}

TEST(Project, Slots) {
  Alignment a{{0, 1}, {1, 2}, {2, 0}, {3, 4}};
  EXPECT_EQ(project_zp_position(3, a, 4), 3);
  EXPECT_EQ(project_zp_position(0, a, 4), 0);
  EXPECT_EQ(project_zp_position(2, Alignment{{0, 0}, {1, 1}}, 2), 2);
}

TEST(Recover, LowestPerplexityWins) {
  auto pv = PronounVocab::parse("ta\tHE\nsha\tHE\nwo\tI\n");
  auto lm = NGramLM::train(lm_corpus());
  EXPECT_EQ(recover_zp_word({"x", "y"}, 1, "HE", lm, pv), "ta");
  EXPECT_EQ(recover_zp_word({"x", "y"}, 1, "I", lm, pv), "wo");
  EXPECT_THROW(recover_zp_word({"x"}, 3, "HE", lm, pv), AnnotationError);
}

TEST(Recover, TiesGoToVocabularyOrder) {
  auto pv = PronounVocab::parse("u1\tX\nu2\tX\n");
  auto lm = NGramLM::train({{"a", "b"}});
  EXPECT_EQ(recover_zp_word({"a"}, 1, "X", lm, pv), "u1");
  auto swapped = PronounVocab::parse("u2\tX\nu1\tX\n");
  EXPECT_EQ(recover_zp_word({"a"}, 1, "X", lm, swapped), "u2");
}

TEST(Annotate, BakeDocument) {
  auto pv = PronounVocab::parse("它\tit\n你\tyou\n");
  auto lm = NGramLM::train({{"你", "烤", "的", "它", "吗"}, {"他", "吃", "它", "吗"}});
  Document d;
  d.id = "d0";
  d.source = {{"你", "烤", "的", "吗"}};
  d.target = {{"did", "you", "bake", "it", "?"}};
  d.alignments = {{{0, 1}, {1, 2}, {2, 0}, {3, 4}}};
  std::vector<Document> docs{d};
  auto sum = annotate_corpus(docs, lm, pv);
  EXPECT_EQ(docs[0].labels[0], (Sentence{"N", "N", "N", "它", "N"}));
  EXPECT_EQ(docs[0].source, d.source);
  EXPECT_EQ(docs[0].target, d.target);
  EXPECT_EQ(sum.zps, 1);
  EXPECT_EQ(sum.overt, 1);
  EXPECT_EQ(sum.touched, 1);
  EXPECT_DOUBLE_EQ(sum.zp_rate(), 0.5);
}

TEST(Annotate, FullyAlignedCorpusIsAllN) {
  auto pv = PronounVocab::parse("ta\tHE\n");
  auto lm = NGramLM::train({{"ta", "v"}});
  Document d;
  d.id = "d";
  d.source = {{"ta", "v"}, {"n", "v"}};
  d.target = {{"HE", "V"}, {"N1", "V"}};
  d.alignments = {{{0, 0}, {1, 1}}, {{0, 0}, {1, 1}}};
  std::vector<Document> docs{d};
  auto sum = annotate_corpus(docs, lm, pv);
  for (auto& l : docs[0].labels)
    for (auto& t : l) EXPECT_EQ(t, "N");
  EXPECT_EQ(sum.zps, 0);
  docs[0].alignments.clear();
  EXPECT_THROW(annotate_corpus(docs, lm, pv), ContractError);
}
