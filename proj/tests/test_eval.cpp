#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "zpj/error.hpp"
#include "zpj/eval.hpp"

using namespace zpj;

namespace {

Sentence toks(const std::string& s) {
  Sentence out;
  std::istringstream is(s);
  std::string t;
  while (is >> t) out.push_back(t);
  return out;
}

}  // namespace

TEST(Bleu, IdentityIsHundred) {
  std::vector<Sentence> h{toks("the cat sat on the mat"), toks("a b c d e")};
  EXPECT_EQ(bleu(h, h), 100.0);
}

TEST(Bleu, CaseInsensitive) {
  EXPECT_EQ(bleu({toks("The CAT sat on it")}, {toks("the cat SAT on it")}), 100.0);
  EXPECT_EQ(case_fold("ÀÉÎ Straße ΣΩ ДЖ"), "àéî straße σω дж");
}

TEST(Bleu, RepeatedWordIsClipped) {
  auto s = bleu_stats(toks("the the the the the"), toks("the cat sat"));
  EXPECT_EQ(s.matches[0], 1);
  EXPECT_EQ(s.totals[0], 5);
  EXPECT_EQ(s.matches[1], 0);
  EXPECT_EQ(bleu({toks("the the the the the")}, {toks("the cat sat")}), 0.0);
}

// Matches 10/12, 6/10, 4/8, 2/6 (p = 5/6, 3/5, 2/4, 1/3) with c = r = 12.
// 100 * (5/6 * 3/5 * 1/2 * 1/3)^(1/4) = 53.7285 (Python oracle).
TEST(Bleu, TwoLineHandFixture) {
  std::vector<Sentence> hyp{toks("a b c d e f"), toks("p q r s t u")};
  std::vector<Sentence> ref{toks("a b c d e g"), toks("p q r x u t")};
  BleuStats total;
  for (int i = 0; i < 2; ++i) total += bleu_stats(hyp[i], ref[i]);
  EXPECT_EQ(total.matches, (std::array<long, 4>{10, 6, 4, 2}));
  EXPECT_EQ(total.totals, (std::array<long, 4>{12, 10, 8, 6}));
  EXPECT_NEAR(bleu(hyp, ref), 53.7285, 0.05);
}

TEST(Bleu, BrevityPenalty) {
  // c = 4, r = 5: BP = exp(1 - 5/4)
  auto s = bleu({toks("a b c d")}, {toks("a b c d e")});
  EXPECT_NEAR(s, 100.0 * std::exp(1.0 - 5.0 / 4.0), 1e-9);
}

TEST(Bleu, CountMismatchIsContractError) {
  EXPECT_THROW(bleu({toks("a")}, {}), ContractError);
}

TEST(Bleu, PermutationInvariant) {
  std::mt19937_64 rng(5);
  std::vector<Sentence> hyp, ref;
  const char* words[] = {"a", "b", "c", "d", "e"};
  for (int i = 0; i < 30; ++i) {
    Sentence h, r;
    for (int k = 0; k < 6; ++k) {
      h.push_back(words[rng() % 5]);
      r.push_back(words[rng() % 5]);
    }
    hyp.push_back(h);
    ref.push_back(r);
  }
  double base = bleu(hyp, ref);
  for (int t = 0; t < 5; ++t) {
    std::vector<std::size_t> perm(hyp.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<Sentence> h2, r2;
    for (auto i : perm) {
      h2.push_back(hyp[i]);
      r2.push_back(ref[i]);
    }
    EXPECT_DOUBLE_EQ(bleu(h2, r2), base);
  }
}

TEST(SentenceBleu, SmoothedAndBounded) {
  EXPECT_NEAR(sentence_bleu(toks("a b c"), toks("a b c")), 100.0, 1e-9);
  double s = sentence_bleu(toks("a b x"), toks("a b c"));
  EXPECT_GT(s, 0.0);
  EXPECT_LT(s, 100.0);
}

TEST(ZpPrf, IdenticalFilesArePerfect) {
  std::vector<Sentence> g{toks("N N ta N"), toks("wo N N")};
  auto s = zp_prf(g, g);
  EXPECT_EQ(s.position.f1, 1.0);
  EXPECT_EQ(s.word.f1, 1.0);
  EXPECT_EQ(s.word.precision, 1.0);
  EXPECT_EQ(s.word.recall, 1.0);
}

TEST(ZpPrf, PositionVersusWord) {
  auto s = zp_prf({toks("N N N 你 N N")}, {toks("N N N 它 N N")});
  EXPECT_EQ(s.position.f1, 1.0);
  EXPECT_EQ(s.word.f1, 0.0);
}

TEST(ZpPrf, ArithmeticFromCounts) {
  // gold 4 ZPs; predicted 5, 3 of them word-correct
  std::vector<Sentence> gold{toks("ta N wo N"), toks("N ta N wo")};
  std::vector<Sentence> pred{toks("ta N wo ta"), toks("wo ta N N")};
  auto s = zp_prf(pred, gold);
  EXPECT_EQ(s.word.predicted, 5);
  EXPECT_EQ(s.word.gold, 4);
  EXPECT_EQ(s.word.matched, 3);
  EXPECT_DOUBLE_EQ(s.word.precision, 0.6);
  EXPECT_DOUBLE_EQ(s.word.recall, 0.75);
  EXPECT_NEAR(s.word.f1, 2.0 / 3.0, 1e-12);
  EXPECT_LE(s.word.f1, s.position.f1);
}

TEST(ZpPrf, LengthMismatchNamesLine) {
  try {
    zp_prf({toks("N"), toks("N N")}, {toks("N"), toks("N")});
    FAIL();
  } catch (const ContractError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(ZpPrf, NothingPredictedGivesZeroF1) {
  auto s = zp_prf({toks("N N")}, {toks("N wo")});
  EXPECT_EQ(s.word.f1, 0.0);
  EXPECT_EQ(s.position.precision, 0.0);
}

TEST(SignTest, Examples) {
  std::vector<double> a(10, 1.0), b(10, 1.0);
  EXPECT_EQ(sign_test(a, b), 1.0);
  std::vector<double> z(10, 0.0);
  EXPECT_NEAR(sign_test(a, z), 0.001953125, 1e-12);
  std::vector<double> mixed{1, 1, 1, 1, 1, 1, 0, 0, 0, 0};
  std::vector<double> half(10, 0.5);
  EXPECT_NEAR(sign_test(mixed, half), 0.75390625, 1e-12);
  EXPECT_NEAR(sign_test(mixed, half), 0.754, 1e-3);
}

TEST(SignTest, SymmetricAndLargeN) {
  std::mt19937_64 rng(8);
  for (int n : {15, 200, 3000}) {
    std::vector<double> a(n), b(n);
    for (int i = 0; i < n; ++i) {
      a[i] = rng() % 3;
      b[i] = rng() % 3;
    }
    double p = sign_test(a, b);
    EXPECT_DOUBLE_EQ(p, sign_test(b, a));
    EXPECT_GE(p, 0.0);
    EXPECT_LE(p, 1.0);
  }
}
