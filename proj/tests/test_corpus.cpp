#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "zpj/corpus.hpp"
#include "zpj/error.hpp"

using namespace zpj;
namespace fs = std::filesystem;

namespace {

fs::path write_file(const std::string& name, const std::string& text) {
  auto p = fs::temp_directory_path() / ("zpj_corpus_" + name);
  std::ofstream(p) << text;
  return p;
}

PronounVocab toy_pronouns() { return PronounVocab::parse("它\tit\n你\tyou\n"); }

Example example_of_len(int words) {
  Example e;
  e.x.assign(words, 5);
  e.x.push_back(kEosId);
  e.y = e.x;
  return e;
}

}  // namespace

TEST(Vocab, ReservedThenFrequency) {
  auto v = Vocab::build({{"a", "a", "b"}}, 6);
  EXPECT_EQ(v.size(), 6);
  EXPECT_EQ(v.token(0), "<pad>");
  EXPECT_EQ(v.token(3), "<eos>");
  EXPECT_EQ(v.id("a"), 4);
  EXPECT_EQ(v.id("b"), 5);
}

TEST(Vocab, TiesBrokenLexicographically) {
  auto v = Vocab::build({{"c", "b"}}, 10);
  EXPECT_LT(v.id("b"), v.id("c"));
}

TEST(Vocab, CapMapsRarestToUnknown) {
  // t0 occurs 10 times ... t9 once; seven regular slots keep t0..t6.
  std::vector<Sentence> corpus(1);
  for (int i = 0; i < 10; ++i)
    for (int k = 0; k < 10 - i; ++k) corpus[0].push_back("t" + std::to_string(i));
  auto v = Vocab::build(corpus, 7);
  EXPECT_EQ(v.size(), 11);
  EXPECT_EQ(v.id("t0"), 4);
  EXPECT_EQ(v.id("t6"), 10);
  int unknown = 0;
  for (int i = 0; i < 10; ++i) unknown += v.id("t" + std::to_string(i)) == kUnkId;
  EXPECT_EQ(unknown, 3);
  EXPECT_EQ(v.id("t7"), kUnkId);
  EXPECT_EQ(v.id("t9"), kUnkId);
}

TEST(Vocab, EncodeDecodeAndErrors) {
  auto v = Vocab::build({{"x", "y"}}, 10);
  auto ids = v.encode({"x", "zzz", "y"});
  EXPECT_EQ(ids.back(), kEosId);
  EXPECT_EQ(ids[1], kUnkId);
  EXPECT_EQ(v.decode(v.encode({"x", "y"})), (Sentence{"x", "y"}));
  EXPECT_THROW(Vocab::build({}, 10), ContractError);
  EXPECT_THROW(Vocab::build({{"a"}}, 4), ContractError);
  auto again = Vocab::parse(v.serialize());
  EXPECT_EQ(again.id("y"), v.id("y"));
}

TEST(LoadDocuments, BlankLinesSeparateDocuments) {
  auto src = write_file("src1", "a b\nc\n\nd e f\n");
  auto tgt = write_file("tgt1", "A B\nC\n\nD E F\n");
  auto docs = load_documents(src, tgt, std::nullopt);
  ASSERT_EQ(docs.size(), 2u);
  EXPECT_EQ(docs[0].source.size(), 2u);
  EXPECT_EQ(docs[1].target[0], (Sentence{"D", "E", "F"}));
}

TEST(LoadDocuments, AttachesLabels) {
  auto pv = toy_pronouns();
  auto src = write_file("src2", "你 烤 吗\n");
  auto tgt = write_file("tgt2", "did you bake it ?\n");
  auto lab = write_file("lab2", "N N 它 N\n");
  auto docs = load_documents(src, tgt, lab, &pv);
  ASSERT_EQ(docs[0].labels.size(), 1u);
  EXPECT_EQ(docs[0].labels[0], (Sentence{"N", "N", "它", "N"}));
  auto vs = Vocab::build(docs[0].source, 20), vt = Vocab::build(docs[0].target, 20);
  auto ex = make_examples(docs, vs, vt, &pv, 3);
  EXPECT_EQ(ex[0].zp, (std::vector<int>{0, 0, 1, 0}));
  EXPECT_EQ(ex[0].zp.size(), ex[0].x.size());
}

TEST(LoadDocuments, ShortLabelLineNamesBothLengths) {
  auto pv = toy_pronouns();
  auto src = write_file("src3", "你 烤 吗\n");
  auto tgt = write_file("tgt3", "did you bake it ?\n");
  auto lab = write_file("lab3", "N N\n");
  try {
    load_documents(src, tgt, lab, &pv);
    FAIL();
  } catch (const FormatError& e) {
    std::string m = e.what();
    EXPECT_NE(m.find("2 labels"), std::string::npos) << m;
    EXPECT_NE(m.find("4 tokens"), std::string::npos) << m;
  }
}

TEST(LoadDocuments, Errors) {
  auto pv = toy_pronouns();
  auto src = write_file("src4", "a b\nc\n");
  auto tgt = write_file("tgt4", "A B\n");
  EXPECT_THROW(load_documents(src, tgt, std::nullopt), FormatError);
  auto tgt2 = write_file("tgt4b", "A B\nC\n");
  auto lab = write_file("lab4", "N N X\nN N\n");
  EXPECT_THROW(load_documents(src, tgt2, lab, &pv), FormatError);
  auto tgt3 = write_file("tgt4c", "A B\n\n");
  auto src3 = write_file("src4c", "a b\nc\n");
  EXPECT_THROW(load_documents(src3, tgt3, std::nullopt), FormatError);
}

TEST(Examples, ContextHoldsPrecedingSentences) {
  Document d;
  d.id = "d";
  for (int i = 0; i < 5; ++i) {
    d.source.push_back({"s" + std::to_string(i)});
    d.target.push_back({"T"});
  }
  auto vs = Vocab::build(d.source, 20), vt = Vocab::build(d.target, 20);
  auto ex = make_examples({d}, vs, vt, nullptr, 3);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(ex[i].context.size(), std::size_t(std::min(3, i)));
  EXPECT_EQ(ex[4].context[0], vs.encode({"s1"}));
  EXPECT_EQ(ex[4].context[2], vs.encode({"s3"}));
}

TEST(Batches, SizesAndFiltering) {
  std::vector<Example> ex;
  for (int i = 0; i < 5; ++i) ex.push_back(example_of_len(3 + i));
  auto b = make_batches(ex, 2, 20, 1);
  std::multiset<std::size_t> sizes;
  for (auto& x : b) sizes.insert(x.items.size());
  EXPECT_EQ(sizes, (std::multiset<std::size_t>{1, 2, 2}));

  ex.push_back(example_of_len(21));
  ex.push_back(example_of_len(20));
  std::size_t total = 0;
  for (auto& x : make_batches(ex, 2, 20, 1)) {
    total += x.items.size();
    for (auto i : x.items) EXPECT_NE(i, 5u);
  }
  EXPECT_EQ(total, 6u);
  EXPECT_THROW(make_batches({example_of_len(30)}, 2, 20, 1), ContractError);
  EXPECT_THROW(make_batches(ex, 0, 20, 1), ContractError);
}

TEST(Batches, DeterministicForSeed) {
  std::vector<Example> ex;
  for (int i = 0; i < 40; ++i) ex.push_back(example_of_len(1 + i % 9));
  auto a = make_batches(ex, 4, 20, 77), b = make_batches(ex, 4, 20, 77);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].items, b[i].items);
}

// Property: random label and alignment files survive write then read.
TEST(Files, LabelAndAlignmentRoundTrip) {
  auto pv = toy_pronouns();
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::vector<Sentence>> labels;
    std::vector<std::vector<Alignment>> aligns;
    int ndoc = 1 + rng() % 3;
    for (int d = 0; d < ndoc; ++d) {
      labels.emplace_back();
      aligns.emplace_back();
      int nsent = 1 + rng() % 4;
      for (int s = 0; s < nsent; ++s) {
        int len = 1 + rng() % 6;
        Sentence l;
        Alignment a;
        for (int i = 0; i < len; ++i) {
          l.push_back(pv.label_token(rng() % pv.label_count()));
          if (rng() % 2) a.emplace(i, int(rng() % 7));
        }
        labels.back().push_back(l);
        aligns.back().push_back(a);
      }
    }
    auto lp = fs::temp_directory_path() / "zpj_rt.labels";
    auto ap = fs::temp_directory_path() / "zpj_rt.align";
    write_tokenized(lp, labels);
    write_alignments(ap, aligns);
    EXPECT_EQ(read_tokenized(lp), labels);
    EXPECT_EQ(read_alignments(ap), aligns);
  }
}

TEST(Files, EmptySentencesKeepTheirLine) {
  std::vector<std::vector<Sentence>> docs{{{"a", "b"}, {}}, {{}, {"c"}}};
  auto p = fs::temp_directory_path() / "zpj_rt.empty";
  write_tokenized(p, docs);
  EXPECT_EQ(read_tokenized(p), docs);
  fs::remove(p);
}

TEST(PronounVocab, ParseAndCandidates) {
  auto pv = PronounVocab::parse("ni\tYOU\nnim\tYOU\nta\tHIM\n");
  EXPECT_EQ(pv.label_count(), 4);
  EXPECT_EQ(pv.candidates_for("YOU"), (std::vector<std::string>{"ni", "nim"}));
  EXPECT_TRUE(pv.is_target_pronoun("HIM"));
  EXPECT_FALSE(pv.is_target_pronoun("ta"));
  EXPECT_EQ(pv.label_id("N"), 0);
  EXPECT_EQ(pv.label_id("ta"), 3);
  EXPECT_EQ(pv.label_id("zz"), -1);
  EXPECT_THROW(PronounVocab::parse("ni\tYOU\nni\tYOU\n"), FormatError);
  EXPECT_THROW(PronounVocab::parse(""), FormatError);
}

TEST(Padding, MaskMarksRealTokens) {
  std::vector<int> a{4, 5, 3}, b{6, 3};
  auto p = pad({&a, &b});
  EXPECT_EQ(p.cols, 3);
  EXPECT_EQ(p.id(1, 2), kPadId);
  EXPECT_EQ(p.column_mask(2), (std::vector<double>{1.0, 0.0}));
}
