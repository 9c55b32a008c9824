#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "zpj/cli.hpp"

using namespace zpj;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run zpj_run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() /
          ("zpj_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }

  std::string path(const std::string& name) const { return (dir / name).string(); }

  void small_corpus() {
    auto r = zpj_run({"gen-corpus", "--out-dir", path("corpus"), "--seed", "4", "--set",
                      "train_documents=40", "--set", "valid_documents=6", "--set",
                      "test_documents=6"});
    ASSERT_EQ(r.code, 0) << r.err;
  }

  fs::path dir;
};

}  // namespace

TEST_F(Cli, UsageErrorsExitTwo) {
  auto none = zpj_run({});
  EXPECT_EQ(none.code, 2);
  EXPECT_NE(none.err.find("gen-corpus"), std::string::npos);
  EXPECT_EQ(zpj_run({"frobnicate"}).code, 2);
  EXPECT_EQ(zpj_run({"eval-bleu", "--bogus", "1"}).code, 2);
  EXPECT_EQ(zpj_run({"eval-bleu"}).code, 2);
  EXPECT_EQ(zpj_run({"--help"}).code, 0);
}

TEST_F(Cli, FailuresExitOneWithDiagnostic) {
  write(dir / "h.txt", "a b\n");
  write(dir / "r.txt", "a b\nc d\n");
  auto r = zpj_run({"eval-bleu", "--hyp", path("h.txt"), "--ref", path("r.txt")});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(r.err.rfind("zpj: error: ", 0), 0u) << r.err;
  EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1);
}

TEST_F(Cli, EvalCommandsPrintKeyValues) {
  write(dir / "h.txt", "the cat sat on the mat\n");
  write(dir / "g.txt", "N N N ta N N\n");
  write(dir / "p.txt", "N N N sha N N\n");
  auto b = zpj_run({"eval-bleu", "--hyp", path("h.txt"), "--ref", path("h.txt")});
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_NE(b.out.find("bleu=100\n"), std::string::npos) << b.out;
  auto z = zpj_run({"eval-zp", "--pred", path("p.txt"), "--gold", path("g.txt")});
  ASSERT_EQ(z.code, 0) << z.err;
  EXPECT_NE(z.out.find("position_f1=1\n"), std::string::npos) << z.out;
  EXPECT_NE(z.out.find("word_f1=0\n"), std::string::npos) << z.out;
  auto s = zpj_run({"sig-test", "--a", path("h.txt"), "--b", path("h.txt"), "--ref", path("h.txt")});
  ASSERT_EQ(s.code, 0) << s.err;
  EXPECT_NE(s.out.find("p_value=1\n"), std::string::npos) << s.out;
}

TEST_F(Cli, GenCorpusIsDeterministicAndWritesSidecar) {
  small_corpus();
  auto again = zpj_run({"gen-corpus", "--out-dir", path("again"), "--seed", "4", "--set",
                        "train_documents=40", "--set", "valid_documents=6", "--set",
                        "test_documents=6"});
  ASSERT_EQ(again.code, 0);
  for (auto f : {"train/src.txt", "train/tgt.txt", "train/labels.txt", "test/gold.txt", "config.txt"})
    EXPECT_EQ(slurp(dir / "corpus" / f), slurp(dir / "again" / f)) << f;
  auto meta = slurp(dir / "corpus" / "corpus.meta");
  EXPECT_NE(meta.find("version=zpj"), std::string::npos);
  EXPECT_NE(meta.find("config_hash="), std::string::npos);
  EXPECT_NE(slurp(dir / "corpus" / "config.txt").find("seed=4"), std::string::npos);
}

TEST_F(Cli, TrainTranslateEvaluatePipeline) {
  small_corpus();
  auto t = zpj_run({"train", "--train-dir", path("corpus/train"), "--valid-dir",
                    path("corpus/valid"), "--out", path("run"), "--seed", "7", "--epochs", "2",
                    "--set", "model.use_reconstructor=true", "--set", "model.use_labeler=true",
                    "--set", "model.use_discourse=true", "--set", "model.hidden=16", "--set",
                    "model.rec_hidden=16", "--set", "model.embed=8", "--set", "model.attention=8"});
  ASSERT_EQ(t.code, 0) << t.err;
  EXPECT_NE(t.err.find("seed=7"), std::string::npos);
  EXPECT_NE(slurp(dir / "run" / "run.log").find("seed=7\n"), std::string::npos);
  auto log = slurp(dir / "run" / "epochs.tsv");
  EXPECT_EQ(log.rfind("epoch\tL\tR\tP\tvalid_bleu\tvalid_f1\n", 0), 0u) << log;
  EXPECT_EQ(std::count(log.begin(), log.end(), '\n'), 3);
  EXPECT_TRUE(fs::exists(dir / "run" / "model.ckpt.meta"));

  auto tr = zpj_run({"translate", "--model", path("run/model.ckpt"), "--src",
                     path("corpus/test/src.txt"), "--out", path("hyp.txt"), "--beam", "3",
                     "--rescore-beta", "0.5", "--emit-labels", path("lab.txt")});
  ASSERT_EQ(tr.code, 0) << tr.err;
  EXPECT_TRUE(fs::exists(dir / "hyp.txt.meta"));
  auto lines = [](const std::string& s) { return std::count(s.begin(), s.end(), '\n'); };
  EXPECT_EQ(lines(slurp(dir / "hyp.txt")), lines(slurp(dir / "corpus/test/tgt.txt")));

  auto lb = zpj_run({"label", "--model", path("run/model.ckpt"), "--src",
                     path("corpus/test/src.txt"), "--out", path("lab2.txt"), "--beam", "3",
                     "--rescore-beta", "0.5"});
  ASSERT_EQ(lb.code, 0) << lb.err;
  EXPECT_EQ(slurp(dir / "lab.txt"), slurp(dir / "lab2.txt"));

  auto eb = zpj_run({"eval-bleu", "--hyp", path("hyp.txt"), "--ref", path("corpus/test/tgt.txt")});
  ASSERT_EQ(eb.code, 0) << eb.err;
  EXPECT_EQ(eb.out.rfind("bleu=", 0), 0u);
  auto ez = zpj_run({"eval-zp", "--pred", path("lab.txt"), "--gold", path("corpus/test/labels.txt")});
  ASSERT_EQ(ez.code, 0) << ez.err;

  auto d = zpj_run({"describe", "--model", path("run/model.ckpt")});
  ASSERT_EQ(d.code, 0) << d.err;
  EXPECT_NE(d.out.find("gamma\t-\t"), std::string::npos) << d.out;
}

TEST_F(Cli, LabelsNeedALabeler) {
  small_corpus();
  auto t = zpj_run({"train", "--train-dir", path("corpus/train"), "--valid-dir",
                    path("corpus/valid"), "--out", path("run"), "--epochs", "1", "--set",
                    "model.hidden=8", "--set", "model.embed=4", "--set", "model.attention=4"});
  ASSERT_EQ(t.code, 0) << t.err;
  auto r = zpj_run({"label", "--model", path("run/model.ckpt"), "--src",
                    path("corpus/test/src.txt"), "--out", path("lab.txt")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("labeler"), std::string::npos);
}

TEST_F(Cli, AnnotateWithGoldAndLearnedAlignments) {
  small_corpus();
  auto c = dir / "corpus" / "train";
  auto gold = zpj_run({"annotate", "--src", (c / "src.txt").string(), "--tgt",
                       (c / "tgt.txt").string(), "--align", (c / "align.txt").string(), "--lm",
                       (c / "full.txt").string(), "--pronouns", path("corpus/pronouns.txt"),
                       "--out-labels", path("gold_labels.txt")});
  ASSERT_EQ(gold.code, 0) << gold.err;
  EXPECT_EQ(slurp(dir / "gold_labels.txt"), slurp(c / "labels.txt"));
  EXPECT_NE(gold.out.find("skipped=0"), std::string::npos);

  auto ibm = zpj_run({"annotate", "--src", (c / "src.txt").string(), "--tgt",
                      (c / "tgt.txt").string(), "--train-aligner", "--train-lm", "--pronouns",
                      path("corpus/pronouns.txt"), "--out-labels", path("ibm_labels.txt")});
  ASSERT_EQ(ibm.code, 0) << ibm.err;
  EXPECT_TRUE(fs::exists(dir / "ibm_labels.txt.meta"));

  auto both = zpj_run({"annotate", "--src", (c / "src.txt").string(), "--tgt",
                       (c / "tgt.txt").string(), "--pronouns", path("corpus/pronouns.txt"),
                       "--train-lm", "--out-labels", path("x.txt")});
  EXPECT_EQ(both.code, 2);
}

TEST_F(Cli, DescribeFromConfig) {
  write(dir / "m.cfg", "src_vocab=20\ntgt_vocab=20\nlabels=5\nuse_reconstructor=true\n");
  auto r = zpj_run({"describe", "--config", path("m.cfg")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("total\t-\t"), std::string::npos);
  auto bad = zpj_run({"describe", "--config", path("m.cfg"), "--set", "model.use_labeler=true",
                      "--set", "use_reconstructor=false"});
  EXPECT_EQ(bad.code, 1);
}
