#include "cli.h"

#include <cstdlib>
#include <sstream>

#include <gtest/gtest.h>

#include "headfilt/corpus.h"
#include "headfilt/model_io.h"
#include "test_support.h"

namespace headfilt {
namespace {

struct CliRun {
  int code;
  std::string out, err;
};

CliRun invoke(std::vector<std::string> args, const std::string& input = "") {
  std::istringstream in(input);
  std::ostringstream out, err;
  const int code = cli::run(args, in, out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    ids_ = testing::temp_path("cli_ids.txt");
    sets_ = testing::temp_path("cli_sets.txt");
    corpus_ = testing::temp_path("cli_corpus.tsv");
    testing::write_text(ids_,
                        "U+5433\t吾\t⿱五口\n"
                        "U+7121\t無\t⿱𠂉⿻卌灬\n"
                        "U+5AF5\t嫵\t⿰女無\n"
                        "U+821E\t舞\t⿱𠂉⿻卌舛\n"
                        "U+6211\t我\t⿰手戈\n"
                        "U+6CD5\t法\t⿰氵去\n");
    testing::write_text(sets_, "無:吾嫵舞\n吾:無嫵\n法:去\n");
    testing::write_text(corpus_,
                        "s1\t我吾法去\t2,無\n"
                        "s2\t我無法去\t\n"
                        "s3\t我去去去\t3,法\n");
  }

  std::vector<std::string> train_args(const std::string& out) {
    return {"-q", "train", "--ids", ids_, "--sets", sets_, "--out", out, "--steps1", "30",
            "--steps2", "10", "--dim", "8", "--batch", "10", "--calib-pairs", "200",
            "--seed", "7"};
  }

  std::string ids_, sets_, corpus_;
};

TEST_F(CliTest, UsageErrorsExitTwo) {
  EXPECT_EQ(invoke({}).code, 2);
  EXPECT_EQ(invoke({"nonsense"}).code, 2);
  const CliRun r = invoke({"train", "--ids", ids_, "--out", testing::temp_path("x.bin")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("--sets"), std::string::npos);
  EXPECT_EQ(invoke({"train", "--sets", sets_, "--out", "x", "--lr", "-1"}).code, 2);
  EXPECT_EQ(invoke({"check", "--mode", "bogus"}).code, 2);
  EXPECT_EQ(invoke({"--help"}).code, 0);
}

TEST_F(CliTest, TrainIsDeterministic) {
  const std::string a = testing::temp_path("cli_a.bin"), b = testing::temp_path("cli_b.bin");
  const CliRun ra = invoke(train_args(a));
  ASSERT_EQ(ra.code, 0) << ra.err;
  EXPECT_NE(ra.out.find("beta"), std::string::npos);
  ASSERT_EQ(invoke(train_args(b)).code, 0);
  EXPECT_EQ(read_file(a), read_file(b));
  EXPECT_NE(read_file(a + ".json").find("\"beta\""), std::string::npos);

  auto threaded = train_args(b);
  threaded.insert(threaded.begin(), {"--threads", "3"});
  ASSERT_EQ(invoke(threaded).code, 0);
  EXPECT_EQ(read_file(a), read_file(b));
}

TEST_F(CliTest, CorpusAddsStageTwoProvenance) {
  const std::string m = testing::temp_path("cli_stage2.bin");
  auto args = train_args(m);
  args.insert(args.end(), {"--corpus", corpus_});
  ASSERT_EQ(invoke(args).code, 0);
  const ModelBundle bundle = load_model(m);
  EXPECT_EQ(bundle.provenance.stages, (std::vector<std::string>{"stage1", "stage2"}));
  EXPECT_EQ(bundle.provenance.stage2_steps, 10);
  EXPECT_FALSE(bundle.provenance.data_hashes.empty());
  EXPECT_TRUE(bundle.vocab.contains(U'我'));
}

TEST_F(CliTest, CheckEmitsOneLinePerInput) {
  const std::string m = testing::temp_path("cli_check.bin");
  const std::string lm = testing::temp_path("cli_lm.bin");
  auto args = train_args(m);
  args.insert(args.end(), {"--corpus", corpus_});
  ASSERT_EQ(invoke(args).code, 0);
  ASSERT_EQ(invoke({"lm-train", "--corpus", corpus_, "--out", lm, "--order", "2"}).code, 0);
  for (const std::string mode : {"none", "sets", "headfilt"}) {
    const CliRun r = invoke({"check", "--model", m, "--lm", lm, "--mode", mode, "--sets", sets_},
                      "我吾法去\n我無法去\n");
    ASSERT_EQ(r.code, 0) << mode << r.err;
    const auto preds = parse_predictions(r.out);
    ASSERT_EQ(preds.size(), 2u) << mode;
    EXPECT_EQ(preds[0].id, "1");
    EXPECT_EQ(preds[1].id, "2");
    EXPECT_EQ(invoke({"check", "--model", m, "--lm", lm, "--mode", mode, "--sets", sets_},
                  "我吾法去\n我無法去\n").out,
              r.out);
  }
  const CliRun needs_one = invoke({"check", "--model", m, "--mode", "headfilt"}, "我\n");
  EXPECT_EQ(needs_one.code, 2);
}

TEST_F(CliTest, CheckWithExternalDistributions) {
  const std::string ext = testing::temp_path("cli_ext.jsonl");
  testing::write_text(ext, R"({"id": "s1", "text": "我吾", "positions": {"2": [["無", 0.7], ["吾", 0.3]]}})" "\n");
  const std::string in = testing::temp_path("cli_in.tsv");
  testing::write_text(in, "s1\t我吾\t2,無\n");
  const CliRun r = invoke({"check", "--external", ext, "--mode", "sets", "--sets", sets_, "--format",
                     "corpus", "--input", in});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto preds = parse_predictions(r.out);
  ASSERT_EQ(preds.size(), 1u);
  EXPECT_EQ(preds[0].edits, (std::vector<Edit>{{2, U'吾', U'無'}}));
}

TEST_F(CliTest, CorruptModelExitsOne) {
  const std::string bad = testing::temp_path("cli_bad.bin");
  const std::string lm = testing::temp_path("cli_lm2.bin");
  testing::write_text(bad, "garbage");
  ASSERT_EQ(invoke({"lm-train", "--corpus", corpus_, "--out", lm}).code, 0);
  const CliRun r = invoke({"check", "--model", bad, "--lm", lm}, "我\n");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("CorruptFile"), std::string::npos);
}

TEST_F(CliTest, EvaluateAndCoverage) {
  const std::string pred = testing::temp_path("cli_pred.jsonl");
  testing::write_text(pred,
                      R"({"id": "s1", "edits": [{"pos": 2, "wrong": "吾", "correction": "無"}]})" "\n"
                      R"({"id": "s2", "edits": []})" "\n"
                      R"({"id": "s3", "edits": []})" "\n");
  const CliRun e = invoke({"evaluate", "--gold", corpus_, "--pred", pred, "--task", "correction", "--json"});
  ASSERT_EQ(e.code, 0) << e.err;
  EXPECT_NE(e.out.find("\"tp\":1"), std::string::npos);
  EXPECT_NE(e.out.find("\"fn\":1"), std::string::npos);
  EXPECT_NE(invoke({"evaluate", "--gold", corpus_, "--pred", pred}).out.find("detection"),
            std::string::npos);

  const CliRun c = invoke({"coverage", "--corpus", corpus_, "--sets", sets_});
  ASSERT_EQ(c.code, 0);
  EXPECT_NE(c.out.find("2/2 (100.00%)"), std::string::npos);

  testing::write_text(pred, R"({"id": "zz", "edits": []})" "\n");
  EXPECT_EQ(invoke({"evaluate", "--gold", corpus_, "--pred", pred}).code, 1);
}

TEST_F(CliTest, CalibrateUpdatesBeta) {
  const std::string m = testing::temp_path("cli_cal.bin");
  ASSERT_EQ(invoke(train_args(m)).code, 0);
  const CliRun r = invoke({"calibrate", "--model", m, "--pairs", "50", "--seed", "3", "--sets", sets_});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("beta"), std::string::npos);
  const ModelBundle bundle = load_model(m);
  EXPECT_EQ(bundle.provenance.stages.back(), "calibrate");
  EXPECT_EQ(invoke({"calibrate", "--model", m, "--pairs", "50", "--seed", "3", "--sets", sets_}).out,
            r.out);
}

TEST_F(CliTest, ConfigFileAndEnvironment) {
  const std::string m = testing::temp_path("cli_cfg.bin");
  const std::string cfg = testing::temp_path("cli.ini");
  testing::write_text(cfg, "[train]\nsteps1=5\ndim=4\nbatch=5\ncalib-pairs=50\n");
  CliRun r = invoke({"-q", "--config", cfg, "train", "--sets", sets_, "--ids", ids_, "--out", m});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(load_model(m).params.hidden_dim(), 4);
  EXPECT_EQ(load_model(m).provenance.stage1_steps, 5);

  ::setenv("HEADFILT_DIM", "6", 1);
  r = invoke({"-q", "--config", cfg, "train", "--sets", sets_, "--ids", ids_, "--out", m});
  ::unsetenv("HEADFILT_DIM");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(load_model(m).params.hidden_dim(), 6);
}

}  // namespace
}  // namespace headfilt
