#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "golden_util.hpp"
#include "pipeline_run.hpp"
#include "rfq/io.hpp"

namespace fs = std::filesystem;
using pipeline_run::cli;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("rfqkit_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string p(const std::string& name) const { return (dir_ / name).string(); }

  std::size_t lines(const std::string& name) const {
    std::ifstream in(p(name));
    std::size_t n = 0;
    for (std::string line; std::getline(in, line);) ++n;
    return n;
  }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, SimulateWritesTheDefaultDataset) {
  const auto r = cli({"simulate", "--seed", "42", "--out", p("data.csv")});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(lines("data.csv"), 10006u);
  const auto records = rfq::io::read_dataset(p("data.csv"));
  std::size_t live = 0;
  for (const auto& rec : records) live += rec.live ? 1 : 0;
  EXPECT_EQ(live, 5u);
}

TEST_F(CliTest, SimulateRingPoints) {
  EXPECT_EQ(cli({"simulate", "--ring", "50", "--out", p("ring.csv")}).code, 1);
  const auto r = cli({"simulate", "--ring", "50", "--set", "status_mode=ring_distance", "--out", p("ring.csv")});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(lines("ring.csv"), 51u);
}

TEST_F(CliTest, UsageErrorsExitTwo) {
  EXPECT_EQ(cli({"simulat"}).code, 2);
  EXPECT_NE(cli({"simulat"}).err.find("unknown subcommand"), std::string::npos);
  EXPECT_EQ(cli({"simulate", "--bogus"}).code, 2);
  EXPECT_EQ(cli({}).code, 2);
  EXPECT_EQ(cli({"train", "--model", "forest"}).code, 2);
  EXPECT_EQ(cli({"--help"}).code, 0);
}

TEST_F(CliTest, BadSettingsExitOne) {
  const auto r = cli({"simulate", "--set", "sigma_s=-1", "--out", p("x.csv")});
  EXPECT_EQ(r.code, 1);
  EXPECT_FALSE(fs::exists(p("x.csv")));
  EXPECT_EQ(cli({"simulate", "--set", "no_such_key=1", "--out", p("x.csv")}).code, 1);
  EXPECT_EQ(cli({"simulate", "--set", "sigma_s", "--out", p("x.csv")}).code, 1);
}

TEST_F(CliTest, TrainBntWithStiffnessAndQuote) {
  ASSERT_EQ(cli({"simulate", "--seed", "7", "--out", p("data.csv")}).code, 0);
  const auto t = cli({"train", "--model", "bnt", "--stiffness", "6", "--set", "n_iter=3", "--data",
                      p("data.csv"), "--out", p("bnt.json"), "--log", p("log.csv")});
  ASSERT_EQ(t.code, 0) << t.err;
  const auto model = rfq::io::load_model(p("bnt.json"), rfq::io::ModelKind::bnt);
  EXPECT_EQ(model.bnt->hyperparams.initial_relative_stiffness, 6.0);
  EXPECT_EQ(model.bnt->hyperparams.n_iter, 3u);
  EXPECT_EQ(lines("log.csv"), 4u);

  ASSERT_EQ(cli({"train", "--model", "next_mid", "--data", p("data.csv"), "--out", p("nm.json")}).code, 0);
  const auto q = cli({"quote", "--data", p("data.csv"), "--models", p("nm.json") + "," + p("bnt.json"),
                      "--out", p("quotes.csv"), "--curves", p("curves.csv"), "--payoff", p("payoff.csv")});
  ASSERT_EQ(q.code, 0) << q.err;
  EXPECT_EQ(lines("quotes.csv"), 6u);
  EXPECT_EQ(lines("payoff.csv"), 1u + 5u * 201u);

  const auto bad = cli({"quote", "--data", p("data.csv"), "--models", p("bnt.json"), "--out", p("q2.csv")});
  EXPECT_EQ(bad.code, 1);
}

TEST_F(CliTest, EnsembleFromSavedMembers) {
  ASSERT_EQ(cli({"simulate", "--seed", "3", "--set", "n_records=800", "--out", p("data.csv")}).code, 0);
  ASSERT_EQ(cli({"train", "--model", "lasso", "--data", p("data.csv"), "--out", p("lr.json")}).code, 0);
  ASSERT_EQ(cli({"train", "--model", "bnt", "--set", "n_iter=2", "--data", p("data.csv"), "--out",
                 p("abr2.json")}).code, 0);
  ASSERT_EQ(cli({"train", "--model", "bnt", "--set", "n_iter=2", "--stiffness", "6", "--data",
                 p("data.csv"), "--out", p("abr6.json")}).code, 0);
  const auto e = cli({"train", "--model", "ensemble", "--members",
                      p("lr.json") + "," + p("abr2.json") + "," + p("abr6.json"), "--out", p("ens.json")});
  ASSERT_EQ(e.code, 0) << e.err;
  const auto ev = cli({"evaluate", "--data", p("data.csv"), "--model", p("ens.json")});
  EXPECT_EQ(ev.code, 0) << ev.err;
  EXPECT_NE(ev.out.find("log-loss"), std::string::npos);
}

TEST_F(CliTest, ConfigFileIsApplied) {
  {
    std::ofstream cfg(p("sim.ini"));
    cfg << "# smaller run\nn_records = 300\nn_live = 2\n";
  }
  const auto r = cli({"simulate", "--config", p("sim.ini"), "--out", p("data.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(lines("data.csv"), 301u);
  EXPECT_EQ(cli({"simulate", "--config", p("missing.ini")}).code, 2);
}

TEST_F(CliTest, FeaturizeCurveAndCv) {
  ASSERT_EQ(cli({"simulate", "--set", "n_records=600", "--out", p("data.csv")}).code, 0);
  EXPECT_EQ(cli({"featurize", "--data", p("data.csv"), "--out", p("f.csv")}).code, 0);
  EXPECT_EQ(lines("f.csv"), 601u);
  EXPECT_EQ(cli({"curve", "--data", p("data.csv"), "--feature", "response", "--out", p("c.csv")}).code, 0);
  EXPECT_EQ(cli({"curve", "--data", p("data.csv"), "--feature", "nope", "--out", p("c.csv")}).code, 1);
  const auto cv = cli({"cv", "--model", "lasso", "--data", p("data.csv"), "--out", p("cv.csv")});
  EXPECT_EQ(cv.code, 0) << cv.err;
  EXPECT_NE(cv.out.find("best:"), std::string::npos);
}

TEST(CliPipeline, DefaultRunMatchesGoldens) {
  const auto dir = fs::temp_directory_path() / "rfqkit_cli_pipeline";
  const auto a = pipeline_run::run_default(dir);
  ASSERT_TRUE(a.ok) << a.failure;
  fs::remove_all(dir);
  golden::check("quotes_seed42.csv", a.quotes);
  golden::check("compete_seed42.csv", a.outcomes);
}
