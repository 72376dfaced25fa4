#include <filesystem>
#include <sstream>

#include <gtest/gtest.h>
#include "json.hpp"

#include "oracles.hpp"
#include "rfq/error.hpp"
#include "rfq/io.hpp"
#include "rfq/pipeline.hpp"

using namespace rfq;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("rfqkit_io_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<sim::RfqRecord> small_dataset() {
  sim::SimConfig cfg;
  cfg.n_records = 60;
  cfg.n_live = 3;
  cfg.seed = 9;
  return sim::gen_rfq_dataset(cfg);
}

}  // namespace

TEST(Dataset, RoundTripIsByteExact) {
  const auto records = small_dataset();
  const std::string text = io::format_dataset(records);
  std::istringstream in(text);
  const auto back = io::parse_dataset(in);
  ASSERT_EQ(back.size(), records.size());
  EXPECT_EQ(io::format_dataset(back), text);
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].time, records[i].time);
    EXPECT_EQ(back[i].live, records[i].live);
    EXPECT_NEAR(back[i].mid_price, records[i].mid_price, 5e-7);
  }
}

TEST(Dataset, RenamedHeaderNamesTheColumn) {
  std::string text = io::format_dataset(small_dataset());
  text.replace(text.find("MidPrice"), 8, "Mid");
  std::istringstream in(text);
  try {
    io::parse_dataset(in);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.column(), "Mid");
    EXPECT_EQ(e.row(), 0);
  }
}

TEST(Dataset, OutOfRangeCompetitionNamesRowAndColumn) {
  std::istringstream in(std::string(io::kDatasetHeader) +
                        "\n1,0,0,1000,2,124.1,124.11,2,1,124.12,0"
                        "\n2,0,1,1000,2,124.1,124.09,5,0,124.12,0\n");
  try {
    io::parse_dataset(in);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.row(), 2);
    EXPECT_EQ(e.column(), "Competition");
  }
}

TEST(Dataset, MalformedCells) {
  const std::string h = std::string(io::kDatasetHeader) + "\n";
  for (const std::string row : {"1,0,0,1000,2,abc,124.11,2,1,124.12,0",
                                "1,0,0,1000,2,124.1,124.11,2,1,124.12",
                                "1,0,2,1000,2,124.1,124.11,2,1,124.12,0",
                                "1,0,0,1000,2,124.1,nan,2,1,124.12,0"}) {
    std::istringstream in(h + row + "\n");
    EXPECT_THROW(io::parse_dataset(in), ParseError) << row;
  }
  std::istringstream empty("");
  EXPECT_THROW(io::parse_dataset(empty), ParseError);
}

TEST(Format, FixedAndExact) {
  EXPECT_EQ(io::fmt_fixed(124.2), "124.200000");
  EXPECT_EQ(io::fmt_fixed(-0.0000001), "0.000000");
  EXPECT_EQ(io::fmt_fixed(1.005, 2), "1.00");
  EXPECT_EQ(io::fmt_exact(0.1), "0.1");
  EXPECT_EQ(std::stod(io::fmt_exact(1.0 / 3.0)), 1.0 / 3.0);
  EXPECT_EQ(io::fingerprint("abc"), io::fingerprint("abc"));
  EXPECT_NE(io::fingerprint("abc"), io::fingerprint("abd"));
  EXPECT_EQ(io::fingerprint("").size(), 16u);
}

TEST(Table, Csv) {
  io::Table t;
  t.header = {"a", "b"};
  t.add({"1", "2"});
  EXPECT_EQ(t.to_csv(), "a,b\n1,2\n");
}

TEST(ModelFile, BntRoundTripPredictsIdentically) {
  RandomStream rng(3);
  auto tree = oracle::random_tree(rng, 4, 5);
  io::ModelFile m;
  m.kind = io::ModelKind::bnt;
  m.seed = 17;
  m.training_fingerprint = "0123456789abcdef";
  m.bnt = tree;
  const auto dir = scratch_dir("bnt");
  io::save_model(dir / "m.json", m);
  const auto back = io::load_model(dir / "m.json", io::ModelKind::bnt);
  ASSERT_TRUE(back.bnt.has_value());
  EXPECT_EQ(back.seed, 17u);
  EXPECT_EQ(back.training_fingerprint, m.training_fingerprint);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> x(4);
    for (double& v : x) v = 2.0 * rng.normal();
    EXPECT_NEAR(bnt::predict_proba(*back.bnt, x), bnt::predict_proba(tree, x), 1e-12);
  }
  EXPECT_EQ(io::serialize_model(back), io::serialize_model(m));
}

TEST(ModelFile, MissingLeafPosteriorIsRejected) {
  RandomStream rng(4);
  io::ModelFile m;
  m.kind = io::ModelKind::bnt;
  m.bnt = oracle::random_tree(rng, 2, 3);
  auto j = nlohmann::json::parse(io::serialize_model(m));
  for (auto& node : j["params"]["nodes"]) {
    if (node["type"] == "leaf") {
      node.erase("beta_post");
      break;
    }
  }
  EXPECT_THROW(io::deserialize_model(j.dump(), "."), ParseError);
}

TEST(ModelFile, SchemaAndKindMismatch) {
  io::ModelFile m;
  m.kind = io::ModelKind::next_mid;
  m.next_mid = linear::NextMidModel{0.1, 0.999, 0.002, 0.99, 100, 30};
  const auto dir = scratch_dir("kind");
  io::save_model(dir / "nm.json", m);
  EXPECT_EQ(*io::load_model(dir / "nm.json").next_mid, *m.next_mid);
  EXPECT_THROW(io::load_model(dir / "nm.json", io::ModelKind::bnt), Error);

  auto j = nlohmann::json::parse(io::serialize_model(m));
  j["schema_version"] = io::kSchemaVersion + 1;
  EXPECT_THROW(io::deserialize_model(j.dump(), dir), ParseError);
  EXPECT_THROW(io::deserialize_model("{ not json", dir), ParseError);
  EXPECT_THROW(io::load_model(dir / "absent.json"), Error);
}

TEST(ModelFile, MissingEnsembleMemberIsNamed) {
  sim::SimConfig cfg;
  cfg.n_records = 400;
  cfg.seed = 5;
  const auto data = pipeline::prepare(sim::gen_rfq_dataset(cfg));
  pipeline::PipelineConfig pc;
  pc.bnt.n_iter = 2;
  const auto lr = pipeline::train_lasso(data, pc);
  const auto tree = pipeline::train_bnt(data, pc);
  const auto ens = pipeline::make_ensemble({lr, tree, tree}, {"lr", "abr2", "abr6"}, pc);
  const auto dir = scratch_dir("ensemble");
  pipeline::save_classifier(dir / "ens.json", ens, 5, "fp");
  const auto back = pipeline::load_classifier(dir / "ens.json");
  for (std::size_t i = 0; i < 20; ++i) {
    const auto& row = data.features[data.test[i]];
    EXPECT_NEAR(back.predict_proba(row), ens.predict_proba(row), 1e-12);
  }
  fs::remove(dir / "ens.abr2.json");
  try {
    pipeline::load_classifier(dir / "ens.json");
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("abr2"), std::string::npos) << e.what();
  }
}

TEST(ModelKind, Names) {
  for (auto k : {io::ModelKind::bnt, io::ModelKind::lasso_logistic, io::ModelKind::next_mid,
                 io::ModelKind::ensemble}) {
    EXPECT_EQ(io::model_kind_from_string(io::to_string(k)), k);
  }
  EXPECT_THROW(io::model_kind_from_string("forest"), Error);
}
