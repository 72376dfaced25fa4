#include <algorithm>
#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "rfq/error.hpp"
#include "rfq/features.hpp"
#include "rfq/market_sim.hpp"

using namespace rfq;
using namespace rfq::features;
using sim::RfqRecord;
using sim::Side;

namespace {

std::vector<RfqRecord> bond_series(const std::vector<double>& mids, int bond = 0) {
  std::vector<RfqRecord> rows;
  for (std::size_t i = 0; i < mids.size(); ++i) {
    RfqRecord r;
    r.time = 10000 + static_cast<std::int64_t>(i);
    r.bond = bond;
    r.mid_price = mids[i];
    r.quoted_price = mids[i];
    r.notional = 1000;
    rows.push_back(r);
  }
  return rows;
}

}  // namespace

TEST(ComputeFeatures, ConstantMidGivesZeroMomentum) {
  const auto rows = compute_features(bond_series(std::vector<double>(40, 124.24)));
  for (const auto& f : rows) {
    EXPECT_EQ(f.mom5, 0.0);
    EXPECT_EQ(f.mom10, 0.0);
    EXPECT_EQ(f.mom20, 0.0);
  }
}

TEST(ComputeFeatures, MomentumFollowsItsDefinition) {
  std::vector<double> mids;
  for (int i = 0; i < 30; ++i) mids.push_back(100.0 + i);
  const auto f = compute_features(bond_series(mids));
  EXPECT_DOUBLE_EQ(f[25].mom5, 125.0 / 120.0 - 1.0);
  EXPECT_DOUBLE_EQ(f[25].mom10, 125.0 / 115.0 - 1.0);
  EXPECT_DOUBLE_EQ(f[25].mom20, 125.0 / 105.0 - 1.0);
  EXPECT_FALSE(f[19].history_valid);
  EXPECT_TRUE(f[20].history_valid);
}

TEST(ComputeFeatures, MomentumUsesOwnBondOnly) {
  std::vector<RfqRecord> rows;
  for (int i = 0; i < 60; ++i) {
    RfqRecord r;
    r.time = 10000 + i;
    r.bond = i % 2;
    r.mid_price = r.bond == 0 ? 100.0 : 200.0 + i;
    r.quoted_price = r.mid_price;
    r.notional = 1000;
    rows.push_back(r);
  }
  const auto f = compute_features(rows);
  for (int i = 0; i < 60; i += 2) EXPECT_EQ(f[i].mom5, 0.0);
  EXPECT_DOUBLE_EQ(f[59].mom5, 259.0 / 249.0 - 1.0);
  EXPECT_FALSE(f[38].history_valid);  // bond 0 has 19 prior rows here
  EXPECT_TRUE(f[40].history_valid);
}

TEST(ComputeFeatures, SpreadAndResponse) {
  RfqRecord r;
  r.time = 10000;
  r.mid_price = 124.25;
  r.quoted_price = 124.24;
  r.notional = 100000;
  r.side = Side::bid;
  auto f = compute_features(std::vector<RfqRecord>{r}).front();
  EXPECT_NEAR(f.spread, 0.01, 1e-12);
  EXPECT_NEAR(f.response, 0.01, 1e-12);
  EXPECT_NEAR(f.log_notional, std::log(100000.0), 1e-12);
  r.side = Side::offer;
  f = compute_features(std::vector<RfqRecord>{r}).front();
  EXPECT_NEAR(f.response, -0.01, 1e-12);
}

TEST(ComputeFeatures, ResponseIsAntisymmetricInSide) {
  for (double s : {-0.0073, 0.0, 0.002, 0.01}) {
    RfqRecord bid;
    bid.mid_price = 124.0;
    bid.side = Side::bid;
    RfqRecord offer = bid;
    offer.side = Side::offer;
    FeatureRow base;
    EXPECT_EQ(with_quote(base, bid, 124.0 - s).response, -with_quote(base, offer, 124.0 - s).response);
  }
}

TEST(ComputeFeatures, MomentumIsScaleInvariant) {
  sim::SimConfig c;
  c.n_records = 400;
  auto rows = sim::gen_rfq_dataset(c);
  const auto before = compute_features(rows);
  for (auto& r : rows) {
    if (r.bond == 2) r.mid_price *= 3.5;
  }
  const auto after = compute_features(rows);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_NEAR(after[i].mom5, before[i].mom5, 1e-12);
    EXPECT_NEAR(after[i].mom10, before[i].mom10, 1e-12);
    EXPECT_NEAR(after[i].mom20, before[i].mom20, 1e-12);
  }
}

TEST(ComputeFeatures, LogBaseIsConfigurable) {
  RfqRecord r;
  r.notional = 1000;
  FeatureOptions o;
  o.log_base = 10.0;
  EXPECT_NEAR(compute_features(std::vector<RfqRecord>{r}, o).front().log_notional, 3.0, 1e-12);
}

TEST(ComputeFeatures, Errors) {
  auto rows = bond_series(std::vector<double>(10, 100.0));
  rows[3].time = rows[2].time;
  EXPECT_THROW(compute_features(rows), Error);
  auto zeros = bond_series(std::vector<double>(10, 0.0));
  EXPECT_THROW(compute_features(zeros), NumericError);
}

TEST(ComputeFeatures, WithQuoteOnlyTouchesSpread) {
  RfqRecord r;
  r.mid_price = 124.0;
  r.side = Side::offer;
  FeatureRow base;
  base.mom5 = 0.3;
  base.log_notional = 9.0;
  const auto f = with_quote(base, r, 124.02);
  EXPECT_NEAR(f.spread, -0.02, 1e-12);
  EXPECT_NEAR(f.response, 0.02, 1e-12);
  EXPECT_EQ(f.mom5, 0.3);
  EXPECT_EQ(f.log_notional, 9.0);
}

class StandardizeTest : public ::testing::Test {
 protected:
  void SetUp() override {
    RandomStream rng(3);
    raw = Matrix(200, 4);
    for (std::size_t i = 0; i < raw.rows(); ++i) {
      raw(i, 0) = 5.0 + 2.0 * rng.normal();
      raw(i, 1) = 7.0;  // constant
      raw(i, 2) = static_cast<double>(rng.uniform_int(1, 4));
      raw(i, 3) = -3.0 + 0.01 * rng.normal();
    }
  }
  Matrix raw;
  std::vector<std::string> names{"a", "flat", "cat", "b"};
  std::vector<bool> categorical{false, false, true, false};
};

TEST_F(StandardizeTest, ZScoresContinuousColumns) {
  const auto s = standardize(raw, names, categorical);
  ASSERT_EQ(s.rows.cols(), 3u);
  for (std::size_t c : {0u, 2u}) {
    double mean = 0.0, var = 0.0;
    for (std::size_t i = 0; i < s.rows.rows(); ++i) mean += s.rows(i, c);
    mean /= static_cast<double>(s.rows.rows());
    for (std::size_t i = 0; i < s.rows.rows(); ++i) var += std::pow(s.rows(i, c) - mean, 2);
    var /= static_cast<double>(s.rows.rows());
    EXPECT_NEAR(mean, 0.0, 1e-9);
    EXPECT_NEAR(std::sqrt(var), 1.0, 1e-9);
  }
  for (std::size_t i = 0; i < raw.rows(); ++i) EXPECT_EQ(s.rows(i, 1), raw(i, 2));
}

TEST_F(StandardizeTest, ConstantColumnIsDroppedAndReported) {
  const auto s = standardize(raw, names, categorical);
  EXPECT_EQ(s.stats.dropped_names(), std::vector<std::string>{"flat"});
  EXPECT_EQ(s.stats.output_names(), (std::vector<std::string>{"a", "cat", "b"}));
}

TEST_F(StandardizeTest, ReusedStatsAreDeterministic) {
  const auto fitted = standardize(raw, names, categorical);
  const auto once = standardize(raw, names, categorical, fitted.stats);
  const auto twice = standardize(raw, names, categorical, fitted.stats);
  EXPECT_EQ(once.rows, twice.rows);
  EXPECT_EQ(once.rows, fitted.rows);
}

TEST_F(StandardizeTest, InverseRecoversRawRow) {
  const auto s = standardize(raw, names, categorical);
  for (std::size_t i = 0; i < raw.rows(); ++i) {
    const auto back = s.stats.inverse(s.rows.row(i));
    for (std::size_t c = 0; c < raw.cols(); ++c) EXPECT_NEAR(back[c], raw(i, c), 1e-12);
  }
}

TEST_F(StandardizeTest, OneHotExpandsCategoricals) {
  const auto s = standardize(raw, names, categorical, std::nullopt, true);
  ASSERT_EQ(s.rows.cols(), 6u);
  for (std::size_t i = 0; i < raw.rows(); ++i) {
    double hot = 0.0;
    for (std::size_t c = 1; c <= 4; ++c) hot += s.rows(i, c);
    EXPECT_EQ(hot, 1.0);
    EXPECT_EQ(s.rows(i, static_cast<std::size_t>(raw(i, 2))), 1.0);
  }
  EXPECT_THROW(s.stats.inverse(s.rows.row(0)), Error);
}

TEST_F(StandardizeTest, EmptyInputIsAnError) {
  EXPECT_THROW(standardize(Matrix(0, 4), names, categorical), Error);
  EXPECT_THROW(standardize(std::span<const FeatureRow>{}), Error);
}

TEST(FillRateCurve, AllFilledGivesUnitRates) {
  std::vector<double> x(1000);
  std::iota(x.begin(), x.end(), 0.0);
  std::vector<int> y(1000, 1);
  const auto c = fill_rate_curve(x, y, 20);
  ASSERT_EQ(c.raw_rates.size(), 20u);
  for (double r : c.raw_rates) EXPECT_EQ(r, 1.0);
  EXPECT_FALSE(c.smoothed);
  EXPECT_FALSE(c.notice.empty());
  EXPECT_EQ(std::accumulate(c.counts.begin(), c.counts.end(), std::size_t{0}), 1000u);
}

TEST(FillRateCurve, IndependentFeatureStaysInBinomialBand) {
  RandomStream rng(11);
  const std::size_t n = 10000;
  std::vector<double> x(n);
  std::vector<int> y(n);
  double base = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = rng.normal();
    y[i] = rng.bernoulli(0.4) ? 1 : 0;
    base += y[i];
  }
  base /= static_cast<double>(n);
  const auto c = fill_rate_curve(x, y, 20);
  for (std::size_t b = 0; b < c.raw_rates.size(); ++b) {
    const double half = 2.5758 * std::sqrt(base * (1.0 - base) / static_cast<double>(c.counts[b]));
    EXPECT_NEAR(c.raw_rates[b], base, half) << "bin " << b;
    EXPECT_GT(c.counts[b], 0u);
  }
  EXPECT_TRUE(std::is_sorted(c.bin_centers.begin(), c.bin_centers.end()));
}

TEST(FillRateCurve, ResponseCurveDecreasesOnFeatureLinkedData) {
  sim::SimConfig cfg;
  const auto records = sim::gen_rfq_dataset(cfg);
  const auto rows = compute_features(records);
  std::vector<double> response;
  std::vector<int> status;
  std::vector<double> truth;
  // Logistic-link oracle: the generating probability of each row.
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].live) continue;
    sim::StatusFeatures f;
    f.response = rows[i].response;
    f.log_notional = rows[i].log_notional;
    f.mom5 = rows[i].mom5;
    response.push_back(rows[i].response);
    status.push_back(records[i].status);
    truth.push_back(sim::feature_linked_probability(f, cfg.link));
  }
  const auto c = fill_rate_curve(response, status, 20);
  ASSERT_TRUE(c.smoothed);
  for (std::size_t b = 1; b < c.smooth_rates.size(); ++b) {
    EXPECT_LE(c.smooth_rates[b], c.smooth_rates[b - 1] + 1e-12) << "bin " << b;
  }
  std::vector<std::size_t> order(response.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return response[a] < response[b]; });
  std::size_t start = 0;
  for (std::size_t b = 0; b < c.counts.size(); ++b) {
    double mean_p = 0.0;
    for (std::size_t k = start; k < start + c.counts[b]; ++k) mean_p += truth[order[k]];
    mean_p /= static_cast<double>(c.counts[b]);
    start += c.counts[b];
    EXPECT_NEAR(c.smooth_rates[b], mean_p, 0.05) << "bin " << b;
    EXPECT_GE(c.raw_rates[b], 0.0);
    EXPECT_LE(c.raw_rates[b], 1.0);
  }
}

TEST(FillRateCurve, RejectsBadArguments) {
  std::vector<double> x{1, 2, 3};
  std::vector<int> y{0, 1};
  EXPECT_THROW(fill_rate_curve(x, y, 2), Error);
  std::vector<int> y3{0, 1, 1};
  EXPECT_THROW(fill_rate_curve(x, y3, 1), Error);
}

TEST(FeatureSchema, NamesAndMask) {
  EXPECT_EQ(feature_names().size(), kNumFeatures);
  EXPECT_EQ(feature_names()[4], "response");
  const auto mask = categorical_mask();
  EXPECT_EQ(std::count(mask.begin(), mask.end(), true), 3);
}
