#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "rfq/bnt.hpp"
#include "rfq/ensemble.hpp"
#include "rfq/error.hpp"
#include "rfq/random.hpp"

using namespace rfq;
using namespace rfq::ensemble;

TEST(SoftVote, Mean) {
  const std::vector<double> p{0.2, 0.4, 0.9};
  EXPECT_NEAR(soft_vote(p), 0.5, 1e-15);
}

TEST(SoftVote, IdempotentOnIdenticalMembers) {
  for (double p : {0.0, 0.13, 0.5, 0.999}) {
    const std::vector<double> v{p, p, p};
    EXPECT_NEAR(soft_vote(v), p, 1e-15);
  }
}

TEST(SoftVote, OrderFreeAndBounded) {
  RandomStream rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> p(2 + trial % 5);
    for (double& v : p) v = rng.uniform();
    const double a = soft_vote(p);
    std::reverse(p.begin(), p.end());
    std::rotate(p.begin(), p.begin() + 1, p.end());
    EXPECT_NEAR(soft_vote(p), a, 1e-15);
    EXPECT_GE(a, *std::min_element(p.begin(), p.end()) - 1e-15);
    EXPECT_LE(a, *std::max_element(p.begin(), p.end()) + 1e-15);
  }
}

TEST(SoftVote, EmptyThrows) { EXPECT_THROW(soft_vote(std::vector<double>{}), Error); }

TEST(MajorityVote, TwoOfThree) {
  EXPECT_EQ(majority_vote(std::vector<double>{0.9, 0.8, 0.1}).label, 1);
  EXPECT_EQ(majority_vote(std::vector<double>{0.4, 0.4, 0.6}).label, 0);
}

TEST(MajorityVote, ThresholdOneIsAlwaysZero) {
  EXPECT_EQ(majority_vote(std::vector<double>{1.0, 1.0, 1.0}, 1.0).label, 0);
  EXPECT_EQ(majority_vote(std::vector<double>{0.99, 1.0, 0.5}, 1.0).label, 0);
}

TEST(MajorityVote, EvenTieGoesToZeroAndIsReported) {
  const auto v = majority_vote(std::vector<double>{0.9, 0.1});
  EXPECT_EQ(v.label, 0);
  EXPECT_TRUE(v.tie);
  EXPECT_FALSE(majority_vote(std::vector<double>{0.9, 0.1, 0.7}).tie);
}

TEST(MajorityVote, LabelFlipSymmetry) {
  RandomStream rng(2);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> p(1 + 2 * (trial % 3));
    for (double& v : p) {
      do v = rng.uniform();
      while (v == 0.5);
    }
    std::vector<double> flipped(p.size());
    std::transform(p.begin(), p.end(), flipped.begin(), [](double v) { return 1.0 - v; });
    EXPECT_EQ(majority_vote(p).label, 1 - majority_vote(flipped).label);
  }
}

namespace {

EnsembleModel three_members() {
  linear::LassoLogisticModel lr;
  lr.coefficients = {2.0};
  auto tree = bnt::BntModel::single_leaf(1);
  tree.nodes[0].leaf().beta_post = 9.0;  // p = 0.9
  tree.fitted = true;
  auto low = bnt::BntModel::single_leaf(1);
  low.nodes[0].leaf().alpha_post = 9.0;  // p = 0.1
  low.fitted = true;
  EnsembleModel e;
  e.members = {lr, tree, low};
  e.member_names = {"lr", "abr2", "abr6"};
  return e;
}

}  // namespace

TEST(EnsembleModel, ProbabilityIsSoftVoteAndLabelFollowsMode) {
  auto e = three_members();
  e.validate();
  const std::vector<double> x{1.0};
  const double p_lr = 1.0 / (1.0 + std::exp(-2.0));
  EXPECT_NEAR(e.predict_proba(x), (p_lr + 0.9 + 0.1) / 3.0, 1e-15);
  EXPECT_EQ(e.vote_mode, VoteMode::hard);
  EXPECT_EQ(e.predict_label(x), 1);  // lr and the 0.9 tree vote yes
  e.threshold = 0.95;
  EXPECT_EQ(e.predict_label(x), 0);
  e.vote_mode = VoteMode::soft;
  e.threshold = 0.5;
  EXPECT_EQ(e.predict_label(x), (p_lr + 1.0) / 3.0 > 0.5 ? 1 : 0);
}

TEST(EnsembleModel, ValidationRules) {
  auto e = three_members();
  auto one = e;
  one.members.resize(1);
  one.member_names.resize(1);
  EXPECT_THROW(one.validate(), Error);
  auto wide = e;
  std::get<linear::LassoLogisticModel>(wide.members[0]).coefficients = {1.0, 2.0};
  EXPECT_THROW(wide.validate(), Error);
  auto names = e;
  names.member_names.pop_back();
  EXPECT_THROW(names.validate(), Error);
}

TEST(VoteMode, Names) {
  EXPECT_EQ(vote_mode_from_string(to_string(VoteMode::soft)), VoteMode::soft);
  EXPECT_EQ(vote_mode_from_string("hard"), VoteMode::hard);
  EXPECT_THROW(vote_mode_from_string("median"), ConfigError);
}
