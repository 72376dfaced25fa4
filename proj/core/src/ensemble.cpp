#include "rfq/ensemble.hpp"

#include <iostream>
#include <numeric>

#include "rfq/error.hpp"

namespace rfq::ensemble {

namespace {

std::size_t member_width(const MemberModel& member) {
  return std::visit(
      [](const auto& m) -> std::size_t {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, bnt::BntModel>) {
          return m.dim;
        } else {
          return m.coefficients.size();
        }
      },
      member);
}

}  // namespace

double member_proba(const MemberModel& member, std::span<const double> x) {
  return std::visit(
      [&](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, bnt::BntModel>) {
          return bnt::predict_proba(m, x);
        } else {
          return linear::predict_logistic(m, x);
        }
      },
      member);
}

double soft_vote(std::span<const double> probabilities) {
  if (probabilities.empty()) throw Error("soft_vote: no member probabilities");
  return std::accumulate(probabilities.begin(), probabilities.end(), 0.0) /
         static_cast<double>(probabilities.size());
}

MajorityVote majority_vote(std::span<const double> probabilities, double threshold) {
  if (probabilities.empty()) throw Error("majority_vote: no member probabilities");
  std::size_t votes = 0;
  for (double p : probabilities) votes += p > threshold ? 1 : 0;
  MajorityVote out;
  const std::size_t n = probabilities.size();
  out.label = 2 * votes > n ? 1 : 0;
  out.tie = 2 * votes == n;
  if (out.tie) std::clog << "warning: majority_vote tie among " << n << " members; class 0\n";
  return out;
}

void EnsembleModel::validate() const {
  if (members.size() < 2) throw Error("an ensemble needs at least two members");
  const std::size_t width = member_width(members.front());
  for (const auto& m : members) {
    if (member_width(m) != width) throw Error("ensemble members disagree on the feature schema");
  }
  if (!member_names.empty() && member_names.size() != members.size()) {
    throw Error("ensemble member names do not match members");
  }
}

std::vector<double> EnsembleModel::member_probabilities(std::span<const double> x) const {
  std::vector<double> out;
  out.reserve(members.size());
  for (const auto& m : members) out.push_back(member_proba(m, x));
  return out;
}

double EnsembleModel::predict_proba(std::span<const double> x) const {
  return soft_vote(member_probabilities(x));
}

int EnsembleModel::predict_label(std::span<const double> x) const {
  const auto p = member_probabilities(x);
  if (vote_mode == VoteMode::hard) return majority_vote(p, threshold).label;
  return soft_vote(p) > threshold ? 1 : 0;
}

std::string to_string(VoteMode mode) { return mode == VoteMode::soft ? "soft" : "hard"; }

VoteMode vote_mode_from_string(const std::string& name) {
  if (name == "soft") return VoteMode::soft;
  if (name == "hard") return VoteMode::hard;
  throw ConfigError("unknown vote mode '" + name + "'");
}

}  // namespace rfq::ensemble
