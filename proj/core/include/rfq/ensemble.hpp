#pragma once

#include <span>
#include <string>
#include <variant>
#include <vector>

#include "rfq/bnt.hpp"
#include "rfq/linear_models.hpp"
#include "rfq/matrix.hpp"

namespace rfq::ensemble {

enum class VoteMode { soft, hard };

using MemberModel = std::variant<linear::LassoLogisticModel, bnt::BntModel>;

double member_proba(const MemberModel& member, std::span<const double> x);

/// Arithmetic mean of member probabilities. Throws Error on empty input.
double soft_vote(std::span<const double> probabilities);

struct MajorityVote {
  int label = 0;
  bool tie = false;  // even member count with an exact split; resolved to 0
};

/// Class 1 iff strictly more than half of the members have p > threshold.
MajorityVote majority_vote(std::span<const double> probabilities, double threshold = 0.5);

/// Ensemble 1: lasso logistic + BNT (stiffness 2) + BNT (stiffness 6), by default.
struct EnsembleModel {
  std::vector<MemberModel> members;
  std::vector<std::string> member_names;
  VoteMode vote_mode = VoteMode::hard;
  double threshold = 0.5;

  /// Throws Error unless there are at least two members of equal input width.
  void validate() const;

  std::vector<double> member_probabilities(std::span<const double> x) const;
  /// soft_vote of the members, whatever vote_mode says; pricing needs a probability.
  double predict_proba(std::span<const double> x) const;
  /// Class label under vote_mode (soft: mean > threshold, hard: majority_vote).
  int predict_label(std::span<const double> x) const;
};

std::string to_string(VoteMode mode);
VoteMode vote_mode_from_string(const std::string& name);

}  // namespace rfq::ensemble
