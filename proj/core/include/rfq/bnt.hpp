#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "rfq/matrix.hpp"
#include "rfq/random.hpp"

// Bayesian Neural Tree: a soft binary decision tree with sigmoid hyperplane
// gates and Beta-Bernoulli leaves. The tree is grown one gate at a time and its
// gate parameters are trained by Adam ascent on the Jensen lower bound
//
//   c = sum_l [ ln B(a'_l, b'_l) - ln B(a, b) ]
//   a'_l = a + sum_i p(x_i in l) (1 - y_i),   b'_l = b + sum_i p(x_i in l) y_i
//
// of the Beta-Bernoulli marginal likelihood. Leaf parameters are never trained
// by gradient; they are the soft-count posteriors above.
namespace rfq::bnt {

using NodeId = int;
inline constexpr NodeId kNoNode = -1;

/// Internal node. g(x) = sigmoid(bias + w.x) is the probability of routing LEFT.
struct GateNode {
  std::vector<double> weights;
  double bias = 0.0;
  NodeId left = kNoNode;
  NodeId right = kNoNode;

  friend bool operator==(const GateNode&, const GateNode&) = default;
};

/// Leaf with its Beta posterior and unexplained potential c_l = ln B(a', b') - ln B(a, b).
struct LeafNode {
  double alpha_post = 1.0;  // prior + soft count of y = 0
  double beta_post = 1.0;   // prior + soft count of y = 1
  double potential = 0.0;

  double p_one() const { return beta_post / (alpha_post + beta_post); }

  friend bool operator==(const LeafNode&, const LeafNode&) = default;
};

struct Node {
  NodeId parent = kNoNode;
  std::variant<GateNode, LeafNode> body;

  bool is_leaf() const { return std::holds_alternative<LeafNode>(body); }
  GateNode& gate() { return std::get<GateNode>(body); }
  const GateNode& gate() const { return std::get<GateNode>(body); }
  LeafNode& leaf() { return std::get<LeafNode>(body); }
  const LeafNode& leaf() const { return std::get<LeafNode>(body); }

  friend bool operator==(const Node&, const Node&) = default;
};

struct BntHyperparams {
  double prior_alpha = 1.0;
  double prior_beta = 1.0;
  double pruning_factor = 1.0;
  std::size_t n_iter = 50;
  double learning_rate_init = 0.05;
  std::size_t n_gradient_descent_steps = 100;
  double initial_relative_stiffness = 2.0;
  std::uint64_t seed = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  /// Halve (and finally reject) Adam steps that would lower the bound.
  bool monotone_backtracking = false;

  /// Throws ConfigError on values that make training ill-defined.
  void validate() const;
  /// Human-readable notes for values outside the recommended ranges
  /// (pruning factor [1, 1.05], n_iter [50, 500], stiffness [2, 10]).
  std::vector<std::string> range_violations() const;

  friend bool operator==(const BntHyperparams&, const BntHyperparams&) = default;
};

struct TrainingLogEntry {
  std::size_t iteration = 0;
  double bound = 0.0;
  std::size_t n_leaves = 0;
  bool grown = false;  // false when the growth attempt was rejected

  friend bool operator==(const TrainingLogEntry&, const TrainingLogEntry&) = default;
};

struct BntModel {
  std::size_t dim = 0;
  NodeId root = kNoNode;
  std::vector<Node> nodes;
  BntHyperparams hyperparams;
  std::vector<TrainingLogEntry> training_log;
  bool fitted = false;

  /// A one-leaf tree carrying the prior.
  static BntModel single_leaf(std::size_t dim, const BntHyperparams& hyperparams = {});

  std::size_t n_leaves() const;
  std::size_t n_gates() const;
  std::vector<NodeId> leaf_ids() const;   // preorder
  std::vector<NodeId> gate_ids() const;   // preorder
  std::vector<NodeId> preorder() const;

  /// Replaces leaf `id` by a gate with two fresh prior leaves; returns {left, right}.
  std::pair<NodeId, NodeId> split_leaf(NodeId id, std::vector<double> weights, double bias);

  /// Renumbers nodes in preorder and drops unreachable ones.
  void compact();

  /// Throws Error unless the node graph is a binary tree with consistent parent links,
  /// finite gate parameters of width dim, and positive leaf posteriors.
  void validate() const;

  friend bool operator==(const BntModel&, const BntModel&) = default;
};

struct LeafMass {
  NodeId leaf = kNoNode;
  double probability = 0.0;
};

/// ln B(a, b) via log-Gamma.
double log_beta(double a, double b);

double gate_eval(const GateNode& gate, std::span<const double> x);

/// p(x in l) for every leaf, in preorder. Sums to one.
std::vector<LeafMass> leaf_membership(const BntModel& model, std::span<const double> x);

/// sum_l p(y = 1 | l) p(x in l). Throws Error when the model is not fitted.
double predict_proba(const BntModel& model, std::span<const double> x);
std::vector<double> predict_proba(const BntModel& model, const Matrix& X);

/// Recomputes every leaf posterior and potential from (X, y); returns the bound c.
double posterior_and_bound(BntModel& model, const Matrix& X, std::span<const int> y);

/// Bound for the current gate parameters without touching the model.
double bound(const BntModel& model, const Matrix& X, std::span<const int> y);

struct GateGradient {
  std::vector<double> weights;
  double bias = 0.0;
};

/// dc/d(gate parameters), indexed by node id; leaf entries are empty.
std::vector<GateGradient> grad_bound(const BntModel& model, const Matrix& X,
                                     std::span<const int> y);

/// Samples a leaf with probability c_l / sum c. Falls back to a softmax over -c_l when
/// potentials have mixed signs, and to uniform when they are all zero.
NodeId select_leaf(const BntModel& model, RandomStream& rng);

/// Leaf selection probabilities used by select_leaf, aligned with model.leaf_ids().
std::vector<double> leaf_selection_probabilities(const BntModel& model);

struct GrowResult {
  bool accepted = false;
  NodeId gate = kNoNode;
  std::vector<double> local_bounds;  // bound at the start, then after each local step
};

/// Splits a sampled leaf and trains only the new gate for floor(steps / 2) Adam steps.
GrowResult grow_step(BntModel& model, const Matrix& X, std::span<const int> y, RandomStream& rng);

/// ceil(steps / 2) Adam steps on all gates jointly, then refreshes posteriors.
/// Returns the bound at the start and after each step (just the bound when there are no gates).
std::vector<double> global_ascent(BntModel& model, const Matrix& X, std::span<const int> y);

/// Collapses splits whose children are both leaves unless
/// c_left + c_right > c_merged / pruning_factor, repeating until nothing changes.
/// Returns the number of gates removed.
std::size_t prune(BntModel& model, const Matrix& X, std::span<const int> y);

/// Full growth loop: select leaf, grow, global ascent, prune, for n_iter attempts.
BntModel fit(const Matrix& X, std::span<const int> y, const BntHyperparams& hyperparams);

struct FeatureImportance {
  std::vector<double> scores;  // nonnegative, sums to one
  bool degenerate = false;     // single-leaf model: scores are uniform
};

/// score_k proportional to sum over gates of (data mass at gate) * |w_k| / ||w||_1.
FeatureImportance feature_importance(const BntModel& model, const Matrix& X);

struct GridSpec {
  double min_i = -1.0;
  double max_i = 1.0;
  std::size_t n_i = 21;
  double min_j = -1.0;
  double max_j = 1.0;
  std::size_t n_j = 21;
};

struct BoundaryPoint {
  double value_i = 0.0;
  double value_j = 0.0;
  double probability = 0.0;
};

/// predict_proba over a rectangular grid in two features, the rest held at baseline.
/// Rows are ordered with feature i outermost.
std::vector<BoundaryPoint> decision_boundary_grid(const BntModel& model, std::size_t feature_i,
                                                  std::size_t feature_j, const GridSpec& grid,
                                                  std::span<const double> baseline);

/// Column-wise medians, the default baseline row for decision_boundary_grid.
std::vector<double> column_medians(const Matrix& X);

}  // namespace rfq::bnt
