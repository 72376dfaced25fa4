#include "rfq/bnt.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iostream>
#include <numeric>

#include <boost/math/special_functions/digamma.hpp>

#include "rfq/error.hpp"

namespace rfq::bnt {

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double affine(const GateNode& gate, std::span<const double> x) {
  double z = gate.bias;
  for (std::size_t k = 0; k < gate.weights.size(); ++k) z += gate.weights[k] * x[k];
  return z;
}

void check_data(const BntModel& model, const Matrix& X, std::span<const int> y) {
  if (X.rows() == 0) throw Error("BNT needs at least one sample");
  if (X.rows() != y.size()) throw Error("X and y differ in length");
  if (X.cols() != model.dim) {
    throw Error("X has " + std::to_string(X.cols()) + " columns, model expects " +
                std::to_string(model.dim));
  }
  for (int label : y) {
    if (label != 0 && label != 1) throw Error("labels must be 0 or 1");
  }
}

/// Gates in preorder, flattened for the per-sample loops.
struct GateRef {
  NodeId id;
  NodeId left;
  NodeId right;
  const double* weights;
  double bias;
};

std::vector<GateRef> flat_gates(const BntModel& model, const std::vector<NodeId>& order) {
  std::vector<GateRef> out;
  for (NodeId id : order) {
    const Node& node = model.nodes[static_cast<std::size_t>(id)];
    if (node.is_leaf()) continue;
    const GateNode& gate = node.gate();
    out.push_back({id, gate.left, gate.right, gate.weights.data(), gate.bias});
  }
  return out;
}

/// Per-sample memberships and gate values, stored with stride nodes.size().
/// Leaf entries of g are never written. The buffers are reused by the next forward
/// pass on the same thread.
struct Forward {
  std::vector<NodeId> order;
  std::vector<GateRef> gates;
  std::size_t stride = 0;
  const double* mu = nullptr;
  const double* g = nullptr;
};

Forward forward(const BntModel& model, const Matrix& X) {
  Forward f;
  f.order = model.preorder();
  f.gates = flat_gates(model, f.order);
  f.stride = model.nodes.size();
  thread_local std::vector<double> mu_buffer;
  thread_local std::vector<double> g_buffer;
  const std::size_t size = X.rows() * f.stride;
  if (mu_buffer.size() < size) {
    mu_buffer.resize(size);
    g_buffer.resize(size);
  }
  f.mu = mu_buffer.data();
  f.g = g_buffer.data();
  const std::size_t dim = model.dim;
  for (std::size_t i = 0; i < X.rows(); ++i) {
    const double* x = X.row(i).data();
    double* mu = mu_buffer.data() + i * f.stride;
    double* g = g_buffer.data() + i * f.stride;
    mu[model.root] = 1.0;
    for (const GateRef& gate : f.gates) {
      double z = gate.bias;
      for (std::size_t k = 0; k < dim; ++k) z += gate.weights[k] * x[k];
      const double gv = sigmoid(z);
      g[gate.id] = gv;
      mu[gate.left] = mu[gate.id] * gv;
      mu[gate.right] = mu[gate.id] * (1.0 - gv);
    }
  }
  return f;
}

/// Writes soft-count posteriors and potentials into the leaves; returns the bound.
double refresh_leaves(BntModel& model, const Forward& f, std::span<const int> y) {
  const auto& hp = model.hyperparams;
  const double prior = log_beta(hp.prior_alpha, hp.prior_beta);
  std::vector<double> zeros(f.stride, 0.0);
  std::vector<double> ones(f.stride, 0.0);
  const auto leaves = model.leaf_ids();
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double* mu = f.mu + i * f.stride;
    auto& target = y[i] != 0 ? ones : zeros;
    for (NodeId l : leaves) target[l] += mu[l];
  }
  double total = 0.0;
  for (NodeId l : leaves) {
    LeafNode& leaf = model.nodes[static_cast<std::size_t>(l)].leaf();
    leaf.alpha_post = hp.prior_alpha + zeros[l];
    leaf.beta_post = hp.prior_beta + ones[l];
    leaf.potential = log_beta(leaf.alpha_post, leaf.beta_post) - prior;
    total += leaf.potential;
  }
  return total;
}

struct BoundAndGradient {
  double bound = 0.0;
  std::vector<GateGradient> grad;
};

/// Updates the leaves of `model` as a side effect.
BoundAndGradient bound_and_gradient(BntModel& model, const Matrix& X, std::span<const int> y) {
  const Forward f = forward(model, X);
  BoundAndGradient out;
  out.bound = refresh_leaves(model, f, y);

  // dc/dp(x_i in l) for y = 0 and y = 1.
  std::vector<double> d_zero(f.stride, 0.0);
  std::vector<double> d_one(f.stride, 0.0);
  for (NodeId l : model.leaf_ids()) {
    const LeafNode& leaf = model.nodes[static_cast<std::size_t>(l)].leaf();
    const double both = boost::math::digamma(leaf.alpha_post + leaf.beta_post);
    d_zero[l] = boost::math::digamma(leaf.alpha_post) - both;
    d_one[l] = boost::math::digamma(leaf.beta_post) - both;
  }

  out.grad.resize(model.nodes.size());
  for (const GateRef& gate : f.gates) out.grad[gate.id].weights.assign(model.dim, 0.0);

  // Adjoint of the membership of each node, propagated leaves -> root.
  const auto leaves = model.leaf_ids();
  const std::size_t dim = model.dim;
  std::vector<double> adj(f.stride, 0.0);
  for (std::size_t i = 0; i < X.rows(); ++i) {
    const double* mu = f.mu + i * f.stride;
    const double* g = f.g + i * f.stride;
    const auto& leaf_adj = y[i] != 0 ? d_one : d_zero;
    const double* x = X.row(i).data();
    for (NodeId l : leaves) adj[l] = leaf_adj[l];
    for (auto it = f.gates.rbegin(); it != f.gates.rend(); ++it) {
      const double gv = g[it->id];
      const double a_left = adj[it->left];
      const double a_right = adj[it->right];
      adj[it->id] = gv * a_left + (1.0 - gv) * a_right;
      const double dz = mu[it->id] * (a_left - a_right) * gv * (1.0 - gv);
      if (dz == 0.0) continue;
      GateGradient& gg = out.grad[it->id];
      for (std::size_t k = 0; k < dim; ++k) gg.weights[k] += dz * x[k];
      gg.bias += dz;
    }
  }
  return out;
}

std::vector<double> gather(const BntModel& model, const std::vector<NodeId>& gates) {
  std::vector<double> theta;
  for (NodeId id : gates) {
    const GateNode& gate = model.nodes[static_cast<std::size_t>(id)].gate();
    theta.insert(theta.end(), gate.weights.begin(), gate.weights.end());
    theta.push_back(gate.bias);
  }
  return theta;
}

void scatter(BntModel& model, const std::vector<NodeId>& gates, const std::vector<double>& theta) {
  std::size_t k = 0;
  for (NodeId id : gates) {
    GateNode& gate = model.nodes[static_cast<std::size_t>(id)].gate();
    for (double& w : gate.weights) w = theta[k++];
    gate.bias = theta[k++];
  }
}

std::vector<double> gather_grad(const std::vector<GateGradient>& grad,
                                const std::vector<NodeId>& gates) {
  std::vector<double> out;
  for (NodeId id : gates) {
    const GateGradient& gg = grad[static_cast<std::size_t>(id)];
    out.insert(out.end(), gg.weights.begin(), gg.weights.end());
    out.push_back(gg.bias);
  }
  return out;
}

/// Bound and, when grad is non-null, its gradient at parameters theta.
using Objective = std::function<double(const std::vector<double>& theta, std::vector<double>* grad)>;

/// Adam ascent on theta. Returns the bound before each step and after the last.
std::vector<double> adam_ascent(const BntHyperparams& hp, std::vector<double>& theta,
                                const Objective& objective, std::size_t steps) {
  std::vector<double> bounds;
  std::vector<double> m(theta.size(), 0.0);
  std::vector<double> v(theta.size(), 0.0);
  std::vector<double> grad(theta.size());
  std::vector<double> step(theta.size());
  double b1t = 1.0;
  double b2t = 1.0;
  for (std::size_t t = 1; t <= steps; ++t) {
    const double current = objective(theta, &grad);
    bounds.push_back(current);
    b1t *= hp.adam_beta1;
    b2t *= hp.adam_beta2;
    for (std::size_t k = 0; k < theta.size(); ++k) {
      m[k] = hp.adam_beta1 * m[k] + (1.0 - hp.adam_beta1) * grad[k];
      v[k] = hp.adam_beta2 * v[k] + (1.0 - hp.adam_beta2) * grad[k] * grad[k];
      const double m_hat = m[k] / (1.0 - b1t);
      const double v_hat = v[k] / (1.0 - b2t);
      step[k] = hp.learning_rate_init * m_hat / (std::sqrt(v_hat) + hp.adam_epsilon);
    }
    if (!hp.monotone_backtracking) {
      for (std::size_t k = 0; k < theta.size(); ++k) theta[k] += step[k];
      continue;
    }
    std::vector<double> candidate(theta.size());
    for (int halving = 0; halving < 20; ++halving) {
      for (std::size_t k = 0; k < theta.size(); ++k) candidate[k] = theta[k] + step[k];
      if (objective(candidate, nullptr) >= current) {
        theta = candidate;
        break;
      }
      for (double& s : step) s *= 0.5;
    }
  }
  bounds.push_back(objective(theta, nullptr));
  return bounds;
}

/// Adam ascent over the given gates of the model.
std::vector<double> adam_on_gates(BntModel& model, const Matrix& X, std::span<const int> y,
                                  const std::vector<NodeId>& gates, std::size_t steps) {
  if (gates.empty()) return {posterior_and_bound(model, X, y)};
  std::vector<double> theta = gather(model, gates);
  const Objective objective = [&](const std::vector<double>& th, std::vector<double>* grad) {
    scatter(model, gates, th);
    if (!grad) return posterior_and_bound(model, X, y);
    const BoundAndGradient bg = bound_and_gradient(model, X, y);
    *grad = gather_grad(bg.grad, gates);
    return bg.bound;
  };
  auto bounds = adam_ascent(model.hyperparams, theta, objective, steps);
  scatter(model, gates, theta);
  posterior_and_bound(model, X, y);
  return bounds;
}

/// Adam ascent on one gate whose children are both leaves. The rest of the tree
/// is fixed, so only the gate's own routing is recomputed per step.
std::vector<double> adam_on_fringe_gate(BntModel& model, const Matrix& X, std::span<const int> y,
                                        NodeId gate_id, std::size_t steps) {
  const auto& hp = model.hyperparams;
  const GateNode& gate = model.nodes[static_cast<std::size_t>(gate_id)].gate();
  const NodeId left = gate.left;
  const NodeId right = gate.right;

  // Membership of the gate itself, and the potentials of every other leaf.
  const Forward f = forward(model, X);
  std::vector<double> mu(X.rows());
  for (std::size_t i = 0; i < X.rows(); ++i) mu[i] = f.mu[i * f.stride + static_cast<std::size_t>(gate_id)];
  refresh_leaves(model, f, y);
  double others = 0.0;
  for (NodeId l : model.leaf_ids()) {
    if (l != left && l != right) others += model.nodes[static_cast<std::size_t>(l)].leaf().potential;
  }
  const double prior = log_beta(hp.prior_alpha, hp.prior_beta);
  const std::size_t dim = model.dim;
  std::vector<double> g(X.rows());

  const Objective objective = [&](const std::vector<double>& th, std::vector<double>* grad) {
    double l0 = 0.0, l1 = 0.0, r0 = 0.0, r1 = 0.0;
    for (std::size_t i = 0; i < X.rows(); ++i) {
      const auto x = X.row(i);
      double z = th[dim];
      for (std::size_t k = 0; k < dim; ++k) z += th[k] * x[k];
      g[i] = sigmoid(z);
      const double ml = mu[i] * g[i];
      const double mr = mu[i] * (1.0 - g[i]);
      if (y[i] != 0) {
        l1 += ml;
        r1 += mr;
      } else {
        l0 += ml;
        r0 += mr;
      }
    }
    const double la = hp.prior_alpha + l0, lb = hp.prior_beta + l1;
    const double ra = hp.prior_alpha + r0, rb = hp.prior_beta + r1;
    const double c = others + (log_beta(la, lb) - prior) + (log_beta(ra, rb) - prior);
    if (!grad) return c;
    const double l_both = boost::math::digamma(la + lb);
    const double r_both = boost::math::digamma(ra + rb);
    const double diff_zero = (boost::math::digamma(la) - l_both) - (boost::math::digamma(ra) - r_both);
    const double diff_one = (boost::math::digamma(lb) - l_both) - (boost::math::digamma(rb) - r_both);
    std::fill(grad->begin(), grad->end(), 0.0);
    for (std::size_t i = 0; i < X.rows(); ++i) {
      const double dz = mu[i] * (y[i] != 0 ? diff_one : diff_zero) * g[i] * (1.0 - g[i]);
      if (dz == 0.0) continue;
      const auto x = X.row(i);
      for (std::size_t k = 0; k < dim; ++k) (*grad)[k] += dz * x[k];
      (*grad)[dim] += dz;
    }
    return c;
  };
  const std::vector<NodeId> gates{gate_id};
  std::vector<double> theta = gather(model, gates);
  auto bounds = adam_ascent(hp, theta, objective, steps);
  scatter(model, gates, theta);
  posterior_and_bound(model, X, y);
  return bounds;
}

}  // namespace

// ---------------------------------------------------------------------------

void BntHyperparams::validate() const {
  if (!(prior_alpha > 0.0) || !(prior_beta > 0.0)) throw ConfigError("Beta prior must be positive");
  if (!(pruning_factor > 0.0)) throw ConfigError("pruning_factor must be positive");
  if (!(learning_rate_init >= 0.0)) throw ConfigError("learning_rate_init must be >= 0");
  if (!(initial_relative_stiffness > 0.0)) throw ConfigError("stiffness must be positive");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw ConfigError("Adam decay rates must lie in [0, 1)");
  }
  if (!(adam_epsilon > 0.0)) throw ConfigError("adam_epsilon must be positive");
}

std::vector<std::string> BntHyperparams::range_violations() const {
  std::vector<std::string> notes;
  if (pruning_factor < 1.0 || pruning_factor > 1.05) notes.push_back("pruning_factor outside [1, 1.05]");
  if (n_iter < 50 || n_iter > 500) notes.push_back("n_iter outside [50, 500]");
  if (initial_relative_stiffness < 2.0 || initial_relative_stiffness > 10.0) {
    notes.push_back("initial_relative_stiffness outside [2, 10]");
  }
  return notes;
}

BntModel BntModel::single_leaf(std::size_t dim, const BntHyperparams& hyperparams) {
  BntModel model;
  model.dim = dim;
  model.hyperparams = hyperparams;
  LeafNode leaf;
  leaf.alpha_post = hyperparams.prior_alpha;
  leaf.beta_post = hyperparams.prior_beta;
  model.nodes.push_back(Node{kNoNode, leaf});
  model.root = 0;
  return model;
}

std::vector<NodeId> BntModel::preorder() const {
  std::vector<NodeId> order;
  if (root == kNoNode) return order;
  std::vector<NodeId> stack{root};
  while (!stack.empty()) {
    const NodeId id = stack.back();
    stack.pop_back();
    order.push_back(id);
    const Node& node = nodes[static_cast<std::size_t>(id)];
    if (!node.is_leaf()) {
      stack.push_back(node.gate().right);
      stack.push_back(node.gate().left);
    }
  }
  return order;
}

std::vector<NodeId> BntModel::leaf_ids() const {
  std::vector<NodeId> out;
  for (NodeId id : preorder()) {
    if (nodes[static_cast<std::size_t>(id)].is_leaf()) out.push_back(id);
  }
  return out;
}

std::vector<NodeId> BntModel::gate_ids() const {
  std::vector<NodeId> out;
  for (NodeId id : preorder()) {
    if (!nodes[static_cast<std::size_t>(id)].is_leaf()) out.push_back(id);
  }
  return out;
}

std::size_t BntModel::n_leaves() const { return leaf_ids().size(); }
std::size_t BntModel::n_gates() const { return gate_ids().size(); }

std::pair<NodeId, NodeId> BntModel::split_leaf(NodeId id, std::vector<double> weights, double bias) {
  if (id < 0 || static_cast<std::size_t>(id) >= nodes.size() ||
      !nodes[static_cast<std::size_t>(id)].is_leaf()) {
    throw Error("split_leaf: node " + std::to_string(id) + " is not a leaf");
  }
  if (weights.size() != dim) throw Error("split_leaf: weight vector has the wrong dimension");
  LeafNode fresh;
  fresh.alpha_post = hyperparams.prior_alpha;
  fresh.beta_post = hyperparams.prior_beta;
  const auto left = static_cast<NodeId>(nodes.size());
  const NodeId right = left + 1;
  nodes.push_back(Node{id, fresh});
  nodes.push_back(Node{id, fresh});
  GateNode gate;
  gate.weights = std::move(weights);
  gate.bias = bias;
  gate.left = left;
  gate.right = right;
  nodes[static_cast<std::size_t>(id)].body = std::move(gate);
  return {left, right};
}

void BntModel::compact() {
  const auto order = preorder();
  std::vector<NodeId> remap(nodes.size(), kNoNode);
  for (std::size_t k = 0; k < order.size(); ++k) remap[order[k]] = static_cast<NodeId>(k);
  std::vector<Node> out;
  out.reserve(order.size());
  for (NodeId id : order) {
    Node node = nodes[static_cast<std::size_t>(id)];
    node.parent = node.parent == kNoNode ? kNoNode : remap[node.parent];
    if (!node.is_leaf()) {
      node.gate().left = remap[node.gate().left];
      node.gate().right = remap[node.gate().right];
    }
    out.push_back(std::move(node));
  }
  nodes = std::move(out);
  root = nodes.empty() ? kNoNode : 0;
}

void BntModel::validate() const {
  if (root < 0 || static_cast<std::size_t>(root) >= nodes.size()) throw Error("BNT root is invalid");
  if (nodes[static_cast<std::size_t>(root)].parent != kNoNode) throw Error("BNT root has a parent");
  std::vector<int> seen(nodes.size(), 0);
  std::vector<NodeId> stack{root};
  while (!stack.empty()) {
    const NodeId id = stack.back();
    stack.pop_back();
    if (id < 0 || static_cast<std::size_t>(id) >= nodes.size()) throw Error("BNT child id out of range");
    if (seen[id]++) throw Error("BNT node " + std::to_string(id) + " is reachable twice");
    const Node& node = nodes[static_cast<std::size_t>(id)];
    if (node.is_leaf()) {
      const LeafNode& leaf = node.leaf();
      if (!(leaf.alpha_post > 0.0) || !(leaf.beta_post > 0.0) || !std::isfinite(leaf.potential)) {
        throw Error("BNT leaf " + std::to_string(id) + " has an invalid posterior");
      }
      continue;
    }
    const GateNode& gate = node.gate();
    if (gate.weights.size() != dim) throw Error("BNT gate " + std::to_string(id) + " has the wrong width");
    if (!std::isfinite(gate.bias) ||
        !std::all_of(gate.weights.begin(), gate.weights.end(), [](double w) { return std::isfinite(w); })) {
      throw Error("BNT gate " + std::to_string(id) + " has non-finite parameters");
    }
    for (NodeId child : {gate.left, gate.right}) {
      if (child < 0 || static_cast<std::size_t>(child) >= nodes.size()) {
        throw Error("BNT gate " + std::to_string(id) + " has a missing child");
      }
      if (nodes[static_cast<std::size_t>(child)].parent != id) {
        throw Error("BNT node " + std::to_string(child) + " has an inconsistent parent link");
      }
      stack.push_back(child);
    }
  }
}

// ---------------------------------------------------------------------------

double log_beta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

double gate_eval(const GateNode& gate, std::span<const double> x) {
  if (x.size() != gate.weights.size()) throw Error("gate_eval: dimension mismatch");
  return sigmoid(affine(gate, x));
}

std::vector<LeafMass> leaf_membership(const BntModel& model, std::span<const double> x) {
  if (x.size() != model.dim) throw Error("leaf_membership: dimension mismatch");
  std::vector<double> mu(model.nodes.size(), 0.0);
  std::vector<LeafMass> out;
  mu[model.root] = 1.0;
  for (NodeId id : model.preorder()) {
    const Node& node = model.nodes[static_cast<std::size_t>(id)];
    if (node.is_leaf()) {
      out.push_back({id, mu[id]});
      continue;
    }
    const GateNode& gate = node.gate();
    const double g = sigmoid(affine(gate, x));
    mu[gate.left] = mu[id] * g;
    mu[gate.right] = mu[id] * (1.0 - g);
  }
  return out;
}

double predict_proba(const BntModel& model, std::span<const double> x) {
  if (!model.fitted) throw Error("BNT model is not fitted");
  double p = 0.0;
  for (const LeafMass& lm : leaf_membership(model, x)) {
    p += lm.probability * model.nodes[static_cast<std::size_t>(lm.leaf)].leaf().p_one();
  }
  return p;
}

std::vector<double> predict_proba(const BntModel& model, const Matrix& X) {
  std::vector<double> out(X.rows());
  for (std::size_t i = 0; i < X.rows(); ++i) out[i] = predict_proba(model, X.row(i));
  return out;
}

double posterior_and_bound(BntModel& model, const Matrix& X, std::span<const int> y) {
  check_data(model, X, y);
  return refresh_leaves(model, forward(model, X), y);
}

double bound(const BntModel& model, const Matrix& X, std::span<const int> y) {
  BntModel scratch = model;
  return posterior_and_bound(scratch, X, y);
}

std::vector<GateGradient> grad_bound(const BntModel& model, const Matrix& X, std::span<const int> y) {
  check_data(model, X, y);
  BntModel scratch = model;
  return bound_and_gradient(scratch, X, y).grad;
}

std::vector<double> leaf_selection_probabilities(const BntModel& model) {
  const auto leaves = model.leaf_ids();
  std::vector<double> c;
  c.reserve(leaves.size());
  for (NodeId l : leaves) c.push_back(model.nodes[static_cast<std::size_t>(l)].leaf().potential);
  const bool all_nonpos = std::all_of(c.begin(), c.end(), [](double v) { return v <= 0.0; });
  const bool all_nonneg = std::all_of(c.begin(), c.end(), [](double v) { return v >= 0.0; });
  const double total = std::accumulate(c.begin(), c.end(), 0.0);
  std::vector<double> p(c.size());
  if ((all_nonpos || all_nonneg) && total != 0.0) {
    for (std::size_t k = 0; k < c.size(); ++k) p[k] = c[k] / total;
  } else if (total == 0.0 && (all_nonpos || all_nonneg)) {
    std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(c.size()));
  } else {
    // Mixed signs (non-uniform prior): softmax over -c.
    const double top = -*std::min_element(c.begin(), c.end());
    double z = 0.0;
    for (std::size_t k = 0; k < c.size(); ++k) z += p[k] = std::exp(-c[k] - top);
    for (double& v : p) v /= z;
  }
  return p;
}

NodeId select_leaf(const BntModel& model, RandomStream& rng) {
  const auto leaves = model.leaf_ids();
  const auto p = leaf_selection_probabilities(model);
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t k = 0; k < leaves.size(); ++k) {
    acc += p[k];
    if (u < acc) return leaves[k];
  }
  return leaves.back();
}

GrowResult grow_step(BntModel& model, const Matrix& X, std::span<const int> y, RandomStream& rng) {
  check_data(model, X, y);
  const auto& hp = model.hyperparams;
  GrowResult result;
  posterior_and_bound(model, X, y);
  const NodeId leaf_id = select_leaf(model, rng);

  const LeafNode& leaf = model.nodes[static_cast<std::size_t>(leaf_id)].leaf();
  const double mass = leaf.alpha_post + leaf.beta_post - hp.prior_alpha - hp.prior_beta;
  if (mass < 2.0 * (hp.prior_alpha + hp.prior_beta)) return result;

  // Membership-weighted centroid of the leaf's data.
  const Forward f = forward(model, X);
  std::vector<double> centroid(model.dim, 0.0);
  double weight = 0.0;
  for (std::size_t i = 0; i < X.rows(); ++i) {
    const double mu = f.mu[i * f.stride + static_cast<std::size_t>(leaf_id)];
    weight += mu;
    const auto x = X.row(i);
    for (std::size_t k = 0; k < model.dim; ++k) centroid[k] += mu * x[k];
  }
  for (double& c : centroid) c /= weight;

  // Direction uniform on the sphere, scaled to the initial stiffness.
  std::vector<double> w(model.dim);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (double& wk : w) {
      wk = rng.normal();
      norm += wk * wk;
    }
    norm = std::sqrt(norm);
  } while (norm == 0.0);
  for (double& wk : w) wk *= hp.initial_relative_stiffness / norm;
  const double bias = -std::inner_product(w.begin(), w.end(), centroid.begin(), 0.0);

  model.split_leaf(leaf_id, std::move(w), bias);
  result.accepted = true;
  result.gate = leaf_id;
  result.local_bounds = adam_on_fringe_gate(model, X, y, leaf_id, hp.n_gradient_descent_steps / 2);
  return result;
}

std::vector<double> global_ascent(BntModel& model, const Matrix& X, std::span<const int> y) {
  check_data(model, X, y);
  const std::size_t steps = model.hyperparams.n_gradient_descent_steps -
                            model.hyperparams.n_gradient_descent_steps / 2;
  return adam_on_gates(model, X, y, model.gate_ids(), steps);
}

std::size_t prune(BntModel& model, const Matrix& X, std::span<const int> y) {
  posterior_and_bound(model, X, y);
  const auto& hp = model.hyperparams;
  const double prior = log_beta(hp.prior_alpha, hp.prior_beta);
  std::size_t removed = 0;
  bool changed = true;
  while (changed) {
    changed = false;
    const auto order = model.preorder();
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      Node& node = model.nodes[static_cast<std::size_t>(*it)];
      if (node.is_leaf()) continue;
      const GateNode& gate = node.gate();
      const Node& left = model.nodes[static_cast<std::size_t>(gate.left)];
      const Node& right = model.nodes[static_cast<std::size_t>(gate.right)];
      if (!left.is_leaf() || !right.is_leaf()) continue;
      LeafNode merged;
      merged.alpha_post = left.leaf().alpha_post + right.leaf().alpha_post - hp.prior_alpha;
      merged.beta_post = left.leaf().beta_post + right.leaf().beta_post - hp.prior_beta;
      merged.potential = log_beta(merged.alpha_post, merged.beta_post) - prior;
      const double split = left.leaf().potential + right.leaf().potential;
      if (split > merged.potential / hp.pruning_factor) continue;
      node.body = merged;
      ++removed;
      changed = true;
    }
  }
  if (removed > 0) {
    model.compact();
    posterior_and_bound(model, X, y);
  }
  return removed;
}

BntModel fit(const Matrix& X, std::span<const int> y, const BntHyperparams& hyperparams) {
  hyperparams.validate();
  BntModel model = BntModel::single_leaf(X.cols(), hyperparams);
  check_data(model, X, y);
  RandomStream rng(derive_seed(hyperparams.seed, "bnt_fit"));
  double c = posterior_and_bound(model, X, y);
  for (std::size_t a = 0; a < hyperparams.n_iter; ++a) {
    const GrowResult grown = grow_step(model, X, y, rng);
    if (model.n_gates() > 0) {
      global_ascent(model, X, y);
      prune(model, X, y);
    }
    c = posterior_and_bound(model, X, y);
    model.training_log.push_back({a + 1, c, model.n_leaves(), grown.accepted});
  }
  model.compact();
  posterior_and_bound(model, X, y);
  model.fitted = true;
  return model;
}

FeatureImportance feature_importance(const BntModel& model, const Matrix& X) {
  FeatureImportance out;
  out.scores.assign(model.dim, 0.0);
  const auto gates = model.gate_ids();
  if (gates.empty() || X.rows() == 0) {
    std::fill(out.scores.begin(), out.scores.end(), 1.0 / static_cast<double>(model.dim));
    out.degenerate = true;
    std::clog << "warning: feature_importance on a single-leaf model; returning uniform scores\n";
    return out;
  }
  const Forward f = forward(model, X);
  for (NodeId id : gates) {
    double mass = 0.0;
    for (std::size_t i = 0; i < X.rows(); ++i) mass += f.mu[i * f.stride + static_cast<std::size_t>(id)];
    const auto& w = model.nodes[static_cast<std::size_t>(id)].gate().weights;
    double l1 = 0.0;
    for (double wk : w) l1 += std::abs(wk);
    if (l1 == 0.0) continue;
    for (std::size_t k = 0; k < model.dim; ++k) out.scores[k] += mass * std::abs(w[k]) / l1;
  }
  const double total = std::accumulate(out.scores.begin(), out.scores.end(), 0.0);
  if (total <= 0.0) {
    std::fill(out.scores.begin(), out.scores.end(), 1.0 / static_cast<double>(model.dim));
    out.degenerate = true;
    return out;
  }
  for (double& s : out.scores) s /= total;
  return out;
}

std::vector<BoundaryPoint> decision_boundary_grid(const BntModel& model, std::size_t feature_i,
                                                  std::size_t feature_j, const GridSpec& grid,
                                                  std::span<const double> baseline) {
  if (feature_i == feature_j) throw Error("decision_boundary_grid needs two distinct features");
  if (feature_i >= model.dim || feature_j >= model.dim) throw Error("feature index out of range");
  if (baseline.size() != model.dim) throw Error("baseline row has the wrong dimension");
  if (grid.n_i == 0 || grid.n_j == 0) throw Error("grid must have at least one point per axis");
  auto axis = [](double lo, double hi, std::size_t n, std::size_t k) {
    return n == 1 ? lo : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
  };
  std::vector<double> x(baseline.begin(), baseline.end());
  std::vector<BoundaryPoint> out;
  out.reserve(grid.n_i * grid.n_j);
  for (std::size_t a = 0; a < grid.n_i; ++a) {
    x[feature_i] = axis(grid.min_i, grid.max_i, grid.n_i, a);
    for (std::size_t b = 0; b < grid.n_j; ++b) {
      x[feature_j] = axis(grid.min_j, grid.max_j, grid.n_j, b);
      out.push_back({x[feature_i], x[feature_j], predict_proba(model, x)});
    }
  }
  return out;
}

std::vector<double> column_medians(const Matrix& X) {
  std::vector<double> med(X.cols(), 0.0);
  for (std::size_t c = 0; c < X.cols(); ++c) {
    auto col = X.column(c);
    if (col.empty()) continue;
    const auto mid = col.begin() + static_cast<std::ptrdiff_t>(col.size() / 2);
    std::nth_element(col.begin(), mid, col.end());
    if (col.size() % 2 == 1) {
      med[c] = *mid;
    } else {
      const double upper = *mid;
      const double lower = *std::max_element(col.begin(), mid);
      med[c] = 0.5 * (lower + upper);
    }
  }
  return med;
}

}  // namespace rfq::bnt
