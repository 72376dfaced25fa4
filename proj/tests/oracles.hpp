#pragma once

// Independent reference computations for the tests. Nothing here calls into
// the library's numerics; only its data types are shared.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <span>
#include <vector>

#include "rfq/bnt.hpp"
#include "rfq/matrix.hpp"
#include "rfq/random.hpp"

namespace oracle {

inline long double log_beta(long double a, long double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

inline double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

inline double gate_value(const rfq::bnt::GateNode& g, std::span<const double> x) {
  double z = g.bias;
  for (std::size_t k = 0; k < x.size(); ++k) z += g.weights[k] * x[k];
  return logistic(z);
}

/// Leaf reached by sign routing: left iff the affine form is positive.
inline rfq::bnt::NodeId hard_leaf(const rfq::bnt::BntModel& m, std::span<const double> x) {
  rfq::bnt::NodeId id = m.root;
  while (!m.nodes[id].is_leaf()) {
    const auto& g = m.nodes[id].gate();
    double z = g.bias;
    for (std::size_t k = 0; k < x.size(); ++k) z += g.weights[k] * x[k];
    id = z > 0.0 ? g.left : g.right;
  }
  return id;
}

/// Per-leaf soft memberships by explicit recursion over root-to-leaf paths.
inline std::map<rfq::bnt::NodeId, double> memberships(const rfq::bnt::BntModel& m,
                                                      std::span<const double> x) {
  std::map<rfq::bnt::NodeId, double> out;
  std::function<void(rfq::bnt::NodeId, double)> walk = [&](rfq::bnt::NodeId id, double p) {
    const auto& node = m.nodes[id];
    if (node.is_leaf()) {
      out[id] = p;
      return;
    }
    const double g = gate_value(node.gate(), x);
    walk(node.gate().left, p * g);
    walk(node.gate().right, p * (1.0 - g));
  };
  walk(m.root, 1.0);
  return out;
}

/// Exact Beta-Bernoulli marginal log-likelihood of a hard partition, by counting.
inline long double hard_marginal_loglik(const rfq::bnt::BntModel& m, const rfq::Matrix& X,
                                        std::span<const int> y) {
  const long double a = m.hyperparams.prior_alpha;
  const long double b = m.hyperparams.prior_beta;
  std::map<rfq::bnt::NodeId, std::pair<long, long>> counts;
  for (auto id : m.leaf_ids()) counts[id] = {0, 0};
  for (std::size_t i = 0; i < X.rows(); ++i) {
    auto& c = counts[hard_leaf(m, X.row(i))];
    (y[i] == 0 ? c.first : c.second) += 1;
  }
  long double total = 0.0L;
  for (const auto& [id, c] : counts) total += log_beta(a + c.first, b + c.second) - log_beta(a, b);
  return total;
}

/// E over configurations omega (each sample assigned to one leaf with its membership
/// probability) of sum_l [ln B(a'_l(omega), b'_l(omega)) - ln B(a, b)], by enumeration.
inline long double configuration_sum_loglik(const rfq::bnt::BntModel& m, const rfq::Matrix& X,
                                            std::span<const int> y) {
  const auto leaves = m.leaf_ids();
  const std::size_t L = leaves.size();
  const std::size_t n = X.rows();
  std::vector<std::vector<long double>> p(n, std::vector<long double>(L));
  for (std::size_t i = 0; i < n; ++i) {
    auto mem = memberships(m, X.row(i));
    for (std::size_t l = 0; l < L; ++l) p[i][l] = mem[leaves[l]];
  }
  const long double a = m.hyperparams.prior_alpha;
  const long double b = m.hyperparams.prior_beta;
  std::vector<std::size_t> assign(n, 0);
  long double expectation = 0.0L;
  for (;;) {
    long double weight = 1.0L;
    std::vector<long> n0(L, 0), n1(L, 0);
    for (std::size_t i = 0; i < n; ++i) {
      weight *= p[i][assign[i]];
      (y[i] == 0 ? n0 : n1)[assign[i]] += 1;
    }
    long double value = 0.0L;
    for (std::size_t l = 0; l < L; ++l) value += log_beta(a + n0[l], b + n1[l]) - log_beta(a, b);
    expectation += weight * value;
    std::size_t i = 0;
    while (i < n && ++assign[i] == L) assign[i++] = 0;
    if (i == n) break;
  }
  return expectation;
}

/// Jensen bound recomputed from the recursion memberships.
inline long double soft_bound(const rfq::bnt::BntModel& m, const rfq::Matrix& X,
                              std::span<const int> y) {
  const long double a = m.hyperparams.prior_alpha;
  const long double b = m.hyperparams.prior_beta;
  std::map<rfq::bnt::NodeId, std::pair<long double, long double>> soft;
  for (auto id : m.leaf_ids()) soft[id] = {a, b};
  for (std::size_t i = 0; i < X.rows(); ++i) {
    for (const auto& [id, p] : memberships(m, X.row(i))) {
      (y[i] == 0 ? soft[id].first : soft[id].second) += p;
    }
  }
  long double total = 0.0L;
  for (const auto& [id, ab] : soft) total += log_beta(ab.first, ab.second) - log_beta(a, b);
  return total;
}

/// Random tree: repeated splits of uniformly chosen leaves with N(0, scale^2) parameters.
inline rfq::bnt::BntModel random_tree(rfq::RandomStream& rng, std::size_t dim,
                                      std::size_t n_leaves, double scale = 1.5) {
  auto m = rfq::bnt::BntModel::single_leaf(dim);
  while (m.n_leaves() < n_leaves) {
    const auto leaves = m.leaf_ids();
    const auto pick = leaves[static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(leaves.size()) - 1))];
    std::vector<double> w(dim);
    for (double& v : w) v = scale * rng.normal();
    m.split_leaf(pick, w, 0.5 * scale * rng.normal());
  }
  m.fitted = true;
  return m;
}

inline void random_data(rfq::RandomStream& rng, std::size_t n, std::size_t dim, rfq::Matrix& X,
                        std::vector<int>& y) {
  X = rfq::Matrix(n, dim);
  y.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < dim; ++k) X(i, k) = rng.normal();
    y[i] = rng.uniform() < 0.5 ? 1 : 0;
  }
}

/// Gate parameters flattened in (gate preorder, weights..., bias) order.
inline std::vector<double*> gate_parameters(rfq::bnt::BntModel& m) {
  std::vector<double*> out;
  for (auto id : m.gate_ids()) {
    auto& g = m.nodes[id].gate();
    for (double& w : g.weights) out.push_back(&w);
    out.push_back(&g.bias);
  }
  return out;
}

/// Central finite differences of the Jensen bound (long-double recursion) with step h.
inline std::vector<double> fd_gradient(rfq::bnt::BntModel m, const rfq::Matrix& X,
                                       std::span<const int> y, double h = 1e-5) {
  std::vector<double> out;
  for (double* theta : gate_parameters(m)) {
    const double keep = *theta;
    *theta = keep + h;
    const long double up = soft_bound(m, X, y);
    *theta = keep - h;
    const long double down = soft_bound(m, X, y);
    *theta = keep;
    out.push_back(static_cast<double>((up - down) / (2.0L * h)));
  }
  return out;
}

/// Relative error ||a - b||_inf / max(||b||_inf, floor).
inline double relative_error(std::span<const double> a, std::span<const double> b,
                             double floor = 1e-6) {
  double diff = 0.0, scale = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    diff = std::max(diff, std::abs(a[k] - b[k]));
    scale = std::max(scale, std::abs(b[k]));
  }
  return diff / std::max(scale, floor);
}

/// Least squares by normal equations in long double with Gaussian elimination.
inline std::vector<long double> normal_equations(const std::vector<std::vector<double>>& design,
                                                 std::span<const double> target) {
  const std::size_t p = design.front().size();
  std::vector<std::vector<long double>> A(p, std::vector<long double>(p + 1, 0.0L));
  for (std::size_t i = 0; i < design.size(); ++i) {
    for (std::size_t r = 0; r < p; ++r) {
      for (std::size_t c = 0; c < p; ++c) A[r][c] += (long double)design[i][r] * design[i][c];
      A[r][p] += (long double)design[i][r] * target[i];
    }
  }
  for (std::size_t col = 0; col < p; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < p; ++r) {
      if (std::fabs(A[r][col]) > std::fabs(A[piv][col])) piv = r;
    }
    std::swap(A[col], A[piv]);
    for (std::size_t r = 0; r < p; ++r) {
      if (r == col) continue;
      const long double f = A[r][col] / A[col][col];
      for (std::size_t c = col; c <= p; ++c) A[r][c] -= f * A[col][c];
    }
  }
  std::vector<long double> beta(p);
  for (std::size_t r = 0; r < p; ++r) beta[r] = A[r][p] / A[r][r];
  return beta;
}

/// Unregularised logistic regression by plain gradient descent; returns {intercept, w...}.
inline std::vector<double> logistic_gd(const rfq::Matrix& X, std::span<const int> y,
                                       std::size_t iterations = 200000, double step = 0.5) {
  const std::size_t n = X.rows(), d = X.cols();
  std::vector<double> theta(d + 1, 0.0);
  std::vector<double> grad(d + 1);
  for (std::size_t it = 0; it < iterations; ++it) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double z = theta[0];
      for (std::size_t k = 0; k < d; ++k) z += theta[k + 1] * X(i, k);
      const double r = logistic(z) - y[i];
      grad[0] += r;
      for (std::size_t k = 0; k < d; ++k) grad[k + 1] += r * X(i, k);
    }
    double norm = 0.0;
    for (std::size_t k = 0; k <= d; ++k) {
      theta[k] -= step * grad[k] / static_cast<double>(n);
      norm += grad[k] * grad[k];
    }
    if (std::sqrt(norm) / static_cast<double>(n) < 1e-12) break;
  }
  return theta;
}

inline double mean_log_loss(std::span<const int> y, std::span<const double> p) {
  long double s = 0.0L;
  for (std::size_t i = 0; i < y.size(); ++i) s -= y[i] ? std::log((long double)p[i]) : std::log1p(-(long double)p[i]);
  return static_cast<double>(s / y.size());
}

/// Exhaustive search of the feasible grid: returns the winning grid index.
/// Equal payoffs go to the index farther from zero (less aggressive).
inline int brute_force_argmax(const std::function<double(int)>& payoff_at_index, bool bid,
                              int half_width = 100) {
  int best = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  for (int k = -half_width; k <= half_width; ++k) {
    if (bid ? k > 0 : k < 0) continue;
    const double v = payoff_at_index(k);
    if (v > best_value || (v == best_value && std::abs(k) > std::abs(best))) {
      best = k;
      best_value = v;
    }
  }
  return best;
}

}  // namespace oracle
