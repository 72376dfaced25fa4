#include "rfq/linear_models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/normal.hpp>

#include "rfq/error.hpp"

namespace rfq::linear {

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// log(1 + e^z) without overflow.
double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

/// Largest eigenvalue of [1 X]^T [1 X] / m by power iteration, padded upward.
double lipschitz_bound(const Matrix& X) {
  const std::size_t m = X.rows();
  const std::size_t p = X.cols() + 1;
  std::vector<double> v(p, 1.0 / std::sqrt(static_cast<double>(p)));
  std::vector<double> xv(m);
  double eig = 0.0;
  for (int it = 0; it < 200; ++it) {
    for (std::size_t i = 0; i < m; ++i) {
      const auto x = X.row(i);
      double s = v[0];
      for (std::size_t k = 0; k + 1 < p; ++k) s += x[k] * v[k + 1];
      xv[i] = s;
    }
    std::vector<double> w(p, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      const auto x = X.row(i);
      w[0] += xv[i];
      for (std::size_t k = 0; k + 1 < p; ++k) w[k + 1] += x[k] * xv[i];
    }
    double norm = 0.0;
    for (double& wk : w) {
      wk /= static_cast<double>(m);
      norm += wk * wk;
    }
    norm = std::sqrt(norm);
    if (norm == 0.0) break;
    const double previous = eig;
    eig = norm;
    for (std::size_t k = 0; k < p; ++k) v[k] = w[k] / norm;
    if (std::abs(eig - previous) <= 1e-10 * eig) break;
  }
  // Logistic curvature is at most 1/4.
  return std::max(1.05 * eig / 4.0, 1e-12);
}

}  // namespace

std::size_t LassoLogisticModel::nonzeros() const {
  return static_cast<std::size_t>(
      std::count_if(coefficients.begin(), coefficients.end(), [](double c) { return c != 0.0; }));
}

LassoLogisticModel fit_lasso_logistic(const Matrix& X, std::span<const int> y, double lambda,
                                      const LassoOptions& options) {
  if (X.rows() == 0) throw Error("lasso: empty training data");
  if (X.rows() != y.size()) throw Error("lasso: X and y differ in length");
  if (!(lambda >= 0.0)) throw Error("lasso: lambda must be >= 0");
  for (int label : y) {
    if (label != 0 && label != 1) throw Error("lasso: labels must be 0 or 1");
  }
  const std::size_t m = X.rows();
  const std::size_t d = X.cols();
  const double step = 1.0 / lipschitz_bound(X);

  LassoLogisticModel model;
  model.lambda = lambda;
  model.coefficients.assign(d, 0.0);
  std::vector<double> grad(d);
  for (std::size_t it = 1; it <= options.max_iterations; ++it) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double grad_b = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const auto x = X.row(i);
      double z = model.intercept;
      for (std::size_t k = 0; k < d; ++k) z += model.coefficients[k] * x[k];
      const double r = sigmoid(z) - static_cast<double>(y[i]);
      grad_b += r;
      for (std::size_t k = 0; k < d; ++k) grad[k] += r * x[k];
    }
    double change = 0.0;
    const double new_b = model.intercept - step * grad_b / static_cast<double>(m);
    change = std::max(change, std::abs(new_b - model.intercept));
    model.intercept = new_b;
    for (std::size_t k = 0; k < d; ++k) {
      const double updated = soft_threshold(
          model.coefficients[k] - step * grad[k] / static_cast<double>(m), step * lambda);
      change = std::max(change, std::abs(updated - model.coefficients[k]));
      model.coefficients[k] = updated;
    }
    model.convergence.iterations = it;
    model.convergence.final_change = change;
    if (change < options.tolerance) {
      model.convergence.converged = true;
      break;
    }
  }
  model.convergence.objective = lasso_objective(model, X, y);
  return model;
}

double predict_logistic(const LassoLogisticModel& model, std::span<const double> x) {
  if (x.size() != model.coefficients.size()) {
    throw Error("logistic: feature vector has " + std::to_string(x.size()) + " columns, expected " +
                std::to_string(model.coefficients.size()));
  }
  double z = model.intercept;
  for (std::size_t k = 0; k < x.size(); ++k) z += model.coefficients[k] * x[k];
  return sigmoid(z);
}

std::vector<double> predict_logistic(const LassoLogisticModel& model, const Matrix& X) {
  std::vector<double> out(X.rows());
  for (std::size_t i = 0; i < X.rows(); ++i) out[i] = predict_logistic(model, X.row(i));
  return out;
}

double lasso_objective(const LassoLogisticModel& model, const Matrix& X, std::span<const int> y) {
  double loss = 0.0;
  for (std::size_t i = 0; i < X.rows(); ++i) {
    const auto x = X.row(i);
    double z = model.intercept;
    for (std::size_t k = 0; k < x.size(); ++k) z += model.coefficients[k] * x[k];
    loss += y[i] != 0 ? softplus(-z) : softplus(z);
  }
  double l1 = 0.0;
  for (double c : model.coefficients) l1 += std::abs(c);
  return loss / static_cast<double>(X.rows()) + model.lambda * l1;
}

// ---------------------------------------------------------------------------

double NextMidModel::predict(double mid_price, sim::Side side) const {
  return intercept + coef_mid * mid_price + coef_side * static_cast<double>(side);
}

double adjusted_r2(std::span<const double> actual, std::span<const double> predicted,
                   std::size_t n_regressors) {
  const std::size_t n = actual.size();
  if (n != predicted.size() || n <= n_regressors + 1) throw Error("adjusted_r2: not enough rows");
  const double mean = std::accumulate(actual.begin(), actual.end(), 0.0) / static_cast<double>(n);
  double ss_res = 0.0;
  double ss_tot = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ss_res += (actual[i] - predicted[i]) * (actual[i] - predicted[i]);
    ss_tot += (actual[i] - mean) * (actual[i] - mean);
  }
  if (ss_tot == 0.0) throw NumericError("adjusted_r2: target has zero variance");
  const double r2 = 1.0 - ss_res / ss_tot;
  const auto nd = static_cast<double>(n);
  return 1.0 - (1.0 - r2) * (nd - 1.0) / (nd - static_cast<double>(n_regressors) - 1.0);
}

NextMidModel fit_next_mid(std::span<const sim::RfqRecord> train,
                          std::span<const sim::RfqRecord> validation) {
  const std::size_t n = train.size();
  if (n < 4) throw Error("fit_next_mid: need at least 4 training rows");
  // Solve on centred regressors; the raw design is badly conditioned
  // because MidPrice barely moves relative to its level.
  double mean_mid = 0.0, mean_side = 0.0, mean_y = 0.0;
  for (const auto& r : train) {
    mean_mid += r.mid_price;
    mean_side += static_cast<double>(r.side);
    mean_y += r.next_mid_price;
  }
  const auto nd = static_cast<double>(n);
  mean_mid /= nd;
  mean_side /= nd;
  mean_y /= nd;
  double smm = 0.0, sms = 0.0, sss = 0.0, smy = 0.0, ssy = 0.0;
  for (const auto& r : train) {
    const double dm = r.mid_price - mean_mid;
    const double ds = static_cast<double>(r.side) - mean_side;
    const double dy = r.next_mid_price - mean_y;
    smm += dm * dm;
    sms += dm * ds;
    sss += ds * ds;
    smy += dm * dy;
    ssy += ds * dy;
  }
  const double det = smm * sss - sms * sms;
  if (smm == 0.0 || sss == 0.0 || std::abs(det) <= 1e-14 * smm * sss) {
    throw NumericError("fit_next_mid: singular design (constant MidPrice or Side)");
  }
  NextMidModel model;
  model.coef_mid = (sss * smy - sms * ssy) / det;
  model.coef_side = (smm * ssy - sms * smy) / det;
  model.intercept = mean_y - model.coef_mid * mean_mid - model.coef_side * mean_side;
  model.n_train = n;

  const auto& eval = validation.empty() ? train : validation;
  model.n_validation = validation.size();
  std::vector<double> actual, predicted;
  actual.reserve(eval.size());
  predicted.reserve(eval.size());
  for (const auto& r : eval) {
    actual.push_back(r.next_mid_price);
    predicted.push_back(model.predict(r));
  }
  model.validation_adjusted_r2 = adjusted_r2(actual, predicted, 2);
  return model;
}

std::vector<QQPoint> qq_data(std::span<const double> residuals) {
  const std::size_t n = residuals.size();
  if (n < 10) throw Error("qq_data needs at least 10 residuals");
  const double mean = std::accumulate(residuals.begin(), residuals.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double r : residuals) ss += (r - mean) * (r - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (!(sd > 0.0)) throw NumericError("qq_data: residuals have zero variance");

  std::vector<double> z(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = (residuals[i] - mean) / sd;
  std::sort(z.begin(), z.end());
  const boost::math::normal_distribution<double> standard;
  std::vector<QQPoint> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double prob = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    out[i] = {boost::math::quantile(standard, prob), z[i]};
  }
  return out;
}

}  // namespace rfq::linear
