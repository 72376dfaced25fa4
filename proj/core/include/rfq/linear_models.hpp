#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rfq/market_sim.hpp"
#include "rfq/matrix.hpp"

namespace rfq::linear {

struct ConvergenceReport {
  std::size_t iterations = 0;
  bool converged = false;
  double final_change = 0.0;
  double objective = 0.0;

  friend bool operator==(const ConvergenceReport&, const ConvergenceReport&) = default;
};

/// L1-penalised logistic regression in standardized feature space.
/// The intercept is never penalised.
struct LassoLogisticModel {
  std::vector<double> coefficients;
  double intercept = 0.0;
  double lambda = 0.0;
  ConvergenceReport convergence;

  std::size_t nonzeros() const;

  friend bool operator==(const LassoLogisticModel&, const LassoLogisticModel&) = default;
};

struct LassoOptions {
  double tolerance = 1e-8;
  std::size_t max_iterations = 10000;
};

/// Minimises mean log-loss + lambda * ||w||_1 by proximal gradient (ISTA) with
/// the fixed step 1/L, L an upper bound on the Lipschitz constant of the
/// log-loss gradient. Throws Error on non-binary labels or lambda < 0.
LassoLogisticModel fit_lasso_logistic(const Matrix& X, std::span<const int> y, double lambda,
                                      const LassoOptions& options = {});

double predict_logistic(const LassoLogisticModel& model, std::span<const double> x);
std::vector<double> predict_logistic(const LassoLogisticModel& model, const Matrix& X);

/// Mean log-loss + lambda * ||w||_1 at the model's parameters.
double lasso_objective(const LassoLogisticModel& model, const Matrix& X, std::span<const int> y);

/// NextMidPrice ~ intercept + coef_mid * MidPrice + coef_side * Side.
struct NextMidModel {
  double intercept = 0.0;
  double coef_mid = 0.0;
  double coef_side = 0.0;
  double validation_adjusted_r2 = 0.0;
  std::size_t n_train = 0;
  std::size_t n_validation = 0;

  double predict(double mid_price, sim::Side side) const;
  double predict(const sim::RfqRecord& rfq) const { return predict(rfq.mid_price, rfq.side); }

  friend bool operator==(const NextMidModel&, const NextMidModel&) = default;
};

/// Closed-form least squares on train; adjusted R^2 reported on validation
/// (on train when validation is empty). Throws NumericError on a singular design.
NextMidModel fit_next_mid(std::span<const sim::RfqRecord> train,
                          std::span<const sim::RfqRecord> validation = {});

/// 1 - (1 - R^2)(n - 1)/(n - p - 1) for p regressors.
double adjusted_r2(std::span<const double> actual, std::span<const double> predicted,
                   std::size_t n_regressors);

struct QQPoint {
  double theoretical = 0.0;
  double empirical = 0.0;
};

/// Standardized, sorted residuals against standard-normal quantiles at (i - 0.5)/n.
/// Throws Error for fewer than 10 residuals or zero variance.
std::vector<QQPoint> qq_data(std::span<const double> residuals);

}  // namespace rfq::linear
