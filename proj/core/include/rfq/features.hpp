#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rfq/market_sim.hpp"
#include "rfq/matrix.hpp"

namespace rfq::features {

/// Engineered features of one RFQ.
struct FeatureRow {
  double mom5 = 0.0;
  double mom10 = 0.0;
  double mom20 = 0.0;
  double spread = 0.0;        // MidPrice - QuotedPrice
  double response = 0.0;      // spread, sign-flipped for offers
  double log_notional = 0.0;
  int competition = 0;
  int counterparty = 0;
  int side = 0;               // 1 = bid
  bool history_valid = false; // bond has >= 20 prior observations

  friend bool operator==(const FeatureRow&, const FeatureRow&) = default;
};

inline constexpr std::size_t kNumFeatures = 9;
inline constexpr std::array<const char*, kNumFeatures> kFeatureNames = {
    "mom5", "mom10", "mom20", "spread", "response", "log_notional",
    "competition", "counterparty", "side"};
inline constexpr std::array<bool, kNumFeatures> kCategorical = {
    false, false, false, false, false, false, true, true, true};
inline constexpr std::size_t kMinHistory = 20;

std::vector<std::string> feature_names();
std::vector<bool> categorical_mask();

struct FeatureOptions {
  /// Base of the LogNotional logarithm; e by default.
  double log_base = 2.718281828459045;
};

/// Computes features per row. Momentum uses the row's bond's own mid-price sequence.
/// Rows must be ordered by strictly increasing time.
std::vector<FeatureRow> compute_features(std::span<const sim::RfqRecord> dataset,
                                         const FeatureOptions& options = {});

/// The same feature row with Spread/Response re-derived for another quote price.
FeatureRow with_quote(const FeatureRow& row, const sim::RfqRecord& rfq, double quote);

/// Raw feature vector in kFeatureNames order.
std::array<double, kNumFeatures> to_vector(const FeatureRow& row);
Matrix to_matrix(std::span<const FeatureRow> rows);

/// Per-column z-scoring statistics learned on training rows.
///
/// Continuous columns are z-scored with the population standard deviation.
/// Categorical columns are passed through, or expanded one-hot when one_hot is
/// set. Columns that are constant on the training rows are dropped.
struct StandardizationStats {
  std::vector<std::string> input_names;
  std::vector<bool> categorical;
  std::vector<bool> dropped;
  std::vector<double> mean;
  std::vector<double> stddev;
  bool one_hot = false;
  /// Sorted distinct levels per input column (filled for categorical columns when one_hot).
  std::vector<std::vector<double>> levels;

  std::size_t input_dim() const { return input_names.size(); }
  std::size_t output_dim() const;
  std::vector<std::string> output_names() const;
  std::vector<std::string> dropped_names() const;

  std::vector<double> transform(std::span<const double> raw) const;
  Matrix transform(const Matrix& raw) const;

  /// Undoes transform. Dropped columns come back as their constant training value.
  /// Not available with one_hot.
  std::vector<double> inverse(std::span<const double> standardized) const;

  friend bool operator==(const StandardizationStats&, const StandardizationStats&) = default;
};

StandardizationStats fit_standardizer(const Matrix& raw, std::vector<std::string> names,
                                      std::vector<bool> categorical, bool one_hot = false);

struct Standardized {
  Matrix rows;
  StandardizationStats stats;
};

/// Applies stats when given (validation/test), otherwise learns them from raw first.
/// Throws Error on empty input.
Standardized standardize(const Matrix& raw, std::vector<std::string> names,
                         std::vector<bool> categorical,
                         const std::optional<StandardizationStats>& stats = std::nullopt,
                         bool one_hot = false);
Standardized standardize(std::span<const FeatureRow> rows,
                         const std::optional<StandardizationStats>& stats = std::nullopt,
                         bool one_hot = false);

/// Empirical fill rate against one feature, in equal-count bins, with a smoothed fit.
struct FillRateCurve {
  std::string feature;
  std::vector<double> bin_centers;
  std::vector<double> raw_rates;
  std::vector<double> smooth_rates;
  std::vector<std::size_t> counts;
  bool smoothed = false;
  std::string notice;
};

/// Bins are equal-count over the sorted values; centres are the in-bin means.
/// The smoothed curve is a penalised cubic regression spline through the
/// (centre, rate) pairs with interior knots at the deciles of the bin centres,
/// weighted by bin counts and clamped to [0, 1]. Larger smoothing shrinks the
/// knot terms toward a single cubic.
FillRateCurve fill_rate_curve(std::span<const double> values, std::span<const int> statuses,
                              std::size_t n_bins = 20, double smoothing = 1e-3,
                              std::string feature = {});

}  // namespace rfq::features
