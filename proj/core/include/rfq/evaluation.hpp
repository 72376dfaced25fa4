#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rfq/matrix.hpp"

namespace rfq::eval {

inline constexpr double kProbabilityClip = 1e-12;
inline constexpr std::size_t kHistogramBins = 20;

struct Confusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  double false_positive_rate() const;
  double false_negative_rate() const;

  friend bool operator==(const Confusion&, const Confusion&) = default;
};

struct GroupErrors {
  int group = 0;
  std::size_t rows = 0;
  std::size_t errors = 0;
};

/// Metrics of one model on one evaluation set. Positive class = done (1).
struct EvalReport {
  std::string model;
  std::size_t rows = 0;
  double log_loss = 0.0;
  double accuracy = 0.0;
  double f1 = 0.0;
  Confusion confusion;
  std::vector<std::size_t> histogram;      // predicted p in kHistogramBins equal bins on [0, 1]
  std::vector<GroupErrors> error_by_group; // e.g. by competition level
};

/// Mean log-loss with p clipped to [1e-12, 1 - 1e-12].
double log_loss(std::span<const int> y_true, std::span<const double> p_pred);

/// Metrics at the given threshold (label 1 iff p > threshold), or from
/// explicit labels when given (hard-vote ensembles). Throws Error on empty input.
EvalReport classification_report(std::span<const int> y_true, std::span<const double> p_pred,
                                 double threshold = 0.5,
                                 std::span<const int> groups = {},
                                 std::span<const int> labels_override = {});

struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  friend bool operator==(const IndexRange&, const IndexRange&) = default;
};

struct Fold {
  IndexRange train;
  IndexRange validation;
};

enum class WindowKind { expanding, sliding };

/// Ordered time-series folds over rows [0, n).
struct FoldSpec {
  std::vector<Fold> folds;

  /// Throws Error if any fold trains on rows at or after its validation rows,
  /// or if validation ranges overlap.
  void check_ordering() const;
};

/// Fold j (1-based) validates on [j*n/(k+1), (j+1)*n/(k+1)) (the last fold runs to n)
/// and trains on everything before it (expanding) or on the previous block (sliding).
/// Throws Error when n < 2k.
FoldSpec time_series_folds(std::size_t n, std::size_t k, WindowKind kind = WindowKind::expanding);

/// Chronological split: the first floor(train_fraction * n) rows train.
Fold chronological_split(std::size_t n, double train_fraction = 0.7);

/// Hyperparameter point of a model family.
struct GridPoint {
  std::map<std::string, double> params;
  /// Used to break ties in mean validation log-loss: smaller is simpler.
  double complexity = 0.0;
};

using Predictor = std::function<double(std::span<const double>)>;
/// Trains a model at a grid point and returns its probability predictor.
using ModelFamily = std::function<Predictor(const GridPoint&, const Matrix& X, std::span<const int> y)>;

struct CvRow {
  std::size_t point = 0;
  std::size_t fold = 0;
  bool failed = false;
  std::string error;
  double log_loss = 0.0;
  double accuracy = 0.0;
};

struct CvResult {
  std::vector<GridPoint> grid;
  std::vector<CvRow> table;          // |grid| x k rows, grid-major
  std::vector<double> mean_log_loss; // per grid point; +inf if any fold failed
  std::size_t best = 0;
};

/// Trains and validates every point on every fold; the best point has the lowest mean
/// validation log-loss (ties: smallest complexity, then earliest). A throwing point is
/// marked failed and skipped. Throws Error when the grid is empty or every point failed.
CvResult grid_search_cv(const ModelFamily& family, const std::vector<GridPoint>& grid,
                        const Matrix& X, std::span<const int> y, const FoldSpec& folds);

}  // namespace rfq::eval
