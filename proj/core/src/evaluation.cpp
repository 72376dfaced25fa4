#include "rfq/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rfq/error.hpp"

namespace rfq::eval {

double Confusion::false_positive_rate() const {
  return fp + tn == 0 ? 0.0 : static_cast<double>(fp) / static_cast<double>(fp + tn);
}

double Confusion::false_negative_rate() const {
  return fn + tp == 0 ? 0.0 : static_cast<double>(fn) / static_cast<double>(fn + tp);
}

double log_loss(std::span<const int> y_true, std::span<const double> p_pred) {
  if (y_true.empty()) throw Error("log_loss: empty input");
  if (y_true.size() != p_pred.size()) throw Error("log_loss: lengths differ");
  double total = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const double p = std::clamp(p_pred[i], kProbabilityClip, 1.0 - kProbabilityClip);
    total -= y_true[i] != 0 ? std::log(p) : std::log(1.0 - p);
  }
  return total / static_cast<double>(y_true.size());
}

EvalReport classification_report(std::span<const int> y_true, std::span<const double> p_pred,
                                 double threshold, std::span<const int> groups,
                                 std::span<const int> labels_override) {
  if (y_true.empty()) throw Error("classification_report: empty input");
  if (y_true.size() != p_pred.size()) throw Error("classification_report: lengths differ");
  if (!groups.empty() && groups.size() != y_true.size()) throw Error("groups length differs");
  if (!labels_override.empty() && labels_override.size() != y_true.size()) {
    throw Error("labels length differs");
  }
  EvalReport r;
  r.rows = y_true.size();
  r.log_loss = log_loss(y_true, p_pred);
  r.histogram.assign(kHistogramBins, 0);
  std::map<int, GroupErrors> by_group;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const int truth = y_true[i] != 0 ? 1 : 0;
    const int label = labels_override.empty() ? (p_pred[i] > threshold ? 1 : 0) : labels_override[i];
    if (label == 1 && truth == 1) ++r.confusion.tp;
    if (label == 1 && truth == 0) ++r.confusion.fp;
    if (label == 0 && truth == 0) ++r.confusion.tn;
    if (label == 0 && truth == 1) ++r.confusion.fn;
    const auto bin = std::min<std::size_t>(
        kHistogramBins - 1,
        static_cast<std::size_t>(std::clamp(p_pred[i], 0.0, 1.0) * static_cast<double>(kHistogramBins)));
    ++r.histogram[bin];
    if (!groups.empty()) {
      auto& g = by_group[groups[i]];
      g.group = groups[i];
      ++g.rows;
      g.errors += label != truth ? 1 : 0;
    }
  }
  const auto& c = r.confusion;
  r.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(r.rows);
  const double denom = static_cast<double>(2 * c.tp + c.fp + c.fn);
  r.f1 = denom == 0.0 ? 0.0 : 2.0 * static_cast<double>(c.tp) / denom;
  for (const auto& [_, g] : by_group) r.error_by_group.push_back(g);
  return r;
}

void FoldSpec::check_ordering() const {
  for (std::size_t j = 0; j < folds.size(); ++j) {
    const Fold& f = folds[j];
    if (f.train.size() == 0 || f.validation.size() == 0) {
      throw Error("fold " + std::to_string(j + 1) + " is empty");
    }
    if (f.train.end > f.validation.begin) {
      throw Error("fold " + std::to_string(j + 1) + " trains on rows at or after its validation rows");
    }
    if (j > 0 && folds[j - 1].validation.end > f.validation.begin) {
      throw Error("validation ranges of folds " + std::to_string(j) + " and " +
                  std::to_string(j + 1) + " overlap");
    }
  }
}

FoldSpec time_series_folds(std::size_t n, std::size_t k, WindowKind kind) {
  if (k == 0) throw Error("time_series_folds: k must be positive");
  if (n < 2 * k) throw Error("time_series_folds: n must be at least 2k");
  FoldSpec spec;
  for (std::size_t j = 1; j <= k; ++j) {
    const std::size_t val_begin = j * n / (k + 1);
    const std::size_t val_end = j == k ? n : (j + 1) * n / (k + 1);
    const std::size_t train_begin = kind == WindowKind::expanding ? 0 : (j - 1) * n / (k + 1);
    spec.folds.push_back({{train_begin, val_begin}, {val_begin, val_end}});
  }
  spec.check_ordering();
  return spec;
}

Fold chronological_split(std::size_t n, double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw Error("train fraction must be in (0, 1)");
  const auto cut = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n)));
  if (cut == 0 || cut == n) throw Error("chronological_split: too few rows");
  return {{0, cut}, {cut, n}};
}

CvResult grid_search_cv(const ModelFamily& family, const std::vector<GridPoint>& grid,
                        const Matrix& X, std::span<const int> y, const FoldSpec& folds) {
  if (grid.empty()) throw Error("grid_search_cv: empty grid");
  if (X.rows() != y.size()) throw Error("grid_search_cv: X and y differ in length");
  folds.check_ordering();
  CvResult result;
  result.grid = grid;
  result.mean_log_loss.assign(grid.size(), std::numeric_limits<double>::infinity());
  for (std::size_t p = 0; p < grid.size(); ++p) {
    double sum = 0.0;
    bool ok = true;
    for (std::size_t f = 0; f < folds.folds.size(); ++f) {
      const Fold& fold = folds.folds[f];
      CvRow row;
      row.point = p;
      row.fold = f + 1;
      try {
        const Matrix X_train = X.slice_rows(fold.train.begin, fold.train.end);
        const std::span<const int> y_train = y.subspan(fold.train.begin, fold.train.size());
        const Predictor predict = family(grid[p], X_train, y_train);
        std::vector<double> probs;
        probs.reserve(fold.validation.size());
        for (std::size_t i = fold.validation.begin; i < fold.validation.end; ++i) {
          probs.push_back(predict(X.row(i)));
        }
        const auto y_val = y.subspan(fold.validation.begin, fold.validation.size());
        const EvalReport rep = classification_report(y_val, probs);
        row.log_loss = rep.log_loss;
        row.accuracy = rep.accuracy;
        sum += rep.log_loss;
      } catch (const std::exception& e) {
        row.failed = true;
        row.error = e.what();
        ok = false;
      }
      result.table.push_back(row);
    }
    if (ok) result.mean_log_loss[p] = sum / static_cast<double>(folds.folds.size());
  }

  bool any = false;
  for (std::size_t p = 0; p < grid.size(); ++p) {
    if (!std::isfinite(result.mean_log_loss[p])) continue;
    if (!any) {
      result.best = p;
      any = true;
      continue;
    }
    const double current = result.mean_log_loss[result.best];
    const double candidate = result.mean_log_loss[p];
    if (candidate < current ||
        (candidate == current && grid[p].complexity < grid[result.best].complexity)) {
      result.best = p;
    }
  }
  if (!any) throw Error("grid_search_cv: every grid point failed");
  return result;
}

}  // namespace rfq::eval
