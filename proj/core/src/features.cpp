#include "rfq/features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "linalg.hpp"
#include "rfq/error.hpp"

namespace rfq::features {

std::vector<std::string> feature_names() {
  return std::vector<std::string>(kFeatureNames.begin(), kFeatureNames.end());
}

std::vector<bool> categorical_mask() {
  return std::vector<bool>(kCategorical.begin(), kCategorical.end());
}

namespace {

double momentum(const std::vector<double>& history, double current, std::size_t lag) {
  if (history.size() < lag) return 0.0;
  const double past = history[history.size() - lag];
  if (past == 0.0) throw NumericError("zero mid-price in momentum denominator");
  return current / past - 1.0;
}

}  // namespace

std::vector<FeatureRow> compute_features(std::span<const sim::RfqRecord> dataset,
                                         const FeatureOptions& options) {
  const double log_scale = std::log(options.log_base);
  std::vector<FeatureRow> out;
  out.reserve(dataset.size());
  std::vector<std::vector<double>> history;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& r = dataset[i];
    if (i > 0 && r.time <= dataset[i - 1].time) {
      throw Error("dataset rows must be ordered by strictly increasing time (row " +
                  std::to_string(i) + ")");
    }
    if (r.bond < 0) throw Error("negative bond id at row " + std::to_string(i));
    const auto b = static_cast<std::size_t>(r.bond);
    if (b >= history.size()) history.resize(b + 1);
    auto& h = history[b];

    FeatureRow f;
    f.mom5 = momentum(h, r.mid_price, 5);
    f.mom10 = momentum(h, r.mid_price, 10);
    f.mom20 = momentum(h, r.mid_price, 20);
    f.spread = r.mid_price - r.quoted_price;
    f.response = r.side == sim::Side::bid ? f.spread : -f.spread;
    f.log_notional = std::log(static_cast<double>(r.notional)) / log_scale;
    f.competition = r.competition;
    f.counterparty = r.counterparty;
    f.side = static_cast<int>(r.side);
    f.history_valid = h.size() >= kMinHistory;
    out.push_back(f);
    h.push_back(r.mid_price);
  }
  return out;
}

FeatureRow with_quote(const FeatureRow& row, const sim::RfqRecord& rfq, double quote) {
  FeatureRow f = row;
  f.spread = rfq.mid_price - quote;
  f.response = rfq.side == sim::Side::bid ? f.spread : -f.spread;
  return f;
}

std::array<double, kNumFeatures> to_vector(const FeatureRow& r) {
  return {r.mom5,
          r.mom10,
          r.mom20,
          r.spread,
          r.response,
          r.log_notional,
          static_cast<double>(r.competition),
          static_cast<double>(r.counterparty),
          static_cast<double>(r.side)};
}

Matrix to_matrix(std::span<const FeatureRow> rows) {
  Matrix m(rows.size(), kNumFeatures);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto v = to_vector(rows[i]);
    std::copy(v.begin(), v.end(), m.row(i).begin());
  }
  return m;
}

// ---------------------------------------------------------------------------
// Standardization

std::size_t StandardizationStats::output_dim() const {
  std::size_t n = 0;
  for (std::size_t c = 0; c < input_dim(); ++c) {
    if (dropped[c]) continue;
    n += (one_hot && categorical[c]) ? levels[c].size() : 1;
  }
  return n;
}

std::vector<std::string> StandardizationStats::output_names() const {
  std::vector<std::string> names;
  for (std::size_t c = 0; c < input_dim(); ++c) {
    if (dropped[c]) continue;
    if (one_hot && categorical[c]) {
      for (double level : levels[c]) {
        names.push_back(input_names[c] + "=" + std::to_string(static_cast<long long>(level)));
      }
    } else {
      names.push_back(input_names[c]);
    }
  }
  return names;
}

std::vector<std::string> StandardizationStats::dropped_names() const {
  std::vector<std::string> names;
  for (std::size_t c = 0; c < input_dim(); ++c) {
    if (dropped[c]) names.push_back(input_names[c]);
  }
  return names;
}

std::vector<double> StandardizationStats::transform(std::span<const double> raw) const {
  if (raw.size() != input_dim()) {
    throw Error("feature vector has " + std::to_string(raw.size()) + " columns, expected " +
                std::to_string(input_dim()));
  }
  std::vector<double> out;
  out.reserve(output_dim());
  for (std::size_t c = 0; c < input_dim(); ++c) {
    if (dropped[c]) continue;
    if (categorical[c]) {
      if (one_hot) {
        for (double level : levels[c]) out.push_back(raw[c] == level ? 1.0 : 0.0);
      } else {
        out.push_back(raw[c]);
      }
    } else {
      out.push_back((raw[c] - mean[c]) / stddev[c]);
    }
  }
  return out;
}

Matrix StandardizationStats::transform(const Matrix& raw) const {
  Matrix out(raw.rows(), output_dim());
  for (std::size_t i = 0; i < raw.rows(); ++i) {
    const auto z = transform(raw.row(i));
    std::copy(z.begin(), z.end(), out.row(i).begin());
  }
  return out;
}

std::vector<double> StandardizationStats::inverse(std::span<const double> z) const {
  if (one_hot) throw Error("inverse standardization is not available with one-hot columns");
  if (z.size() != output_dim()) throw Error("standardized vector has the wrong dimension");
  std::vector<double> raw(input_dim());
  std::size_t k = 0;
  for (std::size_t c = 0; c < input_dim(); ++c) {
    if (dropped[c]) {
      raw[c] = mean[c];
    } else if (categorical[c]) {
      raw[c] = z[k++];
    } else {
      raw[c] = z[k++] * stddev[c] + mean[c];
    }
  }
  return raw;
}

StandardizationStats fit_standardizer(const Matrix& raw, std::vector<std::string> names,
                                      std::vector<bool> categorical, bool one_hot) {
  if (raw.rows() == 0) throw Error("cannot standardize an empty feature matrix");
  if (names.size() != raw.cols() || categorical.size() != raw.cols()) {
    throw Error("feature names/categorical mask do not match the matrix width");
  }
  const std::size_t d = raw.cols();
  const auto n = static_cast<double>(raw.rows());
  StandardizationStats s;
  s.input_names = std::move(names);
  s.categorical = std::move(categorical);
  s.one_hot = one_hot;
  s.dropped.assign(d, false);
  s.mean.assign(d, 0.0);
  s.stddev.assign(d, 1.0);
  s.levels.assign(d, {});
  for (std::size_t c = 0; c < d; ++c) {
    double sum = 0.0;
    for (std::size_t i = 0; i < raw.rows(); ++i) sum += raw(i, c);
    const double mu = sum / n;
    double ss = 0.0;
    bool constant = true;
    for (std::size_t i = 0; i < raw.rows(); ++i) {
      const double dev = raw(i, c) - mu;
      ss += dev * dev;
      constant = constant && raw(i, c) == raw(0, c);
    }
    s.mean[c] = constant ? raw(0, c) : mu;
    s.stddev[c] = std::sqrt(ss / n);
    s.dropped[c] = constant || !(s.stddev[c] > 0.0);
    if (s.categorical[c] && one_hot && !s.dropped[c]) {
      auto values = raw.column(c);
      std::sort(values.begin(), values.end());
      values.erase(std::unique(values.begin(), values.end()), values.end());
      s.levels[c] = std::move(values);
    }
  }
  return s;
}

Standardized standardize(const Matrix& raw, std::vector<std::string> names,
                         std::vector<bool> categorical,
                         const std::optional<StandardizationStats>& stats, bool one_hot) {
  if (raw.rows() == 0) throw Error("cannot standardize an empty feature matrix");
  Standardized out;
  out.stats = stats ? *stats : fit_standardizer(raw, std::move(names), std::move(categorical), one_hot);
  out.rows = out.stats.transform(raw);
  return out;
}

Standardized standardize(std::span<const FeatureRow> rows,
                         const std::optional<StandardizationStats>& stats, bool one_hot) {
  return standardize(to_matrix(rows), feature_names(), categorical_mask(), stats, one_hot);
}

// ---------------------------------------------------------------------------
// Fill-rate curves

namespace {

/// Penalised truncated-power cubic spline, evaluated at the fit points.
std::vector<double> smooth_cubic(const std::vector<double>& x, const std::vector<double>& y,
                                 const std::vector<double>& w, double smoothing) {
  const std::size_t n = x.size();
  const double lo = x.front();
  const double hi = x.back();
  const double range = hi > lo ? hi - lo : 1.0;
  std::vector<double> u(n);
  for (std::size_t i = 0; i < n; ++i) u[i] = (x[i] - lo) / range;

  std::vector<double> distinct = u;
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

  std::size_t degree = std::min<std::size_t>(3, distinct.size() - 1);
  std::vector<double> knots;
  if (degree == 3) {
    for (int q = 1; q <= 9; ++q) {
      const double pos = q / 10.0 * static_cast<double>(n - 1);
      const auto k = static_cast<std::size_t>(pos);
      const double frac = pos - static_cast<double>(k);
      const double knot = k + 1 < n ? u[k] * (1 - frac) + u[k + 1] * frac : u[k];
      if (knot > 0.0 && knot < 1.0 && (knots.empty() || knot > knots.back() + 1e-12)) {
        knots.push_back(knot);
      }
    }
    // Keep the system identifiable: never more parameters than distinct points.
    while (4 + knots.size() > distinct.size() && !knots.empty()) knots.pop_back();
  }

  const std::size_t p = degree + 1 + knots.size();
  auto basis = [&](double t, std::vector<double>& row) {
    row.assign(p, 0.0);
    double power = 1.0;
    for (std::size_t j = 0; j <= degree; ++j) {
      row[j] = power;
      power *= t;
    }
    for (std::size_t k = 0; k < knots.size(); ++k) {
      const double v = t - knots[k];
      row[degree + 1 + k] = v > 0.0 ? v * v * v : 0.0;
    }
  };

  std::vector<double> a(p * p, 0.0);
  std::vector<double> b(p, 0.0);
  std::vector<double> row;
  for (std::size_t i = 0; i < n; ++i) {
    basis(u[i], row);
    for (std::size_t r = 0; r < p; ++r) {
      b[r] += w[i] * row[r] * y[i];
      for (std::size_t c = 0; c < p; ++c) a[r * p + c] += w[i] * row[r] * row[c];
    }
  }
  for (std::size_t j = 0; j < p; ++j) {
    a[j * p + j] += j > degree ? smoothing : 1e-12;
  }
  const auto coef = detail::solve_dense(std::move(a), std::move(b));

  std::vector<double> fitted(n);
  for (std::size_t i = 0; i < n; ++i) {
    basis(u[i], row);
    double v = std::inner_product(row.begin(), row.end(), coef.begin(), 0.0);
    fitted[i] = std::clamp(v, 0.0, 1.0);
  }
  return fitted;
}

}  // namespace

FillRateCurve fill_rate_curve(std::span<const double> values, std::span<const int> statuses,
                              std::size_t n_bins, double smoothing, std::string feature) {
  if (values.size() != statuses.size()) throw Error("values and statuses differ in length");
  if (n_bins < 2) throw Error("fill_rate_curve needs at least 2 bins");
  if (values.empty()) throw Error("fill_rate_curve needs data");
  n_bins = std::min(n_bins, values.size());

  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

  FillRateCurve curve;
  curve.feature = std::move(feature);
  const std::size_t n = values.size();
  for (std::size_t bin = 0; bin < n_bins; ++bin) {
    const std::size_t begin = bin * n / n_bins;
    const std::size_t end = (bin + 1) * n / n_bins;
    double sum_x = 0.0;
    double sum_y = 0.0;
    for (std::size_t k = begin; k < end; ++k) {
      sum_x += values[order[k]];
      sum_y += statuses[order[k]] != 0 ? 1.0 : 0.0;
    }
    const auto count = static_cast<double>(end - begin);
    curve.bin_centers.push_back(sum_x / count);
    curve.raw_rates.push_back(sum_y / count);
    curve.counts.push_back(end - begin);
  }

  const bool all_same = std::all_of(statuses.begin(), statuses.end(),
                                    [&](int s) { return (s != 0) == (statuses[0] != 0); });
  const bool flat_x = curve.bin_centers.front() == curve.bin_centers.back();
  if (all_same || flat_x) {
    curve.smooth_rates = curve.raw_rates;
    curve.notice = all_same ? "all statuses identical; smoothing skipped"
                            : "feature is constant; smoothing skipped";
    return curve;
  }

  std::vector<double> weights(curve.counts.size());
  const double mean_count = static_cast<double>(n) / static_cast<double>(n_bins);
  for (std::size_t i = 0; i < weights.size(); ++i) {
    weights[i] = static_cast<double>(curve.counts[i]) / mean_count;
  }
  curve.smooth_rates = smooth_cubic(curve.bin_centers, curve.raw_rates, weights, smoothing);
  curve.smoothed = true;
  return curve;
}

}  // namespace rfq::features
