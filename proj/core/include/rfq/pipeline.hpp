#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "rfq/bnt.hpp"
#include "rfq/ensemble.hpp"
#include "rfq/evaluation.hpp"
#include "rfq/features.hpp"
#include "rfq/io.hpp"
#include "rfq/linear_models.hpp"
#include "rfq/market_sim.hpp"
#include "rfq/pricing.hpp"

// Glue between the modules: which rows train what, and the end-to-end steps
// behind each command-line subcommand.
namespace rfq::pipeline {

struct PipelineConfig {
  sim::SimConfig sim;
  bnt::BntHyperparams bnt;
  double lasso_lambda = 1e-3;
  double train_fraction = 0.7;
  std::size_t cv_folds = 5;
  eval::WindowKind window = eval::WindowKind::expanding;
  bool one_hot = false;
  /// Labels only; ensemble probabilities are always the soft vote.
  ensemble::VoteMode vote_mode = ensemble::VoteMode::hard;
  double threshold = 0.5;
  std::uint64_t seed = 42;

  /// One master seed for simulation and training.
  void set_seed(std::uint64_t seed);
};

/// Applies one "key = value" setting (e.g. "sigma_s", "n_iter", "lasso_lambda").
/// Throws ConfigError for unknown keys or unparsable values.
void apply_setting(PipelineConfig& config, const std::string& key, const std::string& value);
std::vector<std::string> setting_keys();

/// Dataset with features, and the rows usable for supervised learning.
struct Prepared {
  std::vector<sim::RfqRecord> records;
  std::vector<features::FeatureRow> features;
  std::vector<std::size_t> usable;  // non-live rows with full momentum history, in time order
  std::vector<std::size_t> train;   // first train_fraction of usable
  std::vector<std::size_t> test;    // the rest
  std::vector<std::size_t> live;
};

Prepared prepare(std::vector<sim::RfqRecord> records, double train_fraction = 0.7);

Matrix raw_features(const Prepared& data, std::span<const std::size_t> rows);
std::vector<int> labels(const Prepared& data, std::span<const std::size_t> rows);

/// Feature transform plus a fill-probability model.
struct Classifier {
  features::StandardizationStats stats;
  std::variant<linear::LassoLogisticModel, bnt::BntModel, ensemble::EnsembleModel> model;

  double predict_proba(const features::FeatureRow& row) const;
  double predict_proba_raw(std::span<const double> raw) const;
  int predict_label(const features::FeatureRow& row, double threshold = 0.5) const;
  std::string kind_name() const;
};

Classifier train_lasso(const Prepared& data, const PipelineConfig& config);
Classifier train_bnt(const Prepared& data, const PipelineConfig& config);
/// Lasso logistic + BNT at stiffness 2 + BNT at stiffness 6.
Classifier train_ensemble(const Prepared& data, const PipelineConfig& config);
/// Builds an ensemble from already trained members that share one feature transform.
Classifier make_ensemble(const std::vector<Classifier>& members,
                         const std::vector<std::string>& names, const PipelineConfig& config);

/// Fits on the chronological train part of the non-live rows, scores the rest.
linear::NextMidModel train_next_mid(const std::vector<sim::RfqRecord>& records,
                                    double train_fraction = 0.7);
/// Realised minus predicted next mid on the validation part of the non-live rows.
std::vector<double> next_mid_residuals(const std::vector<sim::RfqRecord>& records,
                                       const linear::NextMidModel& model, double train_fraction = 0.7);

/// Saves a classifier; an ensemble also writes its members next to the manifest
/// as <stem>.<member>.json.
void save_classifier(const std::filesystem::path& path, const Classifier& classifier,
                     std::uint64_t seed, const std::string& fingerprint);
Classifier load_classifier(const std::filesystem::path& path);
void save_next_mid(const std::filesystem::path& path, const linear::NextMidModel& model,
                   std::uint64_t seed, const std::string& fingerprint);
linear::NextMidModel load_next_mid(const std::filesystem::path& path);

/// Exceed curves per (bond, side) from the validation part of the non-live rows.
pricing::ExceedCurveSet build_exceed_curves(const std::vector<sim::RfqRecord>& records,
                                            const linear::NextMidModel& next_mid,
                                            double train_fraction = 0.7);

pricing::FillProbability fill_probability(const Classifier& classifier,
                                          const features::FeatureRow& row,
                                          const sim::RfqRecord& rfq);

struct QuoteRun {
  std::vector<pricing::QuoteDecision> decisions;
  std::vector<std::vector<pricing::PayoffPoint>> traces;
};

/// Optimal quotes for every live RFQ.
QuoteRun quote_live(const Prepared& data, const Classifier& classifier,
                    const linear::NextMidModel& next_mid, const pricing::ExceedCurveSet& curves);

/// competition - 1 competitor quotes per RFQ, seeded by (seed, RFQ time).
std::vector<pricing::AuctionOutcome> compete(const Prepared& data, const QuoteRun& run,
                                             std::uint64_t seed, double quote_band = 0.01);

/// Test-split metrics of one classifier, error breakdown by competition.
eval::EvalReport evaluate(const Prepared& data, const Classifier& classifier,
                          const std::string& name, double threshold = 0.5,
                          std::optional<ensemble::VoteMode> vote = std::nullopt);

/// LR, ABR2, ABR6, Ensemble 1 (soft) and Ensemble 1 (hard) on one split.
std::vector<eval::EvalReport> compare_models(const Prepared& data, const PipelineConfig& config);

/// Time-series CV of one model family over its default grid on the train rows.
eval::CvResult cross_validate(const Prepared& data, const PipelineConfig& config,
                              const std::string& family);

io::Table decisions_table(const std::vector<pricing::QuoteDecision>& decisions);
io::Table traces_table(const QuoteRun& run);
io::Table curves_table(const pricing::ExceedCurveSet& curves);
io::Table outcomes_table(const std::vector<pricing::QuoteDecision>& decisions,
                         const std::vector<pricing::AuctionOutcome>& outcomes);
io::Table reports_table(const std::vector<eval::EvalReport>& reports);
std::string reports_json(const std::vector<eval::EvalReport>& reports);
io::Table cv_table(const eval::CvResult& result);
io::Table training_log_table(const bnt::BntModel& model);
io::Table qq_table(const std::vector<linear::QQPoint>& points);
io::Table fill_curve_table(const features::FillRateCurve& curve);
io::Table boundary_table(const std::vector<bnt::BoundaryPoint>& points, const std::string& name_i,
                         const std::string& name_j);

}  // namespace rfq::pipeline
