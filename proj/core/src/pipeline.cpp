#include "rfq/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>

#include "json.hpp"
#include "rfq/error.hpp"
#include "rfq/random.hpp"

namespace rfq::pipeline {

namespace fs = std::filesystem;

void PipelineConfig::set_seed(std::uint64_t s) {
  seed = s;
  sim.seed = s;
  bnt.seed = s;
}

namespace {

double to_real(const std::string& key, const std::string& value) {
  double v = 0.0;
  const char* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, v);
  if (ec != std::errc{} || ptr != end || value.empty()) {
    throw ConfigError("setting '" + key + "': not a number: '" + value + "'");
  }
  return v;
}

std::uint64_t to_count(const std::string& key, const std::string& value) {
  std::uint64_t v = 0;
  const char* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, v);
  if (ec != std::errc{} || ptr != end || value.empty()) {
    throw ConfigError("setting '" + key + "': not a nonnegative integer: '" + value + "'");
  }
  return v;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "on" || value == "yes") return true;
  if (value == "0" || value == "false" || value == "off" || value == "no") return false;
  throw ConfigError("setting '" + key + "': not a boolean: '" + value + "'");
}

using Setter = std::function<void(PipelineConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto real = [&t](const char* key, auto member) {
      t[key] = [member](PipelineConfig& c, const std::string& k, const std::string& v) {
        member(c) = to_real(k, v);
      };
    };
    auto count = [&t](const char* key, auto member) {
      t[key] = [member](PipelineConfig& c, const std::string& k, const std::string& v) {
        member(c) = static_cast<std::remove_reference_t<decltype(member(c))>>(to_count(k, v));
      };
    };
    count("n_records", [](PipelineConfig& c) -> std::size_t& { return c.sim.n_records; });
    count("n_live", [](PipelineConfig& c) -> std::size_t& { return c.sim.n_live; });
    count("n_bonds", [](PipelineConfig& c) -> std::size_t& { return c.sim.n_bonds; });
    real("p0", [](PipelineConfig& c) -> double& { return c.sim.p0; });
    real("s0", [](PipelineConfig& c) -> double& { return c.sim.s0; });
    real("mu", [](PipelineConfig& c) -> double& { return c.sim.mu; });
    real("sigma_s", [](PipelineConfig& c) -> double& { return c.sim.sigma_s; });
    real("sigma_b", [](PipelineConfig& c) -> double& { return c.sim.sigma_b; });
    real("sigma_a", [](PipelineConfig& c) -> double& { return c.sim.sigma_a; });
    real("dt", [](PipelineConfig& c) -> double& { return c.sim.dt; });
    real("quote_band", [](PipelineConfig& c) -> double& { return c.sim.quote_band; });
    real("ring_gain", [](PipelineConfig& c) -> double& { return c.sim.ring_gain; });
    t["status_mode"] = [](PipelineConfig& c, const std::string&, const std::string& v) {
      c.sim.status_mode = sim::status_mode_from_string(v);
    };
    t["ring_link"] = [](PipelineConfig& c, const std::string&, const std::string& v) {
      c.sim.ring_link = sim::ring_link_from_string(v);
    };
    real("prior_alpha", [](PipelineConfig& c) -> double& { return c.bnt.prior_alpha; });
    real("prior_beta", [](PipelineConfig& c) -> double& { return c.bnt.prior_beta; });
    real("pruning_factor", [](PipelineConfig& c) -> double& { return c.bnt.pruning_factor; });
    count("n_iter", [](PipelineConfig& c) -> std::size_t& { return c.bnt.n_iter; });
    real("learning_rate_init", [](PipelineConfig& c) -> double& { return c.bnt.learning_rate_init; });
    count("n_gradient_descent_steps",
          [](PipelineConfig& c) -> std::size_t& { return c.bnt.n_gradient_descent_steps; });
    real("initial_relative_stiffness",
         [](PipelineConfig& c) -> double& { return c.bnt.initial_relative_stiffness; });
    t["stiffness"] = t["initial_relative_stiffness"];
    t["monotone_backtracking"] = [](PipelineConfig& c, const std::string& k, const std::string& v) {
      c.bnt.monotone_backtracking = to_bool(k, v);
    };
    real("lasso_lambda", [](PipelineConfig& c) -> double& { return c.lasso_lambda; });
    real("train_fraction", [](PipelineConfig& c) -> double& { return c.train_fraction; });
    count("cv_folds", [](PipelineConfig& c) -> std::size_t& { return c.cv_folds; });
    t["window"] = [](PipelineConfig& c, const std::string& k, const std::string& v) {
      if (v == "expanding") c.window = eval::WindowKind::expanding;
      else if (v == "sliding") c.window = eval::WindowKind::sliding;
      else throw ConfigError("setting '" + k + "': expected expanding or sliding");
    };
    t["one_hot"] = [](PipelineConfig& c, const std::string& k, const std::string& v) {
      c.one_hot = to_bool(k, v);
    };
    t["vote_mode"] = [](PipelineConfig& c, const std::string&, const std::string& v) {
      c.vote_mode = ensemble::vote_mode_from_string(v);
    };
    real("threshold", [](PipelineConfig& c) -> double& { return c.threshold; });
    t["seed"] = [](PipelineConfig& c, const std::string& k, const std::string& v) {
      c.set_seed(to_count(k, v));
    };
    return t;
  }();
  return table;
}

}  // namespace

void apply_setting(PipelineConfig& config, const std::string& key, const std::string& value) {
  const auto it = setters().find(key);
  if (it == setters().end()) throw ConfigError("unknown setting '" + key + "'");
  it->second(config, key, value);
}

std::vector<std::string> setting_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, _] : setters()) keys.push_back(k);
  return keys;
}

Prepared prepare(std::vector<sim::RfqRecord> records, double train_fraction) {
  Prepared p;
  p.records = std::move(records);
  p.features = features::compute_features(p.records);
  for (std::size_t i = 0; i < p.records.size(); ++i) {
    if (p.records[i].live) {
      p.live.push_back(i);
    } else if (p.features[i].history_valid) {
      p.usable.push_back(i);
    }
  }
  const eval::Fold split = eval::chronological_split(p.usable.size(), train_fraction);
  p.train.assign(p.usable.begin(), p.usable.begin() + static_cast<std::ptrdiff_t>(split.train.end));
  p.test.assign(p.usable.begin() + static_cast<std::ptrdiff_t>(split.validation.begin), p.usable.end());
  return p;
}

Matrix raw_features(const Prepared& data, std::span<const std::size_t> rows) {
  Matrix X;
  for (std::size_t i : rows) X.append_row(features::to_vector(data.features[i]));
  return X;
}

std::vector<int> labels(const Prepared& data, std::span<const std::size_t> rows) {
  std::vector<int> y;
  y.reserve(rows.size());
  for (std::size_t i : rows) y.push_back(data.records[i].status);
  return y;
}

double Classifier::predict_proba_raw(std::span<const double> raw) const {
  const std::vector<double> x = stats.transform(raw);
  return std::visit(
      [&x](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, linear::LassoLogisticModel>) {
          return linear::predict_logistic(m, x);
        } else if constexpr (std::is_same_v<T, bnt::BntModel>) {
          return bnt::predict_proba(m, x);
        } else {
          return m.predict_proba(x);
        }
      },
      model);
}

double Classifier::predict_proba(const features::FeatureRow& row) const {
  return predict_proba_raw(features::to_vector(row));
}

int Classifier::predict_label(const features::FeatureRow& row, double threshold) const {
  if (const auto* e = std::get_if<ensemble::EnsembleModel>(&model)) {
    return e->predict_label(stats.transform(features::to_vector(row)));
  }
  return predict_proba(row) > threshold ? 1 : 0;
}

std::string Classifier::kind_name() const {
  switch (model.index()) {
    case 0: return "lasso_logistic";
    case 1: return "bnt";
    default: return "ensemble";
  }
}

namespace {

struct TrainSet {
  features::StandardizationStats stats;
  Matrix X;
  std::vector<int> y;
};

TrainSet train_set(const Prepared& data, const PipelineConfig& config) {
  if (data.train.empty()) throw Error("no labelled training rows");
  auto st = features::standardize(raw_features(data, data.train), features::feature_names(),
                                  features::categorical_mask(), std::nullopt, config.one_hot);
  return {std::move(st.stats), std::move(st.rows), labels(data, data.train)};
}

bnt::BntHyperparams with_stiffness(bnt::BntHyperparams h, double stiffness) {
  h.initial_relative_stiffness = stiffness;
  return h;
}

}  // namespace

Classifier train_lasso(const Prepared& data, const PipelineConfig& config) {
  auto ts = train_set(data, config);
  return {std::move(ts.stats), linear::fit_lasso_logistic(ts.X, ts.y, config.lasso_lambda)};
}

Classifier train_bnt(const Prepared& data, const PipelineConfig& config) {
  auto ts = train_set(data, config);
  return {std::move(ts.stats), bnt::fit(ts.X, ts.y, config.bnt)};
}

Classifier train_ensemble(const Prepared& data, const PipelineConfig& config) {
  auto ts = train_set(data, config);
  ensemble::EnsembleModel e;
  e.members.emplace_back(linear::fit_lasso_logistic(ts.X, ts.y, config.lasso_lambda));
  e.members.emplace_back(bnt::fit(ts.X, ts.y, with_stiffness(config.bnt, 2.0)));
  e.members.emplace_back(bnt::fit(ts.X, ts.y, with_stiffness(config.bnt, 6.0)));
  e.member_names = {"lr", "abr2", "abr6"};
  e.vote_mode = config.vote_mode;
  e.threshold = config.threshold;
  e.validate();
  return {std::move(ts.stats), std::move(e)};
}

Classifier make_ensemble(const std::vector<Classifier>& members,
                         const std::vector<std::string>& names, const PipelineConfig& config) {
  if (members.size() != names.size()) throw Error("make_ensemble: one name per member");
  if (members.empty()) throw Error("make_ensemble: no members");
  ensemble::EnsembleModel e;
  for (const auto& m : members) {
    if (!(m.stats == members.front().stats)) {
      throw Error("make_ensemble: members were trained with different feature transforms");
    }
    if (const auto* l = std::get_if<linear::LassoLogisticModel>(&m.model)) {
      e.members.emplace_back(*l);
    } else if (const auto* b = std::get_if<bnt::BntModel>(&m.model)) {
      e.members.emplace_back(*b);
    } else {
      throw Error("make_ensemble: nested ensembles are not supported");
    }
  }
  e.member_names = names;
  e.vote_mode = config.vote_mode;
  e.threshold = config.threshold;
  e.validate();
  return {members.front().stats, std::move(e)};
}

namespace {

std::pair<std::vector<sim::RfqRecord>, std::vector<sim::RfqRecord>> next_mid_split(
    const std::vector<sim::RfqRecord>& records, double train_fraction) {
  std::vector<sim::RfqRecord> rows;
  for (const auto& r : records) {
    if (!r.live) rows.push_back(r);
  }
  const eval::Fold split = eval::chronological_split(rows.size(), train_fraction);
  std::vector<sim::RfqRecord> validation(rows.begin() + static_cast<std::ptrdiff_t>(split.validation.begin),
                                         rows.end());
  rows.resize(split.train.end);
  return {std::move(rows), std::move(validation)};
}

}  // namespace

linear::NextMidModel train_next_mid(const std::vector<sim::RfqRecord>& records, double train_fraction) {
  const auto [train, validation] = next_mid_split(records, train_fraction);
  return linear::fit_next_mid(train, validation);
}

std::vector<double> next_mid_residuals(const std::vector<sim::RfqRecord>& records,
                                       const linear::NextMidModel& model, double train_fraction) {
  const auto validation = next_mid_split(records, train_fraction).second;
  std::vector<double> out;
  out.reserve(validation.size());
  for (const auto& r : validation) out.push_back(r.next_mid_price - model.predict(r));
  return out;
}

void save_classifier(const fs::path& path, const Classifier& classifier, std::uint64_t seed,
                     const std::string& fingerprint) {
  io::ModelFile f;
  f.features = classifier.stats;
  f.seed = seed;
  f.training_fingerprint = fingerprint;
  if (const auto* l = std::get_if<linear::LassoLogisticModel>(&classifier.model)) {
    f.kind = io::ModelKind::lasso_logistic;
    f.lasso = *l;
  } else if (const auto* b = std::get_if<bnt::BntModel>(&classifier.model)) {
    f.kind = io::ModelKind::bnt;
    f.bnt = *b;
  } else {
    const auto& e = std::get<ensemble::EnsembleModel>(classifier.model);
    f.kind = io::ModelKind::ensemble;
    f.ensemble = e;
    for (std::size_t k = 0; k < e.members.size(); ++k) {
      const std::string file = path.stem().string() + "." + e.member_names[k] + ".json";
      Classifier member{classifier.stats, {}};
      std::visit([&member](const auto& m) { member.model = m; }, e.members[k]);
      save_classifier(path.parent_path() / file, member, seed, fingerprint);
      f.members.push_back({e.member_names[k], file});
    }
  }
  io::save_model(path, f);
}

Classifier load_classifier(const fs::path& path) {
  io::ModelFile f = io::load_model(path);
  if (!f.features) throw Error(path.string() + ": classifier has no feature schema");
  switch (f.kind) {
    case io::ModelKind::lasso_logistic: return {*f.features, std::move(*f.lasso)};
    case io::ModelKind::bnt: return {*f.features, std::move(*f.bnt)};
    case io::ModelKind::ensemble: return {*f.features, std::move(*f.ensemble)};
    case io::ModelKind::next_mid: break;
  }
  throw Error(path.string() + ": a next_mid model is not a classifier");
}

void save_next_mid(const fs::path& path, const linear::NextMidModel& model, std::uint64_t seed,
                   const std::string& fingerprint) {
  io::ModelFile f;
  f.kind = io::ModelKind::next_mid;
  f.next_mid = model;
  f.seed = seed;
  f.training_fingerprint = fingerprint;
  io::save_model(path, f);
}

linear::NextMidModel load_next_mid(const fs::path& path) {
  return *io::load_model(path, io::ModelKind::next_mid).next_mid;
}

pricing::ExceedCurveSet build_exceed_curves(const std::vector<sim::RfqRecord>& records,
                                            const linear::NextMidModel& next_mid,
                                            double train_fraction) {
  const auto validation = next_mid_split(records, train_fraction).second;
  std::map<std::pair<int, int>, std::vector<pricing::ValidationSample>> groups;
  for (const auto& r : validation) {
    groups[{r.bond, static_cast<int>(r.side)}].push_back({next_mid.predict(r), r.next_mid_price});
  }
  pricing::ExceedCurveSet set;
  for (const auto& [key, samples] : groups) {
    set.add(pricing::exceed_curve(samples, key.first, static_cast<sim::Side>(key.second)));
  }
  return set;
}

pricing::FillProbability fill_probability(const Classifier& classifier,
                                          const features::FeatureRow& row,
                                          const sim::RfqRecord& rfq) {
  return [&classifier, row, rfq](double quote) {
    return classifier.predict_proba(features::with_quote(row, rfq, quote));
  };
}

QuoteRun quote_live(const Prepared& data, const Classifier& classifier,
                    const linear::NextMidModel& next_mid, const pricing::ExceedCurveSet& curves) {
  QuoteRun run;
  for (std::size_t i : data.live) {
    const auto& rfq = data.records[i];
    std::vector<pricing::PayoffPoint> trace;
    run.decisions.push_back(pricing::optimal_quote(
        rfq, fill_probability(classifier, data.features[i], rfq), next_mid, curves, &trace));
    run.traces.push_back(std::move(trace));
  }
  return run;
}

std::vector<pricing::AuctionOutcome> compete(const Prepared& data, const QuoteRun& run,
                                             std::uint64_t seed, double quote_band) {
  if (run.decisions.size() != data.live.size()) throw Error("compete: one decision per live RFQ");
  std::vector<pricing::AuctionOutcome> out;
  for (std::size_t k = 0; k < data.live.size(); ++k) {
    const auto& rfq = data.records[data.live[k]];
    RandomStream rng(derive_seed(seed, "competitor", static_cast<std::uint64_t>(rfq.time)));
    const auto others = sim::gen_competitor_quotes(
        rfq, static_cast<std::size_t>(rfq.competition - 1), rng, quote_band);
    out.push_back(pricing::auction_utility(run.decisions[k].quote, others, rfq.next_mid_price, rfq.side));
  }
  return out;
}

eval::EvalReport evaluate(const Prepared& data, const Classifier& classifier, const std::string& name,
                          double threshold, std::optional<ensemble::VoteMode> vote) {
  std::vector<double> p;
  std::vector<int> groups;
  std::vector<int> hard;
  const auto* ens = std::get_if<ensemble::EnsembleModel>(&classifier.model);
  const bool use_hard = ens && vote.value_or(ens->vote_mode) == ensemble::VoteMode::hard;
  for (std::size_t i : data.test) {
    const auto x = classifier.stats.transform(features::to_vector(data.features[i]));
    if (ens) {
      p.push_back(ens->predict_proba(x));
      if (use_hard) hard.push_back(ensemble::majority_vote(ens->member_probabilities(x), threshold).label);
    } else {
      p.push_back(classifier.predict_proba_raw(features::to_vector(data.features[i])));
    }
    groups.push_back(data.records[i].competition);
  }
  const auto y = labels(data, data.test);
  auto report = eval::classification_report(y, p, threshold, groups, hard);
  report.model = name;
  return report;
}

std::vector<eval::EvalReport> compare_models(const Prepared& data, const PipelineConfig& config) {
  const auto ens = train_ensemble(data, config);
  const auto& e = std::get<ensemble::EnsembleModel>(ens.model);
  std::vector<eval::EvalReport> out;
  const char* names[] = {"LR", "ABR2", "ABR6"};
  for (std::size_t k = 0; k < e.members.size(); ++k) {
    Classifier member{ens.stats, {}};
    std::visit([&member](const auto& m) { member.model = m; }, e.members[k]);
    out.push_back(evaluate(data, member, names[k], config.threshold));
  }
  out.push_back(evaluate(data, ens, "Ensemble1-soft", config.threshold, ensemble::VoteMode::soft));
  out.push_back(evaluate(data, ens, "Ensemble1-hard", config.threshold, ensemble::VoteMode::hard));
  return out;
}

eval::CvResult cross_validate(const Prepared& data, const PipelineConfig& config,
                              const std::string& family) {
  const Matrix X = raw_features(data, data.train);
  const auto y = labels(data, data.train);
  const auto folds = eval::time_series_folds(X.rows(), config.cv_folds, config.window);
  const auto names = features::feature_names();
  const auto categorical = features::categorical_mask();
  const bool one_hot = config.one_hot;

  std::vector<eval::GridPoint> grid;
  eval::ModelFamily fit;
  if (family == "lasso" || family == "lasso_logistic") {
    // 1e-4 .. 1, log-spaced. Larger penalties keep fewer coefficients.
    for (int k = 0; k <= 8; ++k) {
      const double lambda = std::pow(10.0, -4.0 + 0.5 * k);
      grid.push_back({{{"lambda", lambda}}, -std::log10(lambda)});
    }
    fit = [=](const eval::GridPoint& g, const Matrix& Xt, std::span<const int> yt) -> eval::Predictor {
      auto st = features::standardize(Xt, names, categorical, std::nullopt, one_hot);
      auto model = linear::fit_lasso_logistic(st.rows, yt, g.params.at("lambda"));
      return [stats = st.stats, model](std::span<const double> x) {
        return linear::predict_logistic(model, stats.transform(x));
      };
    };
  } else if (family == "bnt") {
    for (double stiffness : {2.0, 6.0}) {
      for (double factor : {1.0, 1.05}) {
        grid.push_back({{{"stiffness", stiffness}, {"pruning_factor", factor}}, stiffness - factor});
      }
    }
    const auto base = config.bnt;
    fit = [=](const eval::GridPoint& g, const Matrix& Xt, std::span<const int> yt) -> eval::Predictor {
      auto st = features::standardize(Xt, names, categorical, std::nullopt, one_hot);
      auto h = with_stiffness(base, g.params.at("stiffness"));
      h.pruning_factor = g.params.at("pruning_factor");
      auto model = bnt::fit(st.rows, yt, h);
      return [stats = st.stats, model](std::span<const double> x) {
        return bnt::predict_proba(model, stats.transform(x));
      };
    };
  } else {
    throw ConfigError("unknown model family '" + family + "' (expected lasso or bnt)");
  }
  return eval::grid_search_cv(fit, grid, X, y, folds);
}

io::Table decisions_table(const std::vector<pricing::QuoteDecision>& decisions) {
  io::Table t;
  t.header = {"Time", "Bond", "Side", "MidPrice", "PredictedNextMid", "GridIndex", "CandidateQuote",
              "Quote", "OffsetFromPrediction", "OffsetFromMid", "PFill", "PExceed",
              "ExpectedPayoff", "CapApplied"};
  for (const auto& d : decisions) {
    t.add({std::to_string(d.rfq_time), std::to_string(d.bond), std::to_string(static_cast<int>(d.side)),
           io::fmt_fixed(d.mid_price), io::fmt_fixed(d.predicted_next_mid), std::to_string(d.grid_index),
           io::fmt_fixed(d.candidate_quote), io::fmt_fixed(d.quote), io::fmt_fixed(d.offset),
           io::fmt_fixed(d.quote - d.mid_price), io::fmt_fixed(d.p_fill, 9),
           io::fmt_fixed(d.p_exceed, 9), io::fmt_fixed(d.expected_payoff, 9),
           d.cap_applied ? "1" : "0"});
  }
  return t;
}

io::Table traces_table(const QuoteRun& run) {
  io::Table t;
  t.header = {"Time", "GridIndex", "Offset", "Quote", "Feasible", "PFill", "PExceed", "ExpectedPayoff"};
  for (std::size_t k = 0; k < run.decisions.size(); ++k) {
    for (const auto& p : run.traces[k]) {
      t.add({std::to_string(run.decisions[k].rfq_time), std::to_string(p.index), io::fmt_fixed(p.offset, 2),
             io::fmt_fixed(p.quote), p.feasible ? "1" : "0", io::fmt_fixed(p.p_fill, 9),
             io::fmt_fixed(p.p_exceed, 9), io::fmt_fixed(p.payoff, 9)});
    }
  }
  return t;
}

io::Table curves_table(const pricing::ExceedCurveSet& curves) {
  io::Table t;
  t.header = {"Bond", "Side", "Offset", "PExceed", "Samples"};
  for (const auto& [key, c] : curves.curves()) {
    for (std::size_t k = 0; k < c.offsets.size(); ++k) {
      t.add({std::to_string(c.bond), std::to_string(static_cast<int>(c.side)), io::fmt_fixed(c.offsets[k], 2),
             io::fmt_fixed(c.probabilities[k], 9), std::to_string(c.samples.size())});
    }
  }
  return t;
}

io::Table outcomes_table(const std::vector<pricing::QuoteDecision>& decisions,
                         const std::vector<pricing::AuctionOutcome>& outcomes) {
  io::Table t;
  t.header = {"Time", "Participant", "Quote", "Loss", "Winner", "Utility"};
  for (std::size_t k = 0; k < outcomes.size(); ++k) {
    const auto& o = outcomes[k];
    for (std::size_t p = 0; p < o.quotes.size(); ++p) {
      const bool winner = std::find(o.winners.begin(), o.winners.end(), p) != o.winners.end();
      t.add({std::to_string(decisions[k].rfq_time), p == 0 ? "us" : "competitor" + std::to_string(p),
             io::fmt_fixed(o.quotes[p]), o.loss[p] ? "1" : "0", winner ? "1" : "0",
             io::fmt_fixed(o.utility[p], 6)});
    }
  }
  return t;
}

io::Table reports_table(const std::vector<eval::EvalReport>& reports) {
  io::Table t;
  t.header = {"Model", "Rows", "LogLoss", "Accuracy", "F1", "TP", "FP", "TN", "FN", "FPR", "FNR"};
  for (const auto& r : reports) {
    const auto& c = r.confusion;
    t.add({r.model, std::to_string(r.rows), io::fmt_fixed(r.log_loss, 6), io::fmt_fixed(r.accuracy, 6),
           io::fmt_fixed(r.f1, 6), std::to_string(c.tp), std::to_string(c.fp), std::to_string(c.tn),
           std::to_string(c.fn), io::fmt_fixed(c.false_positive_rate(), 6),
           io::fmt_fixed(c.false_negative_rate(), 6)});
  }
  return t;
}

std::string reports_json(const std::vector<eval::EvalReport>& reports) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& r : reports) {
    nlohmann::ordered_json j;
    j["model"] = r.model;
    j["rows"] = r.rows;
    j["log_loss"] = r.log_loss;
    j["accuracy"] = r.accuracy;
    j["f1"] = r.f1;
    j["confusion"] = {{"tp", r.confusion.tp}, {"fp", r.confusion.fp},
                      {"tn", r.confusion.tn}, {"fn", r.confusion.fn}};
    j["false_positive_rate"] = r.confusion.false_positive_rate();
    j["false_negative_rate"] = r.confusion.false_negative_rate();
    j["prediction_histogram"] = r.histogram;
    nlohmann::ordered_json groups = nlohmann::ordered_json::array();
    for (const auto& g : r.error_by_group) {
      groups.push_back({{"competition", g.group}, {"rows", g.rows}, {"errors", g.errors}});
    }
    j["errors_by_competition"] = std::move(groups);
    arr.push_back(std::move(j));
  }
  return arr.dump(2) + "\n";
}

io::Table cv_table(const eval::CvResult& result) {
  io::Table t;
  t.header = {"Point", "Params", "Fold", "Failed", "LogLoss", "Accuracy", "MeanLogLoss", "Selected"};
  for (const auto& row : result.table) {
    std::string params;
    for (const auto& [k, v] : result.grid[row.point].params) {
      if (!params.empty()) params += ';';
      params += k + "=" + io::fmt_exact(v);
    }
    t.add({std::to_string(row.point), params, std::to_string(row.fold), row.failed ? "1" : "0",
           row.failed ? "" : io::fmt_fixed(row.log_loss, 6), row.failed ? "" : io::fmt_fixed(row.accuracy, 6),
           std::isfinite(result.mean_log_loss[row.point]) ? io::fmt_fixed(result.mean_log_loss[row.point], 6) : "",
           row.point == result.best ? "1" : "0"});
  }
  return t;
}

io::Table training_log_table(const bnt::BntModel& model) {
  io::Table t;
  t.header = {"Iteration", "Bound", "Leaves", "Grown"};
  for (const auto& e : model.training_log) {
    t.add({std::to_string(e.iteration), io::fmt_exact(e.bound), std::to_string(e.n_leaves),
           e.grown ? "1" : "0"});
  }
  return t;
}

io::Table qq_table(const std::vector<linear::QQPoint>& points) {
  io::Table t;
  t.header = {"Theoretical", "Empirical"};
  for (const auto& p : points) t.add({io::fmt_exact(p.theoretical), io::fmt_exact(p.empirical)});
  return t;
}

io::Table fill_curve_table(const features::FillRateCurve& curve) {
  io::Table t;
  t.header = {"Feature", "BinCenter", "Count", "RawRate", "SmoothRate"};
  for (std::size_t b = 0; b < curve.bin_centers.size(); ++b) {
    t.add({curve.feature, io::fmt_exact(curve.bin_centers[b]), std::to_string(curve.counts[b]),
           io::fmt_fixed(curve.raw_rates[b], 9), io::fmt_fixed(curve.smooth_rates[b], 9)});
  }
  return t;
}

io::Table boundary_table(const std::vector<bnt::BoundaryPoint>& points, const std::string& name_i,
                         const std::string& name_j) {
  io::Table t;
  t.header = {name_i, name_j, "PFill"};
  for (const auto& p : points) {
    t.add({io::fmt_exact(p.value_i), io::fmt_exact(p.value_j), io::fmt_fixed(p.probability, 9)});
  }
  return t;
}

}  // namespace rfq::pipeline
