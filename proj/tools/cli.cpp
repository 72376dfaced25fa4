#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <ostream>

#include "CLI11.hpp"
#include "rfq/error.hpp"
#include "rfq/io.hpp"
#include "rfq/pipeline.hpp"

namespace rfq::cli {

namespace {

namespace fs = std::filesystem;
using pipeline::PipelineConfig;

struct Common {
  std::uint64_t seed = 42;
  std::string config;
  std::string out;
  std::vector<std::string> settings;
};

void add_common(CLI::App* sub, Common& c, const std::string& default_out) {
  c.out = default_out;
  sub->add_option("--seed", c.seed, "Master seed for simulation and training");
  sub->add_option("--config", c.config, "Settings file of key = value lines")->check(CLI::ExistingFile);
  sub->add_option("--out", c.out, "Output path")->capture_default_str();
  sub->add_option("--set", c.settings, "Override one setting, key=value (repeatable)");
}

PipelineConfig load_config(const Common& c, const CLI::App* sub) {
  PipelineConfig pc;
  if (!c.config.empty()) {
    std::ifstream in(c.config);
    if (!in) throw Error("cannot open " + c.config);
    for (const auto& item : CLI::ConfigINI().from_config(in)) {
      if (item.name.rfind("++", 0) == 0 || item.name.rfind("--", 0) == 0) continue;
      std::string value;
      for (const auto& v : item.inputs) value += (value.empty() ? "" : ",") + v;
      pipeline::apply_setting(pc, item.name, value);
    }
  }
  for (const auto& kv : c.settings) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    pipeline::apply_setting(pc, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (sub->count("--seed") > 0) pc.set_seed(c.seed);
  pc.sim.validate();
  pc.bnt.validate();
  return pc;
}

std::string data_fingerprint(const std::string& path) { return io::fingerprint(io::read_file(path)); }

std::size_t feature_index(const std::vector<std::string>& names, const std::string& name) {
  for (std::size_t k = 0; k < names.size(); ++k) {
    if (names[k] == name) return k;
  }
  std::string known;
  for (const auto& n : names) known += (known.empty() ? "" : ", ") + n;
  throw ConfigError("unknown feature '" + name + "' (available: " + known + ")");
}

/// A classifier and a next-mid model given in either order.
struct QuoteModels {
  pipeline::Classifier classifier;
  linear::NextMidModel next_mid;
};

QuoteModels load_quote_models(const std::vector<std::string>& paths) {
  if (paths.size() != 2) throw ConfigError("--models expects two files: a classifier and a next_mid model");
  std::optional<pipeline::Classifier> classifier;
  std::optional<linear::NextMidModel> next_mid;
  for (const auto& p : paths) {
    if (io::load_model(p).kind == io::ModelKind::next_mid) {
      next_mid = pipeline::load_next_mid(p);
    } else {
      classifier = pipeline::load_classifier(p);
    }
  }
  if (!classifier || !next_mid) throw ConfigError("--models needs one classifier and one next_mid model");
  return {std::move(*classifier), *next_mid};
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"RFQ fill-probability modelling and quote optimisation", "rfqkit"};
  app.require_subcommand(1);

  // simulate
  Common sim_c;
  std::size_t ring_n = 0;
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic RFQ dataset");
  add_common(simulate, sim_c, "data.csv");
  simulate->add_option("--ring", ring_n, "Write n labelled ring points (X1,X2,Status,Probability) instead");

  // featurize
  Common feat_c;
  std::string feat_data;
  auto* featurize = app.add_subcommand("featurize", "Compute the engineered features of a dataset");
  add_common(featurize, feat_c, "features.csv");
  featurize->add_option("--data", feat_data, "Dataset CSV")->required()->check(CLI::ExistingFile);

  // train
  Common train_c;
  std::string train_data, train_model, train_log, train_qq;
  std::optional<double> stiffness, lambda;
  std::vector<std::string> members;
  auto* train = app.add_subcommand("train", "Fit a model and save it as JSON");
  add_common(train, train_c, "model.json");
  train->add_option("--model", train_model, "Model kind")
      ->required()
      ->check(CLI::IsMember({"bnt", "lasso", "next_mid", "ensemble"}));
  train->add_option("--data", train_data, "Dataset CSV")->check(CLI::ExistingFile);
  train->add_option("--stiffness", stiffness, "Initial relative stiffness of new BNT gates");
  train->add_option("--lambda", lambda, "Lasso penalty");
  train->add_option("--members", members, "Ensemble from saved member models")->delimiter(',');
  train->add_option("--log", train_log, "BNT training log CSV");
  train->add_option("--qq", train_qq, "Next-mid residual Q-Q data CSV");

  // cv
  Common cv_c;
  std::string cv_data, cv_model;
  auto* cv = app.add_subcommand("cv", "Time-series cross-validated grid search");
  add_common(cv, cv_c, "cv.csv");
  cv->add_option("--model", cv_model, "Model family")->required()->check(CLI::IsMember({"lasso", "bnt"}));
  cv->add_option("--data", cv_data, "Dataset CSV")->required()->check(CLI::ExistingFile);

  // evaluate
  Common ev_c;
  std::string ev_data, ev_model, ev_table;
  auto* evaluate = app.add_subcommand("evaluate", "Test-split metrics of a saved classifier");
  add_common(evaluate, ev_c, "report.json");
  evaluate->add_option("--data", ev_data, "Dataset CSV")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--model", ev_model, "Classifier JSON")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--table", ev_table, "Also write the metrics as CSV");

  // curve
  Common curve_c;
  std::string curve_data, curve_feature = "response";
  std::size_t curve_bins = 20;
  double curve_smoothing = 1e-3;
  auto* curve = app.add_subcommand("curve", "Empirical fill rate against one feature");
  add_common(curve, curve_c, "curve.csv");
  curve->add_option("--data", curve_data, "Dataset CSV")->required()->check(CLI::ExistingFile);
  curve->add_option("--feature", curve_feature, "Feature name")->capture_default_str();
  curve->add_option("--bins", curve_bins, "Equal-count bins")->capture_default_str();
  curve->add_option("--smoothing", curve_smoothing, "Spline penalty")->capture_default_str();

  // boundary
  Common bd_c;
  std::string bd_data, bd_model;
  std::vector<std::string> bd_features = {"response", "log_notional"};
  std::size_t bd_resolution = 41;
  auto* boundary = app.add_subcommand("boundary", "BNT fill probability over a grid of two features");
  add_common(boundary, bd_c, "boundary.csv");
  boundary->add_option("--data", bd_data, "Dataset CSV")->required()->check(CLI::ExistingFile);
  boundary->add_option("--model", bd_model, "BNT model JSON")->required()->check(CLI::ExistingFile);
  boundary->add_option("--features", bd_features, "Two feature names")->delimiter(',')->expected(2);
  boundary->add_option("--resolution", bd_resolution, "Grid points per axis")->capture_default_str();

  // quote
  Common q_c;
  std::string q_data, q_curves, q_payoff;
  std::vector<std::string> q_models;
  auto* quote = app.add_subcommand("quote", "Optimal quotes for the live RFQs");
  add_common(quote, q_c, "quotes.csv");
  quote->add_option("--data", q_data, "Dataset CSV")->required()->check(CLI::ExistingFile);
  quote->add_option("--models", q_models, "Classifier and next_mid model JSON")
      ->required()
      ->delimiter(',');
  quote->add_option("--curves", q_curves, "Exceed-limit curves CSV");
  quote->add_option("--payoff", q_payoff, "Expected payoff against offset CSV");

  // compete
  Common c_c;
  std::string c_data;
  std::vector<std::string> c_models;
  auto* compete = app.add_subcommand("compete", "Auction the live RFQs against simulated market makers");
  add_common(compete, c_c, "compete.csv");
  compete->add_option("--data", c_data, "Dataset CSV")->required()->check(CLI::ExistingFile);
  compete->add_option("--models", c_models, "Classifier and next_mid model JSON")
      ->required()
      ->delimiter(',');

  // report
  Common r_c;
  std::string r_data, r_table;
  auto* report = app.add_subcommand("report", "Train LR, ABR2, ABR6 and Ensemble 1 and compare them");
  add_common(report, r_c, "comparison.json");
  report->add_option("--data", r_data, "Dataset CSV")->required()->check(CLI::ExistingFile);
  report->add_option("--table", r_table, "Also write the comparison as CSV");

  if (!args.empty() && args[0].rfind('-', 0) != 0 && app.get_subcommand_no_throw(args[0]) == nullptr) {
    err << "error: unknown subcommand '" << args[0] << "'\n\n" << app.help();
    return 2;
  }
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (simulate->parsed()) {
      const auto pc = load_config(sim_c, simulate);
      if (ring_n > 0) {
        const auto ring = sim::gen_ring_dataset(pc.sim, ring_n);
        io::Table t;
        t.header = {"X1", "X2", "Status", "Probability"};
        for (std::size_t i = 0; i < ring_n; ++i) {
          t.add({io::fmt_exact(ring.points(i, 0)), io::fmt_exact(ring.points(i, 1)),
                 std::to_string(ring.labels[i]), io::fmt_exact(ring.probabilities[i])});
        }
        t.write(sim_c.out);
        out << "wrote " << ring_n << " ring points to " << sim_c.out << "\n";
      } else {
        const auto records = sim::gen_rfq_dataset(pc.sim);
        io::write_dataset(sim_c.out, records);
        out << "wrote " << records.size() << " records to " << sim_c.out << "\n";
      }
    } else if (featurize->parsed()) {
      load_config(feat_c, featurize);
      const auto records = io::read_dataset(feat_data);
      const auto rows = features::compute_features(records);
      io::features_table(records, rows).write(feat_c.out);
      out << "wrote features of " << rows.size() << " records to " << feat_c.out << "\n";
    } else if (train->parsed()) {
      auto pc = load_config(train_c, train);
      if (stiffness) pc.bnt.initial_relative_stiffness = *stiffness;
      if (lambda) pc.lasso_lambda = *lambda;
      pc.bnt.validate();
      if (train_model == "ensemble" && !members.empty()) {
        io::ModelFile manifest;
        manifest.kind = io::ModelKind::ensemble;
        manifest.seed = pc.seed;
        std::vector<pipeline::Classifier> loaded;
        std::vector<std::string> names;
        const fs::path out_dir = fs::absolute(train_c.out).parent_path();
        for (const auto& m : members) {
          loaded.push_back(pipeline::load_classifier(m));
          names.push_back(fs::path(m).stem().string());
          manifest.members.push_back(
              {names.back(), fs::relative(fs::absolute(m), out_dir).generic_string()});
        }
        const auto ens = pipeline::make_ensemble(loaded, names, pc);
        manifest.features = ens.stats;
        manifest.ensemble = std::get<ensemble::EnsembleModel>(ens.model);
        manifest.training_fingerprint = io::load_model(members.front()).training_fingerprint;
        io::save_model(train_c.out, manifest);
        out << "wrote ensemble manifest of " << members.size() << " members to " << train_c.out << "\n";
        return 0;
      }
      if (train_data.empty()) throw ConfigError("train needs --data");
      const auto records = io::read_dataset(train_data);
      const auto fp = data_fingerprint(train_data);
      if (train_model == "next_mid") {
        const auto model = pipeline::train_next_mid(records, pc.train_fraction);
        pipeline::save_next_mid(train_c.out, model, pc.seed, fp);
        if (!train_qq.empty()) {
          pipeline::qq_table(linear::qq_data(pipeline::next_mid_residuals(records, model, pc.train_fraction)))
              .write(train_qq);
        }
        out << "next_mid: validation adjusted R^2 " << model.validation_adjusted_r2 << "\n";
      } else {
        for (const auto& note : pc.bnt.range_violations()) err << "warning: " << note << "\n";
        const auto data = pipeline::prepare(records, pc.train_fraction);
        pipeline::Classifier classifier;
        if (train_model == "bnt") {
          classifier = pipeline::train_bnt(data, pc);
        } else if (train_model == "lasso") {
          classifier = pipeline::train_lasso(data, pc);
        } else {
          classifier = pipeline::train_ensemble(data, pc);
        }
        pipeline::save_classifier(train_c.out, classifier, pc.seed, fp);
        if (!train_log.empty()) {
          if (const auto* b = std::get_if<bnt::BntModel>(&classifier.model)) {
            pipeline::training_log_table(*b).write(train_log);
          } else {
            err << "warning: --log applies to bnt models only\n";
          }
        }
        const auto rep = pipeline::evaluate(data, classifier, train_model, pc.threshold);
        out << train_model << ": test log-loss " << rep.log_loss << ", accuracy " << rep.accuracy << "\n";
      }
      out << "wrote " << train_c.out << "\n";
    } else if (cv->parsed()) {
      const auto pc = load_config(cv_c, cv);
      const auto data = pipeline::prepare(io::read_dataset(cv_data), pc.train_fraction);
      const auto result = pipeline::cross_validate(data, pc, cv_model);
      pipeline::cv_table(result).write(cv_c.out);
      out << "best:";
      for (const auto& [k, v] : result.grid[result.best].params) out << " " << k << "=" << v;
      out << " (mean log-loss " << result.mean_log_loss[result.best] << ")\n";
    } else if (evaluate->parsed()) {
      const auto pc = load_config(ev_c, evaluate);
      const auto data = pipeline::prepare(io::read_dataset(ev_data), pc.train_fraction);
      const auto classifier = pipeline::load_classifier(ev_model);
      const std::vector<eval::EvalReport> reports = {
          pipeline::evaluate(data, classifier, fs::path(ev_model).stem().string(), pc.threshold)};
      io::atomic_write(ev_c.out, pipeline::reports_json(reports));
      if (!ev_table.empty()) pipeline::reports_table(reports).write(ev_table);
      out << "log-loss " << reports[0].log_loss << ", accuracy " << reports[0].accuracy << ", F1 "
          << reports[0].f1 << "\n";
    } else if (curve->parsed()) {
      const auto pc = load_config(curve_c, curve);
      const auto data = pipeline::prepare(io::read_dataset(curve_data), pc.train_fraction);
      const auto k = feature_index(features::feature_names(), curve_feature);
      const Matrix X = pipeline::raw_features(data, data.train);
      const auto result = features::fill_rate_curve(X.column(k), pipeline::labels(data, data.train),
                                                    curve_bins, curve_smoothing, curve_feature);
      if (!result.notice.empty()) err << "notice: " << result.notice << "\n";
      pipeline::fill_curve_table(result).write(curve_c.out);
      out << "wrote " << result.bin_centers.size() << " bins to " << curve_c.out << "\n";
    } else if (boundary->parsed()) {
      const auto pc = load_config(bd_c, boundary);
      const auto data = pipeline::prepare(io::read_dataset(bd_data), pc.train_fraction);
      const auto classifier = pipeline::load_classifier(bd_model);
      const auto* model = std::get_if<bnt::BntModel>(&classifier.model);
      if (!model) throw ConfigError("boundary needs a bnt model");
      const auto names = classifier.stats.output_names();
      const auto i = feature_index(names, bd_features.at(0));
      const auto j = feature_index(names, bd_features.at(1));
      const Matrix X = classifier.stats.transform(pipeline::raw_features(data, data.train));
      const auto col_i = X.column(i);
      const auto col_j = X.column(j);
      bnt::GridSpec grid;
      grid.min_i = *std::min_element(col_i.begin(), col_i.end());
      grid.max_i = *std::max_element(col_i.begin(), col_i.end());
      grid.min_j = *std::min_element(col_j.begin(), col_j.end());
      grid.max_j = *std::max_element(col_j.begin(), col_j.end());
      grid.n_i = grid.n_j = bd_resolution;
      const auto points = bnt::decision_boundary_grid(*model, i, j, grid, bnt::column_medians(X));
      pipeline::boundary_table(points, names[i], names[j]).write(bd_c.out);
      out << "wrote " << points.size() << " grid points to " << bd_c.out << "\n";
    } else if (quote->parsed() || compete->parsed()) {
      const bool is_quote = quote->parsed();
      const Common& c = is_quote ? q_c : c_c;
      const auto pc = load_config(c, is_quote ? quote : compete);
      const auto records = io::read_dataset(is_quote ? q_data : c_data);
      const auto models = load_quote_models(is_quote ? q_models : c_models);
      const auto data = pipeline::prepare(records, pc.train_fraction);
      const auto curves = pipeline::build_exceed_curves(records, models.next_mid, pc.train_fraction);
      const auto run = pipeline::quote_live(data, models.classifier, models.next_mid, curves);
      if (is_quote) {
        pipeline::decisions_table(run.decisions).write(c.out);
        if (!q_curves.empty()) pipeline::curves_table(curves).write(q_curves);
        if (!q_payoff.empty()) pipeline::traces_table(run).write(q_payoff);
        out << "wrote " << run.decisions.size() << " quote decisions to " << c.out << "\n";
      } else {
        const auto outcomes = pipeline::compete(data, run, pc.seed, pc.sim.quote_band);
        pipeline::outcomes_table(run.decisions, outcomes).write(c.out);
        std::size_t filled = 0;
        double total = 0.0;
        for (const auto& o : outcomes) {
          filled += o.utility[0] > 0.0 ? 1 : 0;
          total += o.utility[0];
        }
        out << "filled " << filled << " of " << outcomes.size() << " RFQs, total utility " << total << "\n";
      }
    } else if (report->parsed()) {
      const auto pc = load_config(r_c, report);
      const auto data = pipeline::prepare(io::read_dataset(r_data), pc.train_fraction);
      const auto reports = pipeline::compare_models(data, pc);
      io::atomic_write(r_c.out, pipeline::reports_json(reports));
      if (!r_table.empty()) pipeline::reports_table(reports).write(r_table);
      out << pipeline::reports_table(reports).to_csv();
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace rfq::cli
