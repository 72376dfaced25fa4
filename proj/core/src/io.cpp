#include "rfq/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

#include "json.hpp"

#include "rfq/error.hpp"

namespace rfq::io {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string fmt_fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  std::string out = buf;
  if (out[0] == '-' && out.find_first_not_of("-0.") == std::string::npos) {
    out.erase(0, 1);
  }
  return out;
}

std::string fmt_exact(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc{}) throw Error("cannot format number");
  return std::string(buf, end);
}

void atomic_write(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw Error("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fingerprint(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---- dataset ----

namespace {

const std::vector<std::string>& dataset_columns() {
  static const std::vector<std::string> cols = {
      "Time", "Bond", "Side", "Notional", "CounterParty", "MidPrice",
      "QuotedPrice", "Competition", "Status", "NextMidPrice", "Live"};
  return cols;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::int64_t parse_int(const std::string& cell, long row, const std::string& column) {
  std::int64_t v = 0;
  const char* end = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(cell.data(), end, v);
  if (ec != std::errc{} || ptr != end || cell.empty()) {
    throw ParseError("not an integer: '" + cell + "'", row, column);
  }
  return v;
}

double parse_real(const std::string& cell, long row, const std::string& column) {
  double v = 0.0;
  const char* end = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(cell.data(), end, v);
  if (ec != std::errc{} || ptr != end || cell.empty() || !std::isfinite(v)) {
    throw ParseError("not a finite number: '" + cell + "'", row, column);
  }
  return v;
}

std::int64_t parse_in_range(const std::string& cell, long row, const std::string& column,
                            std::int64_t lo, std::int64_t hi) {
  const auto v = parse_int(cell, row, column);
  if (v < lo || v > hi) {
    throw ParseError("value " + cell + " out of range [" + std::to_string(lo) + ", " +
                         std::to_string(hi) + "]",
                     row, column);
  }
  return v;
}

}  // namespace

std::string format_dataset(std::span<const sim::RfqRecord> records) {
  std::string out = kDatasetHeader;
  out += '\n';
  for (const auto& r : records) {
    out += std::to_string(r.time);
    out += ',' + std::to_string(r.bond);
    out += ',' + std::to_string(static_cast<int>(r.side));
    out += ',' + std::to_string(r.notional);
    out += ',' + std::to_string(r.counterparty);
    out += ',' + fmt_fixed(r.mid_price);
    out += ',' + fmt_fixed(r.quoted_price);
    out += ',' + std::to_string(r.competition);
    out += ',' + std::to_string(r.status);
    out += ',' + fmt_fixed(r.next_mid_price);
    out += ',' + std::string(r.live ? "1" : "0");
    out += '\n';
  }
  return out;
}

std::vector<sim::RfqRecord> parse_dataset(std::istream& in) {
  const auto& cols = dataset_columns();
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty dataset file", 0);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split(line);
  for (std::size_t c = 0; c < cols.size(); ++c) {
    if (c >= header.size()) throw ParseError("missing header column", 0, cols[c]);
    if (header[c] != cols[c]) {
      throw ParseError("unexpected header column '" + header[c] + "', expected '" + cols[c] + "'",
                       0, header[c]);
    }
  }
  if (header.size() != cols.size()) {
    throw ParseError("unexpected extra header column", 0, header[cols.size()]);
  }

  std::vector<sim::RfqRecord> out;
  long row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++row;
    const auto cells = split(line);
    if (cells.size() != cols.size()) {
      throw ParseError("expected " + std::to_string(cols.size()) + " cells, found " +
                           std::to_string(cells.size()),
                       row);
    }
    sim::RfqRecord r;
    r.time = parse_int(cells[0], row, cols[0]);
    r.bond = static_cast<int>(parse_in_range(cells[1], row, cols[1], 0, 1'000'000));
    r.side = static_cast<sim::Side>(parse_in_range(cells[2], row, cols[2], 0, 1));
    r.notional = parse_in_range(cells[3], row, cols[3], 1, INT64_MAX);
    r.counterparty = static_cast<int>(parse_in_range(cells[4], row, cols[4], 0, 3));
    r.mid_price = parse_real(cells[5], row, cols[5]);
    r.quoted_price = parse_real(cells[6], row, cols[6]);
    r.competition = static_cast<int>(parse_in_range(cells[7], row, cols[7], 1, 4));
    r.status = static_cast<int>(parse_in_range(cells[8], row, cols[8], 0, 1));
    r.next_mid_price = parse_real(cells[9], row, cols[9]);
    r.live = parse_in_range(cells[10], row, cols[10], 0, 1) == 1;
    out.push_back(r);
  }
  return out;
}

void write_dataset(const fs::path& path, std::span<const sim::RfqRecord> records) {
  atomic_write(path, format_dataset(records));
}

std::vector<sim::RfqRecord> read_dataset(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return parse_dataset(in);
}

std::string Table::to_csv() const {
  std::string out;
  auto emit = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  emit(header);
  for (const auto& r : rows) emit(r);
  return out;
}

Table features_table(std::span<const sim::RfqRecord> records,
                     std::span<const features::FeatureRow> rows) {
  if (records.size() != rows.size()) throw Error("features_table: lengths differ");
  Table t;
  t.header = {"Time", "Bond"};
  for (const char* name : features::kFeatureNames) t.header.emplace_back(name);
  t.header.insert(t.header.end(), {"HistoryValid", "Status", "Live"});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::vector<std::string> cells = {std::to_string(records[i].time),
                                      std::to_string(records[i].bond)};
    for (double v : features::to_vector(rows[i])) cells.push_back(fmt_exact(v));
    cells.push_back(rows[i].history_valid ? "1" : "0");
    cells.push_back(std::to_string(records[i].status));
    cells.push_back(records[i].live ? "1" : "0");
    t.add(std::move(cells));
  }
  return t;
}

// ---- models ----

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::bnt: return "bnt";
    case ModelKind::lasso_logistic: return "lasso_logistic";
    case ModelKind::next_mid: return "next_mid";
    case ModelKind::ensemble: return "ensemble";
  }
  return "unknown";
}

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "bnt") return ModelKind::bnt;
  if (name == "lasso_logistic") return ModelKind::lasso_logistic;
  if (name == "next_mid") return ModelKind::next_mid;
  if (name == "ensemble") return ModelKind::ensemble;
  throw ParseError("unknown model kind '" + name + "'");
}

namespace {

const json& req(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ParseError(std::string("missing key '") + key + "'");
  return j.at(key);
}

json stats_to_json(const features::StandardizationStats& s) {
  json j;
  j["input_names"] = s.input_names;
  j["categorical"] = s.categorical;
  j["dropped"] = s.dropped;
  j["mean"] = s.mean;
  j["stddev"] = s.stddev;
  j["one_hot"] = s.one_hot;
  j["levels"] = s.levels;
  return j;
}

features::StandardizationStats stats_from_json(const json& j) {
  features::StandardizationStats s;
  s.input_names = req(j, "input_names").get<std::vector<std::string>>();
  s.categorical = req(j, "categorical").get<std::vector<bool>>();
  s.dropped = req(j, "dropped").get<std::vector<bool>>();
  s.mean = req(j, "mean").get<std::vector<double>>();
  s.stddev = req(j, "stddev").get<std::vector<double>>();
  s.one_hot = req(j, "one_hot").get<bool>();
  s.levels = req(j, "levels").get<std::vector<std::vector<double>>>();
  const auto n = s.input_names.size();
  if (s.categorical.size() != n || s.dropped.size() != n || s.mean.size() != n ||
      s.stddev.size() != n || s.levels.size() != n) {
    throw ParseError("feature schema arrays differ in length");
  }
  return s;
}

json hyperparams_to_json(const bnt::BntHyperparams& h) {
  json j;
  j["prior_alpha"] = h.prior_alpha;
  j["prior_beta"] = h.prior_beta;
  j["pruning_factor"] = h.pruning_factor;
  j["n_iter"] = h.n_iter;
  j["learning_rate_init"] = h.learning_rate_init;
  j["n_gradient_descent_steps"] = h.n_gradient_descent_steps;
  j["initial_relative_stiffness"] = h.initial_relative_stiffness;
  j["seed"] = h.seed;
  j["adam_beta1"] = h.adam_beta1;
  j["adam_beta2"] = h.adam_beta2;
  j["adam_epsilon"] = h.adam_epsilon;
  j["monotone_backtracking"] = h.monotone_backtracking;
  return j;
}

bnt::BntHyperparams hyperparams_from_json(const json& j) {
  bnt::BntHyperparams h;
  h.prior_alpha = req(j, "prior_alpha").get<double>();
  h.prior_beta = req(j, "prior_beta").get<double>();
  h.pruning_factor = req(j, "pruning_factor").get<double>();
  h.n_iter = req(j, "n_iter").get<std::size_t>();
  h.learning_rate_init = req(j, "learning_rate_init").get<double>();
  h.n_gradient_descent_steps = req(j, "n_gradient_descent_steps").get<std::size_t>();
  h.initial_relative_stiffness = req(j, "initial_relative_stiffness").get<double>();
  h.seed = req(j, "seed").get<std::uint64_t>();
  h.adam_beta1 = req(j, "adam_beta1").get<double>();
  h.adam_beta2 = req(j, "adam_beta2").get<double>();
  h.adam_epsilon = req(j, "adam_epsilon").get<double>();
  h.monotone_backtracking = req(j, "monotone_backtracking").get<bool>();
  return h;
}

json bnt_to_json(const bnt::BntModel& m) {
  json j;
  j["dim"] = m.dim;
  j["root"] = m.root;
  j["fitted"] = m.fitted;
  json nodes = json::array();
  for (std::size_t id = 0; id < m.nodes.size(); ++id) {
    const auto& n = m.nodes[id];
    json e;
    e["id"] = id;
    e["parent"] = n.parent;
    if (n.is_leaf()) {
      e["type"] = "leaf";
      e["alpha_post"] = n.leaf().alpha_post;
      e["beta_post"] = n.leaf().beta_post;
      e["potential"] = n.leaf().potential;
    } else {
      e["type"] = "gate";
      e["weights"] = n.gate().weights;
      e["bias"] = n.gate().bias;
      e["left"] = n.gate().left;
      e["right"] = n.gate().right;
    }
    nodes.push_back(std::move(e));
  }
  j["nodes"] = std::move(nodes);
  json log = json::array();
  for (const auto& e : m.training_log) {
    log.push_back({{"iteration", e.iteration}, {"bound", e.bound},
                   {"n_leaves", e.n_leaves}, {"grown", e.grown}});
  }
  j["training_log"] = std::move(log);
  return j;
}

bnt::BntModel bnt_from_json(const json& j, const bnt::BntHyperparams& h) {
  bnt::BntModel m;
  m.hyperparams = h;
  m.dim = req(j, "dim").get<std::size_t>();
  m.root = req(j, "root").get<bnt::NodeId>();
  m.fitted = req(j, "fitted").get<bool>();
  const auto& nodes = req(j, "nodes");
  if (!nodes.is_array()) throw ParseError("'nodes' is not an array");
  for (std::size_t id = 0; id < nodes.size(); ++id) {
    const auto& e = nodes[id];
    if (req(e, "id").get<std::size_t>() != id) throw ParseError("node ids are not sequential");
    bnt::Node n;
    n.parent = req(e, "parent").get<bnt::NodeId>();
    const auto type = req(e, "type").get<std::string>();
    if (type == "leaf") {
      bnt::LeafNode leaf;
      leaf.alpha_post = req(e, "alpha_post").get<double>();
      leaf.beta_post = req(e, "beta_post").get<double>();
      leaf.potential = req(e, "potential").get<double>();
      n.body = leaf;
    } else if (type == "gate") {
      bnt::GateNode gate;
      gate.weights = req(e, "weights").get<std::vector<double>>();
      gate.bias = req(e, "bias").get<double>();
      gate.left = req(e, "left").get<bnt::NodeId>();
      gate.right = req(e, "right").get<bnt::NodeId>();
      n.body = gate;
    } else {
      throw ParseError("unknown node type '" + type + "'");
    }
    m.nodes.push_back(std::move(n));
  }
  for (const auto& e : req(j, "training_log")) {
    m.training_log.push_back({req(e, "iteration").get<std::size_t>(), req(e, "bound").get<double>(),
                              req(e, "n_leaves").get<std::size_t>(), req(e, "grown").get<bool>()});
  }
  try {
    m.validate();
  } catch (const Error& e) {
    throw ParseError(std::string("invalid tree: ") + e.what());
  }
  return m;
}

json convergence_to_json(const linear::ConvergenceReport& c) {
  return {{"iterations", c.iterations}, {"converged", c.converged},
          {"final_change", c.final_change}, {"objective", c.objective}};
}

linear::ConvergenceReport convergence_from_json(const json& j) {
  return {req(j, "iterations").get<std::size_t>(), req(j, "converged").get<bool>(),
          req(j, "final_change").get<double>(), req(j, "objective").get<double>()};
}

json model_to_json(const ModelFile& m) {
  json j;
  j["schema_version"] = m.schema_version;
  j["model_kind"] = to_string(m.kind);
  j["seed"] = m.seed;
  j["training_fingerprint"] = m.training_fingerprint;
  j["feature_schema"] = m.features ? stats_to_json(*m.features) : json(nullptr);
  json params;
  json hyper = json::object();
  switch (m.kind) {
    case ModelKind::bnt:
      if (!m.bnt) throw Error("model file of kind bnt has no tree");
      params = bnt_to_json(*m.bnt);
      hyper = hyperparams_to_json(m.bnt->hyperparams);
      break;
    case ModelKind::lasso_logistic:
      if (!m.lasso) throw Error("model file of kind lasso_logistic has no coefficients");
      params["coefficients"] = m.lasso->coefficients;
      params["intercept"] = m.lasso->intercept;
      params["convergence"] = convergence_to_json(m.lasso->convergence);
      hyper["lambda"] = m.lasso->lambda;
      break;
    case ModelKind::next_mid:
      if (!m.next_mid) throw Error("model file of kind next_mid has no coefficients");
      params["intercept"] = m.next_mid->intercept;
      params["coef_mid"] = m.next_mid->coef_mid;
      params["coef_side"] = m.next_mid->coef_side;
      params["validation_adjusted_r2"] = m.next_mid->validation_adjusted_r2;
      params["n_train"] = m.next_mid->n_train;
      params["n_validation"] = m.next_mid->n_validation;
      break;
    case ModelKind::ensemble: {
      if (!m.ensemble) throw Error("model file of kind ensemble has no members");
      json members = json::array();
      for (const auto& ref : m.members) members.push_back({{"name", ref.name}, {"path", ref.path}});
      params["members"] = std::move(members);
      hyper["vote_mode"] = ensemble::to_string(m.ensemble->vote_mode);
      hyper["threshold"] = m.ensemble->threshold;
      break;
    }
  }
  j["params"] = std::move(params);
  j["hyperparams"] = std::move(hyper);
  return j;
}

}  // namespace

std::string serialize_model(const ModelFile& model) {
  return model_to_json(model).dump(2) + "\n";
}

ModelFile deserialize_model(const std::string& text, const fs::path& base_dir) {
  try {
    const json j = json::parse(text);
    ModelFile m;
    m.schema_version = req(j, "schema_version").get<int>();
    if (m.schema_version != kSchemaVersion) {
      throw ParseError("unsupported schema_version " + std::to_string(m.schema_version) +
                       " (expected " + std::to_string(kSchemaVersion) + ")");
    }
    m.kind = model_kind_from_string(req(j, "model_kind").get<std::string>());
    m.seed = req(j, "seed").get<std::uint64_t>();
    m.training_fingerprint = req(j, "training_fingerprint").get<std::string>();
    const auto& fj = req(j, "feature_schema");
    if (!fj.is_null()) m.features = stats_from_json(fj);
    const auto& params = req(j, "params");
    const auto& hyper = req(j, "hyperparams");
    switch (m.kind) {
      case ModelKind::bnt:
        m.bnt = bnt_from_json(params, hyperparams_from_json(hyper));
        break;
      case ModelKind::lasso_logistic: {
        linear::LassoLogisticModel l;
        l.coefficients = req(params, "coefficients").get<std::vector<double>>();
        l.intercept = req(params, "intercept").get<double>();
        l.convergence = convergence_from_json(req(params, "convergence"));
        l.lambda = req(hyper, "lambda").get<double>();
        m.lasso = std::move(l);
        break;
      }
      case ModelKind::next_mid: {
        linear::NextMidModel n;
        n.intercept = req(params, "intercept").get<double>();
        n.coef_mid = req(params, "coef_mid").get<double>();
        n.coef_side = req(params, "coef_side").get<double>();
        n.validation_adjusted_r2 = req(params, "validation_adjusted_r2").get<double>();
        n.n_train = req(params, "n_train").get<std::size_t>();
        n.n_validation = req(params, "n_validation").get<std::size_t>();
        m.next_mid = n;
        break;
      }
      case ModelKind::ensemble: {
        ensemble::EnsembleModel e;
        e.vote_mode = ensemble::vote_mode_from_string(req(hyper, "vote_mode").get<std::string>());
        e.threshold = req(hyper, "threshold").get<double>();
        for (const auto& mj : req(params, "members")) {
          EnsembleMemberRef ref{req(mj, "name").get<std::string>(), req(mj, "path").get<std::string>()};
          const fs::path member_path = base_dir / ref.path;
          if (!fs::exists(member_path)) {
            throw Error("ensemble member '" + ref.name + "' not found at " + member_path.string());
          }
          ModelFile member = load_model(member_path);
          if (member.features != m.features) {
            throw Error("ensemble member '" + ref.name + "' uses a different feature schema");
          }
          if (member.kind == ModelKind::bnt) {
            e.members.emplace_back(std::move(*member.bnt));
          } else if (member.kind == ModelKind::lasso_logistic) {
            e.members.emplace_back(std::move(*member.lasso));
          } else {
            throw Error("ensemble member '" + ref.name + "' has unsupported kind " +
                        to_string(member.kind));
          }
          e.member_names.push_back(ref.name);
          m.members.push_back(std::move(ref));
        }
        e.validate();
        m.ensemble = std::move(e);
        break;
      }
    }
    return m;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed model file: ") + e.what());
  }
}

void save_model(const fs::path& path, const ModelFile& model) {
  atomic_write(path, serialize_model(model));
}

ModelFile load_model(const fs::path& path, std::optional<ModelKind> expected) {
  ModelFile m;
  try {
    m = deserialize_model(read_file(path), path.parent_path());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  if (expected && m.kind != *expected) {
    throw Error(path.string() + ": expected a " + to_string(*expected) + " model, found " +
                to_string(m.kind));
  }
  return m;
}

}  // namespace rfq::io
