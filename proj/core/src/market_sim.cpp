#include "rfq/market_sim.hpp"

#include <cmath>
#include <numbers>

#include "rfq/error.hpp"

namespace rfq::sim {

namespace {

constexpr double kCrossClamp = 0.0001;
constexpr std::size_t kMomentumLag = 5;

void require_finite(double value, const char* what, int bond_id, std::size_t step) {
  if (!std::isfinite(value)) {
    throw NumericError(std::string("non-finite ") + what + " on bond " + std::to_string(bond_id) +
                       " at step " + std::to_string(step) + "; check SimConfig magnitudes");
  }
}

std::array<double, 2> draw_circle_point(RandomStream& rng) {
  const double u = rng.uniform();
  const double n = rng.normal();
  const double radius = 1.0 + 0.3 * n;
  const double angle = 2.0 * std::numbers::pi * u;
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

}  // namespace

void SimConfig::validate() const {
  if (n_records == 0) throw ConfigError("n_records must be positive");
  if (n_live >= n_records) throw ConfigError("n_live must be smaller than n_records");
  if (n_bonds == 0) throw ConfigError("n_bonds must be positive");
  if (!(s0 > 0.0)) throw ConfigError("s0 must be positive");
  if (!(p0 > 0.0)) throw ConfigError("p0 must be positive");
  if (sigma_s < 0.0 || sigma_b < 0.0 || sigma_a < 0.0) {
    throw ConfigError("sigma_s, sigma_b and sigma_a must be non-negative");
  }
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  if (!(quote_band > 0.0)) throw ConfigError("quote_band must be positive");
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double round_price(double dollars) { return std::round(dollars * 1e6) / 1e6; }

double verbatim_probability(std::array<double, 2> point) {
  const double r2 = point[0] * point[0] + point[1] * point[1];
  return sigmoid(10.0 * r2);
}

double ring_probability(std::array<double, 2> point, RingLink link, double gain) {
  const double d = std::hypot(point[0], point[1]) - 1.0;
  const double z = link == RingLink::signed_distance ? d : d * d;
  return sigmoid(gain * z);
}

double feature_linked_probability(const StatusFeatures& features,
                                  const FeatureLinkCoefficients& c) {
  const double logit = c.intercept + c.response * features.response +
                       c.log_notional * (features.log_notional - c.log_notional_center) +
                       c.mom5 * features.mom5;
  return sigmoid(logit);
}

PricePath gen_price_paths(const SimConfig& config, int bond_id) {
  return gen_price_paths(config, bond_id, config.n_records + 1);
}

PricePath gen_price_paths(const SimConfig& config, int bond_id, std::size_t steps) {
  config.validate();
  RandomStream rng(derive_seed(config.seed, "price_path", static_cast<std::uint64_t>(bond_id)));

  PricePath path;
  path.bond_id = bond_id;
  path.bid.reserve(steps);
  path.ask.reserve(steps);
  path.mid.reserve(steps);
  path.spread.reserve(steps);
  if (steps == 0) return path;

  double spread = config.s0;
  double bid = config.p0 - config.s0 / 2.0;
  double ask = config.p0 + config.s0 / 2.0;
  double mid = (bid + ask) / 2.0;
  path.bid.push_back(bid);
  path.ask.push_back(ask);
  path.mid.push_back(mid);
  path.spread.push_back(spread);

  const double sqrt_dt = std::sqrt(config.dt);
  for (std::size_t t = 1; t < steps; ++t) {
    const double eps = rng.normal();
    const double eps_b = config.sigma_b * rng.normal();
    const double eps_a = config.sigma_a * rng.normal();
    spread *= std::exp(config.mu * config.dt + config.sigma_s * eps * sqrt_dt);
    bid = mid - spread / 2.0 + eps_b;
    ask = mid + spread / 2.0 + eps_a;
    if (ask < bid) ask = bid + kCrossClamp;
    mid = (bid + ask) / 2.0;
    require_finite(spread, "spread", bond_id, t);
    require_finite(mid, "mid-price", bond_id, t);
    if (!(spread > 0.0)) {
      throw NumericError("spread underflowed to zero on bond " + std::to_string(bond_id));
    }
    path.bid.push_back(bid);
    path.ask.push_back(ask);
    path.mid.push_back(mid);
    path.spread.push_back(spread);
  }
  return path;
}

StatusDraw gen_status(const SimConfig& config, RandomStream& rng,
                      const std::optional<StatusFeatures>& features) {
  StatusDraw draw;
  switch (config.status_mode) {
    case StatusMode::verbatim:
      draw.point = draw_circle_point(rng);
      draw.probability = verbatim_probability(draw.point);
      break;
    case StatusMode::ring_distance:
      draw.point = draw_circle_point(rng);
      draw.probability = ring_probability(draw.point, config.ring_link, config.ring_gain);
      break;
    case StatusMode::feature_linked:
      if (!features) throw ConfigError("feature_linked status mode requires row features");
      draw.probability = feature_linked_probability(*features, config.link);
      break;
  }
  draw.status = rng.bernoulli(draw.probability) ? 1 : 0;
  return draw;
}

double gen_quote_price(double mid, RandomStream& rng, double band) {
  return mid + rng.uniform(-band, band);
}

std::vector<RfqRecord> gen_rfq_dataset(const SimConfig& config) {
  config.validate();
  const std::size_t n = config.n_records;
  const std::size_t first_live = n - config.n_live;

  RandomStream attr_rng(derive_seed(config.seed, "attributes"));
  RandomStream quote_rng(derive_seed(config.seed, "quotes"));
  RandomStream status_rng(derive_seed(config.seed, "status"));

  std::vector<RfqRecord> rows(n);
  std::int64_t time = 10000;
  for (std::size_t i = 0; i < n; ++i) {
    RfqRecord& r = rows[i];
    if (i > 0) time += attr_rng.uniform_int(1, 9);
    r.time = time;
    r.live = i >= first_live;
    r.bond = r.live ? static_cast<int>((i - first_live) % config.n_bonds)
                    : static_cast<int>(attr_rng.uniform_int(0, static_cast<std::int64_t>(config.n_bonds) - 1));
    r.side = attr_rng.bernoulli(0.5) ? Side::bid : Side::offer;
    const auto exponent = attr_rng.uniform_int(3, 7);
    r.notional = 1;
    for (std::int64_t k = 0; k < exponent; ++k) r.notional *= 10;
    r.counterparty = static_cast<int>(attr_rng.uniform_int(0, 3));
    r.competition = static_cast<int>(attr_rng.uniform_int(1, 4));
  }

  std::vector<PricePath> paths;
  paths.reserve(config.n_bonds);
  for (std::size_t b = 0; b < config.n_bonds; ++b) {
    paths.push_back(gen_price_paths(config, static_cast<int>(b)));
  }

  // Each RFQ on a bond advances that bond's path by one step.
  std::vector<std::size_t> step(config.n_bonds, 0);
  std::vector<std::vector<double>> mid_history(config.n_bonds);
  for (auto& r : rows) {
    const auto b = static_cast<std::size_t>(r.bond);
    const PricePath& path = paths[b];
    const std::size_t t = step[b]++;
    r.mid_price = round_price(path.mid[t]);
    r.next_mid_price = round_price(path.mid[t + 1]);
    r.quoted_price = round_price(gen_quote_price(r.mid_price, quote_rng, config.quote_band));

    auto& history = mid_history[b];
    std::optional<StatusFeatures> features;
    if (config.status_mode == StatusMode::feature_linked) {
      StatusFeatures f;
      const double spread = r.mid_price - r.quoted_price;
      f.response = r.side == Side::bid ? spread : -spread;
      f.log_notional = std::log(static_cast<double>(r.notional));
      if (history.size() >= kMomentumLag) {
        f.mom5 = r.mid_price / history[history.size() - kMomentumLag] - 1.0;
      }
      features = f;
    }
    r.status = gen_status(config, status_rng, features).status;
    history.push_back(r.mid_price);
  }
  return rows;
}

std::vector<double> gen_competitor_quotes(const RfqRecord& rfq, std::size_t n, RandomStream& rng,
                                          double band) {
  std::vector<double> quotes;
  quotes.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    quotes.push_back(round_price(gen_quote_price(rfq.mid_price, rng, band)));
  }
  return quotes;
}

RingDataset gen_ring_dataset(const SimConfig& config, std::size_t n) {
  if (config.status_mode == StatusMode::feature_linked) {
    throw ConfigError("ring datasets need the verbatim or ring_distance status mode");
  }
  RandomStream rng(derive_seed(config.seed, "ring"));
  RingDataset out;
  out.points = Matrix(n, 2);
  out.labels.reserve(n);
  out.probabilities.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const StatusDraw draw = gen_status(config, rng);
    out.points(i, 0) = draw.point[0];
    out.points(i, 1) = draw.point[1];
    out.labels.push_back(draw.status);
    out.probabilities.push_back(draw.probability);
  }
  return out;
}

std::string to_string(StatusMode mode) {
  switch (mode) {
    case StatusMode::verbatim: return "verbatim";
    case StatusMode::ring_distance: return "ring_distance";
    case StatusMode::feature_linked: return "feature_linked";
  }
  return "unknown";
}

StatusMode status_mode_from_string(const std::string& name) {
  if (name == "verbatim") return StatusMode::verbatim;
  if (name == "ring_distance") return StatusMode::ring_distance;
  if (name == "feature_linked") return StatusMode::feature_linked;
  throw ConfigError("unknown status mode '" + name + "'");
}

std::string to_string(RingLink link) {
  return link == RingLink::signed_distance ? "signed" : "squared";
}

RingLink ring_link_from_string(const std::string& name) {
  if (name == "signed") return RingLink::signed_distance;
  if (name == "squared") return RingLink::squared_distance;
  throw ConfigError("unknown ring link '" + name + "'");
}

}  // namespace rfq::sim
