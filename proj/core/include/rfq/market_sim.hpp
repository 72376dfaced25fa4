#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rfq/matrix.hpp"
#include "rfq/random.hpp"

namespace rfq::sim {

/// How the RFQ outcome (done / missed) is drawn.
enum class StatusMode {
  verbatim,        // p = sigmoid(10 |X|^2), X on a noisy unit circle
  ring_distance,   // p = sigmoid(gain * link(|X| - 1))
  feature_linked,  // p = sigmoid(a0 + a1 Response + a2 LogNotional + a3 MOM5)
};

/// Link applied to the signed distance d = |X| - 1 in ring_distance mode.
enum class RingLink {
  signed_distance,   // gain * d
  squared_distance,  // gain * d^2 (always >= 0, so p >= 0.5)
};

enum class Side : int { offer = 0, bid = 1 };

/// Logit coefficients for feature_linked labels. LogNotional enters centred.
struct FeatureLinkCoefficients {
  double intercept = 0.0;
  double response = -400.0;  // per dollar of Response
  double log_notional = -0.3;
  double mom5 = 1.0e4;
  /// Mean of ln(10^k), k uniform on {3..7}.
  double log_notional_center = 11.512925464970229;
};

struct SimConfig {
  std::size_t n_records = 10005;
  std::size_t n_live = 5;
  std::size_t n_bonds = 5;
  double p0 = 124.24;
  double s0 = 0.1;
  double mu = 0.0;
  double sigma_s = 0.02;
  double sigma_b = 0.005;
  double sigma_a = 0.005;
  double dt = 1.0;
  double quote_band = 0.01;
  StatusMode status_mode = StatusMode::feature_linked;
  RingLink ring_link = RingLink::signed_distance;
  double ring_gain = 10.0;
  FeatureLinkCoefficients link;
  std::uint64_t seed = 42;

  /// Throws ConfigError when an invariant is violated.
  void validate() const;
};

/// Level-1 bid/ask history of one bond.
struct PricePath {
  int bond_id = 0;
  std::vector<double> bid;
  std::vector<double> ask;
  std::vector<double> mid;
  std::vector<double> spread;  // GBM spread process S_t

  std::size_t size() const { return mid.size(); }
};

struct RfqRecord {
  std::int64_t time = 0;
  int bond = 0;
  Side side = Side::bid;
  std::int64_t notional = 0;
  int counterparty = 0;
  double mid_price = 0.0;
  double quoted_price = 0.0;
  int competition = 1;
  int status = 0;
  double next_mid_price = 0.0;
  bool live = false;

  friend bool operator==(const RfqRecord&, const RfqRecord&) = default;
};

/// Inputs needed by the feature_linked status mode.
struct StatusFeatures {
  double response = 0.0;
  double log_notional = 0.0;
  double mom5 = 0.0;
};

struct StatusDraw {
  int status = 0;
  double probability = 0.0;
  /// Latent point X; zero in feature_linked mode.
  std::array<double, 2> point{0.0, 0.0};
};

/// Labelled latent points for the verbatim / ring_distance modes.
struct RingDataset {
  Matrix points;  // n x 2
  std::vector<int> labels;
  std::vector<double> probabilities;
};

double sigmoid(double z);

/// Rounds a dollar amount to the 6-decimal (micro-dollar) grid used on disk.
double round_price(double dollars);

double verbatim_probability(std::array<double, 2> point);
double ring_probability(std::array<double, 2> point, RingLink link, double gain);
double feature_linked_probability(const StatusFeatures& features,
                                  const FeatureLinkCoefficients& coefficients);

/// Bid/ask/mid/spread path of n_records + 1 steps for one bond.
PricePath gen_price_paths(const SimConfig& config, int bond_id);
PricePath gen_price_paths(const SimConfig& config, int bond_id, std::size_t steps);

/// Draws one status label according to config.status_mode.
/// feature_linked mode requires features; throws ConfigError otherwise.
StatusDraw gen_status(const SimConfig& config, RandomStream& rng,
                      const std::optional<StatusFeatures>& features = std::nullopt);

/// mid + U[-band, band].
double gen_quote_price(double mid, RandomStream& rng, double band = 0.01);

std::vector<RfqRecord> gen_rfq_dataset(const SimConfig& config);

/// Quotes of n other market makers for the same RFQ, each within the quote band of mid.
std::vector<double> gen_competitor_quotes(const RfqRecord& rfq, std::size_t n, RandomStream& rng,
                                          double band = 0.01);

/// n latent points with labels drawn by gen_status (verbatim or ring_distance mode).
RingDataset gen_ring_dataset(const SimConfig& config, std::size_t n);

std::string to_string(StatusMode mode);
StatusMode status_mode_from_string(const std::string& name);
std::string to_string(RingLink link);
RingLink ring_link_from_string(const std::string& name);

}  // namespace rfq::sim
