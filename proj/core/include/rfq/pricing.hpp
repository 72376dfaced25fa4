#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "rfq/linear_models.hpp"
#include "rfq/market_sim.hpp"

namespace rfq::pricing {

/// Quote grid: predicted next mid + k * kTick for k in [-kGridHalfWidth, kGridHalfWidth].
inline constexpr double kTick = 0.01;
inline constexpr int kGridHalfWidth = 100;
/// Anti-tie cap distance from the current mid.
inline constexpr double kCapDistance = 0.01;

inline double grid_offset(int index) { return index * kTick; }

/// One validation RFQ: predicted and realised next mid.
struct ValidationSample {
  double predicted_next_mid = 0.0;
  double true_next_mid = 0.0;
};

/// Probability that a quote at predicted-next-mid + offset crosses the realised
/// next mid adversely (bid: quote > next mid; offer: quote < next mid).
struct ExceedCurve {
  int bond = 0;
  sim::Side side = sim::Side::bid;
  std::vector<double> offsets;
  std::vector<double> probabilities;
  std::vector<ValidationSample> samples;

  /// Exact empirical probability at an arbitrary offset.
  double probability_at(double offset) const;
};

/// Builds the curve on the default grid offsets. Throws Error on an empty sample set.
ExceedCurve exceed_curve(std::span<const ValidationSample> samples, int bond, sim::Side side);

/// Curves keyed by (bond, side).
class ExceedCurveSet {
 public:
  void add(ExceedCurve curve);
  /// Throws Error when no curve exists for the bond/side.
  const ExceedCurve& at(int bond, sim::Side side) const;
  bool contains(int bond, sim::Side side) const;
  const std::map<std::pair<int, int>, ExceedCurve>& curves() const { return curves_; }

 private:
  std::map<std::pair<int, int>, ExceedCurve> curves_;
};

/// P(fill) - P(exceed limit).
double expected_payoff(double p_fill, double p_exceed);

/// Fill probability of the RFQ when quoted at the given price.
using FillProbability = std::function<double(double quote)>;

struct PayoffPoint {
  int index = 0;
  double offset = 0.0;
  double quote = 0.0;
  double p_fill = 0.0;
  double p_exceed = 0.0;
  double payoff = 0.0;
  bool feasible = false;
};

struct QuoteDecision {
  std::int64_t rfq_time = 0;
  int bond = 0;
  sim::Side side = sim::Side::bid;
  double mid_price = 0.0;
  double predicted_next_mid = 0.0;
  int grid_index = 0;            // argmax before the cap
  double candidate_quote = 0.0;  // grid quote before the cap
  double quote = 0.0;            // final quote
  double offset = 0.0;           // quote - predicted_next_mid
  double p_fill = 0.0;
  double p_exceed = 0.0;
  double expected_payoff = 0.0;
  bool cap_applied = false;
};

/// Grid search of expected payoff over the feasible side of the grid (bid: quote at or
/// below the predicted next mid; offer: at or above). Ties go to the less aggressive
/// quote. The winner is then capped: bid max(candidate, mid - 0.01) but never above the
/// predicted next mid; offer min(candidate, mid + 0.01) but never below it.
/// The reported probabilities and payoff are those of the final quote.
QuoteDecision optimal_quote(const sim::RfqRecord& rfq, const FillProbability& fill,
                            double predicted_next_mid, const ExceedCurve& curve,
                            std::vector<PayoffPoint>* trace = nullptr);
QuoteDecision optimal_quote(const sim::RfqRecord& rfq, const FillProbability& fill,
                            const linear::NextMidModel& next_mid, const ExceedCurveSet& curves,
                            std::vector<PayoffPoint>* trace = nullptr);

struct AuctionOutcome {
  std::vector<double> quotes;  // participant 0 is us
  std::vector<bool> loss;
  std::vector<std::size_t> winners;
  std::vector<double> utility;
};

/// Loss-making quotes score -1 and drop out; the most competitive remaining price
/// scores +1, or 1/n - 0.5 each for an n-way exact tie; everyone else scores 0.
/// Prices are compared on the 6-decimal grid.
AuctionOutcome auction_utility(double our_quote, std::span<const double> competitor_quotes,
                               double true_next_mid, sim::Side side);

}  // namespace rfq::pricing
