#include "rfq/pricing.hpp"

#include <algorithm>
#include <cmath>

#include "rfq/error.hpp"

namespace rfq::pricing {

namespace {

bool exceeds(double quote, double true_next_mid, sim::Side side) {
  return side == sim::Side::bid ? quote > true_next_mid : quote < true_next_mid;
}

std::int64_t micros(double dollars) { return std::llround(dollars * 1e6); }

}  // namespace

double ExceedCurve::probability_at(double offset) const {
  if (samples.empty()) throw Error("exceed curve has no samples");
  std::size_t hits = 0;
  for (const auto& s : samples) {
    hits += exceeds(s.predicted_next_mid + offset, s.true_next_mid, side) ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(samples.size());
}

ExceedCurve exceed_curve(std::span<const ValidationSample> samples, int bond, sim::Side side) {
  if (samples.empty()) throw Error("exceed_curve: empty validation set");
  ExceedCurve curve;
  curve.bond = bond;
  curve.side = side;
  curve.samples.assign(samples.begin(), samples.end());
  for (int k = -kGridHalfWidth; k <= kGridHalfWidth; ++k) {
    curve.offsets.push_back(grid_offset(k));
    curve.probabilities.push_back(curve.probability_at(grid_offset(k)));
  }
  return curve;
}

void ExceedCurveSet::add(ExceedCurve curve) {
  const std::pair<int, int> key{curve.bond, static_cast<int>(curve.side)};
  curves_.insert_or_assign(key, std::move(curve));
}

bool ExceedCurveSet::contains(int bond, sim::Side side) const {
  return curves_.count({bond, static_cast<int>(side)}) > 0;
}

const ExceedCurve& ExceedCurveSet::at(int bond, sim::Side side) const {
  auto it = curves_.find({bond, static_cast<int>(side)});
  if (it == curves_.end()) {
    throw Error("no exceed curve for bond " + std::to_string(bond) + " side " +
                (side == sim::Side::bid ? "bid" : "offer"));
  }
  return it->second;
}

double expected_payoff(double p_fill, double p_exceed) { return p_fill - p_exceed; }

QuoteDecision optimal_quote(const sim::RfqRecord& rfq, const FillProbability& fill,
                            double predicted_next_mid, const ExceedCurve& curve,
                            std::vector<PayoffPoint>* trace) {
  if (curve.samples.empty()) throw Error("optimal_quote: exceed curve has no samples");
  if (curve.side != rfq.side) throw Error("optimal_quote: exceed curve is for the other side");
  const bool bid = rfq.side == sim::Side::bid;

  if (trace) trace->clear();
  // Walk from the least to the most aggressive quote so strict improvement
  // keeps the least aggressive quote among ties.
  const int first = bid ? -kGridHalfWidth : kGridHalfWidth;
  const int last = 0;
  const int dir = bid ? 1 : -1;
  bool found = false;
  int best = 0;
  double best_payoff = 0.0;
  for (int k = first;; k += dir) {
    const double offset = grid_offset(k);
    const double quote = predicted_next_mid + offset;
    const double pf = fill(quote);
    const double pe = curve.probability_at(offset);
    const double payoff = expected_payoff(pf, pe);
    if (!found || payoff > best_payoff) {
      found = true;
      best = k;
      best_payoff = payoff;
    }
    if (k == last) break;
  }
  if (!found) throw Error("optimal_quote: empty feasible grid");

  if (trace) {
    for (int k = -kGridHalfWidth; k <= kGridHalfWidth; ++k) {
      PayoffPoint pt;
      pt.index = k;
      pt.offset = grid_offset(k);
      pt.quote = predicted_next_mid + pt.offset;
      pt.p_fill = fill(pt.quote);
      pt.p_exceed = curve.probability_at(pt.offset);
      pt.payoff = expected_payoff(pt.p_fill, pt.p_exceed);
      pt.feasible = bid ? k <= 0 : k >= 0;
      trace->push_back(pt);
    }
  }

  QuoteDecision d;
  d.rfq_time = rfq.time;
  d.bond = rfq.bond;
  d.side = rfq.side;
  d.mid_price = rfq.mid_price;
  d.predicted_next_mid = predicted_next_mid;
  d.grid_index = best;
  d.candidate_quote = predicted_next_mid + grid_offset(best);
  double final_quote = d.candidate_quote;
  if (bid) {
    final_quote = std::max(final_quote, rfq.mid_price - kCapDistance);
    final_quote = std::min(final_quote, predicted_next_mid);
  } else {
    final_quote = std::min(final_quote, rfq.mid_price + kCapDistance);
    final_quote = std::max(final_quote, predicted_next_mid);
  }
  d.cap_applied = final_quote != d.candidate_quote;
  d.quote = final_quote;
  d.offset = final_quote - predicted_next_mid;
  d.p_fill = d.cap_applied ? fill(final_quote) : fill(d.candidate_quote);
  d.p_exceed = curve.probability_at(d.cap_applied ? d.offset : grid_offset(best));
  d.expected_payoff = expected_payoff(d.p_fill, d.p_exceed);
  return d;
}

QuoteDecision optimal_quote(const sim::RfqRecord& rfq, const FillProbability& fill,
                            const linear::NextMidModel& next_mid, const ExceedCurveSet& curves,
                            std::vector<PayoffPoint>* trace) {
  return optimal_quote(rfq, fill, next_mid.predict(rfq), curves.at(rfq.bond, rfq.side), trace);
}

AuctionOutcome auction_utility(double our_quote, std::span<const double> competitor_quotes,
                               double true_next_mid, sim::Side side) {
  AuctionOutcome out;
  out.quotes.push_back(our_quote);
  out.quotes.insert(out.quotes.end(), competitor_quotes.begin(), competitor_quotes.end());
  const std::size_t n = out.quotes.size();
  out.loss.assign(n, false);
  out.utility.assign(n, 0.0);

  const std::int64_t limit = micros(true_next_mid);
  const bool bid = side == sim::Side::bid;
  bool any_eligible = false;
  std::int64_t best = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const std::int64_t q = micros(out.quotes[k]);
    out.loss[k] = bid ? q > limit : q < limit;
    if (out.loss[k]) {
      out.utility[k] = -1.0;
      continue;
    }
    if (!any_eligible || (bid ? q > best : q < best)) best = q;
    any_eligible = true;
  }
  if (!any_eligible) return out;
  for (std::size_t k = 0; k < n; ++k) {
    if (!out.loss[k] && micros(out.quotes[k]) == best) out.winners.push_back(k);
  }
  const double share = out.winners.size() == 1
                           ? 1.0
                           : 1.0 / static_cast<double>(out.winners.size()) - 0.5;
  for (std::size_t k : out.winners) out.utility[k] = share;
  return out;
}

}  // namespace rfq::pricing
