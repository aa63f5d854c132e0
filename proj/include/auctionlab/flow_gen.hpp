#pragma once

#include <cstdint>
#include <vector>

#include "auctionlab/replay.hpp"
#include "auctionlab/series.hpp"

namespace auctionlab::flow {

enum class RateProfile : std::uint8_t { constant, linear, convex };

struct SizeDistribution {
  enum class Family : std::uint8_t { lognormal, pareto };
  Family family = Family::lognormal;
  double mu = 5.0;      // lognormal: mean of log size
  double sigma = 1.0;   // lognormal: sd of log size
  double alpha = 2.5;   // pareto: density exponent, > 1
  double xmin = 100.0;  // pareto: lower bound in shares
};

/// Knobs of the synthetic pre-auction flow and the coupled regular book.
struct FlowParams {
  double duration_s = 600.0;  // session start to auction time
  double base_rate = 1.0;     // events per second at t = 0
  RateProfile profile = RateProfile::constant;
  double acceleration = 0.0;  // linear: 1 + c t/T, convex: 1 + c (t/T)^2
  double contrarian_prob = 0.5;
  double cancel_prob = 0.0;
  double market_prob = 0.1;
  SizeDistribution size;
  double price_dispersion = 2.0;  // sd of limit prices around the fundamental, ticks
  Tick start_price = 10'000;      // fundamental at session start; also the reference price
  double volatility = 0.0;        // sd of the fundamental's per-quote-step increment, ticks
  Tick half_spread = 1;
  TimeMs quote_interval_ms = 1000;
  double quote_size_mu = 6.0;
  double quote_size_sigma = 0.5;
  bool equal_quote_sizes = false;
  TimeMs cutoff_ms = 0;  // restricted window before the auction, 0 = none
  /// Late-cancellation burst: inside the last `burst_window_s` seconds the
  /// cancel probability becomes `burst_cancel_prob`. Disabled when window <= 0.
  double burst_window_s = 0.0;
  double burst_cancel_prob = 0.0;
  /// When > 0, the session opens with a buy and a sell limit of this size at
  /// the reference price (t = 0 and 1 ms). Anchors are never cancelled, so
  /// the book stays crossed from the second event on.
  Shares anchor_size = 0;
  std::uint64_t seed = 1;
};

/// Throws Error{invalid_params} describing the first violated constraint.
void validate(const FlowParams& p);

TimeMs auction_time_ms(const FlowParams& p);
double rate_at(const FlowParams& p, double t_seconds);

/// Splittable seed derivation: distinct (seed, asset, day, stream) tuples
/// give statistically independent generator streams.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t asset, std::uint64_t day,
                          std::uint64_t stream = 0);

struct OrderTape {
  SessionSpec session;
  std::vector<TapeEvent> events;
};

OrderTape gen_order_tape(const FlowParams& p);
std::vector<QuoteSnapshot> gen_quotes(const FlowParams& p);

struct DaySimulation {
  OrderTape tape;
  DayAuctionSeries series;  // throttled when throttle_hz > 0
  AuctionResult result;
  std::vector<Rejection> rejections;
};

/// Tape -> auction book -> feed, with quotes attached and the auction
/// finalized. Throttling keeps the last update per 1/throttle_hz window and
/// never touches finalization.
DaySimulation gen_day_series(const FlowParams& p, double throttle_hz = 0.0);

/// Synthetic indicative-price processes for exercising the estimators
/// directly, bypassing the book.
struct WalkParams {
  enum class Kind : std::uint8_t { brownian, ornstein_uhlenbeck };
  Kind kind = Kind::brownian;
  std::size_t updates = 500;
  double duration_s = 3600.0;
  double sigma = 1e-3;           // log-price diffusion per sqrt(second)
  double mean_reversion = 0.0;   // OU rate per second
  Tick level = 100'000;          // start / long-run level in ticks
  Tick half_spread = 0;          // > 0 attaches constant quotes around `level`
  std::uint64_t seed = 1;
};

/// Update times are uniform over the session, the final price is the
/// process value at the auction time.
DayAuctionSeries gen_indicative_walk(const WalkParams& p);

}  // namespace auctionlab::flow
