#include "auctionlab/flow_gen.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <unordered_map>

namespace auctionlab::flow {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

enum Stream : std::uint64_t { kFundamental = 1, kQuoteSizes = 2, kOrders = 3 };

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(Errc::invalid_params, what);
}

std::vector<Tick> fundamental_path(const FlowParams& p) {
  std::mt19937_64 rng(derive_seed(p.seed, 0, 0, kFundamental));
  std::normal_distribution<double> z(0.0, 1.0);
  const TimeMs horizon = auction_time_ms(p);
  const std::size_t steps = static_cast<std::size_t>(horizon / p.quote_interval_ms) + 1;
  std::vector<Tick> path(steps);
  path[0] = p.start_price;
  const Tick floor_price = p.half_spread + 1;
  for (std::size_t k = 1; k < steps; ++k) {
    const auto step = static_cast<Tick>(std::llround(p.volatility * z(rng)));
    path[k] = std::max(floor_price, path[k - 1] + step);
  }
  return path;
}

Shares draw_size(const SizeDistribution& d, std::mt19937_64& rng) {
  double x;
  if (d.family == SizeDistribution::Family::lognormal) {
    x = std::exp(d.mu + d.sigma * std::normal_distribution<double>(0.0, 1.0)(rng));
  } else {
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    x = d.xmin * std::pow(1.0 - u, -1.0 / (d.alpha - 1.0));
  }
  return std::max<Shares>(1, static_cast<Shares>(std::llround(std::min(x, 1e15))));
}

struct SessionRun {
  OrderTape tape;
  std::vector<IndicativeUpdate> updates;
  AuctionResult result;
  std::vector<Rejection> rejections;
};

SessionRun run_session(const FlowParams& p) {
  validate(p);
  const std::vector<Tick> path = fundamental_path(p);
  std::mt19937_64 rng(derive_seed(p.seed, 0, 0, kOrders));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> z(0.0, 1.0);

  SessionRun run;
  run.tape.session = SessionSpec{p.start_price, auction_time_ms(p), p.cutoff_ms};
  SessionDriver driver(run.tape.session);

  // resident ids with O(1) uniform pick and removal
  std::vector<OrderId> resident;
  std::unordered_map<OrderId, std::size_t> slot;
  auto remove_resident = [&](OrderId id) {
    auto it = slot.find(id);
    const std::size_t k = it->second;
    slot.erase(it);
    if (k + 1 != resident.size()) {
      resident[k] = resident.back();
      slot[resident[k]] = k;
    }
    resident.pop_back();
  };

  const double T = p.duration_s;
  const double lambda_max = p.base_rate * std::max(1.0, 1.0 + p.acceleration);
  std::exponential_distribution<double> gap(lambda_max);
  double t = 0.0;
  TimeMs last_ms = -1;
  const TimeMs horizon = run.tape.session.auction_time_ms;
  OrderId next_id = 1;

  if (p.anchor_size > 0) {
    for (Side side : {Side::buy, Side::sell}) {
      TapeEvent ev;
      ev.time_ms = ++last_ms;
      ev.order = AuctionOrder{next_id++, side, OrderKind::limit, p.start_price, p.anchor_size, ev.time_ms};
      run.tape.events.push_back(ev);
      if (auto u = driver.apply(ev)) run.updates.push_back(*u);
    }
  }

  for (;;) {
    t += gap(rng);
    if (t >= T) break;
    if (unit(rng) * lambda_max > rate_at(p, t)) continue;
    TimeMs ms = std::max(static_cast<TimeMs>(std::floor(t * 1000.0)), last_ms + 1);
    if (ms >= horizon) break;
    last_ms = ms;

    const double cancel_prob =
        (p.burst_window_s > 0.0 && t >= T - p.burst_window_s) ? p.burst_cancel_prob : p.cancel_prob;
    TapeEvent ev;
    ev.time_ms = ms;
    if (!resident.empty() && unit(rng) < cancel_prob) {
      const OrderId victim = resident[static_cast<std::size_t>(unit(rng) * static_cast<double>(resident.size()))];
      ev.action = TapeAction::cancel;
      ev.order.id = victim;
    } else {
      const Shares imbalance = driver.book().clearing().imbalance;
      Side side;
      if (imbalance == 0) {
        side = unit(rng) < 0.5 ? Side::buy : Side::sell;
      } else {
        const Side against = imbalance > 0 ? Side::sell : Side::buy;
        const Side with = imbalance > 0 ? Side::buy : Side::sell;
        side = unit(rng) < p.contrarian_prob ? against : with;
      }
      AuctionOrder o;
      o.id = next_id++;
      o.side = side;
      o.submit_time = ms;
      if (unit(rng) < p.market_prob) {
        o.kind = OrderKind::market;
      } else {
        o.kind = OrderKind::limit;
        const Tick fundamental = path[std::min<std::size_t>(path.size() - 1,
                                                            static_cast<std::size_t>(ms / p.quote_interval_ms))];
        const auto offset = static_cast<Tick>(std::llround(p.price_dispersion * z(rng)));
        o.price = std::max<Tick>(1, fundamental + offset);
      }
      o.size = draw_size(p.size, rng);
      ev.action = TapeAction::submit;
      ev.order = o;
    }
    run.tape.events.push_back(ev);
    if (auto u = driver.apply(ev)) {
      run.updates.push_back(*u);
      if (ev.action == TapeAction::submit) {
        slot[ev.order.id] = resident.size();
        resident.push_back(ev.order.id);
      } else {
        remove_resident(ev.order.id);
      }
    }
  }
  run.result = driver.finalize();
  run.rejections = driver.rejections();
  return run;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t asset, std::uint64_t day, std::uint64_t stream) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ splitmix64(asset + 0x632BE59BD9B4E019ull));
  h = splitmix64(h ^ splitmix64(day + 0x8CB92BA72F3D8DD7ull));
  h = splitmix64(h ^ splitmix64(stream + 0xD1B54A32D192ED03ull));
  return h;
}

void validate(const FlowParams& p) {
  require(p.duration_s > 0.0, "duration must be positive");
  require(p.base_rate > 0.0, "base rate must be positive");
  require(p.profile == RateProfile::constant || 1.0 + p.acceleration > 0.0,
          "rate profile must stay positive (1 + acceleration > 0)");
  require(p.contrarian_prob >= 0.0 && p.contrarian_prob <= 1.0, "contrarian probability outside [0,1]");
  require(p.cancel_prob >= 0.0 && p.cancel_prob < 1.0, "cancel probability outside [0,1)");
  require(p.market_prob >= 0.0 && p.market_prob <= 1.0, "market order probability outside [0,1]");
  if (p.size.family == SizeDistribution::Family::lognormal) {
    require(p.size.sigma >= 0.0, "lognormal sigma must be non-negative");
  } else {
    require(p.size.alpha > 1.0, "pareto alpha must exceed 1");
    require(p.size.xmin > 0.0, "pareto xmin must be positive");
  }
  require(p.price_dispersion >= 0.0, "price dispersion must be non-negative");
  require(p.half_spread >= 1, "half spread must be at least one tick");
  require(p.start_price > p.half_spread, "start price must exceed the half spread");
  require(p.volatility >= 0.0, "volatility must be non-negative");
  require(p.quote_interval_ms > 0, "quote interval must be positive");
  require(p.quote_size_sigma >= 0.0, "quote size sigma must be non-negative");
  require(p.cutoff_ms >= 0 && p.cutoff_ms < auction_time_ms(p), "cutoff must lie inside the session");
  require(p.burst_cancel_prob >= 0.0 && p.burst_cancel_prob < 1.0, "burst cancel probability outside [0,1)");
  require(p.anchor_size >= 0, "anchor size must be non-negative");
}

TimeMs auction_time_ms(const FlowParams& p) { return static_cast<TimeMs>(std::llround(p.duration_s * 1000.0)); }

double rate_at(const FlowParams& p, double t) {
  const double x = t / p.duration_s;
  switch (p.profile) {
    case RateProfile::constant: return p.base_rate;
    case RateProfile::linear: return p.base_rate * (1.0 + p.acceleration * x);
    case RateProfile::convex: return p.base_rate * (1.0 + p.acceleration * x * x);
  }
  return p.base_rate;
}

OrderTape gen_order_tape(const FlowParams& p) { return run_session(p).tape; }

std::vector<QuoteSnapshot> gen_quotes(const FlowParams& p) {
  validate(p);
  const std::vector<Tick> path = fundamental_path(p);
  std::mt19937_64 rng(derive_seed(p.seed, 0, 0, kQuoteSizes));
  std::normal_distribution<double> z(0.0, 1.0);
  auto size = [&] {
    return std::max<Shares>(1, static_cast<Shares>(std::llround(std::exp(p.quote_size_mu + p.quote_size_sigma * z(rng)))));
  };
  const TimeMs horizon = auction_time_ms(p);
  std::vector<QuoteSnapshot> out;
  out.reserve(path.size());
  for (std::size_t k = 0; k < path.size(); ++k) {
    const TimeMs t = static_cast<TimeMs>(k) * p.quote_interval_ms;
    if (t >= horizon) break;
    QuoteSnapshot q;
    q.time_ms = t;
    q.bid = path[k] - p.half_spread;
    q.ask = path[k] + p.half_spread;
    q.bid_size = size();
    q.ask_size = p.equal_quote_sizes ? q.bid_size : size();
    out.push_back(q);
  }
  return out;
}

DaySimulation gen_day_series(const FlowParams& p, double throttle_hz) {
  SessionRun run = run_session(p);
  DaySimulation sim;
  sim.series.updates = throttle(run.updates, throttle_hz);
  sim.series.quotes = gen_quotes(p);
  sim.series.auction_time_ms = run.tape.session.auction_time_ms;
  sim.series.final_price = run.result.final_price;
  sim.series.final_volume = run.result.total_matched;
  sim.tape = std::move(run.tape);
  sim.result = std::move(run.result);
  sim.rejections = std::move(run.rejections);
  return sim;
}

DayAuctionSeries gen_indicative_walk(const WalkParams& p) {
  if (p.updates == 0 || p.duration_s <= 0.0 || p.sigma < 0.0 || p.mean_reversion < 0.0 || p.level <= 0) {
    throw Error(Errc::invalid_params, "invalid walk parameters");
  }
  std::mt19937_64 rng(p.seed);
  std::normal_distribution<double> z(0.0, 1.0);
  const TimeMs horizon = static_cast<TimeMs>(std::llround(p.duration_s * 1000.0));
  if (static_cast<TimeMs>(p.updates) >= horizon) throw Error(Errc::invalid_params, "more updates than milliseconds");

  // distinct uniform update times in [0, horizon)
  std::vector<TimeMs> times;
  times.reserve(p.updates);
  std::uniform_int_distribution<TimeMs> pick(0, horizon - 1);
  while (times.size() < p.updates) {
    while (times.size() < p.updates) times.push_back(pick(rng));
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
  }

  const double theta = p.mean_reversion;
  auto advance = [&](double x, double dt_s) {
    if (p.kind == WalkParams::Kind::brownian || theta == 0.0) return x + p.sigma * std::sqrt(dt_s) * z(rng);
    const double decay = std::exp(-theta * dt_s);
    return x * decay + p.sigma * std::sqrt((1.0 - decay * decay) / (2.0 * theta)) * z(rng);
  };
  auto to_tick = [&](double x) {
    return std::max<Tick>(1, static_cast<Tick>(std::llround(static_cast<double>(p.level) * std::exp(x))));
  };

  DayAuctionSeries s;
  s.auction_time_ms = horizon;
  double x = 0.0;  // log(price / level)
  TimeMs prev = 0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    x = advance(x, static_cast<double>(times[i] - prev) / 1000.0);
    prev = times[i];
    s.updates.push_back({times[i], to_tick(x), static_cast<Shares>(i + 1), 0});
  }
  x = advance(x, static_cast<double>(horizon - prev) / 1000.0);
  s.final_price = to_tick(x);
  s.final_volume = static_cast<Shares>(times.size());
  if (p.half_spread > 0) {
    s.quotes.push_back({0, p.level - p.half_spread, p.level + p.half_spread, 100, 100});
  }
  return s;
}

}  // namespace auctionlab::flow
