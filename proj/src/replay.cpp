#include "auctionlab/replay.hpp"

#include <cmath>

namespace auctionlab {

SessionDriver::SessionDriver(const SessionSpec& spec) : spec_(spec), book_(spec.reference_price) {}

std::optional<IndicativeUpdate> SessionDriver::apply(const TapeEvent& event) {
  const std::size_t index = events_seen_++;
  if (spec_.cutoff_ms > 0 && event.time_ms >= spec_.auction_time_ms - spec_.cutoff_ms &&
      book_.phase() == Phase::open) {
    book_.set_phase(Phase::restricted, spec_.auction_time_ms - spec_.cutoff_ms);
  }
  try {
    if (event.time_ms >= spec_.auction_time_ms) {
      throw Error(Errc::auction_closed, "event at or after the auction time");
    }
    if (event.action == TapeAction::submit) {
      AuctionOrder o = event.order;
      o.submit_time = event.time_ms;
      return book_.submit(o);
    }
    return book_.cancel(event.order.id, event.time_ms);
  } catch (const Error& e) {
    rejections_.push_back({index, event.time_ms, event.order.id, e.code(), e.what()});
    return std::nullopt;
  }
}

AuctionResult SessionDriver::finalize() { return book_.finalize(); }

ReplayOutcome replay(const SessionSpec& spec, std::span<const TapeEvent> events) {
  SessionDriver driver(spec);
  ReplayOutcome out;
  out.updates.reserve(events.size());
  for (const TapeEvent& e : events) {
    if (auto u = driver.apply(e)) out.updates.push_back(*u);
  }
  out.result = driver.finalize();
  out.rejections = driver.rejections();
  return out;
}

std::vector<IndicativeUpdate> throttle(std::span<const IndicativeUpdate> updates, double hz) {
  if (hz <= 0.0) return {updates.begin(), updates.end()};
  const double window_ms = 1000.0 / hz;
  std::vector<IndicativeUpdate> out;
  for (std::size_t i = 0; i < updates.size(); ++i) {
    const auto w = static_cast<std::int64_t>(std::floor(static_cast<double>(updates[i].time_ms) / window_ms));
    const bool last_in_window =
        i + 1 == updates.size() ||
        static_cast<std::int64_t>(std::floor(static_cast<double>(updates[i + 1].time_ms) / window_ms)) != w;
    if (last_in_window) out.push_back(updates[i]);
  }
  return out;
}

}  // namespace auctionlab
