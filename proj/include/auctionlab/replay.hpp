#pragma once

#include <span>
#include <string>
#include <vector>

#include "auctionlab/auction_book.hpp"

namespace auctionlab {

enum class TapeAction : std::uint8_t { submit, cancel };

/// One row of an order tape. For cancels only `order.id` is meaningful.
struct TapeEvent {
  TimeMs time_ms = 0;
  TapeAction action = TapeAction::submit;
  AuctionOrder order;

  bool operator==(const TapeEvent&) const = default;
};

/// Static facts about one auction session the tape does not carry.
struct SessionSpec {
  Tick reference_price = 0;
  TimeMs auction_time_ms = 0;
  /// Length of the restricted (imbalance-reducing only) window before the
  /// auction time; 0 disables it.
  TimeMs cutoff_ms = 0;
};

struct Rejection {
  std::size_t event_index = 0;
  TimeMs time_ms = 0;
  OrderId id = 0;
  Errc reason = Errc::internal;
  std::string message;
};

/// Drives an AuctionBook from tape events, entering the restricted phase at
/// auction_time - cutoff and turning per-event book errors into rejections.
class SessionDriver {
 public:
  explicit SessionDriver(const SessionSpec& spec);

  /// Returns the emitted update, or nullopt when the event was rejected.
  std::optional<IndicativeUpdate> apply(const TapeEvent& event);
  AuctionResult finalize();

  const AuctionBook& book() const noexcept { return book_; }
  const SessionSpec& spec() const noexcept { return spec_; }
  const std::vector<Rejection>& rejections() const noexcept { return rejections_; }

 private:
  SessionSpec spec_;
  AuctionBook book_;
  std::vector<Rejection> rejections_;
  std::size_t events_seen_ = 0;
};

struct ReplayOutcome {
  std::vector<IndicativeUpdate> updates;
  std::vector<Rejection> rejections;
  AuctionResult result;
};

ReplayOutcome replay(const SessionSpec& spec, std::span<const TapeEvent> events);

/// Keeps the last update of every 1/hz window; hz <= 0 returns the input.
std::vector<IndicativeUpdate> throttle(std::span<const IndicativeUpdate> updates, double hz);

}  // namespace auctionlab
