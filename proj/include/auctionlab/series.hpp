#pragma once

#include <optional>
#include <string>
#include <vector>

#include "auctionlab/types.hpp"

namespace auctionlab {

/// Best bid/ask of the regular (continuous) book at one instant.
struct QuoteSnapshot {
  TimeMs time_ms = 0;
  Tick bid = 0;
  Tick ask = 0;
  Shares bid_size = 0;
  Shares ask_size = 0;

  bool operator==(const QuoteSnapshot&) const = default;
};

/// Every indicative update of one (asset, date, auction side), plus the
/// final auction outcome and optional regular-book quotes.
struct DayAuctionSeries {
  std::string asset;
  std::string date;  // ISO-8601 yyyy-mm-dd
  AuctionSide side = AuctionSide::close;
  std::vector<IndicativeUpdate> updates;
  std::optional<Tick> final_price;
  std::optional<Shares> final_volume;
  std::vector<QuoteSnapshot> quotes;
  TimeMs auction_time_ms = 0;
  /// Filled by align_quotes: index into `quotes` of the last quote at or
  /// before each update, -1 when no quote precedes it. Empty until aligned.
  std::vector<std::int32_t> quote_of;

  bool operator==(const DayAuctionSeries&) const = default;
};

enum class Exchange : std::uint8_t { arca, nasdaq, nyse };

const char* to_string(Exchange e);
std::optional<Exchange> parse_exchange(std::string_view s);

struct DailyVolumeRecord {
  std::string asset;
  std::string date;
  Exchange exchange = Exchange::nyse;
  Shares v_open = 0;
  Shares v_close = 0;
  Shares v_total = 0;
  Tick p_open = 0;
  Tick p_close = 0;
  Tick prev_close = 0;

  bool operator==(const DailyVolumeRecord&) const = default;
};

}  // namespace auctionlab
