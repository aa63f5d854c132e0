#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "auctionlab/auction_book.hpp"
#include "auctionlab/replay.hpp"
#include "auctionlab/series.hpp"

namespace auctionlab::ingest {

// Column layouts, in order. Every file starts with exactly this header line.
inline constexpr const char* kFeedHeader =
    "asset,date,side,time_ms,indicative_price_ticks,matched_volume,imbalance";
inline constexpr const char* kTapeHeader =
    "asset,date,side,time_ms,action,order_id,buy_sell,kind,price_ticks,size";
inline constexpr const char* kQuotesHeader = "asset,date,side,time_ms,bid_ticks,ask_ticks,bid_size,ask_size";
inline constexpr const char* kDailyVolumesHeader =
    "asset,date,exchange,v_open,v_close,v_total,p_open,p_close,prev_close";
inline constexpr const char* kAuctionsHeader =
    "asset,date,side,auction_time_ms,reference_price_ticks,final_price_ticks,final_volume";
inline constexpr const char* kFillsHeader = "asset,date,side,order_id,buy_sell,filled_shares,price_ticks";

/// (asset, date, auction side) identifies one auction.
struct SeriesKey {
  std::string asset;
  std::string date;
  AuctionSide side = AuctionSide::close;

  auto operator<=>(const SeriesKey&) const = default;
};

SeriesKey key_of(const DayAuctionSeries& s);

/// Session metadata and outcome of one auction.
struct AuctionRecord {
  SeriesKey key;
  TimeMs auction_time_ms = 0;
  Tick reference_price = 0;
  std::optional<Tick> final_price;
  std::optional<Shares> final_volume;

  bool operator==(const AuctionRecord&) const = default;
};

struct SessionTape {
  SeriesKey key;
  std::vector<TapeEvent> events;
};

struct FillRecord {
  SeriesKey key;
  OrderId id = 0;
  Side side = Side::buy;
  Shares filled = 0;
  Tick price = 0;

  bool operator==(const FillRecord&) const = default;
};

using QuoteMap = std::map<SeriesKey, std::vector<QuoteSnapshot>>;

bool is_iso_date(std::string_view s);

// Parsers throw Error{schema_error} listing offending line numbers, or
// Error{non_monotone_time} naming the first out-of-order line of a group.
// `source` names the input in messages.
std::vector<DayAuctionSeries> parse_feed(std::istream& in, const std::string& source = "feed");
std::vector<SessionTape> parse_tape(std::istream& in, const std::string& source = "tape");
QuoteMap parse_quotes(std::istream& in, const std::string& source = "quotes");
std::vector<DailyVolumeRecord> parse_daily_volumes(std::istream& in, const std::string& source = "daily_volumes");
std::vector<AuctionRecord> parse_auctions(std::istream& in, const std::string& source = "auctions");
std::vector<FillRecord> parse_fills(std::istream& in, const std::string& source = "fills");

void write_feed(std::ostream& out, std::span<const DayAuctionSeries> series, bool header = true);
void write_tape(std::ostream& out, const SeriesKey& key, std::span<const TapeEvent> events, bool header = true);
void write_quotes(std::ostream& out, const SeriesKey& key, std::span<const QuoteSnapshot> quotes,
                  bool header = true);
void write_daily_volumes(std::ostream& out, std::span<const DailyVolumeRecord> records, bool header = true);
void write_auctions(std::ostream& out, std::span<const AuctionRecord> records, bool header = true);
void write_fills(std::ostream& out, std::span<const FillRecord> fills, bool header = true);

/// Throws Error{io_error} if the file cannot be opened.
std::unique_ptr<std::istream> open_input(const std::filesystem::path& path);

/// Reads a whole file through one of the parsers above.
template <typename Parser>
auto parse_file(const std::filesystem::path& path, Parser parser) {
  return parser(*open_input(path), path.string());
}

/// Copies auction time and final price/volume onto matching series and
/// validates that every update precedes the auction time. Series without a
/// record get auction_time_ms = last update time + 1.
void attach_auctions(std::vector<DayAuctionSeries>& series, std::span<const AuctionRecord> auctions);

/// As-of join: annotates each update with the last quote at or before it.
DayAuctionSeries align_quotes(DayAuctionSeries series, std::vector<QuoteSnapshot> quotes);

enum class SliceDirection : std::uint8_t { forward, backward };

/// Updates [begin, end) fall in time slice `slice`.
struct SliceRange {
  std::int64_t slice = 0;
  std::size_t begin = 0;
  std::size_t end = 0;

  bool operator==(const SliceRange&) const = default;
};

/// Forward slice k covers [k, k+1) slice widths from session start; backward
/// slice tau covers auction_time - t in [tau, tau+1) widths. Only non-empty
/// slices are returned, ordered by slice index.
std::vector<SliceRange> slice_minutes(const DayAuctionSeries& series, SliceDirection direction,
                                      TimeMs slice_ms = 60'000);

std::int64_t slice_index(TimeMs t, TimeMs auction_time_ms, SliceDirection direction, TimeMs slice_ms);

}  // namespace auctionlab::ingest
