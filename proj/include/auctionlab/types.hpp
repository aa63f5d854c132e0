#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace auctionlab {

// Prices are integer ticks, volumes integer shares, times milliseconds since
// the local session start.
using Tick = std::int64_t;
using Shares = std::int64_t;
using TimeMs = std::int64_t;
using OrderId = std::uint64_t;

enum class Side : std::uint8_t { buy, sell };
enum class OrderKind : std::uint8_t { limit, market };
enum class Phase : std::uint8_t { open = 0, restricted = 1, closed = 2 };
enum class AuctionSide : std::uint8_t { open, close };

const char* to_string(Side s);
const char* to_string(OrderKind k);
const char* to_string(Phase p);
const char* to_string(AuctionSide s);

std::optional<Side> parse_side(std::string_view s);
std::optional<OrderKind> parse_kind(std::string_view s);
std::optional<AuctionSide> parse_auction_side(std::string_view s);

/// One disseminated feed record: indicative price, matched volume and
/// buy-positive imbalance at that price.
struct IndicativeUpdate {
  TimeMs time_ms = 0;
  std::optional<Tick> price;
  Shares matched_volume = 0;
  Shares imbalance = 0;

  bool operator==(const IndicativeUpdate&) const = default;
};

enum class Errc {
  invalid_argument,
  invalid_order,
  auction_closed,
  imbalance_worsening,
  duplicate_id,
  unknown_id,
  backward_transition,
  invalid_params,
  schema_error,
  non_monotone_time,
  io_error,
  too_few_points,
  non_convergence,
  mismatched_support,
  singular_design,
  non_positive_value,
  zero_total,
  empty_group,
  missing_final_volume,
  no_quotes,
  zero_variance,
  internal,
};

const char* to_string(Errc e);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace auctionlab
