#pragma once

#include <optional>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "auctionlab/price_ladder.hpp"
#include "auctionlab/types.hpp"

namespace auctionlab {

struct AuctionOrder {
  OrderId id = 0;
  Side side = Side::buy;
  OrderKind kind = OrderKind::limit;
  std::optional<Tick> price;  // present iff kind == limit
  Shares size = 0;
  TimeMs submit_time = 0;

  bool operator==(const AuctionOrder&) const = default;
};

struct ClearingResult {
  std::optional<Tick> price;
  Shares matched_volume = 0;
  Shares imbalance = 0;  // B(price) - S(price); market imbalance when no cross

  bool operator==(const ClearingResult&) const = default;
};

struct Fill {
  OrderId id = 0;
  Side side = Side::buy;
  Shares filled = 0;
};

struct AuctionResult {
  std::optional<Tick> final_price;
  Shares total_matched = 0;
  std::vector<Fill> fills;      // only orders with a positive fill
  std::vector<Fill> residuals;  // unexecuted remainder per resident order

  bool crossed() const noexcept { return final_price.has_value(); }
};

/// Pre-auction order book for one (asset, date, auction side).
///
/// Every submit/cancel updates the price ladder and recomputes the clearing
/// state in O(log P). Single writer; copies are independent snapshots.
class AuctionBook {
 public:
  explicit AuctionBook(Tick reference_price);

  /// Throws Error{auction_closed | imbalance_worsening | duplicate_id | invalid_order}.
  IndicativeUpdate submit(const AuctionOrder& order);
  /// Throws Error{unknown_id | auction_closed | imbalance_worsening}.
  IndicativeUpdate cancel(OrderId id, TimeMs time_ms);
  /// Forward-only phase change; same phase is a no-op.
  void set_phase(Phase phase, TimeMs time_ms);
  /// Closes the book and allocates fills by price then time priority.
  AuctionResult finalize();

  const ClearingResult& clearing() const noexcept { return clearing_; }
  /// Full clearing computation over the current ladder.
  ClearingResult compute_clearing() const;
  /// (B(p), S(p)) including market orders.
  std::pair<Shares, Shares> demand_supply_at(Tick price) const;

  Phase phase() const noexcept { return phase_; }
  std::optional<TimeMs> phase_time() const noexcept { return phase_time_; }
  Tick reference_price() const noexcept { return reference_price_; }
  Shares market_buy() const noexcept { return market_buy_; }
  Shares market_sell() const noexcept { return market_sell_; }
  std::size_t order_count() const noexcept { return orders_.size(); }
  bool contains(OrderId id) const { return orders_.count(id) != 0; }
  const AuctionOrder* find(OrderId id) const;
  /// Resident orders in arrival order.
  std::vector<AuctionOrder> resident_orders() const;
  const PriceLadder& ladder() const noexcept { return ladder_; }

 private:
  struct Resident {
    AuctionOrder order;
    std::uint64_t seq = 0;
  };

  void apply(const AuctionOrder& order, Shares sign);
  IndicativeUpdate make_update(TimeMs t) const;

  Tick reference_price_;
  PriceLadder ladder_;
  Shares market_buy_ = 0;
  Shares market_sell_ = 0;
  Phase phase_ = Phase::open;
  std::optional<TimeMs> phase_time_;
  std::unordered_map<OrderId, Resident> orders_;
  std::unordered_set<OrderId> seen_ids_;
  std::uint64_t next_seq_ = 0;
  ClearingResult clearing_;
};

}  // namespace auctionlab
