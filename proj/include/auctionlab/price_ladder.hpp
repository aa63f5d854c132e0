#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "auctionlab/types.hpp"

namespace auctionlab {

/// Ordered set of price levels with resting buy/sell limit volume.
///
/// Backed by a treap whose nodes carry subtree sums of buy and sell volume,
/// so cumulative demand B(p) = sum of buys at levels >= p and cumulative
/// supply S(p) = sum of sells at levels <= p, as well as the monotone searches
/// the clearing rule needs, are all O(log P) in the number of levels.
///
/// A level exists while it holds volume on either side or is pinned. Pinning
/// keeps an empty level in the candidate set (the reference price).
class PriceLadder {
 public:
  PriceLadder() = default;

  /// Adds signed deltas to the level at `price`, creating it if needed and
  /// dropping it once both sides are empty and it is not pinned.
  void adjust(Tick price, Shares buy_delta, Shares sell_delta);
  void pin(Tick price);
  void unpin(Tick price);

  std::size_t level_count() const noexcept { return live_; }
  bool empty() const noexcept { return live_ == 0; }

  Shares buy_at(Tick price) const;
  Shares sell_at(Tick price) const;
  /// Sum of buy volume at levels >= price.
  Shares buy_at_or_above(Tick price) const;
  /// Sum of sell volume at levels <= price.
  Shares sell_at_or_below(Tick price) const;
  Shares total_buy() const;
  Shares total_sell() const;

  std::optional<Tick> min_level() const;
  std::optional<Tick> max_level() const;
  std::optional<Tick> successor(Tick price) const;

  /// Largest level p with (market_sell + S(p)) - (market_buy + B(p)) <= 0.
  std::optional<Tick> last_level_supply_not_above_demand(Shares market_buy,
                                                         Shares market_sell) const;
  /// Smallest level p with market_sell + S(p) >= target.
  std::optional<Tick> first_level_supply_at_least(Shares target, Shares market_sell) const;
  /// Largest level p with market_buy + B(p) >= target.
  std::optional<Tick> last_level_demand_at_least(Shares target, Shares market_buy) const;

  struct Level {
    Tick price;
    Shares buy;
    Shares sell;
  };
  /// All levels in ascending price order.
  std::vector<Level> levels() const;

 private:
  struct Node {
    Tick key = 0;
    std::uint32_t prio = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    Shares buy = 0;
    Shares sell = 0;
    std::int32_t pins = 0;
    Shares sum_buy = 0;
    Shares sum_sell = 0;
  };

  std::int32_t find(Tick key) const;
  std::int32_t allocate(Tick key);
  void pull(std::int32_t n);
  void split(std::int32_t n, Tick key, std::int32_t& lo, std::int32_t& hi);
  std::int32_t merge(std::int32_t a, std::int32_t b);
  std::int32_t erase(std::int32_t n, Tick key);
  void insert(std::int32_t node);
  void add_along_path(Tick key, Shares buy_delta, Shares sell_delta);
  void maybe_drop(std::int32_t n);
  Shares sum_buy(std::int32_t n) const { return n < 0 ? 0 : nodes_[n].sum_buy; }
  Shares sum_sell(std::int32_t n) const { return n < 0 ? 0 : nodes_[n].sum_sell; }
  std::uint32_t next_priority();

  std::vector<Node> nodes_;
  std::vector<std::int32_t> free_;
  std::int32_t root_ = -1;
  std::size_t live_ = 0;
  std::uint64_t rng_state_ = 0x9E3779B97F4A7C15ull;
};

}  // namespace auctionlab
