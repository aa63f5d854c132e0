#include "auctionlab/auction_book.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>

namespace auctionlab {

AuctionBook::AuctionBook(Tick reference_price) : reference_price_(reference_price) {
  if (reference_price <= 0) {
    throw Error(Errc::invalid_argument, "reference price must be positive");
  }
  ladder_.pin(reference_price_);
  clearing_ = compute_clearing();
}

std::pair<Shares, Shares> AuctionBook::demand_supply_at(Tick price) const {
  return {market_buy_ + ladder_.buy_at_or_above(price),
          market_sell_ + ladder_.sell_at_or_below(price)};
}

ClearingResult AuctionBook::compute_clearing() const {
  // Over candidate levels S(p) - B(p) is non-decreasing. Below the crossing
  // min(B,S) = S is non-decreasing, above it min(B,S) = B is non-increasing,
  // so the volume maximizers form one contiguous run of levels [lo, hi]. The
  // reference price is always a level, hence the closest maximizer to it is
  // the reference clamped into [lo, hi].
  const auto below = ladder_.last_level_supply_not_above_demand(market_buy_, market_sell_);
  const auto above = below ? ladder_.successor(*below) : ladder_.min_level();
  const Shares vol_below = below ? market_sell_ + ladder_.sell_at_or_below(*below) : -1;
  const Shares vol_above = above ? market_buy_ + ladder_.buy_at_or_above(*above) : -1;
  const Shares best = std::max(vol_below, vol_above);

  ClearingResult r;
  if (best <= 0) {
    r.imbalance = market_buy_ - market_sell_;
    return r;
  }
  const Tick lo =
      vol_below == best ? *ladder_.first_level_supply_at_least(best, market_sell_) : *above;
  const Tick hi =
      vol_above == best ? *ladder_.last_level_demand_at_least(best, market_buy_) : *below;
  const Tick price = std::clamp(reference_price_, lo, hi);
  const auto [demand, supply] = demand_supply_at(price);
  r.price = price;
  r.matched_volume = std::min(demand, supply);
  r.imbalance = demand - supply;
  return r;
}

void AuctionBook::apply(const AuctionOrder& order, Shares sign) {
  const Shares qty = sign * order.size;
  if (order.kind == OrderKind::market) {
    (order.side == Side::buy ? market_buy_ : market_sell_) += qty;
  } else if (order.side == Side::buy) {
    ladder_.adjust(*order.price, qty, 0);
  } else {
    ladder_.adjust(*order.price, 0, qty);
  }
}

IndicativeUpdate AuctionBook::make_update(TimeMs t) const {
  return IndicativeUpdate{t, clearing_.price, clearing_.matched_volume, clearing_.imbalance};
}

IndicativeUpdate AuctionBook::submit(const AuctionOrder& order) {
  if (phase_ == Phase::closed) {
    throw Error(Errc::auction_closed, "order " + std::to_string(order.id) + ": auction closed");
  }
  if (order.size <= 0) {
    throw Error(Errc::invalid_order, "order " + std::to_string(order.id) + ": size must be positive");
  }
  if (order.kind == OrderKind::limit && (!order.price || *order.price <= 0)) {
    throw Error(Errc::invalid_order,
                "order " + std::to_string(order.id) + ": limit order needs a positive price");
  }
  if (order.kind == OrderKind::market && order.price) {
    throw Error(Errc::invalid_order,
                "order " + std::to_string(order.id) + ": market order carries a price");
  }
  if (seen_ids_.count(order.id)) {
    throw Error(Errc::duplicate_id, "order " + std::to_string(order.id) + ": duplicate id");
  }

  apply(order, +1);
  ClearingResult next = compute_clearing();
  if (phase_ == Phase::restricted && std::llabs(next.imbalance) >= std::llabs(clearing_.imbalance)) {
    apply(order, -1);
    throw Error(Errc::imbalance_worsening,
                "order " + std::to_string(order.id) + ": does not reduce the imbalance");
  }
  clearing_ = next;
  seen_ids_.insert(order.id);
  orders_.emplace(order.id, Resident{order, next_seq_++});
  return make_update(order.submit_time);
}

IndicativeUpdate AuctionBook::cancel(OrderId id, TimeMs time_ms) {
  if (phase_ == Phase::closed) {
    throw Error(Errc::auction_closed, "cancel " + std::to_string(id) + ": auction closed");
  }
  auto it = orders_.find(id);
  if (it == orders_.end()) {
    throw Error(Errc::unknown_id, "cancel " + std::to_string(id) + ": unknown id");
  }
  const AuctionOrder order = it->second.order;
  apply(order, -1);
  ClearingResult next = compute_clearing();
  if (phase_ == Phase::restricted && std::llabs(next.imbalance) > std::llabs(clearing_.imbalance)) {
    apply(order, +1);
    throw Error(Errc::imbalance_worsening,
                "cancel " + std::to_string(id) + ": would increase the imbalance");
  }
  clearing_ = next;
  orders_.erase(it);
  return make_update(time_ms);
}

void AuctionBook::set_phase(Phase phase, TimeMs time_ms) {
  if (phase == phase_) return;
  if (static_cast<int>(phase) < static_cast<int>(phase_)) {
    throw Error(Errc::backward_transition, std::string("cannot move from ") + to_string(phase_) +
                                               " to " + to_string(phase));
  }
  phase_ = phase;
  phase_time_ = time_ms;
}

const AuctionOrder* AuctionBook::find(OrderId id) const {
  auto it = orders_.find(id);
  return it == orders_.end() ? nullptr : &it->second.order;
}

std::vector<AuctionOrder> AuctionBook::resident_orders() const {
  std::vector<const Resident*> rs;
  rs.reserve(orders_.size());
  for (const auto& [id, r] : orders_) rs.push_back(&r);
  std::sort(rs.begin(), rs.end(), [](const Resident* a, const Resident* b) { return a->seq < b->seq; });
  std::vector<AuctionOrder> out;
  out.reserve(rs.size());
  for (const Resident* r : rs) out.push_back(r->order);
  return out;
}

AuctionResult AuctionBook::finalize() {
  if (phase_ == Phase::closed) throw Error(Errc::auction_closed, "auction already finalized");
  const ClearingResult clear = compute_clearing();
  set_phase(Phase::closed, phase_time_.value_or(0));

  AuctionResult result;
  result.final_price = clear.price;
  result.total_matched = clear.matched_volume;

  std::vector<const Resident*> buys, sells;
  for (const auto& [id, r] : orders_) (r.order.side == Side::buy ? buys : sells).push_back(&r);

  // market orders first, then better limits, then earlier submissions
  auto priority = [](bool buy_side) {
    return [buy_side](const Resident* a, const Resident* b) {
      const bool am = a->order.kind == OrderKind::market;
      const bool bm = b->order.kind == OrderKind::market;
      if (am != bm) return am;
      if (!am && *a->order.price != *b->order.price) {
        return buy_side ? *a->order.price > *b->order.price : *a->order.price < *b->order.price;
      }
      if (a->order.submit_time != b->order.submit_time) {
        return a->order.submit_time < b->order.submit_time;
      }
      return a->seq < b->seq;
    };
  };
  std::sort(buys.begin(), buys.end(), priority(true));
  std::sort(sells.begin(), sells.end(), priority(false));

  auto allocate = [&](const std::vector<const Resident*>& queue, bool buy_side) {
    Shares left = result.crossed() ? result.total_matched : 0;
    for (const Resident* r : queue) {
      const AuctionOrder& o = r->order;
      const bool eligible =
          result.crossed() &&
          (o.kind == OrderKind::market ||
           (buy_side ? *o.price >= *result.final_price : *o.price <= *result.final_price));
      const Shares take = eligible ? std::min(left, o.size) : 0;
      left -= take;
      if (take > 0) result.fills.push_back({o.id, o.side, take});
      if (take < o.size) result.residuals.push_back({o.id, o.side, o.size - take});
    }
    if (left != 0) {
      throw Error(Errc::internal, "allocation left unfilled volume on the " +
                                      std::string(buy_side ? "buy" : "sell") + " side");
    }
  };
  allocate(buys, true);
  allocate(sells, false);
  clearing_ = clear;
  return result;
}

}  // namespace auctionlab
