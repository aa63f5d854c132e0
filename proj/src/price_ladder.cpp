#include "auctionlab/price_ladder.hpp"

namespace auctionlab {

std::uint32_t PriceLadder::next_priority() {
  // xorshift64*; treap priorities only need to be well spread
  rng_state_ ^= rng_state_ >> 12;
  rng_state_ ^= rng_state_ << 25;
  rng_state_ ^= rng_state_ >> 27;
  return static_cast<std::uint32_t>((rng_state_ * 0x2545F4914F6CDD1Dull) >> 32);
}

std::int32_t PriceLadder::find(Tick key) const {
  std::int32_t n = root_;
  while (n >= 0) {
    const Node& node = nodes_[n];
    if (key == node.key) return n;
    n = key < node.key ? node.left : node.right;
  }
  return -1;
}

std::int32_t PriceLadder::allocate(Tick key) {
  std::int32_t n;
  if (!free_.empty()) {
    n = free_.back();
    free_.pop_back();
    nodes_[n] = Node{};
  } else {
    n = static_cast<std::int32_t>(nodes_.size());
    nodes_.emplace_back();
  }
  nodes_[n].key = key;
  nodes_[n].prio = next_priority();
  return n;
}

void PriceLadder::pull(std::int32_t n) {
  Node& node = nodes_[n];
  node.sum_buy = node.buy + sum_buy(node.left) + sum_buy(node.right);
  node.sum_sell = node.sell + sum_sell(node.left) + sum_sell(node.right);
}

// lo receives keys < key, hi receives keys >= key
void PriceLadder::split(std::int32_t n, Tick key, std::int32_t& lo, std::int32_t& hi) {
  if (n < 0) {
    lo = hi = -1;
    return;
  }
  if (nodes_[n].key < key) {
    split(nodes_[n].right, key, nodes_[n].right, hi);
    lo = n;
  } else {
    split(nodes_[n].left, key, lo, nodes_[n].left);
    hi = n;
  }
  pull(n);
}

std::int32_t PriceLadder::merge(std::int32_t a, std::int32_t b) {
  if (a < 0) return b;
  if (b < 0) return a;
  if (nodes_[a].prio > nodes_[b].prio) {
    nodes_[a].right = merge(nodes_[a].right, b);
    pull(a);
    return a;
  }
  nodes_[b].left = merge(a, nodes_[b].left);
  pull(b);
  return b;
}

std::int32_t PriceLadder::erase(std::int32_t n, Tick key) {
  if (n < 0) return n;
  Node& node = nodes_[n];
  if (node.key == key) {
    std::int32_t merged = merge(node.left, node.right);
    free_.push_back(n);
    --live_;
    return merged;
  }
  if (key < node.key) {
    nodes_[n].left = erase(nodes_[n].left, key);
  } else {
    nodes_[n].right = erase(nodes_[n].right, key);
  }
  pull(n);
  return n;
}

void PriceLadder::insert(std::int32_t node) {
  std::int32_t lo, hi;
  split(root_, nodes_[node].key, lo, hi);
  pull(node);
  root_ = merge(merge(lo, node), hi);
  ++live_;
}

void PriceLadder::add_along_path(Tick key, Shares buy_delta, Shares sell_delta) {
  std::int32_t n = root_;
  while (n >= 0) {
    Node& node = nodes_[n];
    node.sum_buy += buy_delta;
    node.sum_sell += sell_delta;
    if (key == node.key) {
      node.buy += buy_delta;
      node.sell += sell_delta;
      return;
    }
    n = key < node.key ? node.left : node.right;
  }
}

void PriceLadder::maybe_drop(std::int32_t n) {
  const Node& node = nodes_[n];
  if (node.buy == 0 && node.sell == 0 && node.pins == 0) root_ = erase(root_, node.key);
}

void PriceLadder::adjust(Tick price, Shares buy_delta, Shares sell_delta) {
  std::int32_t n = find(price);
  if (n < 0) {
    if (buy_delta == 0 && sell_delta == 0) return;
    n = allocate(price);
    nodes_[n].buy = buy_delta;
    nodes_[n].sell = sell_delta;
    insert(n);
    return;
  }
  add_along_path(price, buy_delta, sell_delta);
  maybe_drop(n);
}

void PriceLadder::pin(Tick price) {
  std::int32_t n = find(price);
  if (n < 0) {
    n = allocate(price);
    insert(n);
  }
  ++nodes_[n].pins;
}

void PriceLadder::unpin(Tick price) {
  std::int32_t n = find(price);
  if (n < 0 || nodes_[n].pins == 0) return;
  --nodes_[n].pins;
  maybe_drop(n);
}

Shares PriceLadder::buy_at(Tick price) const {
  std::int32_t n = find(price);
  return n < 0 ? 0 : nodes_[n].buy;
}

Shares PriceLadder::sell_at(Tick price) const {
  std::int32_t n = find(price);
  return n < 0 ? 0 : nodes_[n].sell;
}

Shares PriceLadder::buy_at_or_above(Tick price) const {
  Shares acc = 0;
  std::int32_t n = root_;
  while (n >= 0) {
    const Node& node = nodes_[n];
    if (node.key >= price) {
      acc += node.buy + sum_buy(node.right);
      n = node.left;
    } else {
      n = node.right;
    }
  }
  return acc;
}

Shares PriceLadder::sell_at_or_below(Tick price) const {
  Shares acc = 0;
  std::int32_t n = root_;
  while (n >= 0) {
    const Node& node = nodes_[n];
    if (node.key <= price) {
      acc += node.sell + sum_sell(node.left);
      n = node.right;
    } else {
      n = node.left;
    }
  }
  return acc;
}

Shares PriceLadder::total_buy() const { return sum_buy(root_); }
Shares PriceLadder::total_sell() const { return sum_sell(root_); }

std::optional<Tick> PriceLadder::min_level() const {
  if (root_ < 0) return std::nullopt;
  std::int32_t n = root_;
  while (nodes_[n].left >= 0) n = nodes_[n].left;
  return nodes_[n].key;
}

std::optional<Tick> PriceLadder::max_level() const {
  if (root_ < 0) return std::nullopt;
  std::int32_t n = root_;
  while (nodes_[n].right >= 0) n = nodes_[n].right;
  return nodes_[n].key;
}

std::optional<Tick> PriceLadder::successor(Tick price) const {
  std::optional<Tick> best;
  std::int32_t n = root_;
  while (n >= 0) {
    const Node& node = nodes_[n];
    if (node.key > price) {
      best = node.key;
      n = node.left;
    } else {
      n = node.right;
    }
  }
  return best;
}

std::optional<Tick> PriceLadder::last_level_supply_not_above_demand(Shares market_buy,
                                                                    Shares market_sell) const {
  // S(p) - B(p) is non-decreasing in p, so the levels where it is <= 0 form a
  // prefix; walk down keeping the sells strictly left and buys strictly right
  // of the current subtree.
  std::optional<Tick> best;
  Shares sell_before = 0;
  Shares buy_after = 0;
  std::int32_t n = root_;
  while (n >= 0) {
    const Node& node = nodes_[n];
    const Shares left_sell = sum_sell(node.left);
    const Shares right_buy = sum_buy(node.right);
    const Shares supply = market_sell + sell_before + left_sell + node.sell;
    const Shares demand = market_buy + buy_after + right_buy + node.buy;
    if (supply <= demand) {
      best = node.key;
      sell_before += left_sell + node.sell;
      n = node.right;
    } else {
      buy_after += right_buy + node.buy;
      n = node.left;
    }
  }
  return best;
}

std::optional<Tick> PriceLadder::first_level_supply_at_least(Shares target,
                                                             Shares market_sell) const {
  std::optional<Tick> best;
  Shares sell_before = 0;
  std::int32_t n = root_;
  while (n >= 0) {
    const Node& node = nodes_[n];
    const Shares left_sell = sum_sell(node.left);
    if (market_sell + sell_before + left_sell + node.sell >= target) {
      best = node.key;
      n = node.left;
    } else {
      sell_before += left_sell + node.sell;
      n = node.right;
    }
  }
  return best;
}

std::optional<Tick> PriceLadder::last_level_demand_at_least(Shares target,
                                                            Shares market_buy) const {
  std::optional<Tick> best;
  Shares buy_after = 0;
  std::int32_t n = root_;
  while (n >= 0) {
    const Node& node = nodes_[n];
    const Shares right_buy = sum_buy(node.right);
    if (market_buy + buy_after + right_buy + node.buy >= target) {
      best = node.key;
      n = node.right;
    } else {
      buy_after += right_buy + node.buy;
      n = node.left;
    }
  }
  return best;
}

std::vector<PriceLadder::Level> PriceLadder::levels() const {
  std::vector<Level> out;
  out.reserve(live_);
  std::vector<std::int32_t> stack;
  std::int32_t n = root_;
  while (n >= 0 || !stack.empty()) {
    while (n >= 0) {
      stack.push_back(n);
      n = nodes_[n].left;
    }
    n = stack.back();
    stack.pop_back();
    out.push_back({nodes_[n].key, nodes_[n].buy, nodes_[n].sell});
    n = nodes_[n].right;
  }
  return out;
}

}  // namespace auctionlab
