#include "auctionlab/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace auctionlab {

const char* to_string(Exchange e) {
  switch (e) {
    case Exchange::arca: return "ARCA";
    case Exchange::nasdaq: return "NASDAQ";
    case Exchange::nyse: return "NYSE";
  }
  return "?";
}

std::optional<Exchange> parse_exchange(std::string_view s) {
  if (s == "ARCA") return Exchange::arca;
  if (s == "NASDAQ") return Exchange::nasdaq;
  if (s == "NYSE") return Exchange::nyse;
  return std::nullopt;
}

}  // namespace auctionlab

namespace auctionlab::ingest {

namespace {

constexpr std::size_t kMaxReportedIssues = 20;

// Collects per-line problems so one bad file reports all of them at once.
class Issues {
 public:
  explicit Issues(std::string source) : source_(std::move(source)) {}

  void add(std::size_t line, const std::string& what) {
    ++count_;
    if (messages_.size() < kMaxReportedIssues) {
      messages_.push_back(source_ + ":" + std::to_string(line) + ": " + what);
    }
  }

  void raise_if_any() const {
    if (count_ == 0) return;
    std::string msg = std::to_string(count_) + " malformed row(s)";
    for (const auto& m : messages_) msg += "\n  " + m;
    if (count_ > messages_.size()) msg += "\n  ...";
    throw Error(Errc::schema_error, msg);
  }

  const std::string& source() const { return source_; }

 private:
  std::string source_;
  std::vector<std::string> messages_;
  std::size_t count_ = 0;
};

// Splits one CSV line (no quoting) into fields.
void split(std::string_view line, std::vector<std::string_view>& fields) {
  fields.clear();
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

template <typename T>
std::optional<T> parse_number(std::string_view s) {
  T v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

// Reads the header and hands every data row to `row(line_no, fields)`;
// `row` returns an error string or empty on success.
template <typename RowFn>
void read_rows(std::istream& in, const char* header, Issues& issues, RowFn&& row) {
  std::string line;
  std::vector<std::string_view> fields;
  if (!std::getline(in, line)) return;  // empty file
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header) {
    issues.add(1, "expected header '" + std::string(header) + "'");
    issues.raise_if_any();
  }
  std::size_t expected = 1 + static_cast<std::size_t>(std::count(header, header + std::char_traits<char>::length(header), ','));
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    split(line, fields);
    if (fields.size() != expected) {
      issues.add(line_no, "expected " + std::to_string(expected) + " fields, got " + std::to_string(fields.size()));
      continue;
    }
    std::string err = row(line_no, fields);
    if (!err.empty()) issues.add(line_no, err);
  }
}

std::string parse_key(const std::vector<std::string_view>& f, SeriesKey& key) {
  if (f[0].empty()) return "empty asset";
  if (!is_iso_date(f[1])) return "date '" + std::string(f[1]) + "' is not yyyy-mm-dd";
  auto side = parse_auction_side(f[2]);
  if (!side) return "auction side must be open|close";
  key.asset = std::string(f[0]);
  key.date = std::string(f[1]);
  key.side = *side;
  return {};
}

void write_key(std::ostream& out, const SeriesKey& k) {
  out << k.asset << ',' << k.date << ',' << to_string(k.side);
}

}  // namespace

SeriesKey key_of(const DayAuctionSeries& s) { return {s.asset, s.date, s.side}; }

bool is_iso_date(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
  for (std::size_t i : {0, 1, 2, 3, 5, 6, 8, 9})
    if (s[i] < '0' || s[i] > '9') return false;
  const int month = (s[5] - '0') * 10 + (s[6] - '0');
  const int day = (s[8] - '0') * 10 + (s[9] - '0');
  return month >= 1 && month <= 12 && day >= 1 && day <= 31;
}

std::unique_ptr<std::istream> open_input(const std::filesystem::path& path) {
  auto in = std::make_unique<std::ifstream>(path);
  if (!*in) throw Error(Errc::io_error, "cannot open " + path.string());
  return in;
}

std::vector<DayAuctionSeries> parse_feed(std::istream& in, const std::string& source) {
  Issues issues(source);
  std::map<SeriesKey, std::size_t> index;
  std::vector<DayAuctionSeries> out;
  std::vector<std::size_t> last_line;
  std::optional<std::string> order_error;

  read_rows(in, kFeedHeader, issues, [&](std::size_t line, const std::vector<std::string_view>& f) -> std::string {
    SeriesKey key;
    if (auto e = parse_key(f, key); !e.empty()) return e;
    auto t = parse_number<TimeMs>(f[3]);
    if (!t || *t < 0) return "time_ms must be a non-negative integer";
    IndicativeUpdate u;
    u.time_ms = *t;
    if (!f[4].empty()) {
      auto p = parse_number<Tick>(f[4]);
      if (!p || *p <= 0) return "indicative price must be empty or a positive integer";
      u.price = *p;
    }
    auto w = parse_number<Shares>(f[5]);
    auto imb = parse_number<Shares>(f[6]);
    if (!w || *w < 0) return "matched_volume must be a non-negative integer";
    if (!imb) return "imbalance must be an integer";
    if (!u.price && *w != 0) return "matched volume without an indicative price";
    u.matched_volume = *w;
    u.imbalance = *imb;

    auto [it, inserted] = index.emplace(key, out.size());
    if (inserted) {
      DayAuctionSeries s;
      s.asset = key.asset;
      s.date = key.date;
      s.side = key.side;
      out.push_back(std::move(s));
      last_line.push_back(0);
    }
    auto& s = out[it->second];
    if (!s.updates.empty() && u.time_ms <= s.updates.back().time_ms && !order_error) {
      order_error = issues.source() + ":" + std::to_string(line) + ": time " + std::to_string(u.time_ms) +
                    " does not follow " + std::to_string(s.updates.back().time_ms) + " (line " +
                    std::to_string(last_line[it->second]) + ") for " + key.asset + " " + key.date + " " +
                    to_string(key.side);
    }
    s.updates.push_back(u);
    last_line[it->second] = line;
    return {};
  });
  issues.raise_if_any();
  if (order_error) throw Error(Errc::non_monotone_time, *order_error);
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return key_of(a) < key_of(b); });
  for (auto& s : out) {
    s.auction_time_ms = s.updates.empty() ? 0 : s.updates.back().time_ms + 1;
  }
  return out;
}

std::vector<SessionTape> parse_tape(std::istream& in, const std::string& source) {
  Issues issues(source);
  std::map<SeriesKey, std::size_t> index;
  std::vector<SessionTape> out;
  std::optional<std::string> order_error;

  read_rows(in, kTapeHeader, issues, [&](std::size_t line, const std::vector<std::string_view>& f) -> std::string {
    SeriesKey key;
    if (auto e = parse_key(f, key); !e.empty()) return e;
    auto t = parse_number<TimeMs>(f[3]);
    if (!t || *t < 0) return "time_ms must be a non-negative integer";
    auto id = parse_number<OrderId>(f[5]);
    if (!id) return "order_id must be an unsigned integer";
    TapeEvent ev;
    ev.time_ms = *t;
    ev.order.id = *id;
    if (f[4] == "submit") {
      ev.action = TapeAction::submit;
      auto side = parse_side(f[6]);
      auto kind = parse_kind(f[7]);
      auto size = parse_number<Shares>(f[9]);
      if (!side) return "buy_sell must be buy|sell";
      if (!kind) return "kind must be limit|market";
      if (!size || *size <= 0) return "size must be a positive integer";
      ev.order.side = *side;
      ev.order.kind = *kind;
      ev.order.size = *size;
      ev.order.submit_time = *t;
      if (*kind == OrderKind::limit) {
        auto p = parse_number<Tick>(f[8]);
        if (!p || *p <= 0) return "limit order needs a positive price_ticks";
        ev.order.price = *p;
      } else if (!f[8].empty()) {
        return "market order must not carry a price";
      }
    } else if (f[4] == "cancel") {
      ev.action = TapeAction::cancel;
    } else {
      return "action must be submit|cancel";
    }
    auto [it, inserted] = index.emplace(key, out.size());
    if (inserted) out.push_back({key, {}});
    auto& tape = out[it->second];
    if (!tape.events.empty() && ev.time_ms < tape.events.back().time_ms && !order_error) {
      order_error = issues.source() + ":" + std::to_string(line) + ": time goes backwards for " + key.asset +
                    " " + key.date + " " + to_string(key.side);
    }
    tape.events.push_back(ev);
    return {};
  });
  issues.raise_if_any();
  if (order_error) throw Error(Errc::non_monotone_time, *order_error);
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.key < b.key; });
  return out;
}

QuoteMap parse_quotes(std::istream& in, const std::string& source) {
  Issues issues(source);
  QuoteMap out;
  std::optional<std::string> order_error;
  read_rows(in, kQuotesHeader, issues, [&](std::size_t line, const std::vector<std::string_view>& f) -> std::string {
    SeriesKey key;
    if (auto e = parse_key(f, key); !e.empty()) return e;
    auto t = parse_number<TimeMs>(f[3]);
    auto b = parse_number<Tick>(f[4]);
    auto a = parse_number<Tick>(f[5]);
    auto vb = parse_number<Shares>(f[6]);
    auto va = parse_number<Shares>(f[7]);
    if (!t || *t < 0) return "time_ms must be a non-negative integer";
    if (!b || !a || *b <= 0 || *a <= *b) return "quotes need 0 < bid < ask";
    if (!vb || !va || *vb <= 0 || *va <= 0) return "quote sizes must be positive";
    auto& v = out[key];
    if (!v.empty() && *t < v.back().time_ms && !order_error) {
      order_error = issues.source() + ":" + std::to_string(line) + ": quote time goes backwards";
    }
    v.push_back({*t, *b, *a, *vb, *va});
    return {};
  });
  issues.raise_if_any();
  if (order_error) throw Error(Errc::non_monotone_time, *order_error);
  return out;
}

std::vector<DailyVolumeRecord> parse_daily_volumes(std::istream& in, const std::string& source) {
  Issues issues(source);
  std::vector<DailyVolumeRecord> out;
  read_rows(in, kDailyVolumesHeader, issues, [&](std::size_t, const std::vector<std::string_view>& f) -> std::string {
    DailyVolumeRecord r;
    if (f[0].empty()) return "empty asset";
    if (!is_iso_date(f[1])) return "date is not yyyy-mm-dd";
    auto ex = parse_exchange(f[2]);
    if (!ex) return "exchange must be ARCA|NASDAQ|NYSE";
    auto vo = parse_number<Shares>(f[3]);
    auto vc = parse_number<Shares>(f[4]);
    auto vt = parse_number<Shares>(f[5]);
    auto po = parse_number<Tick>(f[6]);
    auto pc = parse_number<Tick>(f[7]);
    auto prev = parse_number<Tick>(f[8]);
    if (!vo || !vc || !vt || *vo < 0 || *vc < 0 || *vt < 0) return "volumes must be non-negative integers";
    if (*vt < *vo + *vc) return "v_total is smaller than v_open + v_close";
    if (!po || !pc || !prev) return "prices must be integers";
    r.asset = std::string(f[0]);
    r.date = std::string(f[1]);
    r.exchange = *ex;
    r.v_open = *vo;
    r.v_close = *vc;
    r.v_total = *vt;
    r.p_open = *po;
    r.p_close = *pc;
    r.prev_close = *prev;
    out.push_back(std::move(r));
    return {};
  });
  issues.raise_if_any();
  return out;
}

std::vector<AuctionRecord> parse_auctions(std::istream& in, const std::string& source) {
  Issues issues(source);
  std::vector<AuctionRecord> out;
  read_rows(in, kAuctionsHeader, issues, [&](std::size_t, const std::vector<std::string_view>& f) -> std::string {
    AuctionRecord r;
    if (auto e = parse_key(f, r.key); !e.empty()) return e;
    auto t = parse_number<TimeMs>(f[3]);
    auto ref = parse_number<Tick>(f[4]);
    if (!t || *t <= 0) return "auction_time_ms must be a positive integer";
    if (!ref || *ref <= 0) return "reference_price_ticks must be a positive integer";
    r.auction_time_ms = *t;
    r.reference_price = *ref;
    if (!f[5].empty()) {
      auto p = parse_number<Tick>(f[5]);
      if (!p || *p <= 0) return "final_price_ticks must be empty or positive";
      r.final_price = *p;
    }
    if (!f[6].empty()) {
      auto v = parse_number<Shares>(f[6]);
      if (!v || *v < 0) return "final_volume must be empty or non-negative";
      r.final_volume = *v;
    }
    out.push_back(std::move(r));
    return {};
  });
  issues.raise_if_any();
  return out;
}

std::vector<FillRecord> parse_fills(std::istream& in, const std::string& source) {
  Issues issues(source);
  std::vector<FillRecord> out;
  read_rows(in, kFillsHeader, issues, [&](std::size_t, const std::vector<std::string_view>& f) -> std::string {
    FillRecord r;
    if (auto e = parse_key(f, r.key); !e.empty()) return e;
    auto id = parse_number<OrderId>(f[3]);
    auto side = parse_side(f[4]);
    auto q = parse_number<Shares>(f[5]);
    auto p = parse_number<Tick>(f[6]);
    if (!id) return "order_id must be an unsigned integer";
    if (!side) return "buy_sell must be buy|sell";
    if (!q || *q <= 0) return "filled_shares must be positive";
    if (!p || *p <= 0) return "price_ticks must be positive";
    r.id = *id;
    r.side = *side;
    r.filled = *q;
    r.price = *p;
    out.push_back(std::move(r));
    return {};
  });
  issues.raise_if_any();
  return out;
}

void write_feed(std::ostream& out, std::span<const DayAuctionSeries> series, bool header) {
  if (header) out << kFeedHeader << '\n';
  for (const auto& s : series) {
    for (const auto& u : s.updates) {
      out << s.asset << ',' << s.date << ',' << to_string(s.side) << ',' << u.time_ms << ',';
      if (u.price) out << *u.price;
      out << ',' << u.matched_volume << ',' << u.imbalance << '\n';
    }
  }
}

void write_tape(std::ostream& out, const SeriesKey& key, std::span<const TapeEvent> events, bool header) {
  if (header) out << kTapeHeader << '\n';
  for (const auto& e : events) {
    write_key(out, key);
    out << ',' << e.time_ms << ',';
    if (e.action == TapeAction::cancel) {
      out << "cancel," << e.order.id << ",,,,\n";
      continue;
    }
    out << "submit," << e.order.id << ',' << to_string(e.order.side) << ',' << to_string(e.order.kind) << ',';
    if (e.order.price) out << *e.order.price;
    out << ',' << e.order.size << '\n';
  }
}

void write_quotes(std::ostream& out, const SeriesKey& key, std::span<const QuoteSnapshot> quotes, bool header) {
  if (header) out << kQuotesHeader << '\n';
  for (const auto& q : quotes) {
    write_key(out, key);
    out << ',' << q.time_ms << ',' << q.bid << ',' << q.ask << ',' << q.bid_size << ',' << q.ask_size << '\n';
  }
}

void write_daily_volumes(std::ostream& out, std::span<const DailyVolumeRecord> records, bool header) {
  if (header) out << kDailyVolumesHeader << '\n';
  for (const auto& r : records) {
    out << r.asset << ',' << r.date << ',' << to_string(r.exchange) << ',' << r.v_open << ',' << r.v_close << ','
        << r.v_total << ',' << r.p_open << ',' << r.p_close << ',' << r.prev_close << '\n';
  }
}

void write_auctions(std::ostream& out, std::span<const AuctionRecord> records, bool header) {
  if (header) out << kAuctionsHeader << '\n';
  for (const auto& r : records) {
    write_key(out, r.key);
    out << ',' << r.auction_time_ms << ',' << r.reference_price << ',';
    if (r.final_price) out << *r.final_price;
    out << ',';
    if (r.final_volume) out << *r.final_volume;
    out << '\n';
  }
}

void write_fills(std::ostream& out, std::span<const FillRecord> fills, bool header) {
  if (header) out << kFillsHeader << '\n';
  for (const auto& f : fills) {
    write_key(out, f.key);
    out << ',' << f.id << ',' << to_string(f.side) << ',' << f.filled << ',' << f.price << '\n';
  }
}

void attach_auctions(std::vector<DayAuctionSeries>& series, std::span<const AuctionRecord> auctions) {
  std::map<SeriesKey, const AuctionRecord*> by_key;
  for (const auto& a : auctions) by_key[a.key] = &a;
  for (auto& s : series) {
    auto it = by_key.find(key_of(s));
    if (it == by_key.end()) {
      s.auction_time_ms = s.updates.empty() ? 0 : s.updates.back().time_ms + 1;
      continue;
    }
    const AuctionRecord& a = *it->second;
    if (!s.updates.empty() && s.updates.back().time_ms >= a.auction_time_ms) {
      throw Error(Errc::schema_error, "update at " + std::to_string(s.updates.back().time_ms) +
                                          " ms is not before the auction time for " + s.asset + " " + s.date);
    }
    s.auction_time_ms = a.auction_time_ms;
    s.final_price = a.final_price;
    s.final_volume = a.final_volume;
  }
}

DayAuctionSeries align_quotes(DayAuctionSeries series, std::vector<QuoteSnapshot> quotes) {
  series.quotes = std::move(quotes);
  series.quote_of.assign(series.updates.size(), -1);
  std::size_t q = 0;
  std::int32_t current = -1;
  for (std::size_t i = 0; i < series.updates.size(); ++i) {
    while (q < series.quotes.size() && series.quotes[q].time_ms <= series.updates[i].time_ms) {
      current = static_cast<std::int32_t>(q);
      ++q;
    }
    series.quote_of[i] = current;
  }
  return series;
}

std::int64_t slice_index(TimeMs t, TimeMs auction_time_ms, SliceDirection direction, TimeMs slice_ms) {
  const TimeMs offset = direction == SliceDirection::forward ? t : auction_time_ms - t;
  // floor division; offsets are non-negative for valid series
  return offset >= 0 ? offset / slice_ms : -((-offset + slice_ms - 1) / slice_ms);
}

std::vector<SliceRange> slice_minutes(const DayAuctionSeries& series, SliceDirection direction, TimeMs slice_ms) {
  if (slice_ms <= 0) throw Error(Errc::invalid_argument, "slice width must be positive");
  std::vector<SliceRange> out;
  const auto& u = series.updates;
  std::size_t i = 0;
  while (i < u.size()) {
    const std::int64_t k = slice_index(u[i].time_ms, series.auction_time_ms, direction, slice_ms);
    std::size_t j = i + 1;
    while (j < u.size() && slice_index(u[j].time_ms, series.auction_time_ms, direction, slice_ms) == k) ++j;
    out.push_back({k, i, j});
    i = j;
  }
  std::sort(out.begin(), out.end(), [](const SliceRange& a, const SliceRange& b) { return a.slice < b.slice; });
  return out;
}

}  // namespace auctionlab::ingest
