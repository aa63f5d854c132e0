#include "auctionlab/auctionlab.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <new>
#include <string>
#include <vector>

#include "auctionlab/auction_book.hpp"
#include "auctionlab/commands.hpp"

using namespace auctionlab;

struct alab_book {
  AuctionBook book;
  std::vector<Fill> fills;
};

namespace {

thread_local std::string g_last_error;

alab_status status_of(Errc e) {
  switch (e) {
    case Errc::invalid_argument: return ALAB_E_INVALID_ARGUMENT;
    case Errc::invalid_order: return ALAB_E_INVALID_ORDER;
    case Errc::auction_closed: return ALAB_E_AUCTION_CLOSED;
    case Errc::imbalance_worsening: return ALAB_E_IMBALANCE_WORSENING;
    case Errc::duplicate_id: return ALAB_E_DUPLICATE_ID;
    case Errc::unknown_id: return ALAB_E_UNKNOWN_ID;
    case Errc::backward_transition: return ALAB_E_BACKWARD_TRANSITION;
    case Errc::invalid_params: return ALAB_E_INVALID_PARAMS;
    case Errc::schema_error: return ALAB_E_SCHEMA;
    case Errc::non_monotone_time: return ALAB_E_NON_MONOTONE_TIME;
    case Errc::io_error: return ALAB_E_IO;
    case Errc::too_few_points: return ALAB_E_TOO_FEW_POINTS;
    case Errc::non_convergence: return ALAB_E_NON_CONVERGENCE;
    case Errc::mismatched_support: return ALAB_E_MISMATCHED_SUPPORT;
    case Errc::singular_design: return ALAB_E_SINGULAR_DESIGN;
    case Errc::non_positive_value: return ALAB_E_NON_POSITIVE_VALUE;
    case Errc::zero_total: return ALAB_E_ZERO_TOTAL;
    case Errc::empty_group: return ALAB_E_EMPTY_GROUP;
    case Errc::missing_final_volume: return ALAB_E_MISSING_FINAL_VOLUME;
    case Errc::no_quotes: return ALAB_E_NO_QUOTES;
    case Errc::zero_variance: return ALAB_E_ZERO_VARIANCE;
    case Errc::internal: return ALAB_E_INTERNAL;
  }
  return ALAB_E_INTERNAL;
}

alab_status fail(alab_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

/// Runs fn, translating exceptions into status codes and the thread's last error.
template <typename Fn>
alab_status guarded(Fn&& fn) {
  try {
    g_last_error.clear();
    fn();
    return ALAB_OK;
  } catch (const Error& e) {
    return fail(status_of(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(ALAB_E_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(ALAB_E_INTERNAL, e.what());
  } catch (...) {
    return fail(ALAB_E_INTERNAL, "unknown failure");
  }
}

void to_c(const IndicativeUpdate& u, alab_update* out) {
  if (!out) return;
  out->time_ms = u.time_ms;
  out->has_price = u.price ? 1 : 0;
  out->price = u.price.value_or(0);
  out->matched_volume = u.matched_volume;
  out->imbalance = u.imbalance;
}

char* dup_string(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

Side side_of(alab_side s) {
  if (s == ALAB_BUY) return Side::buy;
  if (s == ALAB_SELL) return Side::sell;
  throw Error(Errc::invalid_argument, "side must be ALAB_BUY or ALAB_SELL");
}

}  // namespace

extern "C" {

const char* alab_version(void) { return "0.1.0"; }

const char* alab_status_name(alab_status status) {
  switch (status) {
    case ALAB_OK: return "ok";
    case ALAB_E_INVALID_ARGUMENT: return to_string(Errc::invalid_argument);
    case ALAB_E_INVALID_ORDER: return to_string(Errc::invalid_order);
    case ALAB_E_AUCTION_CLOSED: return to_string(Errc::auction_closed);
    case ALAB_E_IMBALANCE_WORSENING: return to_string(Errc::imbalance_worsening);
    case ALAB_E_DUPLICATE_ID: return to_string(Errc::duplicate_id);
    case ALAB_E_UNKNOWN_ID: return to_string(Errc::unknown_id);
    case ALAB_E_BACKWARD_TRANSITION: return to_string(Errc::backward_transition);
    case ALAB_E_INVALID_PARAMS: return to_string(Errc::invalid_params);
    case ALAB_E_SCHEMA: return to_string(Errc::schema_error);
    case ALAB_E_NON_MONOTONE_TIME: return to_string(Errc::non_monotone_time);
    case ALAB_E_IO: return to_string(Errc::io_error);
    case ALAB_E_TOO_FEW_POINTS: return to_string(Errc::too_few_points);
    case ALAB_E_NON_CONVERGENCE: return to_string(Errc::non_convergence);
    case ALAB_E_MISMATCHED_SUPPORT: return to_string(Errc::mismatched_support);
    case ALAB_E_SINGULAR_DESIGN: return to_string(Errc::singular_design);
    case ALAB_E_NON_POSITIVE_VALUE: return to_string(Errc::non_positive_value);
    case ALAB_E_ZERO_TOTAL: return to_string(Errc::zero_total);
    case ALAB_E_EMPTY_GROUP: return to_string(Errc::empty_group);
    case ALAB_E_MISSING_FINAL_VOLUME: return to_string(Errc::missing_final_volume);
    case ALAB_E_NO_QUOTES: return to_string(Errc::no_quotes);
    case ALAB_E_ZERO_VARIANCE: return to_string(Errc::zero_variance);
    case ALAB_E_INTERNAL: return to_string(Errc::internal);
  }
  return "unknown";
}

const char* alab_last_error(void) { return g_last_error.c_str(); }

alab_status alab_book_create(int64_t reference_price, alab_book** out) {
  if (!out) return fail(ALAB_E_INVALID_ARGUMENT, "null output handle");
  *out = nullptr;
  return guarded([&] { *out = new alab_book{AuctionBook(reference_price), {}}; });
}

void alab_book_destroy(alab_book* book) { delete book; }

alab_status alab_book_submit(alab_book* book, uint64_t id, alab_side side, alab_kind kind, int64_t price, int64_t size,
                             int64_t time_ms, alab_update* out) {
  if (!book) return fail(ALAB_E_INVALID_ARGUMENT, "null book");
  return guarded([&] {
    AuctionOrder o;
    o.id = id;
    o.side = side_of(side);
    if (kind == ALAB_LIMIT) {
      o.kind = OrderKind::limit;
      o.price = price;
    } else if (kind == ALAB_MARKET) {
      o.kind = OrderKind::market;
    } else {
      throw Error(Errc::invalid_argument, "kind must be ALAB_LIMIT or ALAB_MARKET");
    }
    o.size = size;
    o.submit_time = time_ms;
    to_c(book->book.submit(o), out);
  });
}

alab_status alab_book_cancel(alab_book* book, uint64_t id, int64_t time_ms, alab_update* out) {
  if (!book) return fail(ALAB_E_INVALID_ARGUMENT, "null book");
  return guarded([&] { to_c(book->book.cancel(id, time_ms), out); });
}

alab_status alab_book_set_phase(alab_book* book, alab_phase phase, int64_t time_ms) {
  if (!book) return fail(ALAB_E_INVALID_ARGUMENT, "null book");
  return guarded([&] {
    if (phase < ALAB_PHASE_OPEN || phase > ALAB_PHASE_CLOSED) throw Error(Errc::invalid_argument, "unknown phase");
    book->book.set_phase(static_cast<Phase>(phase), time_ms);
  });
}

alab_status alab_book_clearing(const alab_book* book, alab_update* out) {
  if (!book || !out) return fail(ALAB_E_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const auto& c = book->book.clearing();
    to_c(IndicativeUpdate{0, c.price, c.matched_volume, c.imbalance}, out);
  });
}

alab_status alab_book_demand_supply(const alab_book* book, int64_t price, int64_t* demand, int64_t* supply) {
  if (!book || !demand || !supply) return fail(ALAB_E_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const auto [b, s] = book->book.demand_supply_at(price);
    *demand = b;
    *supply = s;
  });
}

alab_status alab_book_finalize(alab_book* book, int* crossed, int64_t* final_price, int64_t* total_matched,
                               size_t* fill_count) {
  if (!book) return fail(ALAB_E_INVALID_ARGUMENT, "null book");
  return guarded([&] {
    AuctionResult r = book->book.finalize();
    if (crossed) *crossed = r.crossed() ? 1 : 0;
    if (final_price) *final_price = r.final_price.value_or(0);
    if (total_matched) *total_matched = r.total_matched;
    if (fill_count) *fill_count = r.fills.size();
    book->fills = std::move(r.fills);
  });
}

alab_status alab_book_fills(const alab_book* book, alab_fill* fills, size_t capacity, size_t* written) {
  if (!book || (!fills && capacity > 0)) return fail(ALAB_E_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const size_t n = std::min(capacity, book->fills.size());
    for (size_t i = 0; i < n; ++i) {
      const Fill& f = book->fills[i];
      fills[i] = alab_fill{f.id, f.side == Side::buy ? ALAB_BUY : ALAB_SELL, f.filled};
    }
    if (written) *written = n;
  });
}

alab_status alab_run(const char* config_json, char** report) {
  if (report) *report = nullptr;
  if (!config_json) return fail(ALAB_E_INVALID_ARGUMENT, "null configuration");
  return guarded([&] {
    const app::RunConfig config = app::parse_config(config_json);
    const app::CommandReport r = app::run_command(config);
    if (report) *report = dup_string(app::report_to_json(r));
  });
}

alab_status alab_config_resolve(const char* overlay_json, char** resolved) {
  if (!resolved) return fail(ALAB_E_INVALID_ARGUMENT, "null output");
  *resolved = nullptr;
  return guarded([&] {
    const app::RunConfig config = overlay_json ? app::parse_config(overlay_json) : app::default_config();
    *resolved = dup_string(app::config_to_json(config));
  });
}

void alab_free_string(char* s) { std::free(s); }

int alab_exit_code(alab_status status) {
  if (status == ALAB_OK) return 0;
  if (status == ALAB_E_INTERNAL) return 2;
  return 1;
}

}  // extern "C"
