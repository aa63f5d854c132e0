#ifndef AUCTIONLAB_AUCTIONLAB_H
#define AUCTIONLAB_AUCTIONLAB_H

#include <stddef.h>
#include <stdint.h>

#if defined(AUCTIONLAB_BUILDING_LIBRARY)
#define ALAB_API __attribute__((visibility("default")))
#else
#define ALAB_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes. ALAB_OK is zero; every other code describes one failure. */
typedef enum alab_status {
  ALAB_OK = 0,
  ALAB_E_INVALID_ARGUMENT,
  ALAB_E_INVALID_ORDER,
  ALAB_E_AUCTION_CLOSED,
  ALAB_E_IMBALANCE_WORSENING,
  ALAB_E_DUPLICATE_ID,
  ALAB_E_UNKNOWN_ID,
  ALAB_E_BACKWARD_TRANSITION,
  ALAB_E_INVALID_PARAMS,
  ALAB_E_SCHEMA,
  ALAB_E_NON_MONOTONE_TIME,
  ALAB_E_IO,
  ALAB_E_TOO_FEW_POINTS,
  ALAB_E_NON_CONVERGENCE,
  ALAB_E_MISMATCHED_SUPPORT,
  ALAB_E_SINGULAR_DESIGN,
  ALAB_E_NON_POSITIVE_VALUE,
  ALAB_E_ZERO_TOTAL,
  ALAB_E_EMPTY_GROUP,
  ALAB_E_MISSING_FINAL_VOLUME,
  ALAB_E_NO_QUOTES,
  ALAB_E_ZERO_VARIANCE,
  ALAB_E_INTERNAL
} alab_status;

typedef enum alab_side { ALAB_BUY = 0, ALAB_SELL = 1 } alab_side;
typedef enum alab_kind { ALAB_LIMIT = 0, ALAB_MARKET = 1 } alab_kind;
typedef enum alab_phase { ALAB_PHASE_OPEN = 0, ALAB_PHASE_RESTRICTED = 1, ALAB_PHASE_CLOSED = 2 } alab_phase;

/* Indicative state after an event. Prices in ticks, volumes in shares. */
typedef struct alab_update {
  int64_t time_ms;
  int has_price; /* 0 when the book does not cross */
  int64_t price;
  int64_t matched_volume;
  int64_t imbalance; /* buy-positive */
} alab_update;

typedef struct alab_fill {
  uint64_t id;
  alab_side side;
  int64_t filled;
} alab_fill;

typedef struct alab_book alab_book;

ALAB_API const char* alab_version(void);
ALAB_API const char* alab_status_name(alab_status status);
/* Message of the last failure on the calling thread ("" if none). */
ALAB_API const char* alab_last_error(void);

ALAB_API alab_status alab_book_create(int64_t reference_price, alab_book** out);
ALAB_API void alab_book_destroy(alab_book* book);

/* price is ignored for market orders. `out` may be NULL. */
ALAB_API alab_status alab_book_submit(alab_book* book, uint64_t id, alab_side side, alab_kind kind, int64_t price,
                                      int64_t size, int64_t time_ms, alab_update* out);
ALAB_API alab_status alab_book_cancel(alab_book* book, uint64_t id, int64_t time_ms, alab_update* out);
ALAB_API alab_status alab_book_set_phase(alab_book* book, alab_phase phase, int64_t time_ms);
/* Current clearing state; time_ms of `out` is set to 0. */
ALAB_API alab_status alab_book_clearing(const alab_book* book, alab_update* out);
ALAB_API alab_status alab_book_demand_supply(const alab_book* book, int64_t price, int64_t* demand, int64_t* supply);

/* Closes the book and allocates fills. The result stays readable through
   alab_book_fills until the book is destroyed. */
ALAB_API alab_status alab_book_finalize(alab_book* book, int* crossed, int64_t* final_price, int64_t* total_matched,
                                        size_t* fill_count);
/* Copies up to `capacity` fills of the last finalize; *written gets the count. */
ALAB_API alab_status alab_book_fills(const alab_book* book, alab_fill* fills, size_t capacity, size_t* written);

/* Runs simulate, analyze or replay as described by a JSON configuration
   (the "command" key selects which). On return *report receives a JSON
   summary (files, rows, warnings) to be released with alab_free_string;
   it is NULL on failure. */
ALAB_API alab_status alab_run(const char* config_json, char** report);
/* Returns the default configuration overlaid with `overlay_json` (may be
   NULL) as canonical JSON. Release with alab_free_string. */
ALAB_API alab_status alab_config_resolve(const char* overlay_json, char** resolved);
ALAB_API void alab_free_string(char* s);

/* Process exit code for a status: 0 success, 1 input error, 2 internal. */
ALAB_API int alab_exit_code(alab_status status);

#ifdef __cplusplus
}
#endif

#endif
