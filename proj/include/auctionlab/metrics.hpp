#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "auctionlab/series.hpp"
#include "auctionlab/stats_fit.hpp"

namespace auctionlab::metrics {

inline constexpr TimeMs kMinute = 60'000;
/// Slices and days with fewer qualifying events are reported but flagged.
inline constexpr std::size_t kMinSupport = 10;

// ---------------------------------------------------------------- events

enum class EventKind : std::uint8_t { new_buy, new_sell, cancel, indeterminate };
enum class Tri : std::uint8_t { no, yes, undefined };

const char* to_string(EventKind k);

struct EventClass {
  EventKind kind = EventKind::indeterminate;
  int sign = 0;  // epsilon: +1 buy-side event, -1 sell-side event
  Tri improves_imbalance = Tri::undefined;

  bool operator==(const EventClass&) const = default;
};

/// Classifies the event revealed between two consecutive updates from the
/// changes in matched volume and imbalance.
EventClass classify_event(const IndicativeUpdate& prev, const IndicativeUpdate& next);

// ---------------------------------------------------------------- volumes

/// V^side / V_total. Throws zero_total.
double volume_ratio(const DailyVolumeRecord& r, AuctionSide side);

struct RatioStats {
  std::size_t n = 0;  // positive ratios used
  double mean_log10 = 0.0;
  double two_sd_log10 = 0.0;  // 2 x sample sd, 0 for one record
  double typical = 0.0;       // 10^mean_log10
};

/// Throws empty_group when no ratio is positive.
RatioStats summarize_ratios(std::span<const double> ratios);

struct RatioSummaryRow {
  Exchange exchange = Exchange::nyse;
  AuctionSide side = AuctionSide::close;
  RatioStats stats;
  std::size_t zeros = 0;        // records with a zero auction volume
  std::size_t zero_totals = 0;  // records with no volume at all
};

/// One row per (exchange, side) having at least one positive ratio,
/// ordered by exchange then side.
std::vector<RatioSummaryRow> ratio_summary(std::span<const DailyVolumeRecord> records);

struct MonthlyRow {
  Exchange exchange = Exchange::nyse;
  AuctionSide side = AuctionSide::close;
  std::string month;  // yyyy-mm
  std::size_t assets = 0;
  double median_ratio = 0.0;
};

/// Median ratio per (exchange, side, month); months with fewer than
/// `min_assets` distinct assets are dropped.
std::vector<MonthlyRow> monthly_median_ratio(std::span<const DailyVolumeRecord> records, std::size_t min_assets = 100);

// ---------------------------------------------------------------- curves

/// Value at the end of forward slice `slice` (time mark (slice+1) widths).
struct CurvePoint {
  std::int64_t slice = 0;
  double minutes = 0.0;  // mark in minutes since session start
  double mean = 0.0;
  double median = 0.0;
  std::size_t days = 0;
};

/// Mean over days of the fraction of a day's updates at or before each mark.
/// Series without updates are ignored.
std::vector<CurvePoint> activity_curve(std::span<const DayAuctionSeries> days, TimeMs slice_ms = kMinute);

/// W(t)/V^x at each mark using the last update at or before it (0 before the
/// first). Throws missing_final_volume if a series lacks a positive V^x.
std::vector<CurvePoint> matched_fraction_curve(std::span<const DayAuctionSeries> days, TimeMs slice_ms = kMinute);

enum class CurveShape : std::uint8_t { linear, convex_quadratic, concave_quadratic, undecidable };
const char* to_string(CurveShape s);

struct ShapeResult {
  CurveShape shape = CurveShape::undecidable;
  stats::VuongResult vuong;  // quadratic (first) against linear
  double curvature = 0.0;    // quadratic coefficient
  double aic_linear = 0.0;
  double aic_quadratic = 0.0;
};

/// Degree 2 against degree 1 through the AIC-corrected Vuong test at
/// `level`. Throws too_few_points (< 10 points) and stats_fit errors.
ShapeResult curve_shape(std::span<const double> xs, std::span<const double> ys, double level = 0.05);

struct HalfVolumeResult {
  double median_minutes = 0.0;  // NaN when no day qualifies
  std::size_t days_used = 0;
  std::size_t never_reached = 0;
  std::size_t no_final_volume = 0;
};

HalfVolumeResult half_volume_time(std::span<const DayAuctionSeries> days);

// ---------------------------------------------------------------- Hurst

struct HurstSlice {
  std::int64_t tau = 0;     // backward slice index
  double median_d = 0.0;    // median over days of the within-day medians
  std::size_t days = 0;
};

struct HurstCurve {
  std::vector<HurstSlice> slices;  // ascending tau
  std::size_t days_used = 0;
  std::size_t skipped_few_updates = 0;
  std::size_t skipped_zero_variance = 0;
  std::size_t skipped_no_final = 0;
};

/// Within-day medians of D = log(p^x/pi)^2 / var(log returns) per backward
/// slice. Throws too_few_points, zero_variance, invalid_argument (no p^x).
std::vector<std::pair<std::int64_t, double>> hurst_day(const DayAuctionSeries& day, std::size_t min_updates = 50,
                                                      TimeMs slice_ms = kMinute);

HurstCurve hurst_dispersion(std::span<const DayAuctionSeries> days, std::size_t min_updates = 50,
                            TimeMs slice_ms = kMinute);

struct HurstResult {
  stats::SlopeFit fit;
  bool sub_diffusive = false;
  std::size_t zero_slices = 0;  // slices with median D = 0, left out of the fit
};

/// Log-log fit of median D against the slice midpoint (tau + 1/2) in slice
/// units. Sub-diffusive iff H < 0.5 and p < `p_threshold`.
HurstResult hurst_fit(const HurstCurve& curve, double p_threshold = 1e-3);

// ---------------------------------------------------------------- imbalance

struct ReductionSlice {
  std::int64_t slice = 0;
  std::size_t improving = 0;
  std::size_t total = 0;
  double probability = 0.0;
  bool low_support = false;
};

struct ReductionResult {
  std::vector<ReductionSlice> slices;
  /// Mean over supported days of the daily probability; NaN without any.
  double overall = 0.0;
  std::vector<double> daily;  // supported days only
  std::size_t low_support_days = 0;
  std::size_t improving = 0;
  std::size_t total = 0;
};

/// P[sign(I_t) sign(dI_{t+1}) = -1] per forward slice of t_{t+1}. With
/// `literal_index`, uses sign(I_{t+1}) sign(dI_t) instead.
ReductionResult imbalance_reduction_prob(std::span<const DayAuctionSeries> days, TimeMs slice_ms = kMinute,
                                         bool literal_index = false);

// ---------------------------------------------------------------- response

enum class ResponseSide : std::uint8_t { new_order, cancellation };
enum class Condition : std::uint8_t { unconditional, improving, worsening };
const char* to_string(ResponseSide s);
const char* to_string(Condition c);

struct ResponseBin {
  std::int64_t slice = 0;
  double median = 0.0;
  double dispersion = 0.0;  // 2 x sample sd
  std::size_t count = 0;
  bool low_support = false;
};

struct ResponseCurve {
  ResponseSide side = ResponseSide::new_order;
  Condition condition = Condition::unconditional;
  std::vector<ResponseBin> bins;
};

struct ResponseResult {
  std::vector<ResponseCurve> curves;  // side-major, condition-minor
  std::size_t skipped_no_final = 0;
  const ResponseCurve& get(ResponseSide s, Condition c) const;
};

/// eps * (log p^x - log pi(t_i)) binned by the forward slice of t_i.
ResponseResult response_curves(std::span<const DayAuctionSeries> days, TimeMs slice_ms = kMinute);

// ---------------------------------------------------------------- spread

struct SpreadSlice {
  std::int64_t slice = 0;
  std::size_t updates = 0;  // priced updates with a quote
  std::size_t inside = 0, above = 0, below = 0;
  std::size_t reversion_hits = 0, reversion_total = 0;
  std::size_t reversion_in_hits = 0, reversion_in_total = 0;    // pi inside the spread
  std::size_t reversion_out_hits = 0, reversion_out_total = 0;  // pi outside the spread
  std::size_t overshoot_hits = 0, overshoot_total = 0;
  std::size_t closer_weighted = 0, closer_mid = 0, ties = 0;
  double ds_outside_mean = 0.0, ds_outside_median = 0.0;
  std::size_t ds_outside_n = 0;
  double median_spread_bps = 0.0;  // (a - b) / m over counted updates
};

struct SpreadResult {
  std::vector<SpreadSlice> slices;
  SpreadSlice overall;  // slice = -1
  std::vector<double> delta_m;  // |pi - m| / m for every counted update
  std::size_t skipped_no_quotes = 0;
};

/// Quote-relative statistics of the indicative price. Series must be
/// aligned (align_quotes); unaligned or quote-less series are skipped.
SpreadResult spread_metrics(std::span<const DayAuctionSeries> days, TimeMs slice_ms = kMinute);

/// Throws no_quotes when the series carries no aligned quotes.
void require_quotes(const DayAuctionSeries& day);

/// Empirical P[X > x] at up to `max_points` sample quantiles.
std::vector<std::pair<double, double>> survival_points(std::vector<double> values, std::size_t max_points = 200);

// ---------------------------------------------------------------- tails

struct TailComparison {
  stats::TailFit fit;
  stats::VuongResult vuong;  // power law (first) against `fit`
};

struct TailReport {
  double xmin = 0.0;
  std::size_t n = 0;
  stats::TailFit powerlaw;
  std::vector<TailComparison> alternatives;  // lognormal, exponential, truncated power law
};

/// xmin by KS, then power law against the three alternative families.
/// Families that fail to converge are left out of `alternatives`.
TailReport tail_analysis(std::span<const double> values);

}  // namespace auctionlab::metrics
