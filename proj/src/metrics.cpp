#include "auctionlab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <tuple>

#include "auctionlab/ingest.hpp"

namespace auctionlab::metrics {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

template <typename T>
int sgn(T v) {
  return (v > T{0}) - (v < T{0});
}

std::int64_t forward_slice(TimeMs t, TimeMs slice_ms) {
  return ingest::slice_index(t, 0, ingest::SliceDirection::forward, slice_ms);
}

double mean_of(std::span<const double> v) {
  return v.empty() ? kNaN : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

void require_slice(TimeMs slice_ms) {
  if (slice_ms <= 0) throw Error(Errc::invalid_argument, "slice width must be positive");
}

// Evaluates per-day values at the marks (k+1)*slice for k < max slices and
// aggregates mean and median across days.
template <typename DayFn>
std::vector<CurvePoint> curve_over_days(std::span<const DayAuctionSeries> days, TimeMs slice_ms, DayFn value_at) {
  require_slice(slice_ms);
  std::int64_t slices = 0;
  for (const auto& d : days) {
    if (d.updates.empty()) continue;
    const TimeMs end = std::max(d.auction_time_ms, d.updates.back().time_ms + 1);
    slices = std::max(slices, (end + slice_ms - 1) / slice_ms);
  }
  std::vector<std::vector<double>> per_slice(static_cast<std::size_t>(slices));
  for (const auto& d : days) {
    if (d.updates.empty()) continue;
    std::size_t idx = 0;  // updates at or before the current mark
    for (std::int64_t k = 0; k < slices; ++k) {
      const TimeMs mark = (k + 1) * slice_ms;
      while (idx < d.updates.size() && d.updates[idx].time_ms <= mark) ++idx;
      per_slice[static_cast<std::size_t>(k)].push_back(value_at(d, idx));
    }
  }
  std::vector<CurvePoint> out;
  for (std::int64_t k = 0; k < slices; ++k) {
    auto& v = per_slice[static_cast<std::size_t>(k)];
    CurvePoint p;
    p.slice = k;
    p.minutes = static_cast<double>((k + 1) * slice_ms) / static_cast<double>(kMinute);
    p.mean = mean_of(v);
    p.median = stats::median(v);
    p.days = v.size();
    out.push_back(p);
  }
  return out;
}

}  // namespace

const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::new_buy: return "new_buy";
    case EventKind::new_sell: return "new_sell";
    case EventKind::cancel: return "cancel";
    case EventKind::indeterminate: return "indeterminate";
  }
  return "?";
}

const char* to_string(CurveShape s) {
  switch (s) {
    case CurveShape::linear: return "linear";
    case CurveShape::convex_quadratic: return "convex_quadratic";
    case CurveShape::concave_quadratic: return "concave_quadratic";
    case CurveShape::undecidable: return "undecidable";
  }
  return "?";
}

const char* to_string(ResponseSide s) { return s == ResponseSide::new_order ? "new_order" : "cancellation"; }

const char* to_string(Condition c) {
  switch (c) {
    case Condition::unconditional: return "unconditional";
    case Condition::improving: return "improving";
    case Condition::worsening: return "worsening";
  }
  return "?";
}

EventClass classify_event(const IndicativeUpdate& prev, const IndicativeUpdate& next) {
  const Shares dw = next.matched_volume - prev.matched_volume;
  const Shares di = next.imbalance - prev.imbalance;
  EventClass c;
  if (dw > 0 && di > 0) {
    c.kind = EventKind::new_buy;
    c.sign = 1;
  } else if (dw > 0 && di < 0) {
    c.kind = EventKind::new_sell;
    c.sign = -1;
  } else if (dw < 0) {
    c.kind = EventKind::cancel;
    c.sign = -sgn(di);
  }
  const int s = sgn(prev.imbalance) * sgn(di);
  c.improves_imbalance = s < 0 ? Tri::yes : (s > 0 ? Tri::no : Tri::undefined);
  return c;
}

double volume_ratio(const DailyVolumeRecord& r, AuctionSide side) {
  if (r.v_total <= 0) throw Error(Errc::zero_total, "total volume is zero for " + r.asset + " " + r.date);
  const Shares v = side == AuctionSide::open ? r.v_open : r.v_close;
  return static_cast<double>(v) / static_cast<double>(r.v_total);
}

RatioStats summarize_ratios(std::span<const double> ratios) {
  std::vector<double> logs;
  for (double r : ratios)
    if (r > 0.0) logs.push_back(std::log10(r));
  if (logs.empty()) throw Error(Errc::empty_group, "no positive volume ratio in group");
  RatioStats s;
  s.n = logs.size();
  s.mean_log10 = mean_of(logs);
  s.two_sd_log10 = 2.0 * stats::sample_sd(logs);
  s.typical = std::pow(10.0, s.mean_log10);
  return s;
}

std::vector<RatioSummaryRow> ratio_summary(std::span<const DailyVolumeRecord> records) {
  struct Acc {
    std::vector<double> ratios;
    std::size_t zeros = 0, zero_totals = 0;
  };
  std::map<std::pair<Exchange, AuctionSide>, Acc> groups;
  for (const auto& r : records) {
    for (AuctionSide side : {AuctionSide::open, AuctionSide::close}) {
      Acc& a = groups[{r.exchange, side}];
      if (r.v_total <= 0) {
        ++a.zero_totals;
        continue;
      }
      const double rho = volume_ratio(r, side);
      if (rho > 0.0) {
        a.ratios.push_back(rho);
      } else {
        ++a.zeros;
      }
    }
  }
  std::vector<RatioSummaryRow> out;
  for (const auto& [key, acc] : groups) {
    if (acc.ratios.empty()) continue;
    RatioSummaryRow row;
    row.exchange = key.first;
    row.side = key.second;
    row.stats = summarize_ratios(acc.ratios);
    row.zeros = acc.zeros;
    row.zero_totals = acc.zero_totals;
    out.push_back(row);
  }
  return out;
}

std::vector<MonthlyRow> monthly_median_ratio(std::span<const DailyVolumeRecord> records, std::size_t min_assets) {
  struct Acc {
    std::vector<double> ratios;
    std::set<std::string> assets;
  };
  std::map<std::tuple<Exchange, AuctionSide, std::string>, Acc> groups;
  for (const auto& r : records) {
    if (r.v_total <= 0) continue;
    const std::string month = r.date.substr(0, 7);
    for (AuctionSide side : {AuctionSide::open, AuctionSide::close}) {
      Acc& a = groups[{r.exchange, side, month}];
      a.ratios.push_back(volume_ratio(r, side));
      a.assets.insert(r.asset);
    }
  }
  std::vector<MonthlyRow> out;
  for (auto& [key, acc] : groups) {
    if (acc.assets.size() < min_assets) continue;
    MonthlyRow row;
    std::tie(row.exchange, row.side, row.month) = key;
    row.assets = acc.assets.size();
    row.median_ratio = stats::median(std::move(acc.ratios));
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<CurvePoint> activity_curve(std::span<const DayAuctionSeries> days, TimeMs slice_ms) {
  return curve_over_days(days, slice_ms, [](const DayAuctionSeries& d, std::size_t seen) {
    return static_cast<double>(seen) / static_cast<double>(d.updates.size());
  });
}

std::vector<CurvePoint> matched_fraction_curve(std::span<const DayAuctionSeries> days, TimeMs slice_ms) {
  for (const auto& d : days) {
    if (!d.final_volume || *d.final_volume <= 0) {
      throw Error(Errc::missing_final_volume, "no positive final volume for " + d.asset + " " + d.date);
    }
  }
  return curve_over_days(days, slice_ms, [](const DayAuctionSeries& d, std::size_t seen) {
    const Shares w = seen == 0 ? 0 : d.updates[seen - 1].matched_volume;
    return static_cast<double>(w) / static_cast<double>(*d.final_volume);
  });
}

ShapeResult curve_shape(std::span<const double> xs, std::span<const double> ys, double level) {
  if (xs.size() < 10) throw Error(Errc::too_few_points, "curve shape needs at least 10 points");
  const auto lin = stats::fit_polynomial(xs, ys, 1);
  const auto quad = stats::fit_polynomial(xs, ys, 2);
  ShapeResult r;
  r.vuong = stats::vuong_test(quad.pointwise_loglik, lin.pointwise_loglik, 4, 3, stats::VuongCorrection::aic);
  r.vuong.nested = true;
  r.curvature = quad.coefficients[2];
  r.aic_linear = lin.aic;
  r.aic_quadratic = quad.aic;
  if (r.vuong.p_value_one_sided < level && r.curvature != 0.0) {
    r.shape = r.curvature > 0.0 ? CurveShape::convex_quadratic : CurveShape::concave_quadratic;
  } else if (r.vuong.p_value_one_sided > 1.0 - level) {
    r.shape = CurveShape::linear;
  } else {
    r.shape = CurveShape::undecidable;
  }
  return r;
}

HalfVolumeResult half_volume_time(std::span<const DayAuctionSeries> days) {
  HalfVolumeResult r;
  std::vector<double> times;
  for (const auto& d : days) {
    if (!d.final_volume || *d.final_volume <= 0) {
      ++r.no_final_volume;
      continue;
    }
    auto it = std::find_if(d.updates.begin(), d.updates.end(),
                           [&](const IndicativeUpdate& u) { return 2 * u.matched_volume >= *d.final_volume; });
    if (it == d.updates.end()) {
      ++r.never_reached;
      continue;
    }
    times.push_back(static_cast<double>(it->time_ms) / static_cast<double>(kMinute));
  }
  r.days_used = times.size();
  r.median_minutes = stats::median(std::move(times));
  return r;
}

std::vector<std::pair<std::int64_t, double>> hurst_day(const DayAuctionSeries& day, std::size_t min_updates,
                                                      TimeMs slice_ms) {
  require_slice(slice_ms);
  if (!day.final_price) throw Error(Errc::invalid_argument, "no final price");
  std::vector<TimeMs> t;
  std::vector<double> lp;
  for (const auto& u : day.updates) {
    if (!u.price) continue;
    t.push_back(u.time_ms);
    lp.push_back(std::log(static_cast<double>(*u.price)));
  }
  if (lp.size() < std::max<std::size_t>(min_updates, 3)) throw Error(Errc::too_few_points, "too few price updates");
  std::vector<double> returns;
  for (std::size_t i = 1; i < lp.size(); ++i) returns.push_back(lp[i] - lp[i - 1]);
  const double sd = stats::sample_sd(returns);
  const double var = sd * sd;
  if (!(var > 0.0)) throw Error(Errc::zero_variance, "indicative price is constant");
  const double lx = std::log(static_cast<double>(*day.final_price));
  std::map<std::int64_t, std::vector<double>> by_tau;
  for (std::size_t i = 0; i < lp.size(); ++i) {
    const double dev = lx - lp[i];
    by_tau[ingest::slice_index(t[i], day.auction_time_ms, ingest::SliceDirection::backward, slice_ms)].push_back(
        dev * dev / var);
  }
  std::vector<std::pair<std::int64_t, double>> out;
  for (auto& [tau, v] : by_tau) out.emplace_back(tau, stats::median(std::move(v)));
  return out;
}

HurstCurve hurst_dispersion(std::span<const DayAuctionSeries> days, std::size_t min_updates, TimeMs slice_ms) {
  HurstCurve curve;
  std::map<std::int64_t, std::vector<double>> by_tau;
  for (const auto& d : days) {
    try {
      for (const auto& [tau, m] : hurst_day(d, min_updates, slice_ms)) by_tau[tau].push_back(m);
      ++curve.days_used;
    } catch (const Error& e) {
      switch (e.code()) {
        case Errc::too_few_points: ++curve.skipped_few_updates; break;
        case Errc::zero_variance: ++curve.skipped_zero_variance; break;
        case Errc::invalid_argument: ++curve.skipped_no_final; break;
        default: throw;
      }
    }
  }
  for (auto& [tau, v] : by_tau) {
    const std::size_t n = v.size();
    curve.slices.push_back({tau, stats::median(std::move(v)), n});
  }
  return curve;
}

HurstResult hurst_fit(const HurstCurve& curve, double p_threshold) {
  std::vector<double> taus, values;
  HurstResult r;
  for (const auto& s : curve.slices) {
    if (s.tau < 0) continue;
    if (!(s.median_d > 0.0)) {
      ++r.zero_slices;
      continue;
    }
    taus.push_back(static_cast<double>(s.tau) + 0.5);
    values.push_back(s.median_d);
  }
  r.fit = stats::fit_loglog_slope(taus, values);
  r.sub_diffusive = r.fit.H < 0.5 && r.fit.p_value < p_threshold;
  return r;
}

ReductionResult imbalance_reduction_prob(std::span<const DayAuctionSeries> days, TimeMs slice_ms,
                                         bool literal_index) {
  require_slice(slice_ms);
  ReductionResult r;
  std::map<std::int64_t, std::pair<std::size_t, std::size_t>> slices;  // improving, total
  for (const auto& d : days) {
    const auto& u = d.updates;
    std::size_t day_hits = 0, day_total = 0;
    for (std::size_t i = literal_index ? 1 : 0; i + 1 < u.size(); ++i) {
      int s;
      if (literal_index) {
        s = sgn(u[i + 1].imbalance) * sgn(u[i].imbalance - u[i - 1].imbalance);
      } else {
        s = sgn(u[i].imbalance) * sgn(u[i + 1].imbalance - u[i].imbalance);
      }
      if (s == 0) continue;
      auto& acc = slices[forward_slice(u[i + 1].time_ms, slice_ms)];
      ++acc.second;
      ++day_total;
      if (s < 0) {
        ++acc.first;
        ++day_hits;
      }
    }
    r.improving += day_hits;
    r.total += day_total;
    if (day_total >= kMinSupport) {
      r.daily.push_back(static_cast<double>(day_hits) / static_cast<double>(day_total));
    } else {
      ++r.low_support_days;
    }
  }
  for (const auto& [k, acc] : slices) {
    ReductionSlice s;
    s.slice = k;
    s.improving = acc.first;
    s.total = acc.second;
    s.probability = static_cast<double>(acc.first) / static_cast<double>(acc.second);
    s.low_support = acc.second < kMinSupport;
    r.slices.push_back(s);
  }
  r.overall = mean_of(r.daily);
  return r;
}

const ResponseCurve& ResponseResult::get(ResponseSide s, Condition c) const {
  for (const auto& curve : curves)
    if (curve.side == s && curve.condition == c) return curve;
  throw Error(Errc::internal, "response curve missing");
}

ResponseResult response_curves(std::span<const DayAuctionSeries> days, TimeMs slice_ms) {
  require_slice(slice_ms);
  using Key = std::tuple<ResponseSide, Condition, std::int64_t>;
  std::map<Key, std::vector<double>> samples;
  ResponseResult r;
  for (const auto& d : days) {
    if (!d.final_price) {
      ++r.skipped_no_final;
      continue;
    }
    const double lx = std::log(static_cast<double>(*d.final_price));
    const auto& u = d.updates;
    for (std::size_t i = 0; i + 1 < u.size(); ++i) {
      if (!u[i].price) continue;
      const Shares dw = u[i + 1].matched_volume - u[i].matched_volume;
      const Shares di = u[i + 1].imbalance - u[i].imbalance;
      const EventClass c = classify_event(u[i], u[i + 1]);
      ResponseSide side;
      if (dw > 0 && di != 0) {
        side = ResponseSide::new_order;
      } else if (dw < 0 && c.sign != 0) {
        side = ResponseSide::cancellation;
      } else {
        continue;
      }
      const double value = c.sign * (lx - std::log(static_cast<double>(*u[i].price)));
      const std::int64_t k = forward_slice(u[i].time_ms, slice_ms);
      samples[{side, Condition::unconditional, k}].push_back(value);
      if (c.improves_imbalance == Tri::yes) samples[{side, Condition::improving, k}].push_back(value);
      if (c.improves_imbalance == Tri::no) samples[{side, Condition::worsening, k}].push_back(value);
    }
  }
  for (ResponseSide side : {ResponseSide::new_order, ResponseSide::cancellation}) {
    for (Condition cond : {Condition::unconditional, Condition::improving, Condition::worsening}) {
      ResponseCurve curve;
      curve.side = side;
      curve.condition = cond;
      for (auto it = samples.lower_bound({side, cond, std::numeric_limits<std::int64_t>::min()});
           it != samples.end() && std::get<0>(it->first) == side && std::get<1>(it->first) == cond; ++it) {
        ResponseBin b;
        b.slice = std::get<2>(it->first);
        b.count = it->second.size();
        b.dispersion = 2.0 * stats::sample_sd(it->second);
        b.median = stats::median(it->second);
        b.low_support = b.count < kMinSupport;
        curve.bins.push_back(b);
      }
      r.curves.push_back(std::move(curve));
    }
  }
  return r;
}

void require_quotes(const DayAuctionSeries& day) {
  if (day.quotes.empty() || day.quote_of.size() != day.updates.size()) {
    throw Error(Errc::no_quotes, "no aligned quotes for " + day.asset + " " + day.date);
  }
}

SpreadResult spread_metrics(std::span<const DayAuctionSeries> days, TimeMs slice_ms) {
  require_slice(slice_ms);
  SpreadResult r;
  std::map<std::int64_t, SpreadSlice> slices;
  std::map<std::int64_t, std::vector<double>> ds_outside, spread_bps;
  std::vector<double> ds_all, spread_all;
  auto both = [&](std::int64_t k, auto&& fn) {
    fn(slices[k]);
    fn(r.overall);
  };

  for (const auto& d : days) {
    try {
      require_quotes(d);
    } catch (const Error&) {
      ++r.skipped_no_quotes;
      continue;
    }
    const auto& u = d.updates;
    for (std::size_t i = 0; i < u.size(); ++i) {
      if (!u[i].price || d.quote_of[i] < 0) continue;
      const QuoteSnapshot& q = d.quotes[static_cast<std::size_t>(d.quote_of[i])];
      const Tick p = *u[i].price;
      const Tick dev2 = 2 * p - (q.ask + q.bid);  // 2 (pi - m)
      const bool inside = q.bid <= p && p <= q.ask;
      const std::int64_t k = forward_slice(u[i].time_ms, slice_ms);

      both(k, [&](SpreadSlice& s) {
        ++s.updates;
        if (inside) {
          ++s.inside;
        } else if (p > q.ask) {
          ++s.above;
        } else {
          ++s.below;
        }
      });
      const double bps = 2e4 * static_cast<double>(q.ask - q.bid) / static_cast<double>(q.ask + q.bid);
      spread_bps[k].push_back(bps);
      spread_all.push_back(bps);
      r.delta_m.push_back(std::abs(static_cast<double>(dev2)) / static_cast<double>(q.ask + q.bid));
      if (!inside) {
        const double ds = std::abs(static_cast<double>(dev2)) / (2.0 * static_cast<double>(q.ask - q.bid));
        ds_outside[k].push_back(ds);
        ds_all.push_back(ds);
      }

      // |pi - m| against |pi - m_w|, both scaled by 2 (v_a + v_b)
      const __int128 v = static_cast<__int128>(q.ask_size) + q.bid_size;
      const __int128 to_mid = static_cast<__int128>(dev2 < 0 ? -dev2 : dev2) * v;
      __int128 to_weighted = 2 * (static_cast<__int128>(p) * v - static_cast<__int128>(q.ask_size) * q.ask -
                                  static_cast<__int128>(q.bid_size) * q.bid);
      if (to_weighted < 0) to_weighted = -to_weighted;
      both(k, [&](SpreadSlice& s) {
        if (to_mid > to_weighted) {
          ++s.closer_weighted;
        } else if (to_mid < to_weighted) {
          ++s.closer_mid;
        } else {
          ++s.ties;
        }
      });

      if (i + 1 >= u.size() || !u[i + 1].price) continue;
      const Tick p1 = *u[i + 1].price;
      if (dev2 != 0 && p1 != p) {
        const bool hit = sgn(p1 - p) * sgn(dev2) < 0;
        both(k, [&](SpreadSlice& s) {
          ++s.reversion_total;
          if (hit) ++s.reversion_hits;
          if (inside) {
            ++s.reversion_in_total;
            if (hit) ++s.reversion_in_hits;
          } else {
            ++s.reversion_out_total;
            if (hit) ++s.reversion_out_hits;
          }
        });
      }
      if (!inside && d.quote_of[i + 1] >= 0) {
        const QuoteSnapshot& q1 = d.quotes[static_cast<std::size_t>(d.quote_of[i + 1])];
        const Tick dev2_next = 2 * p1 - (q1.ask + q1.bid);
        const bool hit = sgn(dev2_next) * sgn(dev2) < 0;
        both(k, [&](SpreadSlice& s) {
          ++s.overshoot_total;
          if (hit) ++s.overshoot_hits;
        });
      }
    }
  }
  for (auto& [k, s] : slices) {
    s.slice = k;
    auto& v = ds_outside[k];
    s.ds_outside_n = v.size();
    s.ds_outside_mean = mean_of(v);
    s.ds_outside_median = stats::median(v);
    s.median_spread_bps = stats::median(std::move(spread_bps[k]));
    r.slices.push_back(s);
  }
  r.overall.slice = -1;
  r.overall.ds_outside_n = ds_all.size();
  r.overall.ds_outside_mean = mean_of(ds_all);
  r.overall.ds_outside_median = stats::median(std::move(ds_all));
  r.overall.median_spread_bps = stats::median(std::move(spread_all));
  return r;
}

std::vector<std::pair<double, double>> survival_points(std::vector<double> values, std::size_t max_points) {
  std::vector<std::pair<double, double>> out;
  if (values.empty() || max_points == 0) return out;
  std::sort(values.begin(), values.end());
  const auto n = static_cast<double>(values.size());
  auto emit = [&](double x) {
    const auto above = values.end() - std::upper_bound(values.begin(), values.end(), x);
    if (out.empty() || out.back().first != x) out.emplace_back(x, static_cast<double>(above) / n);
  };
  if (values.size() <= max_points) {
    for (double x : values) emit(x);
  } else {
    for (std::size_t k = 0; k < max_points; ++k) {
      const std::size_t idx = k * (values.size() - 1) / (max_points - 1);
      emit(values[idx]);
    }
  }
  return out;
}

TailReport tail_analysis(std::span<const double> values) {
  TailReport r;
  r.xmin = stats::select_xmin(values);
  r.powerlaw = stats::fit_tail(values, stats::TailFamily::powerlaw, r.xmin);
  r.n = r.powerlaw.n_tail;
  for (auto family : {stats::TailFamily::lognormal, stats::TailFamily::exponential,
                      stats::TailFamily::truncated_powerlaw}) {
    try {
      TailComparison c;
      c.fit = stats::fit_tail(values, family, r.xmin);
      c.vuong = stats::vuong_test(r.powerlaw, c.fit);
      r.alternatives.push_back(std::move(c));
    } catch (const Error& e) {
      if (e.code() != Errc::non_convergence && e.code() != Errc::zero_variance) throw;
    }
  }
  return r;
}

}  // namespace auctionlab::metrics
