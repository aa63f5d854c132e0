#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "auctionlab/flow_gen.hpp"
#include "auctionlab/ingest.hpp"
#include "auctionlab/metrics.hpp"

using namespace auctionlab;
using namespace auctionlab::metrics;

namespace {

IndicativeUpdate upd(TimeMs t, std::optional<Tick> p, Shares w, Shares i) { return {t, p, w, i}; }

DayAuctionSeries day_of(std::vector<IndicativeUpdate> u, TimeMs auction_time, std::optional<Tick> px = std::nullopt,
                        std::optional<Shares> vx = std::nullopt) {
  DayAuctionSeries d;
  d.asset = "T";
  d.date = "2020-01-02";
  d.updates = std::move(u);
  d.auction_time_ms = auction_time;
  d.final_price = px;
  d.final_volume = vx;
  return d;
}

// Ground-truth label of each accepted event, obtained while replaying.
struct Labelled {
  std::vector<IndicativeUpdate> updates;
  std::vector<EventKind> kind;  // kind[i] produced updates[i]
  std::vector<int> sign;
};

Labelled replay_labelled(const flow::OrderTape& tape) {
  SessionDriver driver(tape.session);
  Labelled out;
  for (const auto& e : tape.events) {
    Side side = e.order.side;
    if (e.action == TapeAction::cancel) {
      const AuctionOrder* o = driver.book().find(e.order.id);
      if (o) side = o->side;
    }
    auto u = driver.apply(e);
    if (!u) continue;
    out.updates.push_back(*u);
    if (e.action == TapeAction::submit) {
      out.kind.push_back(side == Side::buy ? EventKind::new_buy : EventKind::new_sell);
    } else {
      out.kind.push_back(EventKind::cancel);
    }
    out.sign.push_back(side == Side::buy ? 1 : -1);
  }
  return out;
}

flow::FlowParams single_level_flow(std::uint64_t seed) {
  flow::FlowParams p;
  p.duration_s = 600;
  p.base_rate = 10;
  p.price_dispersion = 0.0;
  p.volatility = 0.0;
  p.anchor_size = 100;
  p.cancel_prob = 0.2;
  p.seed = seed;
  return p;
}

double ou_reversion_probability(std::uint64_t seed) {
  flow::WalkParams w;
  w.kind = flow::WalkParams::Kind::ornstein_uhlenbeck;
  w.updates = 10'000;
  w.duration_s = 3600;
  w.mean_reversion = 1.0 / 60.0;
  w.sigma = 2e-4;
  w.level = 100'000;
  w.half_spread = 5;
  w.seed = seed;
  auto d = flow::gen_indicative_walk(w);
  d = ingest::align_quotes(d, d.quotes);
  return [&] {
    auto r = spread_metrics(std::span<const DayAuctionSeries>(&d, 1));
    return static_cast<double>(r.overall.reversion_hits) / static_cast<double>(r.overall.reversion_total);
  }();
}

}  // namespace

// ---------------------------------------------------------------- classify

TEST(Classify, TableExamples) {
  auto c = classify_event(upd(0, 100, 100, 0), upd(1, 100, 150, 50));
  EXPECT_EQ(c.kind, EventKind::new_buy);
  EXPECT_EQ(c.sign, 1);
  c = classify_event(upd(0, 100, 100, 0), upd(1, 100, 130, -30));
  EXPECT_EQ(c.kind, EventKind::new_sell);
  EXPECT_EQ(c.sign, -1);
  c = classify_event(upd(0, 100, 100, 0), upd(1, 100, 60, 40));
  EXPECT_EQ(c.kind, EventKind::cancel);
  EXPECT_EQ(c.sign, -1);
  c = classify_event(upd(0, 100, 100, 10), upd(1, 100, 100, 20));
  EXPECT_EQ(c.kind, EventKind::indeterminate);
  EXPECT_EQ(c.sign, 0);
  c = classify_event(upd(0, 100, 100, 10), upd(1, 100, 120, 10));
  EXPECT_EQ(c.kind, EventKind::indeterminate);
  c = classify_event(upd(0, 100, 100, 10), upd(1, 100, 80, 10));
  EXPECT_EQ(c.kind, EventKind::cancel);
  EXPECT_EQ(c.sign, 0);
}

TEST(Classify, ImprovementFlag) {
  EXPECT_EQ(classify_event(upd(0, 1, 1, 10), upd(1, 1, 2, 5)).improves_imbalance, Tri::yes);
  EXPECT_EQ(classify_event(upd(0, 1, 1, 10), upd(1, 1, 2, -5)).improves_imbalance, Tri::yes);
  EXPECT_EQ(classify_event(upd(0, 1, 1, 10), upd(1, 1, 2, 15)).improves_imbalance, Tri::no);
  EXPECT_EQ(classify_event(upd(0, 1, 1, 0), upd(1, 1, 2, 15)).improves_imbalance, Tri::undefined);
  EXPECT_EQ(classify_event(upd(0, 1, 1, 5), upd(1, 1, 2, 5)).improves_imbalance, Tri::undefined);
  // kind == new_buy implies +1 and so on
  for (Shares dw : {-5, 0, 5}) {
    for (Shares di : {-5, 0, 5}) {
      auto c = classify_event(upd(0, 1, 10, 0), upd(1, 1, 10 + dw, di));
      if (c.kind == EventKind::new_buy) {
        EXPECT_EQ(c.sign, 1);
      } else if (c.kind == EventKind::new_sell) {
        EXPECT_EQ(c.sign, -1);
      } else if (c.kind == EventKind::indeterminate) {
        EXPECT_EQ(c.sign, 0);
      }
    }
  }
}

TEST(Classify, RemovedSellThroughBook) {
  AuctionBook book(1000);
  book.submit({1, Side::buy, OrderKind::limit, 1000, 100, 0});
  book.submit({2, Side::sell, OrderKind::limit, 1000, 60, 1});
  const auto before = book.submit({3, Side::sell, OrderKind::limit, 1000, 40, 2});
  const auto after = book.cancel(3, 3);
  EXPECT_EQ(after.imbalance - before.imbalance, 40);
  EXPECT_EQ(after.matched_volume - before.matched_volume, -40);
  auto c = classify_event(before, after);
  EXPECT_EQ(c.kind, EventKind::cancel);
  EXPECT_EQ(c.sign, -1);
}

TEST(Classify, SingleLevelFlowRecoveredExactly) {
  std::size_t checked = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto p = single_level_flow(seed);
    p.market_prob = 0.1;
    auto lab = replay_labelled(flow::gen_order_tape(p));
    for (std::size_t i = 1; i < lab.updates.size(); ++i) {
      const auto& a = lab.updates[i - 1];
      const auto& b = lab.updates[i];
      if (b.imbalance == a.imbalance || b.matched_volume == a.matched_volume) continue;
      auto c = classify_event(a, b);
      ASSERT_EQ(c.kind, lab.kind[i]) << "seed " << seed << " transition " << i;
      ASSERT_EQ(c.sign, lab.sign[i]);
      ++checked;
    }
  }
  EXPECT_GT(checked, 50'000u);
}

TEST(Classify, DispersedFlowMismatchesNeedPriceChange) {
  // With several price levels the only misclassifications come from the
  // first cross or from a move of the clearing price.
  std::size_t mismatches = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    flow::FlowParams p;
    p.base_rate = 10;
    p.price_dispersion = 3.0;
    p.volatility = 0.5;
    p.cancel_prob = 0.2;
    p.seed = seed;
    auto lab = replay_labelled(flow::gen_order_tape(p));
    for (std::size_t i = 1; i < lab.updates.size(); ++i) {
      const auto& a = lab.updates[i - 1];
      const auto& b = lab.updates[i];
      if (b.imbalance == a.imbalance || b.matched_volume == a.matched_volume) continue;
      auto c = classify_event(a, b);
      if (c.kind == lab.kind[i] && c.sign == lab.sign[i]) continue;
      ++mismatches;
      EXPECT_TRUE(!a.price || a.price != b.price) << "seed " << seed << " transition " << i;
    }
  }
  EXPECT_GT(mismatches, 0u);
}

// ---------------------------------------------------------------- volumes

TEST(VolumeRatio, Examples) {
  DailyVolumeRecord r{"A", "2020-01-02", Exchange::nyse, 0, 12, 100, 1, 1, 1};
  EXPECT_DOUBLE_EQ(volume_ratio(r, AuctionSide::close), 0.12);
  EXPECT_EQ(volume_ratio(r, AuctionSide::open), 0.0);
  r.v_total = 0;
  r.v_close = 0;
  try {
    volume_ratio(r, AuctionSide::close);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::zero_total);
  }
}

TEST(VolumeRatio, SummaryArithmetic) {
  auto s = summarize_ratios(std::vector<double>{0.1});
  EXPECT_NEAR(s.mean_log10, -1.0, 1e-12);
  EXPECT_EQ(s.two_sd_log10, 0.0);
  EXPECT_NEAR(s.typical, 0.1, 1e-12);
  s = summarize_ratios(std::vector<double>{0.01, 0.1});
  EXPECT_NEAR(s.mean_log10, -1.5, 1e-12);
  EXPECT_NEAR(s.typical, 0.0316227766, 1e-9);
  EXPECT_NEAR(s.two_sd_log10, 2.0 * std::sqrt(0.5 * 0.5 * 2), 1e-12);
  EXPECT_THROW(summarize_ratios(std::vector<double>{0.0}), Error);
}

TEST(VolumeRatio, LognormalPanelRecovered) {
  const double mu = std::log10(0.12), sigma = 0.25;
  const int n = 4000;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z(mu, sigma);
  std::vector<DailyVolumeRecord> recs;
  for (int i = 0; i < n; ++i) {
    const Shares total = 10'000'000;
    const auto vc = static_cast<Shares>(std::llround(std::pow(10.0, z(rng)) * total));
    recs.push_back({"A" + std::to_string(i % 50), "2020-01-02", Exchange::nyse, 0, vc, total, 1, 1, 1});
  }
  auto rows = ratio_summary(recs);
  ASSERT_EQ(rows.size(), 1u);  // the open side is all zeros
  EXPECT_EQ(rows[0].side, AuctionSide::close);
  EXPECT_NEAR(rows[0].stats.mean_log10, mu, 2.0 * sigma / std::sqrt(n));
  EXPECT_NEAR(rows[0].stats.two_sd_log10 / 2.0, sigma, 2.0 * sigma / std::sqrt(2.0 * (n - 1)));
}

TEST(Monthly, ThresholdAndMedian) {
  std::vector<DailyVolumeRecord> recs;
  for (int a = 0; a < 99; ++a) recs.push_back({"A" + std::to_string(a), "2020-01-15", Exchange::arca, 1, 5, 100, 1, 1, 1});
  for (int a = 0; a < 101; ++a) recs.push_back({"A" + std::to_string(a), "2020-02-03", Exchange::arca, 1, 5, 100, 1, 1, 1});
  auto rows = monthly_median_ratio(recs);
  ASSERT_EQ(rows.size(), 2u);  // open and close for February only
  for (const auto& r : rows) {
    EXPECT_EQ(r.month, "2020-02");
    EXPECT_EQ(r.assets, 101u);
  }
  EXPECT_NEAR(rows[1].median_ratio, 0.05, 1e-15);
}

TEST(Monthly, MatchesScanAndSort) {
  std::mt19937_64 rng(9);
  std::vector<DailyVolumeRecord> recs;
  const char* months[] = {"2019-11", "2019-12", "2020-01"};
  for (int m = 0; m < 3; ++m)
    for (int a = 0; a < 30 + 40 * m; ++a)
      for (int d = 1; d <= 3; ++d) {
        const Shares total = 1000 + static_cast<Shares>(rng() % 1000);
        recs.push_back({"S" + std::to_string(a), std::string(months[m]) + "-0" + std::to_string(d),
                        a % 2 ? Exchange::nasdaq : Exchange::nyse, static_cast<Shares>(rng() % 100),
                        static_cast<Shares>(rng() % 200), total, 1, 1, 1});
      }
  auto rows = monthly_median_ratio(recs, 20);
  std::size_t checked = 0;
  for (const auto& row : rows) {
    std::vector<double> v;
    std::set<std::string> assets;
    for (const auto& r : recs) {
      if (r.exchange != row.exchange || r.date.substr(0, 7) != row.month) continue;
      v.push_back(static_cast<double>(row.side == AuctionSide::open ? r.v_open : r.v_close) /
                  static_cast<double>(r.v_total));
      assets.insert(r.asset);
    }
    std::sort(v.begin(), v.end());
    const double med = v.size() % 2 ? v[v.size() / 2] : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
    EXPECT_DOUBLE_EQ(row.median_ratio, med);
    EXPECT_EQ(row.assets, assets.size());
    EXPECT_GE(assets.size(), 20u);
    ++checked;
  }
  // 2019-11 has 15 assets per exchange and is dropped
  EXPECT_EQ(checked, 8u);
}

// ---------------------------------------------------------------- curves

TEST(Activity, AllUpdatesInFinalMinute) {
  auto d = day_of({upd(540'500, 1, 0, 0), upd(550'000, 1, 0, 0), upd(599'000, 1, 0, 0)}, 600'000);
  auto c = activity_curve(std::span<const DayAuctionSeries>(&d, 1));
  ASSERT_EQ(c.size(), 10u);
  for (std::size_t k = 0; k < 9; ++k) EXPECT_EQ(c[k].mean, 0.0);
  EXPECT_EQ(c[9].mean, 1.0);
}

TEST(Activity, SingleUpdateStep) {
  auto d = day_of({upd(150'000, 1, 0, 0)}, 300'000);
  auto c = activity_curve(std::span<const DayAuctionSeries>(&d, 1));
  std::vector<double> expected = {0, 0, 1, 1, 1};
  ASSERT_EQ(c.size(), expected.size());
  for (std::size_t k = 0; k < c.size(); ++k) EXPECT_EQ(c[k].mean, expected[k]);
}

TEST(Activity, UniformUpdatesLinear) {
  flow::WalkParams w;
  w.updates = 10'000;
  w.duration_s = 3600;
  auto d = flow::gen_indicative_walk(w);
  auto c = activity_curve(std::span<const DayAuctionSeries>(&d, 1));
  ASSERT_EQ(c.size(), 60u);
  for (const auto& p : c) EXPECT_NEAR(p.mean, p.minutes / 60.0, 0.02);
  for (std::size_t k = 1; k < c.size(); ++k) EXPECT_GE(c[k].mean, c[k - 1].mean);
  EXPECT_EQ(c.back().mean, 1.0);
}

TEST(MatchedFraction, ConstantAndRamp) {
  auto flat = day_of({upd(0, 1, 500, 0), upd(90'000, 1, 500, 0)}, 180'000, 1, 500);
  for (const auto& p : matched_fraction_curve(std::span<const DayAuctionSeries>(&flat, 1))) EXPECT_EQ(p.mean, 1.0);

  std::vector<IndicativeUpdate> ramp;
  for (int s = 0; s < 600; ++s) ramp.push_back(upd(s * 1000, 1, (s + 1) * 10, 0));
  auto d = day_of(ramp, 600'000, 1, 6000);
  for (const auto& p : matched_fraction_curve(std::span<const DayAuctionSeries>(&d, 1)))
    EXPECT_NEAR(p.mean, p.minutes / 10.0, 0.002);
}

TEST(MatchedFraction, PeakAboveFinalPullsMeanOnly) {
  std::vector<DayAuctionSeries> days;
  for (int i = 0; i < 5; ++i) {
    std::vector<IndicativeUpdate> u = {upd(10'000, 1, 500, 0), upd(200'000, 1, 1000, 0)};
    if (i < 2) u.push_back(upd(230'000, 1, 1500, 0));  // over-subscribed, later cancelled
    u.push_back(upd(290'000, 1, 1000, 0));
    days.push_back(day_of(u, 300'000, 1, 1000));
  }
  auto c = matched_fraction_curve(days);
  ASSERT_EQ(c.size(), 5u);
  EXPECT_GT(c[3].mean, c[3].median);
  for (const auto& p : c) EXPECT_LE(p.median, 1.0);
  days[0].final_volume = 0;
  EXPECT_THROW(matched_fraction_curve(days), Error);
}

TEST(CurveShape, Parabolas) {
  std::vector<double> x, up, down;
  for (int i = 0; i < 60; ++i) {
    x.push_back(i);
    up.push_back(1.0 + 0.1 * i + 0.01 * i * i);
    down.push_back(1.0 + 0.1 * i - 0.01 * i * i);
  }
  EXPECT_EQ(curve_shape(x, up).shape, CurveShape::convex_quadratic);
  EXPECT_EQ(curve_shape(x, down).shape, CurveShape::concave_quadratic);
}

TEST(CurveShape, NoisyLineNeverQuadratic) {
  int quadratic = 0;
  for (std::uint64_t s = 1; s <= 100; ++s) {
    std::mt19937_64 rng(s);
    std::normal_distribution<double> z(0.0, 1e-4);
    std::vector<double> x, y;
    for (int i = 0; i < 600; ++i) {
      x.push_back(i / 600.0);
      y.push_back(0.2 + 0.5 * x.back() + z(rng));
    }
    const auto shape = curve_shape(x, y).shape;
    if (shape == CurveShape::convex_quadratic || shape == CurveShape::concave_quadratic) ++quadratic;
  }
  EXPECT_LE(quadratic, 1);
}

TEST(CurveShape, TooFewPoints) {
  std::vector<double> x = {1, 2, 3, 4, 5, 6, 7, 8, 9}, y = x;
  EXPECT_THROW(curve_shape(x, y), Error);
}

TEST(HalfVolume, JumpAndRamp) {
  auto jump = day_of({upd(60'000, 1, 10, 0), upd(35 * 60'000, 1, 1000, 0)}, 40 * 60'000, 1, 1000);
  EXPECT_DOUBLE_EQ(half_volume_time(std::span<const DayAuctionSeries>(&jump, 1)).median_minutes, 35.0);
  std::vector<IndicativeUpdate> ramp;
  for (int s = 1; s <= 600; ++s) ramp.push_back(upd(s * 1000, 1, s, 0));
  auto d = day_of(ramp, 601'000, 1, 600);
  EXPECT_DOUBLE_EQ(half_volume_time(std::span<const DayAuctionSeries>(&d, 1)).median_minutes, 5.0);
}

TEST(HalfVolume, ShiftedRampsMatchScan) {
  std::vector<DayAuctionSeries> days;
  std::vector<double> oracle;
  for (int shift = 0; shift < 7; ++shift) {
    std::vector<IndicativeUpdate> u;
    for (int s = 0; s < 300; ++s) u.push_back(upd((shift * 20 + s) * 1000, 1, 3 * s, 0));
    days.push_back(day_of(u, 1'000'000, 1, 600));
    for (const auto& x : u)
      if (2 * x.matched_volume >= 600) {
        oracle.push_back(x.time_ms / 60'000.0);
        break;
      }
  }
  days.push_back(day_of({upd(0, 1, 10, 0)}, 1000, 1, 600));  // never reaches half
  days.push_back(day_of({upd(0, 1, 10, 0)}, 1000));          // no final volume
  auto r = half_volume_time(days);
  std::sort(oracle.begin(), oracle.end());
  EXPECT_DOUBLE_EQ(r.median_minutes, oracle[3]);
  EXPECT_EQ(r.days_used, 7u);
  EXPECT_EQ(r.never_reached, 1u);
  EXPECT_EQ(r.no_final_volume, 1u);
}

// ---------------------------------------------------------------- Hurst

TEST(Hurst, ConstantPriceSkipped) {
  std::vector<IndicativeUpdate> u;
  for (int i = 0; i < 60; ++i) u.push_back(upd(i * 1000, 5000, 1, 0));
  auto d = day_of(u, 100'000, 5000, 1);
  auto c = hurst_dispersion(std::span<const DayAuctionSeries>(&d, 1));
  EXPECT_EQ(c.skipped_zero_variance, 1u);
  EXPECT_EQ(c.days_used, 0u);
}

TEST(Hurst, FewUpdatesSkipped) {
  std::vector<IndicativeUpdate> u;
  for (int i = 0; i < 49; ++i) u.push_back(upd(i * 1000, 5000 + i % 3, 1, 0));
  auto d = day_of(u, 100'000, 5000, 1);
  EXPECT_EQ(hurst_dispersion(std::span<const DayAuctionSeries>(&d, 1)).skipped_few_updates, 1u);
}

TEST(Hurst, AlternatingPricesGiveClosedForm) {
  // prices alternate P, Pe^r, ...; the 99 returns are 50 x (+r) and 49 x (-r)
  // so var = (99 r^2 - r^2/99) / 98 = r^2 100/99, and a price one return
  // away from p^x has D = 0.99
  const Tick lo = 1'000'000, hi = 1'010'000;
  std::vector<IndicativeUpdate> u;
  for (int i = 0; i < 100; ++i) u.push_back(upd(i * 1000, i % 2 ? hi : lo, 1, 0));
  auto d = day_of(u, 100'000, lo, 1);
  auto rows = hurst_day(d, 50, 1000);
  ASSERT_EQ(rows.size(), 100u);
  for (const auto& [tau, value] : rows) {
    const int i = 100 - static_cast<int>(tau);  // update at (100 - tau) s
    EXPECT_NEAR(value, i % 2 ? 0.99 : 0.0, 1e-12) << tau;
  }
}

TEST(Hurst, InvariantUnderPriceScaling) {
  flow::WalkParams w;
  w.updates = 300;
  w.level = 10'000;
  auto d = flow::gen_indicative_walk(w);
  auto scaled = d;
  for (auto& u : scaled.updates) *u.price *= 7;
  *scaled.final_price *= 7;
  auto a = hurst_day(d, 50, 60'000), b = hurst_day(scaled, 50, 60'000);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i].second, b[i].second, 1e-9 * (1 + a[i].second));
}

TEST(Hurst, BrownianGivesOneHalf) {
  std::vector<DayAuctionSeries> days;
  for (int d = 0; d < 200; ++d) {
    flow::WalkParams w;
    w.updates = 500;
    w.seed = 1 + d;
    days.push_back(flow::gen_indicative_walk(w));
  }
  auto r = hurst_fit(hurst_dispersion(days));
  EXPECT_NEAR(r.fit.H, 0.5, 0.05);
}

TEST(Hurst, ClassificationBoundary) {
  HurstCurve c;
  for (int t = 0; t < 30; ++t) c.slices.push_back({t, std::pow(t + 0.5, 0.9), 1});
  auto r = hurst_fit(c);
  EXPECT_NEAR(r.fit.H, 0.45, 1e-9);
  EXPECT_TRUE(r.sub_diffusive);
  for (auto& s : c.slices) s.median_d = std::pow(s.tau + 0.5, 1.0);
  EXPECT_FALSE(hurst_fit(c).sub_diffusive);
}

TEST(Hurst, OrnsteinUhlenbeckSubDiffusive) {
  int hits = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    std::vector<DayAuctionSeries> days;
    for (int d = 0; d < 200; ++d) {
      flow::WalkParams w;
      w.kind = flow::WalkParams::Kind::ornstein_uhlenbeck;
      w.mean_reversion = 1.0 / 600.0;
      w.updates = 500;
      w.seed = seed * 100'000 + d;
      days.push_back(flow::gen_indicative_walk(w));
    }
    auto r = hurst_fit(hurst_dispersion(days));
    if (r.sub_diffusive && r.fit.H < 0.4) ++hits;
  }
  EXPECT_GE(hits, 19);
}

// ---------------------------------------------------------------- reduction

TEST(Reduction, AlternatingAndGrowing) {
  std::vector<IndicativeUpdate> alt, grow;
  for (int i = 0; i < 40; ++i) {
    alt.push_back(upd(i * 1000, 1, 1, i % 2 ? -50 : 50));
    grow.push_back(upd(i * 1000, 1, 1, 10 + 5 * i));
  }
  auto a = day_of(alt, 60'000), g = day_of(grow, 60'000);
  auto ra = imbalance_reduction_prob(std::span<const DayAuctionSeries>(&a, 1));
  auto rg = imbalance_reduction_prob(std::span<const DayAuctionSeries>(&g, 1));
  EXPECT_EQ(ra.overall, 1.0);
  EXPECT_EQ(rg.overall, 0.0);
  EXPECT_EQ(ra.total, 39u);
}

TEST(Reduction, ZerosExcluded) {
  auto d = day_of({upd(0, 1, 1, 0), upd(1, 1, 1, 10), upd(2, 1, 1, 10), upd(3, 1, 1, 4)}, 100);
  auto r = imbalance_reduction_prob(std::span<const DayAuctionSeries>(&d, 1));
  EXPECT_EQ(r.total, 1u);  // only 10 -> 4 qualifies
  EXPECT_EQ(r.improving, 1u);
  EXPECT_EQ(r.low_support_days, 1u);
  EXPECT_TRUE(std::isnan(r.overall));
  ASSERT_EQ(r.slices.size(), 1u);
  EXPECT_TRUE(r.slices[0].low_support);
}

TEST(Reduction, ScaleInvariant) {
  auto p = single_level_flow(4);
  auto d = flow::gen_day_series(p).series;
  auto scaled = d;
  for (auto& u : scaled.updates) u.imbalance *= 13;
  auto a = imbalance_reduction_prob(std::span<const DayAuctionSeries>(&d, 1));
  auto b = imbalance_reduction_prob(std::span<const DayAuctionSeries>(&scaled, 1));
  EXPECT_EQ(a.overall, b.overall);
  ASSERT_EQ(a.slices.size(), b.slices.size());
  for (std::size_t i = 0; i < a.slices.size(); ++i) EXPECT_EQ(a.slices[i].improving, b.slices[i].improving);
}

TEST(Reduction, LiteralIndexVariant) {
  // I: 10, 20, 5 -> literal form looks at sign(I_2) sign(I_1 - I_0) = +1
  auto d = day_of({upd(0, 1, 1, 10), upd(1, 1, 1, 20), upd(2, 1, 1, 5)}, 100);
  auto lit = imbalance_reduction_prob(std::span<const DayAuctionSeries>(&d, 1), kMinute, true);
  EXPECT_EQ(lit.total, 1u);
  EXPECT_EQ(lit.improving, 0u);
  auto std_form = imbalance_reduction_prob(std::span<const DayAuctionSeries>(&d, 1));
  EXPECT_EQ(std_form.total, 2u);
  EXPECT_EQ(std_form.improving, 1u);
}

TEST(Reduction, RecoversContrarianProbability) {
  for (double q : {0.5, 0.6}) {
    std::vector<DayAuctionSeries> days;
    std::size_t events = 0;
    for (std::uint64_t s = 1; events < 100'000; ++s) {
      auto p = single_level_flow(s);
      p.cancel_prob = 0.0;
      p.contrarian_prob = q;
      days.push_back(flow::gen_day_series(p).series);
      events += days.back().updates.size();
    }
    EXPECT_NEAR(imbalance_reduction_prob(days).overall, q, 0.02) << q;
  }
}

// ---------------------------------------------------------------- response

TEST(Response, ConstantImpactBuysAndSells) {
  for (int side : {1, -1}) {
    const Tick pi = 100'000'000;
    const Tick px = side > 0 ? 101'005'017 : 99'004'983;  // about pi e^{+-0.01}
    const double injected = side * (std::log(static_cast<double>(px)) - std::log(static_cast<double>(pi)));
    std::vector<IndicativeUpdate> u;
    Shares w = 100, imb = side * 5;
    for (int i = 0; i < 600; ++i) {
      u.push_back(upd(i * 500, pi, w, imb));
      w += 10;
      imb += side * 10;
    }
    auto d = day_of(u, 300'000, px, w);
    auto r = response_curves(std::span<const DayAuctionSeries>(&d, 1));
    const auto& c = r.get(ResponseSide::new_order, Condition::unconditional);
    ASSERT_EQ(c.bins.size(), 5u);
    for (const auto& b : c.bins) {
      EXPECT_EQ(b.median, injected);
      EXPECT_NEAR(b.median, 0.01, 1e-6);
      EXPECT_EQ(b.dispersion, 0.0);
    }
    EXPECT_TRUE(r.get(ResponseSide::cancellation, Condition::unconditional).bins.empty());
    EXPECT_EQ(r.get(ResponseSide::new_order, Condition::worsening).bins.size(), 5u);
  }
}

TEST(Response, SignSymmetry) {
  // negating every imbalance flips eps; mirroring prices around p^x in log
  // space flips log(p^x/pi); medians are unchanged
  auto p = single_level_flow(8);
  p.price_dispersion = 4;
  p.volatility = 1;
  p.anchor_size = 0;
  auto d = flow::gen_day_series(p).series;
  auto m = d;
  const double lx = std::log(static_cast<double>(*d.final_price));
  for (auto& u : m.updates) {
    u.imbalance = -u.imbalance;
    if (u.price) u.price = static_cast<Tick>(std::llround(std::exp(2 * lx - std::log(static_cast<double>(*u.price)))));
  }
  auto a = response_curves(std::span<const DayAuctionSeries>(&d, 1));
  auto b = response_curves(std::span<const DayAuctionSeries>(&m, 1));
  for (std::size_t c = 0; c < a.curves.size(); ++c) {
    ASSERT_EQ(a.curves[c].bins.size(), b.curves[c].bins.size());
    for (std::size_t k = 0; k < a.curves[c].bins.size(); ++k) {
      EXPECT_NEAR(a.curves[c].bins[k].median, b.curves[c].bins[k].median, 1e-3);
      EXPECT_EQ(a.curves[c].bins[k].count, b.curves[c].bins[k].count);
    }
  }
}

TEST(Response, ConditionsPartitionDefinedEvents) {
  auto p = single_level_flow(2);
  p.price_dispersion = 2;
  auto d = flow::gen_day_series(p).series;
  auto r = response_curves(std::span<const DayAuctionSeries>(&d, 1));
  for (auto side : {ResponseSide::new_order, ResponseSide::cancellation}) {
    std::size_t all = 0, split = 0;
    for (const auto& b : r.get(side, Condition::unconditional).bins) all += b.count;
    for (auto c : {Condition::improving, Condition::worsening})
      for (const auto& b : r.get(side, c).bins) split += b.count;
    EXPECT_LE(split, all);
    EXPECT_GT(split, all * 9 / 10);
  }
}

TEST(Response, NullFlowCentered) {
  std::vector<DayAuctionSeries> days;
  for (std::uint64_t s = 1; s <= 50; ++s) {
    flow::FlowParams p;
    p.duration_s = 600;
    p.base_rate = 2;
    p.cancel_prob = 0.2;
    p.volatility = 1.0;
    p.seed = s;
    days.push_back(flow::gen_day_series(p).series);
  }
  auto r = response_curves(days);
  std::size_t supported = 0, inside = 0;
  for (const auto& c : r.curves)
    for (const auto& b : c.bins) {
      if (b.low_support) continue;
      ++supported;
      if (std::abs(b.median) <= b.dispersion) ++inside;
    }
  ASSERT_GT(supported, 20u);
  EXPECT_GE(inside * 100, supported * 95);
}

// ---------------------------------------------------------------- spread

TEST(Spread, IndicativeAtMid) {
  DayAuctionSeries d;
  d.auction_time_ms = 100'000;
  for (int i = 0; i < 50; ++i) {
    const Tick m = 1000 + i;
    d.updates.push_back(upd(i * 1000 + 1, m, 1, 0));
    d.quotes.push_back({i * 1000, m - 2, m + 2, 10, 30});
  }
  d = ingest::align_quotes(d, d.quotes);
  auto r = spread_metrics(std::span<const DayAuctionSeries>(&d, 1));
  EXPECT_EQ(r.overall.inside, r.overall.updates);
  for (double x : r.delta_m) EXPECT_EQ(x, 0.0);
  EXPECT_EQ(r.overall.reversion_total, 0u);
  EXPECT_EQ(r.overall.overshoot_total, 0u);
}

TEST(Spread, EqualSizesTieWeightedMid) {
  auto p = single_level_flow(3);
  p.equal_quote_sizes = true;
  p.volatility = 2.0;
  p.price_dispersion = 3.0;
  auto sim = flow::gen_day_series(p);
  auto d = ingest::align_quotes(sim.series, sim.series.quotes);
  auto r = spread_metrics(std::span<const DayAuctionSeries>(&d, 1));
  ASSERT_GT(r.overall.updates, 1000u);
  EXPECT_EQ(r.overall.ties, r.overall.updates);
}

TEST(Spread, PositionsPartitionEachSlice) {
  auto p = single_level_flow(5);
  p.volatility = 3.0;
  p.price_dispersion = 4.0;
  auto sim = flow::gen_day_series(p);
  auto d = ingest::align_quotes(sim.series, sim.series.quotes);
  auto r = spread_metrics(std::span<const DayAuctionSeries>(&d, 1));
  for (const auto& s : r.slices) {
    EXPECT_EQ(s.inside + s.above + s.below, s.updates);
    EXPECT_EQ(s.reversion_in_total + s.reversion_out_total, s.reversion_total);
    EXPECT_EQ(s.reversion_in_hits + s.reversion_out_hits, s.reversion_hits);
  }
  EXPECT_NEAR(r.overall.median_spread_bps, 2.0, 0.05);  // 2 ticks around ~10000
}

TEST(Spread, WeightedMidComparisonMatchesDoubleOracle) {
  std::mt19937_64 rng(12);
  DayAuctionSeries d;
  d.auction_time_ms = 1'000'000;
  for (int i = 0; i < 2000; ++i) {
    const Tick b = 1000 + static_cast<Tick>(rng() % 50);
    const Tick a = b + 1 + static_cast<Tick>(rng() % 10);
    d.quotes.push_back({i * 10, b, a, 1 + static_cast<Shares>(rng() % 500), 1 + static_cast<Shares>(rng() % 500)});
    d.updates.push_back(upd(i * 10, b - 5 + static_cast<Tick>(rng() % (a - b + 11)), 1, 0));
  }
  d = ingest::align_quotes(d, d.quotes);
  std::size_t w = 0, m = 0, t = 0;
  for (std::size_t i = 0; i < d.updates.size(); ++i) {
    const auto& q = d.quotes[i];
    const long double pi = *d.updates[i].price;
    const long double mid = (q.ask + q.bid) / 2.0L;
    const long double wm = (static_cast<long double>(q.ask_size) * q.ask + static_cast<long double>(q.bid_size) * q.bid) /
                           (q.ask_size + q.bid_size);
    const long double dm = std::fabs(pi - mid), dw = std::fabs(pi - wm);
    if (std::fabs(dm - dw) < 1e-9L) {
      ++t;
    } else if (dm > dw) {
      ++w;
    } else {
      ++m;
    }
  }
  auto r = spread_metrics(std::span<const DayAuctionSeries>(&d, 1));
  EXPECT_EQ(r.overall.closer_weighted, w);
  EXPECT_EQ(r.overall.closer_mid, m);
  EXPECT_EQ(r.overall.ties, t);
}

TEST(Spread, OrnsteinUhlenbeckReverts) {
  int hits = 0;
  for (std::uint64_t s = 1; s <= 100; ++s)
    if (ou_reversion_probability(s) > 0.5) ++hits;
  EXPECT_GE(hits, 95);
}

TEST(Spread, RandomWalkFarOutsideRarelyOvershoots) {
  // quotes pinned 200 ticks below a walk that stays well above them
  flow::WalkParams w;
  w.updates = 5000;
  w.sigma = 1e-4;
  w.level = 100'000;
  auto d = flow::gen_indicative_walk(w);
  d.quotes = {{0, 79'990, 80'010, 100, 100}};
  d = ingest::align_quotes(d, d.quotes);
  auto r = spread_metrics(std::span<const DayAuctionSeries>(&d, 1));
  ASSERT_GT(r.overall.overshoot_total, 1000u);
  EXPECT_LT(static_cast<double>(r.overall.overshoot_hits) / r.overall.overshoot_total, 0.05);
}

TEST(Spread, NoQuotesSkipped) {
  auto d = day_of({upd(0, 1, 1, 0)}, 10);
  EXPECT_THROW(require_quotes(d), Error);
  EXPECT_EQ(spread_metrics(std::span<const DayAuctionSeries>(&d, 1)).skipped_no_quotes, 1u);
}

TEST(Spread, SurvivalPoints) {
  auto pts = survival_points({3, 1, 2, 2});
  ASSERT_EQ(pts.size(), 3u);
  EXPECT_EQ(pts[0], (std::pair<double, double>{1, 0.75}));
  EXPECT_EQ(pts[1], (std::pair<double, double>{2, 0.25}));
  EXPECT_EQ(pts[2], (std::pair<double, double>{3, 0.0}));
  std::vector<double> many(1000);
  std::iota(many.begin(), many.end(), 0.0);
  auto thin = survival_points(many, 11);
  ASSERT_EQ(thin.size(), 11u);
  EXPECT_EQ(thin.back().second, 0.0);
}

// ---------------------------------------------------------------- tails

TEST(Tails, ParetoValuesFavorPowerLaw) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> x(3000);
  for (auto& v : x) v = 50.0 * std::pow(1.0 - u(rng), -1.0 / 1.5);
  auto r = tail_analysis(x);
  EXPECT_NEAR(r.powerlaw.params[0], 2.5, 0.15);
  bool saw_exponential = false;
  for (const auto& alt : r.alternatives) {
    if (alt.fit.family != stats::TailFamily::exponential) continue;
    saw_exponential = true;
    EXPECT_LT(alt.vuong.p_value_one_sided, 0.01);
  }
  EXPECT_TRUE(saw_exponential);
}
