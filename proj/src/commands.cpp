#include "auctionlab/commands.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "auctionlab/metrics.hpp"

namespace auctionlab::app {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::array<Exchange, 3> kExchanges = {Exchange::arca, Exchange::nasdaq, Exchange::nyse};
constexpr std::array<AuctionSide, 2> kSides = {AuctionSide::open, AuctionSide::close};

// Sub-seed streams. Session streams use the auction side index (0, 1).
constexpr std::uint64_t kVolumeStream = 2;
constexpr std::uint64_t kAssetStream = 3;

/// Runs fn(0..n-1) on up to `jobs` threads; rethrows the first exception.
void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn) {
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, jobs), n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io_error, "cannot write " + path.string());
  return out;
}

void close_output(std::ofstream& out, const fs::path& path) {
  out.close();
  if (!out) throw Error(Errc::io_error, "write failed: " + path.string());
}

void ensure_dir(const std::string& dir) {
  if (dir.empty()) throw Error(Errc::invalid_params, "an output directory is required");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(Errc::io_error, "cannot create " + dir + ": " + ec.message());
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

/// Manifest: report plus the run-independent part of the config.
void write_manifest(const fs::path& dir, const CommandReport& report, const RunConfig& config) {
  json cfg = json::parse(config_to_json(config));
  cfg.erase("output");
  cfg.erase("inputs");
  cfg.erase("jobs");
  json m = json::parse(report_to_json(report));
  m.erase("warning_messages");
  m["config"] = std::move(cfg);
  auto out = open_output(dir / "manifest.json");
  out << m.dump(2) << '\n';
  close_output(out, dir / "manifest.json");
}

std::string asset_name(std::size_t i, std::size_t count) {
  const std::size_t width = std::max<std::size_t>(3, std::to_string(count > 0 ? count - 1 : 0).size());
  std::string digits = std::to_string(i);
  return "A" + std::string(width - std::min(width, digits.size()), '0') + digits;
}

// ------------------------------------------------------------------ simulate

struct AssetProfile {
  Exchange exchange = Exchange::nyse;
  double activity = 1.0;
  Tick level = 10'000;
};

AssetProfile asset_profile(const RunConfig& c, std::size_t asset) {
  std::mt19937_64 rng(flow::derive_seed(c.seed, asset, 0, kAssetStream));
  std::normal_distribution<double> z(0.0, 1.0);
  AssetProfile p;
  p.exchange = kExchanges[asset % kExchanges.size()];
  p.activity = std::exp(c.simulation.activity_sd * z(rng));
  p.level = std::max<Tick>(100, static_cast<Tick>(std::llround(10'000.0 * std::exp(0.5 * z(rng)))));
  return p;
}

struct AssetOutput {
  std::string tape, feed, quotes, auctions, fills;
  std::size_t series = 0;
  std::size_t rejections = 0;
};

AssetOutput simulate_asset(const RunConfig& c, std::size_t asset, const std::vector<std::string>& dates) {
  const AssetProfile prof = asset_profile(c, asset);
  const std::string name = asset_name(asset, std::max(c.simulation.assets, c.simulation.volumes.assets));
  std::ostringstream tape, feed, quotes, auctions, fills;
  AssetOutput out;
  for (std::size_t d = 0; d < dates.size(); ++d) {
    for (auto side : kSides) {
      flow::FlowParams p = c.simulation.flow[static_cast<std::size_t>(side)];
      p.seed = flow::derive_seed(c.seed, asset, d, static_cast<std::uint64_t>(side));
      p.base_rate *= prof.activity;
      p.start_price = prof.level;
      p.cutoff_ms = static_cast<TimeMs>(std::llround(cutoff_seconds(c, prof.exchange, side) * 1000.0));
      auto sim = flow::gen_day_series(p, c.throttle_hz);
      const ingest::SeriesKey key{name, dates[d], side};
      sim.series.asset = name;
      sim.series.date = dates[d];
      sim.series.side = side;
      ingest::write_tape(tape, key, sim.tape.events, false);
      ingest::write_feed(feed, std::span<const DayAuctionSeries>(&sim.series, 1), false);
      ingest::write_quotes(quotes, key, sim.series.quotes, false);
      const ingest::AuctionRecord rec{key, sim.series.auction_time_ms, p.start_price, sim.series.final_price,
                                      sim.series.final_volume};
      ingest::write_auctions(auctions, std::span<const ingest::AuctionRecord>(&rec, 1), false);
      if (sim.result.final_price) {
        std::vector<ingest::FillRecord> fr;
        fr.reserve(sim.result.fills.size());
        for (const auto& f : sim.result.fills) fr.push_back({key, f.id, f.side, f.filled, *sim.result.final_price});
        ingest::write_fills(fills, fr, false);
      }
      ++out.series;
      out.rejections += sim.rejections.size();
    }
  }
  out.tape = std::move(tape).str();
  out.feed = std::move(feed).str();
  out.quotes = std::move(quotes).str();
  out.auctions = std::move(auctions).str();
  out.fills = std::move(fills).str();
  return out;
}

std::vector<DailyVolumeRecord> volume_panel(const RunConfig& c, std::size_t asset, const std::vector<std::string>& dates) {
  const AssetProfile prof = asset_profile(c, asset);
  const auto& v = c.simulation.volumes;
  const auto e = static_cast<std::size_t>(prof.exchange);
  std::mt19937_64 rng(flow::derive_seed(c.seed, asset, 0, kVolumeStream));
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<DailyVolumeRecord> out;
  const std::string name = asset_name(asset, std::max(c.simulation.assets, v.assets));
  Tick prev_close = prof.level;
  for (const auto& date : dates) {
    DailyVolumeRecord r;
    r.asset = name;
    r.date = date;
    r.exchange = prof.exchange;
    r.v_total = std::max<Shares>(1, static_cast<Shares>(std::llround(std::exp(v.total_log_mean + v.total_log_sd * z(rng)))));
    auto auction_volume = [&](AuctionSide side) {
      const auto s = static_cast<std::size_t>(side);
      const double rho = std::min(0.45, std::pow(10.0, v.mean_log10[e][s] + v.sd_log10[e][s] * z(rng)));
      return static_cast<Shares>(std::floor(rho * static_cast<double>(r.v_total)));
    };
    r.v_open = auction_volume(AuctionSide::open);
    r.v_close = auction_volume(AuctionSide::close);
    r.prev_close = prev_close;
    const double daily_sd = 0.01 * static_cast<double>(prof.level);
    r.p_open = std::max<Tick>(1, prev_close + static_cast<Tick>(std::llround(0.3 * daily_sd * z(rng))));
    r.p_close = std::max<Tick>(1, r.p_open + static_cast<Tick>(std::llround(daily_sd * z(rng))));
    prev_close = r.p_close;
    out.push_back(std::move(r));
  }
  return out;
}

// ------------------------------------------------------------------ load

enum class FileKind { feed, tape, quotes, daily_volumes, auctions, fills, unknown };

FileKind kind_of_header(const std::string& line) {
  if (line == ingest::kFeedHeader) return FileKind::feed;
  if (line == ingest::kTapeHeader) return FileKind::tape;
  if (line == ingest::kQuotesHeader) return FileKind::quotes;
  if (line == ingest::kDailyVolumesHeader) return FileKind::daily_volumes;
  if (line == ingest::kAuctionsHeader) return FileKind::auctions;
  if (line == ingest::kFillsHeader) return FileKind::fills;
  return FileKind::unknown;
}

struct InputFile {
  fs::path path;
  FileKind kind = FileKind::unknown;
};

/// Empty files yield no entry; files are sorted by path within a directory.
std::vector<InputFile> classify_inputs(const std::vector<std::string>& inputs, std::vector<std::string>& warnings) {
  std::vector<fs::path> files;
  for (const auto& in : inputs) {
    const fs::path p(in);
    std::error_code ec;
    if (fs::is_directory(p, ec)) {
      std::vector<fs::path> found;
      for (const auto& entry : fs::directory_iterator(p))
        if (entry.is_regular_file() && entry.path().extension() == ".csv") found.push_back(entry.path());
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else if (fs::is_regular_file(p, ec)) {
      files.push_back(p);
    } else {
      throw Error(Errc::io_error, "input not found: " + in);
    }
  }
  std::vector<InputFile> out;
  for (const auto& f : files) {
    auto in = ingest::open_input(f);
    std::string line;
    if (!std::getline(*in, line)) {
      warnings.push_back("empty input file " + f.string());
      continue;
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const FileKind kind = kind_of_header(line);
    if (kind == FileKind::unknown) {
      warnings.push_back("skipping " + f.string() + ": unrecognised header");
      continue;
    }
    out.push_back({f, kind});
  }
  return out;
}

template <typename T>
void append(std::vector<T>& dst, std::vector<T>&& src) {
  dst.insert(dst.end(), std::make_move_iterator(src.begin()), std::make_move_iterator(src.end()));
}

std::string join_errors(const std::vector<std::string>& errors) {
  std::string all;
  for (const auto& e : errors) {
    if (!all.empty()) all += '\n';
    all += e;
  }
  return all;
}

// ------------------------------------------------------------------ analyze

struct Group {
  std::optional<Exchange> exchange;
  AuctionSide side = AuctionSide::close;
  auto operator<=>(const Group&) const = default;
};

std::string exchange_text(const std::optional<Exchange>& e) { return e ? to_string(*e) : ""; }

struct RowSink {
  std::string exchange, side, asset;
  Tables tables;

  void add(const std::string& table, const std::string& date, const std::string& group, std::optional<std::int64_t> slice,
           const std::string& statistic, double value, std::int64_t count, const std::string& flag = "") {
    tables[table].push_back({exchange, side, asset, date, group, slice, statistic, value, count, flag});
  }
};

std::int64_t as_count(std::size_t n) { return static_cast<std::int64_t>(n); }
const char* support_flag(bool low) { return low ? "low_support" : ""; }

double share(std::size_t hits, std::size_t total) {
  return total ? static_cast<double>(hits) / static_cast<double>(total) : std::nan("");
}

struct AnalyzeContext {
  const RunConfig& config;
  TimeMs slice_ms;
  bool want(const char* table) const { return config.estimator == "all" || config.estimator == table; }
};

void curve_rows(RowSink& sink, const char* table, const std::vector<metrics::CurvePoint>& curve,
                std::vector<std::string>& warnings) {
  std::vector<double> xs, ys;
  for (const auto& p : curve) {
    sink.add(table, "", "", p.slice, "mean", p.mean, as_count(p.days));
    sink.add(table, "", "", p.slice, "median", p.median, as_count(p.days));
    xs.push_back(p.minutes);
    ys.push_back(p.mean);
  }
  if (xs.size() < 10) return;
  try {
    auto s = metrics::curve_shape(xs, ys);
    const std::string shape = metrics::to_string(s.shape);
    const auto n = as_count(xs.size());
    sink.add(table, "", shape, std::nullopt, "vuong_statistic", s.vuong.statistic, n);
    sink.add(table, "", shape, std::nullopt, "vuong_p", s.vuong.p_value_one_sided, n);
    sink.add(table, "", shape, std::nullopt, "curvature", s.curvature, n);
    sink.add(table, "", shape, std::nullopt, "aic_linear", s.aic_linear, n);
    sink.add(table, "", shape, std::nullopt, "aic_quadratic", s.aic_quadratic, n);
  } catch (const Error& e) {
    warnings.push_back(std::string(table) + " " + sink.exchange + "/" + sink.side + "/" + sink.asset +
                       ": curve shape: " + e.what());
  }
}

struct AssetSummary {
  bool hurst_fitted = false;
  bool sub_diffusive = false;
};

/// Per-asset (or pooled, asset = "") figures 4 to 13.
AssetSummary series_figures(const AnalyzeContext& ctx, RowSink& sink, std::span<const DayAuctionSeries> days,
                            std::vector<std::string>& warnings) {
  AssetSummary summary;
  const TimeMs w = ctx.slice_ms;
  const std::string where = sink.exchange + "/" + sink.side + "/" + (sink.asset.empty() ? "*" : sink.asset);
  auto warn = [&](const std::string& what, const Error& e) { warnings.push_back(what + " " + where + ": " + e.what()); };

  if (ctx.want("fig4_activity")) curve_rows(sink, "fig4_activity", metrics::activity_curve(days, w), warnings);

  if (ctx.want("fig5_fraction")) {
    std::vector<DayAuctionSeries> with_volume;
    for (const auto& d : days)
      if (d.final_volume && *d.final_volume > 0) with_volume.push_back(d);
    curve_rows(sink, "fig5_fraction", metrics::matched_fraction_curve(with_volume, w), warnings);
    const auto hv = metrics::half_volume_time(days);
    sink.add("fig5_fraction", "", "", std::nullopt, "half_volume_minutes", hv.median_minutes, as_count(hv.days_used));
    sink.add("fig5_fraction", "", "", std::nullopt, "half_volume_never_reached", static_cast<double>(hv.never_reached),
             as_count(hv.days_used + hv.never_reached));
  }

  if (ctx.want("fig6_hurst")) {
    const auto curve = metrics::hurst_dispersion(days, ctx.config.thresholds.min_updates, w);
    for (const auto& s : curve.slices) sink.add("fig6_hurst", "", "", s.tau, "median_d", s.median_d, as_count(s.days));
    sink.add("fig6_hurst", "", "", std::nullopt, "days_used", static_cast<double>(curve.days_used), as_count(curve.days_used));
    sink.add("fig6_hurst", "", "", std::nullopt, "skipped_few_updates", static_cast<double>(curve.skipped_few_updates),
             as_count(curve.skipped_few_updates));
    try {
      const auto r = metrics::hurst_fit(curve);
      const auto n = as_count(r.fit.n_used);
      sink.add("fig6_hurst", "", "", std::nullopt, "H", r.fit.H, n);
      sink.add("fig6_hurst", "", "", std::nullopt, "slope", r.fit.slope, n);
      sink.add("fig6_hurst", "", "", std::nullopt, "slope_stderr", r.fit.slope_stderr, n);
      sink.add("fig6_hurst", "", "", std::nullopt, "p_value", r.fit.p_value, n);
      sink.add("fig6_hurst", "", "", std::nullopt, "sub_diffusive", r.sub_diffusive ? 1.0 : 0.0, n);
      summary.hurst_fitted = true;
      summary.sub_diffusive = r.sub_diffusive;
    } catch (const Error& e) {
      if (curve.days_used > 0) warn("fig6_hurst fit", e);
    }
  }

  if (ctx.want("fig7_reduction")) {
    const auto r = metrics::imbalance_reduction_prob(days, w, ctx.config.literal_reduction_index);
    for (const auto& s : r.slices)
      sink.add("fig7_reduction", "", "", s.slice, "probability", s.probability, as_count(s.total),
               support_flag(s.low_support));
    sink.add("fig7_reduction", "", "", std::nullopt, "overall", r.overall, as_count(r.daily.size()),
             support_flag(r.daily.empty()));
    sink.add("fig7_reduction", "", "", std::nullopt, "pooled", share(r.improving, r.total), as_count(r.total));
  }

  if (ctx.want("fig8_response") || ctx.want("fig9_conditional")) {
    const auto r = metrics::response_curves(days, w);
    for (const auto& c : r.curves) {
      const bool unconditional = c.condition == metrics::Condition::unconditional;
      const char* table = unconditional ? "fig8_response" : "fig9_conditional";
      if (!ctx.want(table)) continue;
      std::string group = metrics::to_string(c.side);
      if (!unconditional) group += std::string(":") + metrics::to_string(c.condition);
      for (const auto& b : c.bins) {
        sink.add(table, "", group, b.slice, "median", b.median, as_count(b.count), support_flag(b.low_support));
        sink.add(table, "", group, b.slice, "dispersion", b.dispersion, as_count(b.count), support_flag(b.low_support));
      }
    }
  }

  const bool spread_wanted = ctx.want("fig10_spread") || ctx.want("fig11_ds") || ctx.want("fig12_reversion") ||
                             ctx.want("fig13_weightedmid");
  if (spread_wanted) {
    const auto r = metrics::spread_metrics(days, w);
    const auto& o = r.overall;
    if (o.updates > 0) {
      if (ctx.want("fig10_spread")) {
        const auto n = as_count(o.updates);
        sink.add("fig10_spread", "", "", std::nullopt, "time_in_spread", share(o.inside, o.updates), n);
        sink.add("fig10_spread", "", "", std::nullopt, "time_above", share(o.above, o.updates), n);
        sink.add("fig10_spread", "", "", std::nullopt, "time_below", share(o.below, o.updates), n);
        sink.add("fig10_spread", "", "", std::nullopt, "median_spread_bps", o.median_spread_bps, n);
        for (const auto& s : r.slices)
          sink.add("fig10_spread", "", "", s.slice, "time_in_spread", share(s.inside, s.updates), as_count(s.updates));
        const auto pts = metrics::survival_points(r.delta_m, 100);
        for (std::size_t i = 0; i < pts.size(); ++i) {
          sink.add("fig10_spread", "", "delta_m_ccdf", as_count(i), "x", pts[i].first, n);
          sink.add("fig10_spread", "", "delta_m_ccdf", as_count(i), "p_greater", pts[i].second, n);
        }
      }
      if (ctx.want("fig11_ds")) {
        for (const auto& s : r.slices) {
          if (s.ds_outside_n == 0) continue;
          sink.add("fig11_ds", "", "", s.slice, "mean", s.ds_outside_mean, as_count(s.ds_outside_n));
          sink.add("fig11_ds", "", "", s.slice, "median", s.ds_outside_median, as_count(s.ds_outside_n));
        }
        if (o.ds_outside_n > 0) {
          sink.add("fig11_ds", "", "", std::nullopt, "mean", o.ds_outside_mean, as_count(o.ds_outside_n));
          sink.add("fig11_ds", "", "", std::nullopt, "median", o.ds_outside_median, as_count(o.ds_outside_n));
        }
      }
      if (ctx.want("fig12_reversion")) {
        sink.add("fig12_reversion", "", "", std::nullopt, "reversion_in_spread",
                 share(o.reversion_in_hits, o.reversion_in_total), as_count(o.reversion_in_total));
        sink.add("fig12_reversion", "", "", std::nullopt, "reversion_outside",
                 share(o.reversion_out_hits, o.reversion_out_total), as_count(o.reversion_out_total));
        sink.add("fig12_reversion", "", "", std::nullopt, "reversion", share(o.reversion_hits, o.reversion_total),
                 as_count(o.reversion_total));
        sink.add("fig12_reversion", "", "", std::nullopt, "overshoot", share(o.overshoot_hits, o.overshoot_total),
                 as_count(o.overshoot_total));
        sink.add("fig12_reversion", "", "", std::nullopt, "median_spread_bps", o.median_spread_bps, as_count(o.updates));
        for (const auto& s : r.slices)
          sink.add("fig12_reversion", "", "", s.slice, "reversion", share(s.reversion_hits, s.reversion_total),
                   as_count(s.reversion_total));
      }
      if (ctx.want("fig13_weightedmid")) {
        auto rows = [&](const metrics::SpreadSlice& s, std::optional<std::int64_t> slice) {
          const std::size_t decided = s.closer_weighted + s.closer_mid;
          sink.add("fig13_weightedmid", "", "", slice, "p_closer_weighted", share(s.closer_weighted, decided),
                   as_count(decided));
          sink.add("fig13_weightedmid", "", "", slice, "ties", share(s.ties, s.updates), as_count(s.updates));
        };
        for (const auto& s : r.slices) rows(s, s.slice);
        rows(o, std::nullopt);
      }
    }
  }
  return summary;
}

}  // namespace

// ------------------------------------------------------------------ public

std::vector<std::string> business_days(const std::string& start, std::size_t count) {
  using namespace std::chrono;
  if (!ingest::is_iso_date(start)) throw Error(Errc::invalid_params, "bad start date " + start);
  const int y = std::stoi(start.substr(0, 4));
  const unsigned m = static_cast<unsigned>(std::stoi(start.substr(5, 2)));
  const unsigned d = static_cast<unsigned>(std::stoi(start.substr(8, 2)));
  sys_days day{year{y} / month{m} / std::chrono::day{d}};
  std::vector<std::string> out;
  out.reserve(count);
  while (out.size() < count) {
    const weekday wd{day};
    if (wd != Saturday && wd != Sunday) {
      const year_month_day ymd{day};
      char buf[16];
      std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                    static_cast<unsigned>(ymd.day()));
      out.emplace_back(buf);
    }
    day += days{1};
  }
  return out;
}

std::string report_to_json(const CommandReport& r) {
  json files = json::object();
  for (const auto& [name, rows] : r.files) files[name] = rows;
  return json{{"command", r.command},
              {"files", files},
              {"series", r.series},
              {"rejections", r.rejections},
              {"warnings", r.warnings.size()},
              {"warning_messages", r.warnings}}
      .dump(2);
}

Dataset load_dataset(const std::vector<std::string>& inputs) {
  Dataset data;
  const auto files = classify_inputs(inputs, data.warnings);
  std::vector<std::string> errors;
  std::vector<ingest::AuctionRecord> auctions;
  ingest::QuoteMap quotes;
  bool have_auctions = false;
  for (const auto& f : files) {
    try {
      switch (f.kind) {
        case FileKind::feed: append(data.series, ingest::parse_file(f.path, ingest::parse_feed)); break;
        case FileKind::daily_volumes: append(data.volumes, ingest::parse_file(f.path, ingest::parse_daily_volumes)); break;
        case FileKind::fills: append(data.fills, ingest::parse_file(f.path, ingest::parse_fills)); break;
        case FileKind::auctions:
          append(auctions, ingest::parse_file(f.path, ingest::parse_auctions));
          have_auctions = true;
          break;
        case FileKind::quotes:
          for (auto& [key, qs] : ingest::parse_file(f.path, ingest::parse_quotes)) append(quotes[key], std::move(qs));
          break;
        case FileKind::tape: break;
        case FileKind::unknown: break;
      }
    } catch (const Error& e) {
      if (e.code() == Errc::io_error) throw;
      errors.push_back(e.what());
    }
  }
  if (!errors.empty()) throw Error(Errc::schema_error, join_errors(errors));

  if (!have_auctions && !data.series.empty())
    data.warnings.push_back("no auctions file: auction time taken as last update + 1 ms, final price unknown");
  ingest::attach_auctions(data.series, auctions);
  std::sort(data.series.begin(), data.series.end(),
            [](const DayAuctionSeries& a, const DayAuctionSeries& b) { return ingest::key_of(a) < ingest::key_of(b); });
  for (auto& s : data.series) {
    auto it = quotes.find(ingest::key_of(s));
    if (it == quotes.end()) continue;
    s = ingest::align_quotes(std::move(s), std::move(it->second));
  }
  for (const auto& v : data.volumes) {
    auto [it, inserted] = data.exchange_of.emplace(v.asset, v.exchange);
    if (!inserted && it->second != v.exchange) {
      data.warnings.push_back("asset " + v.asset + " listed on several exchanges; using " + to_string(v.exchange));
      it->second = v.exchange;
    }
  }
  return data;
}

Tables analyze(const Dataset& data, const RunConfig& config, std::vector<std::string>& warnings) {
  const AnalyzeContext ctx{config, static_cast<TimeMs>(std::llround(config.slice_seconds * 1000.0))};
  Tables out;
  for (const char* name : kEstimators)
    if (ctx.want(name)) out[name];

  auto exchange_for = [&](const std::string& asset) -> std::optional<Exchange> {
    auto it = data.exchange_of.find(asset);
    if (it == data.exchange_of.end()) return std::nullopt;
    return it->second;
  };

  // volume tables
  if (ctx.want("table1_ratios")) {
    for (const auto& r : metrics::ratio_summary(data.volumes)) {
      RowSink sink{to_string(r.exchange), to_string(r.side), "", {}};
      const auto n = as_count(r.stats.n);
      sink.add("table1_ratios", "", "", std::nullopt, "mean_log10", r.stats.mean_log10, n);
      sink.add("table1_ratios", "", "", std::nullopt, "two_sd_log10", r.stats.two_sd_log10, n);
      sink.add("table1_ratios", "", "", std::nullopt, "typical", r.stats.typical, n);
      sink.add("table1_ratios", "", "", std::nullopt, "zeros", static_cast<double>(r.zeros), as_count(r.zeros));
      sink.add("table1_ratios", "", "", std::nullopt, "zero_totals", static_cast<double>(r.zero_totals),
               as_count(r.zero_totals));
      append(out["table1_ratios"], std::move(sink.tables["table1_ratios"]));
    }
  }
  if (ctx.want("fig3_monthly")) {
    for (const auto& r : metrics::monthly_median_ratio(data.volumes, config.thresholds.min_assets)) {
      out["fig3_monthly"].push_back({to_string(r.exchange), to_string(r.side), "", r.month, "", std::nullopt,
                                     "median_ratio", r.median_ratio, as_count(r.assets), ""});
    }
  }

  // series tables: one unit per (group, asset) plus one pooled unit per group
  std::map<Group, std::map<std::string, std::vector<const DayAuctionSeries*>>> by_group;
  for (const auto& s : data.series) by_group[{exchange_for(s.asset), s.side}][s.asset].push_back(&s);

  struct Unit {
    Group group;
    std::string asset;  // empty: pooled
    std::vector<const DayAuctionSeries*> days;
  };
  std::vector<Unit> units;
  for (const auto& [g, assets] : by_group) {
    Unit pooled{g, "", {}};
    for (const auto& [asset, days] : assets) {
      units.push_back({g, asset, days});
      pooled.days.insert(pooled.days.end(), days.begin(), days.end());
    }
    units.push_back(std::move(pooled));
  }

  const bool any_series_table = ctx.want("fig4_activity") || ctx.want("fig5_fraction") || ctx.want("fig6_hurst") ||
                                ctx.want("fig7_reduction") || ctx.want("fig8_response") ||
                                ctx.want("fig9_conditional") || ctx.want("fig10_spread") || ctx.want("fig11_ds") ||
                                ctx.want("fig12_reversion") || ctx.want("fig13_weightedmid");
  std::vector<Tables> unit_tables(units.size());
  std::vector<std::vector<std::string>> unit_warnings(units.size());
  std::vector<AssetSummary> unit_summary(units.size());
  if (any_series_table) {
    parallel_for(units.size(), config.jobs, [&](std::size_t i) {
      const Unit& u = units[i];
      std::vector<DayAuctionSeries> days;
      days.reserve(u.days.size());
      for (const auto* d : u.days) days.push_back(*d);
      RowSink sink{exchange_text(u.group.exchange), to_string(u.group.side), u.asset, {}};
      unit_summary[i] = series_figures(ctx, sink, days, unit_warnings[i]);
      unit_tables[i] = std::move(sink.tables);
    });
  }

  // per-group share of sub-diffusive assets
  std::map<Group, std::pair<std::size_t, std::size_t>> sub_diffusive;
  for (std::size_t i = 0; i < units.size(); ++i) {
    append(warnings, std::move(unit_warnings[i]));
    for (auto& [name, rows] : unit_tables[i]) append(out[name], std::move(rows));
    if (!units[i].asset.empty() && unit_summary[i].hurst_fitted) {
      auto& [hits, total] = sub_diffusive[units[i].group];
      ++total;
      if (unit_summary[i].sub_diffusive) ++hits;
    }
  }
  if (ctx.want("fig6_hurst")) {
    for (const auto& [g, ht] : sub_diffusive) {
      out["fig6_hurst"].push_back({exchange_text(g.exchange), to_string(g.side), "", "", "", std::nullopt,
                                   "sub_diffusive_share", share(ht.first, ht.second), as_count(ht.second), ""});
    }
  }

  // tails: matched order values p^x x filled per auction
  if (ctx.want("fig1_fig2_tails")) {
    std::map<ingest::SeriesKey, std::vector<double>> values;
    for (const auto& f : data.fills) values[f.key].push_back(static_cast<double>(f.price) * static_cast<double>(f.filled));

    std::vector<const std::pair<const ingest::SeriesKey, std::vector<double>>*> eligible;
    std::map<std::tuple<Group, std::string>, std::vector<double>> pooled;
    for (const auto& kv : values) {
      const Group g{exchange_for(kv.first.asset), kv.first.side};
      append(pooled[{g, kv.first.asset}], std::vector<double>(kv.second));
      if (kv.second.size() > config.thresholds.min_orders) eligible.push_back(&kv);
    }
    auto& table = out["fig1_fig2_tails"];
    for (const auto& [key, vals] : pooled) {
      const auto& [g, asset] = key;
      const auto pts = metrics::survival_points(vals, 100);
      for (std::size_t i = 0; i < pts.size(); ++i) {
        table.push_back({exchange_text(g.exchange), to_string(g.side), asset, "", "ecdf", as_count(i), "x",
                         pts[i].first, as_count(vals.size()), ""});
        table.push_back({exchange_text(g.exchange), to_string(g.side), asset, "", "ecdf", as_count(i), "p_greater",
                         pts[i].second, as_count(vals.size()), ""});
      }
    }

    std::vector<std::vector<TableRow>> rows(eligible.size());
    std::vector<std::vector<std::string>> warn(eligible.size());
    parallel_for(eligible.size(), config.jobs, [&](std::size_t i) {
      const auto& [key, vals] = *eligible[i];
      const Group g{exchange_for(key.asset), key.side};
      auto add = [&](const std::string& group, const std::string& stat, double v, std::size_t n) {
        rows[i].push_back({exchange_text(g.exchange), to_string(g.side), key.asset, key.date, group, std::nullopt, stat,
                           v, as_count(n), ""});
      };
      try {
        const auto r = metrics::tail_analysis(vals);
        add("powerlaw", "alpha", r.powerlaw.params[0], r.n);
        add("powerlaw", "xmin", r.xmin, r.n);
        add("powerlaw", "n_orders", static_cast<double>(vals.size()), vals.size());
        for (const auto& alt : r.alternatives) {
          const std::string fam = stats::to_string(alt.fit.family);
          add(fam, "vuong_statistic", alt.vuong.statistic, r.n);
          add(fam, "vuong_p", alt.vuong.p_value_one_sided, r.n);
        }
      } catch (const Error& e) {
        warn[i].push_back("fig1_fig2_tails " + key.asset + "/" + key.date + "/" + to_string(key.side) + ": " + e.what());
      }
    });
    std::map<std::pair<Group, std::string>, std::array<std::size_t, 3>> summary;  // below, above, total
    for (std::size_t i = 0; i < rows.size(); ++i) {
      append(warnings, std::move(warn[i]));
      const auto& key = eligible[i]->first;
      const Group g{exchange_for(key.asset), key.side};
      for (const auto& row : rows[i]) {
        if (row.statistic != "vuong_p") continue;
        auto& s = summary[{g, row.group}];
        if (row.value < 0.01) ++s[0];
        if (row.value > 0.99) ++s[1];
        ++s[2];
      }
      append(table, std::move(rows[i]));
    }
    for (const auto& [key, s] : summary) {
      const auto& [g, fam] = key;
      table.push_back({exchange_text(g.exchange), to_string(g.side), "", "", fam, std::nullopt, "share_p_below_0.01",
                       share(s[0], s[2]), as_count(s[2]), ""});
      table.push_back({exchange_text(g.exchange), to_string(g.side), "", "", fam, std::nullopt, "share_p_above_0.99",
                       share(s[1], s[2]), as_count(s[2]), ""});
    }
  }
  return out;
}

CommandReport cmd_simulate(const RunConfig& c) {
  validate(c);
  for (auto side : kSides) {
    flow::FlowParams p = c.simulation.flow[static_cast<std::size_t>(side)];
    for (auto e : kExchanges) {
      p.cutoff_ms = static_cast<TimeMs>(std::llround(cutoff_seconds(c, e, side) * 1000.0));
      flow::validate(p);
    }
  }
  ensure_dir(c.output);
  const fs::path dir(c.output);
  const auto dates = business_days(c.simulation.start_date, c.simulation.days);

  CommandReport report;
  report.command = "simulate";
  struct Stream {
    const char* name;
    const char* header;
    std::string AssetOutput::*member;
    std::ofstream out;
    std::size_t rows = 0;
  };
  std::array<Stream, 5> streams = {{
      {"tape.csv", ingest::kTapeHeader, &AssetOutput::tape, {}, 0},
      {"feed.csv", ingest::kFeedHeader, &AssetOutput::feed, {}, 0},
      {"quotes.csv", ingest::kQuotesHeader, &AssetOutput::quotes, {}, 0},
      {"auctions.csv", ingest::kAuctionsHeader, &AssetOutput::auctions, {}, 0},
      {"fills.csv", ingest::kFillsHeader, &AssetOutput::fills, {}, 0},
  }};
  for (auto& s : streams) {
    s.out = open_output(dir / s.name);
    s.out << s.header << '\n';
  }
  const std::size_t assets = c.simulation.assets;
  const std::size_t batch = std::max<std::size_t>(1, 2 * static_cast<std::size_t>(c.jobs));
  for (std::size_t first = 0; first < assets; first += batch) {
    const std::size_t n = std::min(batch, assets - first);
    std::vector<AssetOutput> outs(n);
    parallel_for(n, c.jobs, [&](std::size_t i) { outs[i] = simulate_asset(c, first + i, dates); });
    for (auto& o : outs) {
      for (auto& s : streams) {
        const std::string& text = o.*(s.member);
        s.out << text;
        s.rows += count_lines(text);
      }
      report.series += o.series;
      report.rejections += o.rejections;
    }
  }
  for (auto& s : streams) {
    close_output(s.out, dir / s.name);
    report.files[s.name] = s.rows;
  }

  const std::size_t panel_assets = std::max(assets, c.simulation.volumes.assets);
  std::vector<std::vector<DailyVolumeRecord>> panel(panel_assets);
  parallel_for(panel_assets, c.jobs, [&](std::size_t a) { panel[a] = volume_panel(c, a, dates); });
  auto vol = open_output(dir / "daily_volumes.csv");
  vol << ingest::kDailyVolumesHeader << '\n';
  std::size_t vrows = 0;
  for (const auto& recs : panel) {
    ingest::write_daily_volumes(vol, recs, false);
    vrows += recs.size();
  }
  close_output(vol, dir / "daily_volumes.csv");
  report.files["daily_volumes.csv"] = vrows;

  write_manifest(dir, report, c);
  return report;
}

CommandReport cmd_replay(const RunConfig& c) {
  validate(c);
  std::vector<std::string> warnings;
  const auto files = classify_inputs(c.inputs, warnings);
  std::vector<ingest::SessionTape> tapes;
  std::vector<ingest::AuctionRecord> auctions;
  std::vector<DailyVolumeRecord> volumes;
  std::vector<std::string> errors;
  for (const auto& f : files) {
    try {
      if (f.kind == FileKind::tape) append(tapes, ingest::parse_file(f.path, ingest::parse_tape));
      if (f.kind == FileKind::auctions) append(auctions, ingest::parse_file(f.path, ingest::parse_auctions));
      if (f.kind == FileKind::daily_volumes) append(volumes, ingest::parse_file(f.path, ingest::parse_daily_volumes));
    } catch (const Error& e) {
      if (e.code() == Errc::io_error) throw;
      errors.push_back(e.what());
    }
  }
  if (!errors.empty()) throw Error(Errc::schema_error, join_errors(errors));
  if (tapes.empty()) warnings.push_back("no order tape among the inputs");

  std::map<ingest::SeriesKey, const ingest::AuctionRecord*> auction_of;
  for (const auto& a : auctions) auction_of[a.key] = &a;
  std::map<std::string, Exchange> exchange_of;
  for (const auto& v : volumes) exchange_of[v.asset] = v.exchange;
  std::sort(tapes.begin(), tapes.end(), [](const auto& a, const auto& b) { return a.key < b.key; });

  std::vector<DayAuctionSeries> series(tapes.size());
  std::vector<std::vector<Rejection>> rejections(tapes.size());
  std::vector<std::string> missing_auction(tapes.size());
  parallel_for(tapes.size(), c.jobs, [&](std::size_t i) {
    const auto& t = tapes[i];
    SessionSpec spec;
    auto it = auction_of.find(t.key);
    if (it != auction_of.end()) {
      spec.reference_price = it->second->reference_price;
      spec.auction_time_ms = it->second->auction_time_ms;
    } else {
      missing_auction[i] = t.key.asset + "/" + t.key.date + "/" + to_string(t.key.side);
      spec.reference_price = 1;
      for (const auto& e : t.events) {
        if (e.action == TapeAction::submit && e.order.price) {
          spec.reference_price = *e.order.price;
          break;
        }
      }
      spec.auction_time_ms = t.events.empty() ? 1 : t.events.back().time_ms + 1;
    }
    auto ex = exchange_of.find(t.key.asset);
    const double cut = cutoff_seconds(c, ex == exchange_of.end() ? std::nullopt : std::optional(ex->second), t.key.side);
    spec.cutoff_ms = std::min(static_cast<TimeMs>(std::llround(cut * 1000.0)), spec.auction_time_ms);
    auto r = replay(spec, t.events);
    auto& s = series[i];
    s.asset = t.key.asset;
    s.date = t.key.date;
    s.side = t.key.side;
    s.updates = throttle(r.updates, c.throttle_hz);
    rejections[i] = std::move(r.rejections);
  });
  for (const auto& m : missing_auction)
    if (!m.empty()) warnings.push_back("no auction record for " + m + ": reference price from the first limit order");

  ensure_dir(c.output);
  const fs::path dir(c.output);
  CommandReport report;
  report.command = "replay";
  auto feed = open_output(dir / "feed.csv");
  ingest::write_feed(feed, series, true);
  close_output(feed, dir / "feed.csv");
  std::size_t rows = 0;
  for (const auto& s : series) rows += s.updates.size();
  report.files["feed.csv"] = rows;

  auto rej = open_output(dir / "rejections.csv");
  rej << kRejectionsHeader << '\n';
  for (std::size_t i = 0; i < tapes.size(); ++i) {
    for (const auto& r : rejections[i]) {
      std::string msg = r.message;
      std::replace(msg.begin(), msg.end(), ',', ';');
      rej << tapes[i].key.asset << ',' << tapes[i].key.date << ',' << to_string(tapes[i].key.side) << ','
          << r.event_index << ',' << r.time_ms << ',' << r.id << ',' << to_string(r.reason) << ',' << msg << '\n';
      ++report.rejections;
    }
  }
  close_output(rej, dir / "rejections.csv");
  report.files["rejections.csv"] = report.rejections;
  report.series = series.size();
  report.warnings = std::move(warnings);
  write_manifest(dir, report, c);
  return report;
}

CommandReport cmd_analyze(const RunConfig& c) {
  validate(c);
  Dataset data = load_dataset(c.inputs);
  CommandReport report;
  report.command = "analyze";
  report.series = data.series.size();
  report.warnings = std::move(data.warnings);
  if (data.series.empty() && data.volumes.empty() && data.fills.empty()) report.warnings.push_back("input holds no data");
  const Tables tables = analyze(data, c, report.warnings);

  ensure_dir(c.output);
  const fs::path dir(c.output);
  for (const auto& [name, rows] : tables) {
    const fs::path path = dir / (name + ".csv");
    auto out = open_output(path);
    out << kTableHeader << '\n';
    for (const auto& r : rows) {
      out << r.exchange << ',' << r.side << ',' << r.asset << ',' << r.date << ',' << r.group << ',';
      if (r.slice) out << *r.slice;
      out << ',' << r.statistic << ',' << format_double(r.value) << ',' << r.count << ',' << r.flag << '\n';
    }
    close_output(out, path);
    report.files[name + ".csv"] = rows.size();
  }
  write_manifest(dir, report, c);
  return report;
}

CommandReport run_command(const RunConfig& c) {
  if (c.command == "simulate") return cmd_simulate(c);
  if (c.command == "analyze") return cmd_analyze(c);
  if (c.command == "replay") return cmd_replay(c);
  throw Error(Errc::invalid_params, "unknown command '" + c.command + "'");
}

}  // namespace auctionlab::app
