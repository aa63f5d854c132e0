#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "auctionlab/commands.hpp"
#include "auctionlab/ingest.hpp"
#include "json.hpp"

using namespace auctionlab;
using namespace auctionlab::app;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("auctionlab_test_commands_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void put(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

std::vector<std::vector<std::string>> csv_rows(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(slurp(p));
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

std::map<std::string, std::string> directory_contents(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) out[e.path().filename().string()] = slurp(e.path());
  return out;
}

RunConfig small_simulation(const fs::path& out) {
  RunConfig c = default_config();
  c.command = "simulate";
  c.output = out.string();
  c.seed = 11;
  c.simulation.assets = 3;
  c.simulation.days = 4;
  c.simulation.volumes.assets = 5;
  return c;
}

// table columns: exchange,side,asset,date,group,slice,statistic,value,count,flag
enum Col { kExchange, kSide, kAsset, kDate, kGroup, kSlice, kStatistic, kValue, kCount, kFlag };

}  // namespace

// ---------------------------------------------------------------- config

TEST(Config, DefaultPresetsMatchVenueRules) {
  const RunConfig c = default_config();
  EXPECT_DOUBLE_EQ(c.presets.at("ARCA-close").cutoff_seconds, 60.0);
  EXPECT_DOUBLE_EQ(c.presets.at("NASDAQ-close").cutoff_seconds, 300.0);
  EXPECT_DOUBLE_EQ(c.presets.at("NYSE-close").cutoff_seconds, 600.0);
  EXPECT_EQ(c.thresholds.min_updates, 50u);
  EXPECT_EQ(c.thresholds.min_orders, 100u);
  EXPECT_EQ(c.thresholds.min_assets, 100u);
  EXPECT_DOUBLE_EQ(c.slice_seconds, 60.0);
}

TEST(Config, BundledFileAgreesWithDefaults) {
  const std::string text = slurp(fs::path(AUCTIONLAB_SOURCE_DIR) / "config" / "auctionlab.json");
  ASSERT_FALSE(text.empty());
  EXPECT_EQ(config_to_json(parse_config(text)), config_to_json(default_config()));
}

TEST(Config, CanonicalJsonRoundTrips) {
  RunConfig c = default_config();
  c.seed = 99;
  c.venue_preset = "NASDAQ-close";
  c.simulation.flow[1].contrarian_prob = 0.55;
  const std::string j = config_to_json(c);
  EXPECT_EQ(config_to_json(parse_config(j, RunConfig{})), j);
}

TEST(Config, OverlayKeepsUnsetFields) {
  const RunConfig c = parse_config(R"({"seed": 5, "thresholds": {"min_orders": 7}})");
  EXPECT_EQ(c.seed, 5u);
  EXPECT_EQ(c.thresholds.min_orders, 7u);
  EXPECT_EQ(c.thresholds.min_updates, 50u);
  EXPECT_EQ(c.presets.size(), default_config().presets.size());
}

TEST(Config, RejectsBadInput) {
  auto code = [](const std::string& text) {
    try {
      validate(parse_config(text));
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::internal;
  };
  EXPECT_EQ(code("{not json"), Errc::invalid_params);
  EXPECT_EQ(code(R"({"seed": "abc"})"), Errc::invalid_params);
  EXPECT_EQ(code(R"({"thresholds": {"min_updates": 0}})"), Errc::invalid_params);
  EXPECT_EQ(code(R"({"venue_preset": "LSE-close"})"), Errc::invalid_params);
  EXPECT_EQ(code(R"({"simulation": {"sessions": {"open": {"profile": "cubic"}}}})"), Errc::invalid_params);
}

TEST(Config, CutoffFollowsPresets) {
  RunConfig c = default_config();
  EXPECT_DOUBLE_EQ(cutoff_seconds(c, Exchange::nyse, AuctionSide::close), 600.0);
  EXPECT_DOUBLE_EQ(cutoff_seconds(c, Exchange::arca, AuctionSide::close), 60.0);
  EXPECT_DOUBLE_EQ(cutoff_seconds(c, Exchange::nyse, AuctionSide::open), 0.0);
  EXPECT_DOUBLE_EQ(cutoff_seconds(c, std::nullopt, AuctionSide::close), 0.0);
  c.venue_preset = "NASDAQ-close";
  EXPECT_DOUBLE_EQ(cutoff_seconds(c, std::nullopt, AuctionSide::close), 300.0);
  EXPECT_DOUBLE_EQ(cutoff_seconds(c, Exchange::arca, AuctionSide::close), 300.0);
  EXPECT_DOUBLE_EQ(cutoff_seconds(c, Exchange::arca, AuctionSide::open), 0.0);
}

TEST(Config, BusinessDaysSkipWeekends) {
  EXPECT_EQ(business_days("2020-01-02", 4),
            (std::vector<std::string>{"2020-01-02", "2020-01-03", "2020-01-06", "2020-01-07"}));
  EXPECT_EQ(business_days("2020-02-28", 2), (std::vector<std::string>{"2020-02-28", "2020-03-02"}));
}

// ---------------------------------------------------------------- simulate

TEST(Simulate, SameSeedGivesIdenticalDirectories) {
  const fs::path a = scratch("sim_a"), b = scratch("sim_b");
  RunConfig c = small_simulation(a);
  const auto ra = cmd_simulate(c);
  c.output = b.string();
  c.jobs = 3;
  cmd_simulate(c);
  const auto da = directory_contents(a), db = directory_contents(b);
  EXPECT_EQ(da.size(), 7u);
  EXPECT_EQ(da, db);
  EXPECT_EQ(ra.series, 3u * 4u * 2u);
}

TEST(Simulate, DifferentSeedChangesTape) {
  const fs::path a = scratch("seed_a"), b = scratch("seed_b");
  RunConfig c = small_simulation(a);
  cmd_simulate(c);
  c.output = b.string();
  c.seed = 12;
  cmd_simulate(c);
  EXPECT_NE(slurp(a / "tape.csv"), slurp(b / "tape.csv"));
}

TEST(Simulate, CreatesMissingOutputDirectory) {
  const fs::path root = scratch("nested");
  const fs::path out = root / "x" / "y";
  ASSERT_FALSE(fs::exists(out));
  cmd_simulate(small_simulation(out));
  EXPECT_TRUE(fs::exists(out / "manifest.json"));
}

TEST(Simulate, ManifestRecordsSeedAndParameters) {
  const fs::path out = scratch("manifest");
  cmd_simulate(small_simulation(out));
  const auto m = nlohmann::json::parse(slurp(out / "manifest.json"));
  EXPECT_EQ(m["config"]["seed"], 11);
  EXPECT_EQ(m["config"]["simulation"]["assets"], 3);
  EXPECT_TRUE(m["config"]["simulation"]["sessions"].contains("close"));
  EXPECT_FALSE(m["config"].contains("output"));
  EXPECT_EQ(m["series"], 24);
}

TEST(Simulate, InvalidParametersRejected) {
  RunConfig c = small_simulation(scratch("invalid"));
  c.simulation.flow[0].contrarian_prob = 1.5;
  try {
    run_command(c);
    FAIL() << "expected invalid_params";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::invalid_params);
  }
  c = small_simulation(scratch("invalid"));
  c.jobs = 0;
  EXPECT_THROW(run_command(c), Error);
}

TEST(Simulate, EveryFileParses) {
  const fs::path out = scratch("parse");
  const auto r = cmd_simulate(small_simulation(out));
  const auto data = load_dataset({out.string()});
  EXPECT_EQ(data.series.size(), r.series);
  EXPECT_EQ(data.volumes.size(), 5u * 4u);
  EXPECT_EQ(data.fills.size(), r.files.at("fills.csv"));
  EXPECT_TRUE(data.warnings.empty());
  for (const auto& s : data.series) {
    ASSERT_TRUE(data.exchange_of.count(s.asset)) << s.asset;
    EXPECT_FALSE(s.quotes.empty());
  }
}

// ---------------------------------------------------------------- analyze

TEST(Analyze, EmptyInputGivesEmptyTables) {
  const fs::path in = scratch("empty_in"), out = scratch("empty_out");
  fs::create_directories(in);
  RunConfig c = default_config();
  c.command = "analyze";
  c.inputs = {in.string()};
  c.output = out.string();
  const auto r = run_command(c);
  EXPECT_EQ(r.files.size(), kEstimators.size());
  for (const char* name : kEstimators) {
    EXPECT_EQ(r.files.at(std::string(name) + ".csv"), 0u) << name;
    EXPECT_EQ(slurp(out / (std::string(name) + ".csv")), std::string(kTableHeader) + "\n");
  }
  EXPECT_GE(r.warnings.size(), 1u);
}

TEST(Analyze, SingleEstimatorWritesOneTable) {
  const fs::path in = scratch("one_in"), out = scratch("one_out");
  fs::create_directories(in);
  RunConfig c = default_config();
  c.command = "analyze";
  c.inputs = {in.string()};
  c.output = out.string();
  c.estimator = "fig6_hurst";
  const auto r = run_command(c);
  ASSERT_EQ(r.files.size(), 1u);
  EXPECT_TRUE(r.files.count("fig6_hurst.csv"));
}

TEST(Analyze, MissingInputIsIoError) {
  RunConfig c = default_config();
  c.command = "analyze";
  c.inputs = {(scratch("absent") / "nothing.csv").string()};
  c.output = scratch("absent_out").string();
  try {
    run_command(c);
    FAIL() << "expected io_error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::io_error);
  }
}

TEST(Analyze, SchemaErrorsAggregatedAcrossFiles) {
  const fs::path in = scratch("schema");
  put(in / "a.csv", std::string(ingest::kFeedHeader) + "\nX,2020-01-02,close,abc,100,1,0\n");
  put(in / "b.csv", std::string(ingest::kFeedHeader) + "\nY,2020-01-02,close,5,100,1\n");
  try {
    load_dataset({in.string()});
    FAIL() << "expected schema_error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::schema_error);
    const std::string msg = e.what();
    EXPECT_NE(msg.find("a.csv"), std::string::npos) << msg;
    EXPECT_NE(msg.find("b.csv"), std::string::npos) << msg;
  }
}

TEST(Analyze, ContrarianShareRecoveredFromSimulatedDataset) {
  const fs::path sim = scratch("q_sim"), out = scratch("q_out");
  RunConfig c = default_config();
  c.command = "simulate";
  c.output = sim.string();
  c.seed = 3;
  c.simulation.assets = 6;
  c.simulation.days = 10;
  c.simulation.activity_sd = 0.0;
  c.simulation.volumes.assets = 6;
  c.presets.clear();  // no restricted phase: it would filter the injected flow
  for (auto& p : c.simulation.flow) {
    p.duration_s = 600;
    p.base_rate = 1.0;
    p.profile = flow::RateProfile::constant;
    p.price_dispersion = 0.0;
    p.volatility = 0.0;
    p.anchor_size = 100;
    p.cancel_prob = 0.0;
    p.contrarian_prob = 0.6;
  }
  run_command(c);
  c.command = "analyze";
  c.inputs = {sim.string()};
  c.output = out.string();
  c.estimator = "fig7_reduction";
  run_command(c);

  std::size_t pooled_units = 0;
  for (const auto& row : csv_rows(out / "fig7_reduction.csv")) {
    if (row[kAsset].empty() && row[kStatistic] == "overall") {
      EXPECT_NEAR(std::stod(row[kValue]), 0.6, 0.02) << row[kExchange] << " " << row[kSide];
      ++pooled_units;
    }
  }
  EXPECT_EQ(pooled_units, 6u);  // three exchanges x two sides
}

TEST(Analyze, ResponseTableMatchesHandComputation) {
  // Three updates: a buy arrival raising W 50 -> 80 and I 20 -> 40, then a
  // buy cancellation taking W to 60 and I to -10. Final price 101.
  const fs::path in = scratch("resp_in"), out = scratch("resp_out");
  put(in / "feed.csv", std::string(ingest::kFeedHeader) +
                           "\nX,2020-01-02,close,10000,100,50,20"
                           "\nX,2020-01-02,close,70000,102,80,40"
                           "\nX,2020-01-02,close,130000,99,60,-10\n");
  put(in / "auctions.csv", std::string(ingest::kAuctionsHeader) + "\nX,2020-01-02,close,200000,100,101,70\n");
  RunConfig c = default_config();
  c.command = "analyze";
  c.inputs = {in.string()};
  c.output = out.string();
  c.estimator = "fig8_response";
  run_command(c);

  std::map<std::string, std::vector<std::string>> medians;
  for (const auto& row : csv_rows(out / "fig8_response.csv")) {
    if (row[kAsset] != "X" || row[kStatistic] != "median") continue;
    medians[row[kGroup] + "@" + row[kSlice]] = row;
  }
  ASSERT_EQ(medians.size(), 2u);
  // buy arrival at t = 10 s: +1 * (log 101 - log 100), first minute
  const auto& arrival = medians.at("new_order@0");
  EXPECT_NEAR(std::stod(arrival[kValue]), std::log(101.0 / 100.0), 1e-12);
  EXPECT_EQ(arrival[kCount], "1");
  EXPECT_EQ(arrival[kFlag], "low_support");
  // buy cancellation at t = 70 s: dI < 0 so epsilon = +1, value log 101 - log 102
  const auto& cancel = medians.at("cancellation@1");
  EXPECT_NEAR(std::stod(cancel[kValue]), std::log(101.0 / 102.0), 1e-12);
  EXPECT_EQ(cancel[kCount], "1");
}

// ---------------------------------------------------------------- replay

namespace {

RunConfig replay_config(const fs::path& in, const fs::path& out) {
  RunConfig c = default_config();
  c.command = "replay";
  c.inputs = {in.string()};
  c.output = out.string();
  return c;
}

}  // namespace

TEST(Replay, SingleCrossedPair) {
  const fs::path in = scratch("pair_in"), out = scratch("pair_out");
  put(in / "tape.csv", std::string(ingest::kTapeHeader) +
                           "\nX,2020-01-02,close,1000,submit,1,buy,limit,100,100"
                           "\nX,2020-01-02,close,2000,submit,2,sell,limit,100,100\n");
  const auto r = run_command(replay_config(in, out));
  EXPECT_EQ(r.files.at("feed.csv"), 2u);
  EXPECT_EQ(r.rejections, 0u);
  const auto rows = csv_rows(out / "feed.csv");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0][4], "");  // no cross after the first order
  EXPECT_EQ(rows[1][4], "100");
  EXPECT_EQ(rows[1][5], "100");
  EXPECT_EQ(rows[1][6], "0");
}

TEST(Replay, ReproducesSimulatedFeed) {
  const fs::path sim = scratch("rt_sim"), out = scratch("rt_out");
  cmd_simulate(small_simulation(sim));
  RunConfig c = replay_config(sim / "tape.csv", out);
  c.inputs.push_back((sim / "auctions.csv").string());
  c.inputs.push_back((sim / "daily_volumes.csv").string());
  const auto r = run_command(c);
  EXPECT_EQ(r.series, 24u);
  EXPECT_EQ(slurp(out / "feed.csv"), slurp(sim / "feed.csv"));
}

TEST(Replay, RestrictedWorseningOrderRejectedAndLogged) {
  const fs::path in = scratch("restr_in"), out = scratch("restr_out");
  // NYSE close: restricted from 600 s before the auction at 1000 s.
  put(in / "tape.csv", std::string(ingest::kTapeHeader) +
                           "\nX,2020-01-02,close,1000,submit,1,buy,limit,100,100"
                           "\nX,2020-01-02,close,2000,submit,2,sell,limit,100,60"
                           "\nX,2020-01-02,close,500000,submit,3,buy,limit,101,50"
                           "\nX,2020-01-02,close,510000,submit,4,sell,limit,99,20\n");
  put(in / "auctions.csv", std::string(ingest::kAuctionsHeader) + "\nX,2020-01-02,close,1000000,100,,\n");
  RunConfig c = replay_config(in, out);
  c.venue_preset = "NYSE-close";
  const auto r = run_command(c);
  EXPECT_EQ(r.rejections, 1u);

  const auto feed = csv_rows(out / "feed.csv");
  ASSERT_EQ(feed.size(), 3u);
  for (const auto& row : feed) EXPECT_NE(row[3], "500000");
  EXPECT_EQ(feed.back()[6], "20");  // 100 bought against 80 sold

  const auto rej = csv_rows(out / "rejections.csv");
  ASSERT_EQ(rej.size(), 1u);
  EXPECT_EQ(rej[0][5], "3");
  EXPECT_EQ(rej[0][6], to_string(Errc::imbalance_worsening));
}

TEST(Replay, ThrottleKeepsLastUpdatePerWindow) {
  const fs::path in = scratch("thr_in"), out = scratch("thr_out");
  put(in / "tape.csv", std::string(ingest::kTapeHeader) +
                           "\nX,2020-01-02,close,100,submit,1,buy,limit,100,10"
                           "\nX,2020-01-02,close,200,submit,2,sell,limit,100,10"
                           "\nX,2020-01-02,close,300,submit,3,buy,limit,100,5"
                           "\nX,2020-01-02,close,1500,submit,4,sell,limit,100,5\n");
  RunConfig c = replay_config(in, out);
  c.throttle_hz = 1.0;
  run_command(c);
  const auto feed = csv_rows(out / "feed.csv");
  ASSERT_EQ(feed.size(), 2u);
  EXPECT_EQ(feed[0][3], "300");
  EXPECT_EQ(feed[0][6], "5");
  EXPECT_EQ(feed[1][3], "1500");
  EXPECT_EQ(feed[1][5], "15");
}

TEST(Replay, TapeSchemaErrorReported) {
  const fs::path in = scratch("bad_tape"), out = scratch("bad_tape_out");
  put(in / "tape.csv", std::string(ingest::kTapeHeader) + "\nX,2020-01-02,close,1000,submit,1,buy,limit,100,-5\n");
  try {
    run_command(replay_config(in, out));
    FAIL() << "expected schema_error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::schema_error);
  }
}
