#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "auctionlab/ingest.hpp"
#include "auctionlab/run_config.hpp"

namespace auctionlab::app {

/// Header shared by every analysis table.
inline constexpr const char* kTableHeader = "exchange,side,asset,date,group,slice,statistic,value,count,flag";
inline constexpr const char* kRejectionsHeader = "asset,date,side,event_index,time_ms,order_id,reason,message";

struct CommandReport {
  std::string command;
  std::map<std::string, std::size_t> files;  // file name -> data rows
  std::vector<std::string> warnings;
  std::size_t series = 0;
  std::size_t rejections = 0;
};

/// Summary JSON: command, files, series, rejections, warning count and text.
std::string report_to_json(const CommandReport& report);

/// One long-format table row. Empty text fields and missing slices are
/// written as empty CSV fields.
struct TableRow {
  std::string exchange;
  std::string side;
  std::string asset;
  std::string date;
  std::string group;
  std::optional<std::int64_t> slice;
  std::string statistic;
  double value = 0.0;
  std::int64_t count = 0;
  std::string flag;
};

using Tables = std::map<std::string, std::vector<TableRow>>;

/// Everything `analyze` reads, already joined and aligned.
struct Dataset {
  std::vector<DayAuctionSeries> series;
  std::vector<DailyVolumeRecord> volumes;
  std::vector<ingest::FillRecord> fills;
  std::map<std::string, Exchange> exchange_of;  // from the daily volume file
  std::vector<std::string> warnings;
};

/// Reads every input (files are recognised by their header line,
/// directories are scanned for *.csv). Schema errors of all files are
/// collected into one Error{schema_error}; a missing path is io_error.
Dataset load_dataset(const std::vector<std::string>& inputs);

/// Runs the selected estimators. Pure function of the dataset and config.
Tables analyze(const Dataset& data, const RunConfig& config, std::vector<std::string>& warnings);

CommandReport cmd_simulate(const RunConfig& config);
CommandReport cmd_analyze(const RunConfig& config);
CommandReport cmd_replay(const RunConfig& config);

/// Dispatches on config.command after validation. Throws Error.
CommandReport run_command(const RunConfig& config);

/// Business days from `start` (weekends skipped), ISO formatted.
std::vector<std::string> business_days(const std::string& start, std::size_t count);

}  // namespace auctionlab::app
