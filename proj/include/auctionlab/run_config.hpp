#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "auctionlab/flow_gen.hpp"
#include "auctionlab/series.hpp"

namespace auctionlab::app {

/// Restricted-window length of one venue and auction side.
struct VenuePreset {
  std::string name;
  Exchange exchange = Exchange::nyse;
  AuctionSide side = AuctionSide::close;
  double cutoff_seconds = 0.0;
};

struct Thresholds {
  std::size_t min_updates = 50;   // Hurst: days with fewer updates are skipped
  std::size_t min_orders = 100;   // tails: auctions need more matched orders
  std::size_t min_assets = 100;   // monthly ratios: months need this many assets
};

/// log10 normal model of V^side / V_total per exchange and side.
struct VolumePanel {
  std::size_t assets = 330;
  std::array<std::array<double, 2>, 3> mean_log10{};  // [exchange][side]
  std::array<std::array<double, 2>, 3> sd_log10{};
  double total_log_mean = 13.8;  // natural log of daily shares
  double total_log_sd = 1.0;
};

struct SimulationConfig {
  std::size_t assets = 100;
  std::size_t days = 250;
  std::string start_date = "2020-01-02";
  /// Per-asset activity multiplier exp(N(0, activity_sd)) on the arrival rate.
  double activity_sd = 0.0;
  std::array<flow::FlowParams, 2> flow{};  // indexed by AuctionSide
  VolumePanel volumes;
};

struct RunConfig {
  std::string command;
  std::vector<std::string> inputs;
  std::string output;
  std::uint64_t seed = 1;
  unsigned jobs = 1;
  double slice_seconds = 60.0;
  std::optional<std::string> venue_preset;
  Thresholds thresholds;
  double throttle_hz = 0.0;
  std::string estimator = "all";
  bool literal_reduction_index = false;
  std::map<std::string, VenuePreset> presets;
  SimulationConfig simulation;
};

RunConfig default_config();

/// Overlays the keys present in `json_text` on `base`. Throws
/// Error{invalid_params} for malformed JSON, unknown enum names or values of
/// the wrong type.
RunConfig parse_config(std::string_view json_text, RunConfig base = default_config());

/// Canonical JSON of every field (sorted keys, stable across runs).
std::string config_to_json(const RunConfig& config);

/// Throws Error{invalid_params} naming the first bad field.
void validate(const RunConfig& config);

/// Cut-off for an asset on `exchange`: the forced preset when set and
/// matching the side, else the first preset for (exchange, side), else 0.
double cutoff_seconds(const RunConfig& config, std::optional<Exchange> exchange, AuctionSide side);

inline constexpr std::array<const char*, 13> kEstimators = {
    "table1_ratios", "fig3_monthly",  "fig4_activity",    "fig5_fraction",     "fig6_hurst",
    "fig7_reduction", "fig8_response", "fig9_conditional", "fig10_spread",      "fig11_ds",
    "fig12_reversion", "fig13_weightedmid", "fig1_fig2_tails"};

}  // namespace auctionlab::app
