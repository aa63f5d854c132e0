#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "auctionlab/auctionlab.h"
#include "json.hpp"

using json = nlohmann::json;

namespace {

constexpr const char* kEstimatorHelp =
    "Estimator table to compute, or 'all'. One of table1_ratios, fig3_monthly, fig4_activity, "
    "fig5_fraction, fig6_hurst, fig7_reduction, fig8_response, fig9_conditional, fig10_spread, "
    "fig11_ds, fig12_reversion, fig13_weightedmid, fig1_fig2_tails. In fig1_fig2_tails the Vuong "
    "p-value is oriented so that a small p favors the heavy (power-law) tail.";

struct Flags {
  std::string config_path;
  std::vector<std::string> inputs;
  std::string output;
  std::uint64_t seed = 0;
  unsigned jobs = 0;
  double slice_seconds = 0;
  std::string venue_preset;
  std::size_t min_updates = 0;
  std::size_t min_orders = 0;
  double throttle_hz = 0;
  std::string estimator;
  bool literal_reduction_index = false;
  bool print_config = false;
};

int input_error(const std::string& msg) {
  std::cerr << "{\"error\":" << json(msg).dump() << ",\"exit\":1}\n";
  return 1;
}

/// Reads the base configuration: --config, else $AUCTIONLAB_CONFIG, else the bundled file if present.
bool load_base(const Flags& f, json& out, std::string& err) {
  std::string path = f.config_path;
  bool required = !path.empty();
  if (path.empty()) {
    if (const char* env = std::getenv("AUCTIONLAB_CONFIG"); env && *env) {
      path = env;
      required = true;
    }
  }
#ifdef AUCTIONLAB_DEFAULT_CONFIG
  if (path.empty()) path = AUCTIONLAB_DEFAULT_CONFIG;
#endif
  out = json::object();
  if (path.empty()) return true;
  std::ifstream in(path);
  if (!in) {
    if (!required) return true;
    err = "cannot open config file " + path;
    return false;
  }
  std::stringstream ss;
  ss << in.rdbuf();
  out = json::parse(ss.str(), nullptr, false);
  if (out.is_discarded() || !out.is_object()) {
    err = "config file " + path + " is not a JSON object";
    return false;
  }
  return true;
}

json overlay(const CLI::App& sub, const Flags& f) {
  json o = json::object();
  o["command"] = sub.get_name();
  if (sub.count("--input")) o["inputs"] = f.inputs;
  if (sub.count("--output")) o["output"] = f.output;
  if (sub.count("--seed")) o["seed"] = f.seed;
  if (sub.count("--jobs")) o["jobs"] = f.jobs;
  if (sub.count("--slice-seconds")) o["slice_seconds"] = f.slice_seconds;
  if (sub.count("--venue-preset")) o["venue_preset"] = f.venue_preset;
  if (sub.count("--min-updates")) o["thresholds"]["min_updates"] = f.min_updates;
  if (sub.count("--min-orders")) o["thresholds"]["min_orders"] = f.min_orders;
  if (sub.count("--throttle-hz")) o["throttle_hz"] = f.throttle_hz;
  if (sub.count("--estimator")) o["estimator"] = f.estimator;
  if (sub.count("--literal-reduction-index")) o["literal_reduction_index"] = f.literal_reduction_index;
  return o;
}

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config_path, "JSON config file (overrides $AUCTIONLAB_CONFIG)");
  sub->add_option("--input", f.inputs, "Input CSV files or directories")->take_all();
  sub->add_option("--output", f.output, "Output directory (created if missing)");
  sub->add_option("--seed", f.seed, "Random seed");
  sub->add_option("--jobs", f.jobs, "Worker threads")->check(CLI::Range(1u, 4096u));
  sub->add_option("--slice-seconds", f.slice_seconds, "Time-slice width in seconds");
  sub->add_option("--venue-preset", f.venue_preset, "Force a cut-off preset, e.g. NYSE-close");
  sub->add_option("--min-updates", f.min_updates, "Minimum price updates per day for Hurst estimation");
  sub->add_option("--min-orders", f.min_orders, "Minimum matched orders per auction for tail tests");
  sub->add_option("--throttle-hz", f.throttle_hz, "Feed dissemination rate limit (0 = unthrottled)");
  sub->add_option("--estimator", f.estimator, kEstimatorHelp);
  sub->add_flag("--literal-reduction-index", f.literal_reduction_index,
                "Index the imbalance-reduction rule by the post-event imbalance");
  sub->add_flag("--print-config", f.print_config, "Print the resolved configuration and exit");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Call-auction order book simulator and analysis toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", alab_version());
  Flags flags;
  CLI::App* simulate = app.add_subcommand("simulate", "Generate a synthetic dataset (tape, feed, quotes, volumes)");
  CLI::App* analyze = app.add_subcommand("analyze", "Compute the estimator tables from a dataset");
  CLI::App* replay = app.add_subcommand("replay", "Replay an order tape into an indicative feed");
  for (CLI::App* sub : {simulate, analyze, replay}) add_common(sub, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  CLI::App* sub = app.get_subcommands().front();

  json config;
  std::string err;
  if (!load_base(flags, config, err)) return input_error(err);
  config.merge_patch(overlay(*sub, flags));
  const std::string text = config.dump();

  if (flags.print_config) {
    char* resolved = nullptr;
    const alab_status st = alab_config_resolve(text.c_str(), &resolved);
    if (st != ALAB_OK) return input_error(alab_last_error());
    std::cout << json::parse(resolved).dump(2) << "\n";
    alab_free_string(resolved);
    return 0;
  }

  char* report = nullptr;
  const alab_status st = alab_run(text.c_str(), &report);
  if (st != ALAB_OK) {
    std::cerr << json{{"error", alab_status_name(st)}, {"message", alab_last_error()}, {"exit", alab_exit_code(st)}}.dump()
              << "\n";
    return alab_exit_code(st);
  }
  json r = json::parse(report, nullptr, false);
  alab_free_string(report);
  if (!r.is_discarded()) {
    if (auto it = r.find("warning_messages"); it != r.end() && it->is_array()) {
      for (const auto& w : *it) std::cerr << json{{"warning", w}}.dump() << "\n";
      r.erase("warning_messages");
    }
    std::cout << r.dump(2) << "\n";
  }
  return 0;
}
