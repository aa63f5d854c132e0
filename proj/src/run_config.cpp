#include "auctionlab/run_config.hpp"

#include <cmath>
#include <json.hpp>

#include "auctionlab/ingest.hpp"

namespace auctionlab::app {

using nlohmann::json;
using flow::RateProfile;

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(Errc::invalid_params, what); }

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& path) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    bad("config: " + path + key + " has the wrong type");
  }
}

const json& object_at(const json& j, const char* key, const std::string& path) {
  static const json empty = json::object();
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return empty;
  if (!it->is_object()) bad("config: " + path + key + " must be an object");
  return *it;
}

RateProfile parse_profile(const std::string& s) {
  if (s == "constant") return RateProfile::constant;
  if (s == "linear") return RateProfile::linear;
  if (s == "convex") return RateProfile::convex;
  bad("config: unknown rate profile '" + s + "'");
}

const char* profile_name(RateProfile p) {
  switch (p) {
    case RateProfile::constant: return "constant";
    case RateProfile::linear: return "linear";
    case RateProfile::convex: return "convex";
  }
  return "constant";
}

Exchange exchange_of(const std::string& s) {
  auto e = parse_exchange(s);
  if (!e) bad("config: unknown exchange '" + s + "'");
  return *e;
}

AuctionSide side_of(const std::string& s) {
  auto side = parse_auction_side(s);
  if (!side) bad("config: unknown auction side '" + s + "'");
  return *side;
}

void read_flow(const json& j, flow::FlowParams& p, const std::string& path) {
  read(j, "duration_s", p.duration_s, path);
  read(j, "base_rate", p.base_rate, path);
  if (auto it = j.find("profile"); it != j.end() && it->is_string()) p.profile = parse_profile(it->get<std::string>());
  read(j, "acceleration", p.acceleration, path);
  read(j, "contrarian_prob", p.contrarian_prob, path);
  read(j, "cancel_prob", p.cancel_prob, path);
  read(j, "market_prob", p.market_prob, path);
  read(j, "price_dispersion", p.price_dispersion, path);
  read(j, "start_price", p.start_price, path);
  read(j, "volatility", p.volatility, path);
  read(j, "half_spread", p.half_spread, path);
  read(j, "quote_interval_ms", p.quote_interval_ms, path);
  read(j, "quote_size_mu", p.quote_size_mu, path);
  read(j, "quote_size_sigma", p.quote_size_sigma, path);
  read(j, "equal_quote_sizes", p.equal_quote_sizes, path);
  read(j, "burst_window_s", p.burst_window_s, path);
  read(j, "burst_cancel_prob", p.burst_cancel_prob, path);
  read(j, "anchor_size", p.anchor_size, path);
  const json& size = object_at(j, "size", path);
  if (auto it = size.find("family"); it != size.end() && it->is_string()) {
    const auto f = it->get<std::string>();
    if (f == "lognormal") {
      p.size.family = flow::SizeDistribution::Family::lognormal;
    } else if (f == "pareto") {
      p.size.family = flow::SizeDistribution::Family::pareto;
    } else {
      bad("config: unknown size family '" + f + "'");
    }
  }
  const std::string sp = path + "size.";
  read(size, "mu", p.size.mu, sp);
  read(size, "sigma", p.size.sigma, sp);
  read(size, "alpha", p.size.alpha, sp);
  read(size, "xmin", p.size.xmin, sp);
}

json flow_json(const flow::FlowParams& p) {
  return json{
      {"duration_s", p.duration_s},
      {"base_rate", p.base_rate},
      {"profile", profile_name(p.profile)},
      {"acceleration", p.acceleration},
      {"contrarian_prob", p.contrarian_prob},
      {"cancel_prob", p.cancel_prob},
      {"market_prob", p.market_prob},
      {"price_dispersion", p.price_dispersion},
      {"start_price", p.start_price},
      {"volatility", p.volatility},
      {"half_spread", p.half_spread},
      {"quote_interval_ms", p.quote_interval_ms},
      {"quote_size_mu", p.quote_size_mu},
      {"quote_size_sigma", p.quote_size_sigma},
      {"equal_quote_sizes", p.equal_quote_sizes},
      {"burst_window_s", p.burst_window_s},
      {"burst_cancel_prob", p.burst_cancel_prob},
      {"anchor_size", p.anchor_size},
      {"size",
       {{"family", p.size.family == flow::SizeDistribution::Family::lognormal ? "lognormal" : "pareto"},
        {"mu", p.size.mu},
        {"sigma", p.size.sigma},
        {"alpha", p.size.alpha},
        {"xmin", p.size.xmin}}},
  };
}

constexpr std::array<Exchange, 3> kExchanges = {Exchange::arca, Exchange::nasdaq, Exchange::nyse};
constexpr std::array<AuctionSide, 2> kSides = {AuctionSide::open, AuctionSide::close};

void read_panel_table(const json& j, std::array<std::array<double, 2>, 3>& table, const std::string& path) {
  for (auto& [name, sides] : j.items()) {
    const auto e = static_cast<std::size_t>(exchange_of(name));
    if (!sides.is_object()) bad("config: " + path + name + " must be an object");
    for (auto& [side, value] : sides.items()) {
      if (!value.is_number()) bad("config: " + path + name + "." + side + " must be a number");
      table[e][static_cast<std::size_t>(side_of(side))] = value.get<double>();
    }
  }
}

json panel_table_json(const std::array<std::array<double, 2>, 3>& table) {
  json out = json::object();
  for (auto e : kExchanges)
    for (auto s : kSides) out[to_string(e)][to_string(s)] = table[static_cast<std::size_t>(e)][static_cast<std::size_t>(s)];
  return out;
}

}  // namespace

RunConfig default_config() {
  RunConfig c;
  auto& open = c.simulation.flow[static_cast<std::size_t>(AuctionSide::open)];
  auto& close = c.simulation.flow[static_cast<std::size_t>(AuctionSide::close)];
  for (auto* f : {&open, &close}) {
    f->profile = RateProfile::convex;
    f->acceleration = 6.0;
    f->cancel_prob = 0.2;
    f->price_dispersion = 2.0;
    f->volatility = 1.0;
    f->quote_interval_ms = 60'000;
  }
  open.duration_s = 5400.0;
  open.base_rate = 0.006;
  close.duration_s = 3600.0;
  close.base_rate = 0.01;
  c.simulation.activity_sd = 0.6;
  // Typical auction share of daily volume per exchange and side.
  c.simulation.volumes.mean_log10 = {{{-1.72, -1.78}, {-1.51, -1.15}, {-1.61, std::log10(0.12)}}};
  c.simulation.volumes.sd_log10 = {{{0.62, 0.735}, {0.395, 0.41}, {0.45, 0.30}}};
  // Fallback cut-offs; the bundled config file carries the same values and may override them.
  c.presets["ARCA-close"] = {"ARCA-close", Exchange::arca, AuctionSide::close, 60.0};
  c.presets["NASDAQ-close"] = {"NASDAQ-close", Exchange::nasdaq, AuctionSide::close, 300.0};
  c.presets["NYSE-close"] = {"NYSE-close", Exchange::nyse, AuctionSide::close, 600.0};
  return c;
}

RunConfig parse_config(std::string_view json_text, RunConfig c) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    bad(std::string("config: ") + e.what());
  }
  if (!j.is_object()) bad("config: top level must be an object");

  read(j, "command", c.command, "");
  if (auto it = j.find("inputs"); it != j.end()) {
    if (it->is_string()) {
      c.inputs = {it->get<std::string>()};
    } else {
      read(j, "inputs", c.inputs, "");
    }
  }
  read(j, "output", c.output, "");
  read(j, "seed", c.seed, "");
  read(j, "jobs", c.jobs, "");
  read(j, "slice_seconds", c.slice_seconds, "");
  if (auto it = j.find("venue_preset"); it != j.end()) {
    if (it->is_null()) {
      c.venue_preset.reset();
    } else if (it->is_string()) {
      c.venue_preset = it->get<std::string>();
    } else {
      bad("config: venue_preset must be a string");
    }
  }
  read(j, "throttle_hz", c.throttle_hz, "");
  read(j, "estimator", c.estimator, "");
  read(j, "literal_reduction_index", c.literal_reduction_index, "");

  const json& th = object_at(j, "thresholds", "");
  read(th, "min_updates", c.thresholds.min_updates, "thresholds.");
  read(th, "min_orders", c.thresholds.min_orders, "thresholds.");
  read(th, "min_assets", c.thresholds.min_assets, "thresholds.");

  for (auto& [name, v] : object_at(j, "venue_presets", "").items()) {
    if (!v.is_object()) bad("config: venue_presets." + name + " must be an object");
    VenuePreset p;
    p.name = name;
    std::string exchange, side;
    read(v, "exchange", exchange, "venue_presets." + name + ".");
    read(v, "side", side, "venue_presets." + name + ".");
    read(v, "cutoff_seconds", p.cutoff_seconds, "venue_presets." + name + ".");
    p.exchange = exchange_of(exchange);
    p.side = side_of(side);
    c.presets[name] = p;
  }

  const json& sim = object_at(j, "simulation", "");
  read(sim, "assets", c.simulation.assets, "simulation.");
  read(sim, "days", c.simulation.days, "simulation.");
  read(sim, "start_date", c.simulation.start_date, "simulation.");
  read(sim, "activity_sd", c.simulation.activity_sd, "simulation.");
  const json& common = object_at(sim, "flow", "simulation.");
  for (auto s : kSides) read_flow(common, c.simulation.flow[static_cast<std::size_t>(s)], "simulation.flow.");
  const json& sessions = object_at(sim, "sessions", "simulation.");
  for (auto s : kSides) {
    const std::string name = to_string(s);
    read_flow(object_at(sessions, name.c_str(), "simulation.sessions."), c.simulation.flow[static_cast<std::size_t>(s)],
              "simulation.sessions." + name + ".");
  }
  const json& vol = object_at(sim, "volumes", "simulation.");
  read(vol, "assets", c.simulation.volumes.assets, "simulation.volumes.");
  read(vol, "total_log_mean", c.simulation.volumes.total_log_mean, "simulation.volumes.");
  read(vol, "total_log_sd", c.simulation.volumes.total_log_sd, "simulation.volumes.");
  read_panel_table(object_at(vol, "mean_log10", "simulation.volumes."), c.simulation.volumes.mean_log10,
                   "simulation.volumes.mean_log10.");
  read_panel_table(object_at(vol, "sd_log10", "simulation.volumes."), c.simulation.volumes.sd_log10,
                   "simulation.volumes.sd_log10.");
  return c;
}

std::string config_to_json(const RunConfig& c) {
  json presets = json::object();
  for (const auto& [name, p] : c.presets) {
    presets[name] = {{"exchange", to_string(p.exchange)}, {"side", to_string(p.side)}, {"cutoff_seconds", p.cutoff_seconds}};
  }
  json sessions = json::object();
  for (auto s : kSides) sessions[to_string(s)] = flow_json(c.simulation.flow[static_cast<std::size_t>(s)]);
  json j = {
      {"command", c.command},
      {"inputs", c.inputs},
      {"output", c.output},
      {"seed", c.seed},
      {"jobs", c.jobs},
      {"slice_seconds", c.slice_seconds},
      {"venue_preset", c.venue_preset ? json(*c.venue_preset) : json(nullptr)},
      {"throttle_hz", c.throttle_hz},
      {"estimator", c.estimator},
      {"literal_reduction_index", c.literal_reduction_index},
      {"thresholds",
       {{"min_updates", c.thresholds.min_updates},
        {"min_orders", c.thresholds.min_orders},
        {"min_assets", c.thresholds.min_assets}}},
      {"venue_presets", presets},
      {"simulation",
       {{"assets", c.simulation.assets},
        {"days", c.simulation.days},
        {"start_date", c.simulation.start_date},
        {"activity_sd", c.simulation.activity_sd},
        {"sessions", sessions},
        {"volumes",
         {{"assets", c.simulation.volumes.assets},
          {"total_log_mean", c.simulation.volumes.total_log_mean},
          {"total_log_sd", c.simulation.volumes.total_log_sd},
          {"mean_log10", panel_table_json(c.simulation.volumes.mean_log10)},
          {"sd_log10", panel_table_json(c.simulation.volumes.sd_log10)}}}}},
  };
  return j.dump(2);
}

void validate(const RunConfig& c) {
  if (c.jobs == 0) bad("jobs must be positive");
  if (!(c.slice_seconds > 0.0) || std::llround(c.slice_seconds * 1000.0) <= 0) bad("slice width must be positive");
  if (c.thresholds.min_updates == 0 || c.thresholds.min_orders == 0 || c.thresholds.min_assets == 0)
    bad("thresholds must be positive");
  if (c.throttle_hz < 0.0) bad("throttle rate must be non-negative");
  for (const auto& [name, p] : c.presets)
    if (p.cutoff_seconds < 0.0) bad("venue preset " + name + " has a negative cut-off");
  if (c.venue_preset && !c.presets.count(*c.venue_preset)) bad("unknown venue preset '" + *c.venue_preset + "'");
  if (c.estimator != "all") {
    bool known = false;
    for (const char* e : kEstimators) known = known || c.estimator == e;
    if (!known) bad("unknown estimator '" + c.estimator + "'");
  }
  const auto& sim = c.simulation;
  if (sim.activity_sd < 0.0) bad("activity sd must be non-negative");
  if (sim.volumes.total_log_sd < 0.0) bad("volume total sd must be non-negative");
  for (const auto& row : sim.volumes.sd_log10)
    for (double v : row)
      if (v < 0.0) bad("volume ratio sd must be non-negative");
  for (const auto& row : sim.volumes.mean_log10)
    for (double v : row)
      if (!(v < 0.0)) bad("volume ratio mean log10 must be negative");
  if (!ingest::is_iso_date(sim.start_date)) bad("start date must be yyyy-mm-dd");
}

double cutoff_seconds(const RunConfig& c, std::optional<Exchange> exchange, AuctionSide side) {
  if (c.venue_preset) {
    auto it = c.presets.find(*c.venue_preset);
    if (it != c.presets.end() && it->second.side == side) return it->second.cutoff_seconds;
  }
  for (const auto& [name, p] : c.presets)
    if (exchange && p.exchange == *exchange && p.side == side) return p.cutoff_seconds;
  return 0.0;
}

}  // namespace auctionlab::app
