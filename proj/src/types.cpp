#include "auctionlab/types.hpp"

namespace auctionlab {

const char* to_string(Side s) { return s == Side::buy ? "buy" : "sell"; }

const char* to_string(OrderKind k) { return k == OrderKind::limit ? "limit" : "market"; }

const char* to_string(Phase p) {
  switch (p) {
    case Phase::open: return "open";
    case Phase::restricted: return "restricted";
    case Phase::closed: return "closed";
  }
  return "?";
}

const char* to_string(AuctionSide s) { return s == AuctionSide::open ? "open" : "close"; }

std::optional<Side> parse_side(std::string_view s) {
  if (s == "buy") return Side::buy;
  if (s == "sell") return Side::sell;
  return std::nullopt;
}

std::optional<OrderKind> parse_kind(std::string_view s) {
  if (s == "limit") return OrderKind::limit;
  if (s == "market") return OrderKind::market;
  return std::nullopt;
}

std::optional<AuctionSide> parse_auction_side(std::string_view s) {
  if (s == "open") return AuctionSide::open;
  if (s == "close") return AuctionSide::close;
  return std::nullopt;
}

const char* to_string(Errc e) {
  switch (e) {
    case Errc::invalid_argument: return "InvalidArgument";
    case Errc::invalid_order: return "InvalidOrder";
    case Errc::auction_closed: return "AuctionClosed";
    case Errc::imbalance_worsening: return "ImbalanceWorsening";
    case Errc::duplicate_id: return "DuplicateId";
    case Errc::unknown_id: return "UnknownId";
    case Errc::backward_transition: return "BackwardTransition";
    case Errc::invalid_params: return "InvalidParams";
    case Errc::schema_error: return "SchemaError";
    case Errc::non_monotone_time: return "NonMonotoneTime";
    case Errc::io_error: return "IoError";
    case Errc::too_few_points: return "TooFewPoints";
    case Errc::non_convergence: return "NonConvergence";
    case Errc::mismatched_support: return "MismatchedSupport";
    case Errc::singular_design: return "SingularDesign";
    case Errc::non_positive_value: return "NonPositiveValue";
    case Errc::zero_total: return "ZeroTotal";
    case Errc::empty_group: return "EmptyGroup";
    case Errc::missing_final_volume: return "MissingFinalVolume";
    case Errc::no_quotes: return "NoQuotes";
    case Errc::zero_variance: return "ZeroVariance";
    case Errc::internal: return "Internal";
  }
  return "?";
}

}  // namespace auctionlab
