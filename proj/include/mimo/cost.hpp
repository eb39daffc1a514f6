#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mimo/domain.hpp"

namespace mimo {

enum class CallKind { complete, generate_image, edit_image };

std::string_view to_string(CallKind kind);
CallKind call_kind_from_string(std::string_view text);

/// Metering record emitted by every gateway call.
struct UsageEvent {
  std::int64_t input_tokens = 0;
  std::int64_t output_tokens = 0;
  std::int64_t images_generated = 0;
  AgentRole actor = AgentKind::CoreSupervisor;
  CallKind call_kind = CallKind::complete;

  bool operator==(const UsageEvent&) const = default;
};

void to_json(json& j, const UsageEvent& usage);
void from_json(const json& j, UsageEvent& usage);

/// Dollar amount held as integer micro-dollars.
struct Money {
  std::int64_t micros = 0;

  auto operator<=>(const Money&) const = default;
  Money operator+(Money other) const { return {micros + other.micros}; }

  /// Exact amount with trailing zeros trimmed past the cents: "$2.8736", "$0.00".
  std::string exact() const;
  /// Rounded half-up to cents: "$2.87".
  std::string display() const;
};

/// Parses a non-negative decimal dollar amount with at most six fractional digits.
Money parse_dollars(std::string_view text);

struct PricingTable {
  Money input_token_price{40};    // $0.00004
  Money output_token_price{80};   // $0.00008
  std::int64_t image_output_tokens = 1105;

  void validate() const;
};

void to_json(json& j, const PricingTable& pricing);
void from_json(const json& j, PricingTable& pricing);

class CostLedger {
 public:
  void record(const UsageEvent& event) { events_.push_back(event); }
  const std::vector<UsageEvent>& events() const noexcept { return events_; }
  std::size_t size() const noexcept { return events_.size(); }

 private:
  std::vector<UsageEvent> events_;
};

Money price(const UsageEvent& event, const PricingTable& pricing);
Money total(const CostLedger& ledger, const PricingTable& pricing);
CostLedger merge(std::span<const CostLedger> ledgers);

/// Key-sorted report with per-actor and per-call-kind breakdowns and the grand total.
json cost_report(const CostLedger& ledger, const PricingTable& pricing);

}  // namespace mimo
