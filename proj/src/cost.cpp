#include "mimo/cost.hpp"

#include <cctype>
#include <map>

#include "mimo/error.hpp"

namespace mimo {

std::string_view to_string(CallKind kind) {
  switch (kind) {
    case CallKind::complete: return "complete";
    case CallKind::generate_image: return "generate_image";
    case CallKind::edit_image: return "edit_image";
  }
  return "";
}

CallKind call_kind_from_string(std::string_view text) {
  if (text == "complete") return CallKind::complete;
  if (text == "generate_image") return CallKind::generate_image;
  if (text == "edit_image") return CallKind::edit_image;
  fail(ErrorCode::InvalidArgument, "unknown call kind '" + std::string(text) + "'");
}

void to_json(json& j, const UsageEvent& usage) {
  j = json{{"input_tokens", usage.input_tokens},
           {"output_tokens", usage.output_tokens},
           {"images_generated", usage.images_generated},
           {"actor", usage.actor.name()},
           {"call_kind", to_string(usage.call_kind)}};
}

void from_json(const json& j, UsageEvent& usage) {
  usage.input_tokens = j.value("input_tokens", std::int64_t{0});
  usage.output_tokens = j.value("output_tokens", std::int64_t{0});
  usage.images_generated = j.value("images_generated", std::int64_t{0});
  if (j.contains("actor")) usage.actor = AgentRole::parse(j.at("actor").get<std::string>());
  if (j.contains("call_kind")) usage.call_kind = call_kind_from_string(j.at("call_kind").get<std::string>());
  if (usage.input_tokens < 0 || usage.output_tokens < 0 || usage.images_generated < 0) {
    fail(ErrorCode::InvalidArgument, "usage counts must be non-negative");
  }
}

std::string Money::exact() const {
  const std::int64_t whole = micros / 1'000'000;
  std::string frac = std::to_string(micros % 1'000'000);
  frac.insert(0, 6 - frac.size(), '0');
  while (frac.size() > 2 && frac.back() == '0') frac.pop_back();
  return "$" + std::to_string(whole) + "." + frac;
}

std::string Money::display() const {
  const std::int64_t cents = (micros + 5'000) / 10'000;
  std::string frac = std::to_string(cents % 100);
  if (frac.size() < 2) frac.insert(0, "0");
  return "$" + std::to_string(cents / 100) + "." + frac;
}

Money parse_dollars(std::string_view text) {
  if (text.starts_with('$')) text.remove_prefix(1);
  std::int64_t whole = 0;
  std::int64_t frac = 0;
  int frac_digits = 0;
  bool seen_dot = false;
  bool any_digit = false;
  for (char c : text) {
    if (c == '.' && !seen_dot) {
      seen_dot = true;
      continue;
    }
    if (!std::isdigit(static_cast<unsigned char>(c))) {
      fail(ErrorCode::ConfigError, "malformed dollar amount '" + std::string(text) + "'");
    }
    any_digit = true;
    if (seen_dot) {
      if (++frac_digits > 6) {
        fail(ErrorCode::ConfigError, "dollar amount '" + std::string(text) + "' is finer than a micro-dollar");
      }
      frac = frac * 10 + (c - '0');
    } else {
      whole = whole * 10 + (c - '0');
    }
  }
  if (!any_digit) fail(ErrorCode::ConfigError, "empty dollar amount");
  for (int i = frac_digits; i < 6; ++i) frac *= 10;
  return Money{whole * 1'000'000 + frac};
}

void PricingTable::validate() const {
  if (input_token_price.micros < 0 || output_token_price.micros < 0 || image_output_tokens < 0) {
    fail(ErrorCode::ConfigError, "pricing values must be non-negative");
  }
}

void to_json(json& j, const PricingTable& pricing) {
  j = json{{"input_token_price", pricing.input_token_price.exact().substr(1)},
           {"output_token_price", pricing.output_token_price.exact().substr(1)},
           {"image_output_tokens", pricing.image_output_tokens}};
}

void from_json(const json& j, PricingTable& pricing) {
  // Prices are strings so the decimal value survives JSON round-trips exactly.
  auto money = [](const json& v) {
    return v.is_string() ? parse_dollars(v.get<std::string>()) : parse_dollars(v.dump());
  };
  if (j.contains("input_token_price")) pricing.input_token_price = money(j.at("input_token_price"));
  if (j.contains("output_token_price")) pricing.output_token_price = money(j.at("output_token_price"));
  if (j.contains("image_output_tokens")) pricing.image_output_tokens = j.at("image_output_tokens").get<std::int64_t>();
  pricing.validate();
}

Money price(const UsageEvent& event, const PricingTable& pricing) {
  const std::int64_t output = event.output_tokens + event.images_generated * pricing.image_output_tokens;
  return Money{event.input_tokens * pricing.input_token_price.micros +
               output * pricing.output_token_price.micros};
}

Money total(const CostLedger& ledger, const PricingTable& pricing) {
  Money sum;
  for (const auto& event : ledger.events()) sum = sum + price(event, pricing);
  return sum;
}

CostLedger merge(std::span<const CostLedger> ledgers) {
  CostLedger merged;
  for (const auto& ledger : ledgers) {
    for (const auto& event : ledger.events()) merged.record(event);
  }
  return merged;
}

json cost_report(const CostLedger& ledger, const PricingTable& pricing) {
  struct Bucket {
    std::int64_t input = 0, output = 0, images = 0, calls = 0;
    Money cost;
  };
  std::map<std::string, Bucket> by_actor;
  std::map<std::string, Bucket> by_kind;
  Bucket all;
  for (const auto& event : ledger.events()) {
    for (Bucket* b : {&by_actor[event.actor.name()], &by_kind[std::string(to_string(event.call_kind))], &all}) {
      b->input += event.input_tokens;
      b->output += event.output_tokens;
      b->images += event.images_generated;
      b->calls += 1;
      b->cost = b->cost + price(event, pricing);
    }
  }
  auto encode = [](const Bucket& b) {
    return json{{"calls", b.calls},
                {"input_tokens", b.input},
                {"output_tokens", b.output},
                {"images", b.images},
                {"cost_micros", b.cost.micros},
                {"cost", b.cost.exact()}};
  };
  json actors = json::object();
  for (const auto& [name, b] : by_actor) actors[name] = encode(b);
  json kinds = json::object();
  for (const auto& [name, b] : by_kind) kinds[name] = encode(b);
  json grand = encode(all);
  grand["display"] = all.cost.display();
  return json{{"by_actor", actors}, {"by_call_kind", kinds}, {"pricing", pricing}, {"total", grand}};
}

}  // namespace mimo
