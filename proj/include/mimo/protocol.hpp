#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mimo/domain.hpp"

namespace mimo::protocol {

/// Supervisor reply tokens, in the order they are offered to the model.
inline constexpr std::string_view kRouteTokens[] = {"ContentCreationTeam", "EvaluationTeam", "GraphicRevisor",
                                                    "FINISH"};

std::string trim(std::string_view text);

/// Maps a supervisor reply onto a routing decision. A reply may carry a
/// directive after the token ("EvaluationTeam: check the CTA").
std::optional<RoutingDecision> parse_route(std::string_view reply);

struct AgentChoice {
  std::string_view token;
  AgentKind kind;
};

/// Parses a comma-separated agent list against `allowed`. Returns nullopt when
/// any entry is unknown or nothing was named. Result follows the order of `allowed`.
std::optional<std::vector<AgentKind>> parse_agent_list(std::string_view reply, std::span<const AgentChoice> allowed);

struct ParsedVote {
  Vote vote;
  std::string reason;
};

/// "REJECTED — CTA illegible" -> {REJECTED, "CTA illegible"}.
std::optional<ParsedVote> parse_vote(std::string_view reply);

/// First balanced {...} block in `text`, honoring JSON string quoting.
std::optional<std::string> extract_brace_block(std::string_view text);

/// Parses {"style_1": "...", ..., "style_k": "..."}. Nullopt on missing keys or empty values.
std::optional<std::vector<std::string>> parse_style_pool(std::string_view reply, int k);

/// "style_2, style_4" -> {1, 3}. Nullopt unless exactly `n` distinct ids in [0, pool_size).
std::optional<std::vector<int>> parse_style_selection(std::string_view reply, int pool_size, int n);

}  // namespace mimo::protocol
