#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mimo/session.hpp"

namespace mimo::detail {

/// Asks once; on a reply `parse` rejects, appends a corrective user turn and
/// asks exactly once more. Returns nullopt when the second reply is rejected too.
template <typename Parse>
auto ask_with_correction(AgentSession& session, const AgentRole& actor, std::vector<ChatTurn> turns,
                         RunAction action, const std::string& correction, Parse&& parse)
    -> decltype(parse(std::string{})) {
  for (int attempt = 0; attempt < 2; ++attempt) {
    const Completion reply = session.complete(actor, turns, action);
    if (auto parsed = parse(reply.text)) return parsed;
    turns.push_back(ChatTurn{TurnRole::assistant, reply.text, {}});
    turns.push_back(ChatTurn{TurnRole::user, correction, {}});
  }
  return std::nullopt;
}

}  // namespace mimo::detail
