#include "mimo/session.hpp"

#include "mimo/error.hpp"

namespace mimo {

AgentSession::AgentSession(ModelGateway& gateway, std::string scope, EventLog* log)
    : gateway_(gateway), scope_(std::move(scope)), log_(log) {}

template <typename Call>
auto AgentSession::metered(const AgentRole& actor, RunAction action, json payload, Call&& call) {
  try {
    auto result = call();
    ledger_.record(result.usage);
    if (log_ != nullptr) {
      if constexpr (std::is_same_v<decltype(result), Completion>) {
        payload["text"] = result.text;
      } else {
        payload["image"] = result.image;
      }
      payload["type"] = "call";
      log_->record(actor.name(), action, std::move(payload), result.usage);
    }
    return result;
  } catch (const Error& e) {
    if (log_ != nullptr) {
      log_->record(actor.name(), RunAction::error,
                   json{{"type", "call"}, {"code", to_string(e.code())}, {"message", e.what()}});
    }
    throw;
  }
}

Completion AgentSession::complete(const AgentRole& actor, const std::vector<ChatTurn>& turns, RunAction action) {
  return metered(actor, action, json{{"call", "complete"}},
                 [&] { return gateway_.complete(actor, turns, scope_); });
}

GeneratedImage AgentSession::generate_image(const AgentRole& actor, const std::string& prompt, int width,
                                            int height, RunAction action) {
  return metered(actor, action, json{{"call", "generate_image"}, {"prompt", prompt}},
                 [&] { return gateway_.generate_image(actor, prompt, width, height, scope_); });
}

GeneratedImage AgentSession::edit_image(const AgentRole& actor, const ImageRef& base, const std::string& instruction,
                                        RunAction action) {
  return metered(actor, action, json{{"call", "edit_image"}, {"base", base}, {"instruction", instruction}},
                 [&] { return gateway_.edit_image(actor, base, instruction, scope_); });
}

void AgentSession::note(const std::string& actor, RunAction action, json payload) {
  if (log_ != nullptr) log_->record(actor, action, std::move(payload));
}

}  // namespace mimo
