#pragma once

#include <string>
#include <vector>

#include "mimo/cost.hpp"
#include "mimo/gateway.hpp"
#include "mimo/run_store.hpp"

namespace mimo {

/// Metered gateway access for one owner (a core instance or the loop).
/// Every call lands in the ledger and, when a log is attached, as one transcript event.
class AgentSession {
 public:
  AgentSession(ModelGateway& gateway, std::string scope = {}, EventLog* log = nullptr);

  Completion complete(const AgentRole& actor, const std::vector<ChatTurn>& turns, RunAction action);
  GeneratedImage generate_image(const AgentRole& actor, const std::string& prompt, int width, int height,
                                RunAction action);
  GeneratedImage edit_image(const AgentRole& actor, const ImageRef& base, const std::string& instruction,
                            RunAction action);

  /// Records an event that carries no usage.
  void note(const std::string& actor, RunAction action, json payload);

  const CostLedger& ledger() const noexcept { return ledger_; }
  const std::string& scope() const noexcept { return scope_; }
  ModelGateway& gateway() noexcept { return gateway_; }
  EventLog* log() noexcept { return log_; }

 private:
  template <typename Call>
  auto metered(const AgentRole& actor, RunAction action, json payload, Call&& call);

  ModelGateway& gateway_;
  std::string scope_;
  EventLog* log_;
  CostLedger ledger_;
};

}  // namespace mimo
