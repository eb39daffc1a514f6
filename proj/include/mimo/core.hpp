#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "mimo/cost.hpp"
#include "mimo/domain.hpp"
#include "mimo/prompts.hpp"
#include "mimo/session.hpp"

namespace mimo {

struct CoreLimits {
  int max_revisions = 3;
  int max_steps = 12;

  void validate() const;
};

struct CoreOptions {
  CoreLimits limits;
  bool layout_planner_enabled = true;
};

struct CoreState {
  std::optional<BannerDraft> draft;
  ContextMemory memory;
  /// Supervisor iterations so far.
  int step = 0;
  int revisions = 0;
  bool finished = false;
  /// Evaluation feedback gathered since the last revision.
  std::vector<FeedbackItem> pending_feedback;
};

struct CoreResult {
  BannerDraft final_draft;
  std::vector<MemoryEntry> transcript;
  CostLedger ledger;
  int steps_taken = 0;
};

/// One generate/evaluate/revise pipeline for a single style.
///
/// The supervisor routes between the creation team, the evaluation team and the
/// graphic revisor until it answers FINISH, the revision cap forces FINISH, or
/// max_steps iterations have run. Step functions are pure over CoreState: they
/// return the successor state and log one step event carrying the memory delta.
class CoreInstance {
 public:
  CoreInstance(const CampaignRequest& request, StylePrompt style, AgentSession& session,
               const PromptRegistry& prompts, CoreOptions options = {});

  /// Memory seeded with the user prompt, logo, product and style.
  CoreState initial_state();

  RoutingDecision route_supervisor(const CoreState& state);
  CoreState step_create(const CoreState& state, const std::string& directive = {});
  std::pair<CoreState, std::vector<FeedbackItem>> step_evaluate(const CoreState& state,
                                                                const std::string& directive = {});
  CoreState step_revise(const CoreState& state, std::span<const FeedbackItem> feedback);

  /// Runs the supervisor loop from `state` to termination.
  CoreState drive(CoreState state);
  CoreResult run();

  /// Between-round refinement driven by judge feedback: record the verdicts,
  /// evaluate once, and revise once if the supervisor asks for it.
  CoreState refine(const CoreState& state, std::span<const JudgeVerdict> verdicts);

  CoreResult result(const CoreState& state) const;

  const StylePrompt& style() const noexcept { return style_; }
  AgentSession& session() noexcept { return session_; }
  const CoreOptions& options() const noexcept { return options_; }

 private:
  CoreState commit(const CoreState& before, CoreState after, RunAction action, json extra = json::object());
  std::string memory_text(const ContextMemory& memory) const;
  std::vector<ImageRef> visual_context(const CoreState& state) const;

  const CampaignRequest& request_;
  StylePrompt style_;
  AgentSession& session_;
  const PromptRegistry& prompts_;
  CoreOptions options_;
};

/// Convenience wrapper: fresh session over `gateway`, optional transcript.
CoreResult run_core(const CampaignRequest& request, const StylePrompt& style, ModelGateway& gateway,
                    const CoreLimits& limits = {}, EventLog* log = nullptr, const PromptRegistry* prompts = nullptr);

}  // namespace mimo
