#pragma once

#include <functional>
#include <map>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "mimo/core.hpp"
#include "mimo/cost.hpp"
#include "mimo/domain.hpp"
#include "mimo/gateway.hpp"
#include "mimo/prompts.hpp"
#include "mimo/run_store.hpp"

namespace mimo {

struct VerdictMatrix {
  int round = 0;
  std::map<std::pair<JudgeCriterion, StyleId>, JudgeVerdict> verdicts;

  /// Verdicts ordered by candidate, then criterion.
  std::vector<JudgeVerdict> ordered() const;
  std::vector<StyleId> candidates() const;
};

struct RoundRecord {
  int round = 0;
  std::vector<StyleId> survivors_before;
  StyleId eliminated;
  std::map<StyleId, int> rejection_counts;
  std::vector<std::string> feedback_bundle;
  std::vector<JudgeVerdict> verdicts;
  bool all_recommended = false;
};

void to_json(json& j, const RoundRecord& record);

/// Removes the candidate with the most REJECTED votes; ties go to the lowest
/// StyleId. Exactly one candidate is removed even when nobody was rejected.
RoundRecord eliminate(const VerdictMatrix& matrix);

struct LoopResult {
  BannerDraft winner;
  std::vector<RoundRecord> rounds;
  std::map<StyleId, CoreResult> per_style_results;
  CostLedger ledger;
  std::vector<StylePrompt> style_pool;
  std::vector<StylePrompt> selected_styles;
};

/// Deterministic, key-sorted encoding of a loop result (used by report.json).
json encode(const LoopResult& result, const PricingTable& pricing);

struct LoopOptions {
  CoreOptions core;
  /// Worker threads for core instances and per-candidate judging.
  int jobs = 1;
  /// Judge criteria on the panel; all five unless an ablation trims it.
  std::vector<JudgeCriterion> panel{std::begin(kAllCriteria), std::end(kAllCriteria)};
  /// Applied to the winning draft (logo inpainting slot); identity by default.
  std::function<BannerDraft(const BannerDraft&)> post_process;
};

/// Where transcripts go. `top` receives loop events plus every candidate event,
/// merged by StyleId then seq at each barrier. Either may be null.
struct LoopLogs {
  EventLog* top = nullptr;
  std::function<EventLog*(StyleId)> candidate;
};

LoopLogs run_logs(Run& run);

std::vector<StylePrompt> propose_styles(const CampaignRequest& request, AgentSession& session,
                                        const PromptRegistry& prompts);
std::vector<StylePrompt> select_styles(std::span<const StylePrompt> pool, const CampaignRequest& request, int n,
                                       AgentSession& session);
JudgeVerdict judge_candidate(const CampaignRequest& request, const StylePrompt& style, const BannerDraft& draft,
                             JudgeCriterion criterion, AgentSession& session);

/// Style tournament: propose k styles, select n, run one core per style in
/// parallel, then judge, eliminate and refine until one candidate remains.
class LoopOrchestrator {
 public:
  LoopOrchestrator(const CampaignRequest& request, ModelGateway& gateway, const PromptRegistry& prompts,
                   LoopOptions options = {}, LoopLogs logs = {});
  ~LoopOrchestrator();

  LoopResult run();

  /// Every panel judge votes on every candidate; candidates may be judged concurrently.
  VerdictMatrix judge_round(const std::map<StyleId, BannerDraft>& candidates, int round);

 private:
  struct Candidate;

  template <typename Fn>
  void for_each_parallel(const std::vector<StyleId>& ids, Fn&& fn);
  void merge_candidate_events();
  EventLog* candidate_log(StyleId id) const;

  const CampaignRequest& request_;
  ModelGateway& gateway_;
  const PromptRegistry& prompts_;
  LoopOptions options_;
  LoopLogs logs_;
  AgentSession loop_session_;
  CostLedger judge_ledger_;
  std::map<StyleId, StylePrompt> styles_;
  std::map<StyleId, std::unique_ptr<Candidate>> candidates_;
  std::map<StyleId, std::size_t> merged_cursor_;
};

LoopResult run_loop(const CampaignRequest& request, ModelGateway& gateway, const CoreLimits& limits = {},
                    const PromptRegistry* prompts = nullptr, int jobs = 1);

}  // namespace mimo
