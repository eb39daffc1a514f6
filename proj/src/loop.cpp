#include "mimo/loop.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <exception>
#include <set>
#include <thread>

#include "corrective.hpp"
#include "mimo/error.hpp"
#include "mimo/protocol.hpp"

namespace mimo {
namespace {

std::string_view criterion_brief(JudgeCriterion criterion) {
  switch (criterion) {
    case JudgeCriterion::VisualDesign:
      return "visual design: composition, color harmony, hierarchy and overall aesthetic quality";
    case JudgeCriterion::CopywritingQuality:
      return "copywriting quality: headline, subheadline and CTA text are clear, persuasive and error-free";
    case JudgeCriterion::BrandConsistency:
      return "brand consistency: the logo is present, faithful and well placed, and the design fits the brand";
    case JudgeCriterion::UserExperience:
      return "user experience: the banner reads well at small size and the CTA is obvious and inviting";
    case JudgeCriterion::TechnicalFidelity:
      return "technical fidelity: correct aspect ratio, legible rendering of text, no artifacts or distortions";
  }
  return "";
}

std::string normalized(std::string_view text) {
  std::string out;
  for (char c : protocol::trim(text)) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return out;
}

std::string style_scope(StyleId id) { return "style:" + id.key(); }

std::optional<BannerDraft> initial_draft(const CoreResult& core) {
  for (const auto& entry : core.transcript) {
    if (entry.kind == MemoryKind::creation && !entry.attachments.empty()) {
      return BannerDraft{entry.attachments.back(), core.final_draft.style_id, 0, 0};
    }
  }
  return std::nullopt;
}

}  // namespace

std::vector<JudgeVerdict> VerdictMatrix::ordered() const {
  std::vector<JudgeVerdict> out;
  for (StyleId id : candidates()) {
    for (const auto& [key, verdict] : verdicts) {
      if (key.second == id) out.push_back(verdict);
    }
  }
  return out;
}

std::vector<StyleId> VerdictMatrix::candidates() const {
  std::set<StyleId> ids;
  for (const auto& [key, verdict] : verdicts) ids.insert(key.second);
  return {ids.begin(), ids.end()};
}

void to_json(json& j, const RoundRecord& record) {
  json counts = json::object();
  for (const auto& [id, count] : record.rejection_counts) counts[id.key()] = count;
  json survivors = json::array();
  for (StyleId id : record.survivors_before) survivors.push_back(id.value);
  j = json{{"round", record.round},
           {"survivors_before", survivors},
           {"eliminated", record.eliminated.value},
           {"rejection_counts", counts},
           {"feedback_bundle", record.feedback_bundle},
           {"verdicts", record.verdicts},
           {"all_recommended", record.all_recommended}};
}

RoundRecord eliminate(const VerdictMatrix& matrix) {
  RoundRecord record;
  record.round = matrix.round;
  record.survivors_before = matrix.candidates();
  require(!record.survivors_before.empty(), "eliminate needs at least one candidate");
  for (StyleId id : record.survivors_before) record.rejection_counts[id] = 0;
  record.verdicts = matrix.ordered();
  for (const auto& verdict : record.verdicts) {
    if (verdict.vote == Vote::REJECTED) ++record.rejection_counts[verdict.candidate];
    record.feedback_bundle.push_back(verdict.reason);
  }
  // std::map iterates in ascending StyleId, so a strict > keeps the lowest id on ties.
  int worst = -1;
  for (const auto& [id, count] : record.rejection_counts) {
    if (count > worst) {
      worst = count;
      record.eliminated = id;
    }
  }
  record.all_recommended = worst == 0;
  return record;
}

json encode(const LoopResult& result, const PricingTable& pricing) {
  json per_style = json::object();
  for (const auto& [id, core] : result.per_style_results) {
    per_style[id.key()] = json{{"final_draft", core.final_draft},
                               {"initial_draft", initial_draft(core) ? json(*initial_draft(core)) : json(nullptr)},
                               {"steps_taken", core.steps_taken},
                               {"memory_len", core.transcript.size()},
                               {"cost", total(core.ledger, pricing).exact()}};
  }
  return json{{"winner", result.winner},
              {"rounds", result.rounds},
              {"style_pool", result.style_pool},
              {"selected_styles", result.selected_styles},
              {"per_style", per_style},
              {"cost", cost_report(result.ledger, pricing)}};
}

LoopLogs run_logs(Run& run) {
  return LoopLogs{&run.transcript(), [&run](StyleId id) { return &run.candidate_log(id); }};
}

std::vector<StylePrompt> propose_styles(const CampaignRequest& request, AgentSession& session,
                                        const PromptRegistry& prompts) {
  request.validate();
  const int k = request.style_pool_size;
  std::string product = "User prompt: " + request.prompt;
  if (!request.product.empty()) product += "\nProduct: " + request.product;
  std::string text = prompts.render(TemplateId::style_prompting,
                                    {{"product", product}, {"logo", "See the attached logo image."}});
  if (k != 5) {
    text += "\n\nGenerate exactly " + std::to_string(k) + " style prompts, keyed style_1 to style_" +
            std::to_string(k) + ".";
  }
  const std::string correction = "Your reply must be a JSON object with exactly the keys style_1 to style_" +
                                 std::to_string(k) + ", each a distinct one-sentence style description.";

  auto styles = detail::ask_with_correction(
      session, AgentKind::StyleProposer, {{TurnRole::user, text, {request.logo}}}, RunAction::propose_styles,
      correction, [k](const std::string& reply) -> std::optional<std::vector<std::string>> {
        auto parsed = protocol::parse_style_pool(reply, k);
        if (!parsed) return std::nullopt;
        std::set<std::string> seen;
        for (const auto& s : *parsed) {
          if (!seen.insert(normalized(s)).second) return std::nullopt;
        }
        return parsed;
      });
  if (!styles) {
    fail(ErrorCode::StyleParseFailure, "style proposer did not return " + std::to_string(k) +
                                           " distinct keyed styles after one correction");
  }
  std::vector<StylePrompt> pool;
  for (int i = 0; i < k; ++i) pool.push_back(StylePrompt{StyleId{i}, (*styles)[static_cast<std::size_t>(i)]});
  json payload{{"type", "styles"}, {"styles", pool}};
  session.note("engine", RunAction::propose_styles, payload);
  return pool;
}

std::vector<StylePrompt> select_styles(std::span<const StylePrompt> pool, const CampaignRequest& request, int n,
                                       AgentSession& session) {
  const int size = static_cast<int>(pool.size());
  require(n >= 1 && n <= size, "select_styles needs 1 <= n <= pool size");
  std::vector<StylePrompt> chosen;
  json payload{{"type", "selection"}};
  if (n == size) {
    chosen.assign(pool.begin(), pool.end());
    payload["rule"] = "identity";
  } else {
    std::string listing;
    for (int i = 0; i < size; ++i) listing += "style_" + std::to_string(i + 1) + ": " + pool[i].description + "\n";
    const Completion reply = session.complete(
        AgentKind::StyleSelector,
        {{TurnRole::system,
          "You are a style selection agent for ad banner design. Pick the styles most compatible with the "
          "advertiser's prompt and logo while keeping the selection stylistically diverse.",
          {}},
         {TurnRole::user,
          "Advertiser prompt: " + request.prompt + "\n" +
              (request.product.empty() ? "" : "Product: " + request.product + "\n") + "Candidate styles:\n" + listing +
              "\nSelect exactly " + std::to_string(n) +
              " styles. Reply with a comma-separated list of style keys, e.g. style_1, style_3.",
          {request.logo}}},
        RunAction::select_styles);
    if (auto ids = protocol::parse_style_selection(reply.text, size, n)) {
      for (int id : *ids) chosen.push_back(pool[static_cast<std::size_t>(id)]);
      payload["rule"] = "model";
    } else {
      chosen.assign(pool.begin(), pool.begin() + n);
      payload["rule"] = "fallback_first_n";
      payload["override"] = "unparseable selection; taking the first " + std::to_string(n) + " styles";
    }
  }
  json ids = json::array();
  for (const auto& s : chosen) ids.push_back(s.style_id.value);
  payload["selected"] = ids;
  session.note("engine", RunAction::select_styles, payload);
  return chosen;
}

JudgeVerdict judge_candidate(const CampaignRequest& request, const StylePrompt& style, const BannerDraft& draft,
                             JudgeCriterion criterion, AgentSession& session) {
  const AgentRole judge = AgentRole::judge(criterion);
  const std::vector<ChatTurn> turns{
      {TurnRole::system,
       "You are a JudgeAgent on an ad banner review panel. You judge one criterion only: " +
           std::string(criterion_brief(criterion)) + ".",
       {}},
      {TurnRole::user,
       "Advertiser prompt: " + request.prompt + "\n" +
           (request.product.empty() ? "" : "Product: " + request.product + "\n") +
           "Candidate style: " + style.description +
           "\nThe logo and the candidate banner are attached.\nReply with RECOMMENDED or REJECTED, followed by a "
           "one-sentence reason, e.g. \"REJECTED - CTA illegible\".",
       {request.logo, draft.image}},
  };
  auto parsed = detail::ask_with_correction(
      session, judge, turns, RunAction::judge,
      "Your reply must start with RECOMMENDED or REJECTED, followed by a short reason.",
      [](const std::string& reply) { return protocol::parse_vote(reply); });
  if (!parsed) {
    fail(ErrorCode::VerdictParseFailure,
         judge.name() + " gave no valid vote for style " + style.style_id.key() + " after one correction");
  }
  return JudgeVerdict{judge, style.style_id, parsed->vote, parsed->reason};
}

// ---------------------------------------------------------------------------

struct LoopOrchestrator::Candidate {
  StylePrompt style;
  std::unique_ptr<AgentSession> session;
  std::unique_ptr<CoreInstance> core;
  CoreState state;
  CostLedger pending_judge_ledger;
};

LoopOrchestrator::LoopOrchestrator(const CampaignRequest& request, ModelGateway& gateway,
                                   const PromptRegistry& prompts, LoopOptions options, LoopLogs logs)
    : request_(request),
      gateway_(gateway),
      prompts_(prompts),
      options_(std::move(options)),
      logs_(std::move(logs)),
      loop_session_(gateway, "", logs_.top) {
  request_.validate();
  options_.core.limits.validate();
  require(options_.jobs >= 1, "jobs must be at least 1");
  require(!options_.panel.empty(), "judge panel must not be empty");
}

LoopOrchestrator::~LoopOrchestrator() = default;

EventLog* LoopOrchestrator::candidate_log(StyleId id) const {
  return logs_.candidate ? logs_.candidate(id) : nullptr;
}

template <typename Fn>
void LoopOrchestrator::for_each_parallel(const std::vector<StyleId>& ids, Fn&& fn) {
  std::vector<std::exception_ptr> errors(ids.size());
  auto task = [&](std::size_t i) {
    try {
      fn(ids[i]);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(options_.jobs), ids.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < ids.size(); ++i) task(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < ids.size(); i = next++) task(i);
      });
    }
  }
  merge_candidate_events();
  // Report the failure of the lowest StyleId so the error is independent of scheduling.
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const Error& e) {
      throw Error(e.code(), "style " + ids[i].key() + ": " + e.what());
    }
  }
}

void LoopOrchestrator::merge_candidate_events() {
  if (logs_.top == nullptr) return;
  for (auto& [id, candidate] : candidates_) {
    EventLog* log = candidate_log(id);
    if (log == nullptr) continue;
    std::size_t& cursor = merged_cursor_[id];
    const auto& events = log->events();
    for (; cursor < events.size(); ++cursor) {
      const RunEvent& event = events[cursor];
      json payload = event.payload;
      payload["style_id"] = id.value;
      payload["source_seq"] = event.seq;
      logs_.top->record(event.actor, event.action, std::move(payload), event.usage);
    }
  }
}

VerdictMatrix LoopOrchestrator::judge_round(const std::map<StyleId, BannerDraft>& candidates, int round) {
  require(candidates.size() >= 2, "a judging round needs at least two candidates");
  std::vector<StyleId> ids;
  for (const auto& [id, draft] : candidates) ids.push_back(id);

  std::map<StyleId, std::vector<JudgeVerdict>> results;
  for (StyleId id : ids) {
    results[id];
    if (!candidates_.contains(id)) {
      auto candidate = std::make_unique<Candidate>();
      candidate->style = styles_.contains(id) ? styles_.at(id) : StylePrompt{id, ""};
      candidates_.emplace(id, std::move(candidate));
    }
  }
  for_each_parallel(ids, [&](StyleId id) {
    AgentSession session(gateway_, style_scope(id), candidate_log(id));
    auto& verdicts = results.at(id);
    for (JudgeCriterion criterion : options_.panel) {
      verdicts.push_back(
          judge_candidate(request_, candidates_.at(id)->style, candidates.at(id), criterion, session));
    }
    candidates_.at(id)->pending_judge_ledger = session.ledger();
  });

  VerdictMatrix matrix;
  matrix.round = round;
  for (StyleId id : ids) {
    for (const auto& event : candidates_.at(id)->pending_judge_ledger.events()) judge_ledger_.record(event);
    candidates_.at(id)->pending_judge_ledger = CostLedger{};
    for (const auto& verdict : results.at(id)) {
      matrix.verdicts.emplace(std::make_pair(*verdict.judge.criterion(), id), verdict);
    }
  }
  return matrix;
}

LoopResult LoopOrchestrator::run() {
  LoopResult result;
  result.style_pool = propose_styles(request_, loop_session_, prompts_);
  result.selected_styles = select_styles(result.style_pool, request_, request_.styles_to_run, loop_session_);

  std::vector<StyleId> survivors;
  for (const auto& style : result.selected_styles) {
    styles_[style.style_id] = style;
    auto candidate = std::make_unique<Candidate>();
    candidate->style = style;
    candidate->session = std::make_unique<AgentSession>(gateway_, style_scope(style.style_id),
                                                        candidate_log(style.style_id));
    candidate->core =
        std::make_unique<CoreInstance>(request_, style, *candidate->session, prompts_, options_.core);
    candidates_.emplace(style.style_id, std::move(candidate));
    survivors.push_back(style.style_id);
  }

  for_each_parallel(survivors, [&](StyleId id) {
    auto& c = *candidates_.at(id);
    c.state = c.core->drive(c.core->initial_state());
  });

  int round = 0;
  while (survivors.size() > 1) {
    std::map<StyleId, BannerDraft> drafts;
    for (StyleId id : survivors) drafts.emplace(id, *candidates_.at(id)->state.draft);
    const VerdictMatrix matrix = judge_round(drafts, round);
    RoundRecord record = eliminate(matrix);
    if (logs_.top != nullptr) {
      logs_.top->record("engine", RunAction::judge, json{{"type", "verdicts"}, {"round", round},
                                                         {"verdicts", record.verdicts}});
      logs_.top->record("engine", RunAction::eliminate, json{{"type", "round"}, {"record", record}});
    }
    std::erase(survivors, record.eliminated);
    const std::vector<JudgeVerdict> bundle = record.verdicts;
    result.rounds.push_back(std::move(record));

    for_each_parallel(survivors, [&](StyleId id) {
      auto& c = *candidates_.at(id);
      c.state = c.core->refine(c.state, bundle);
    });
    ++round;
  }

  for (const auto& [id, candidate] : candidates_) {
    if (candidate->core) result.per_style_results.emplace(id, candidate->core->result(candidate->state));
  }
  const BannerDraft& best = result.per_style_results.at(survivors.front()).final_draft;
  result.winner = options_.post_process ? options_.post_process(best) : best;

  std::vector<CostLedger> ledgers{loop_session_.ledger(), judge_ledger_};
  for (const auto& [id, core] : result.per_style_results) ledgers.push_back(core.ledger);
  result.ledger = merge(ledgers);

  if (logs_.top != nullptr) {
    logs_.top->record("engine", RunAction::finish,
                      json{{"type", "winner"}, {"winner", result.winner}, {"rounds", result.rounds.size()}});
  }
  return result;
}

LoopResult run_loop(const CampaignRequest& request, ModelGateway& gateway, const CoreLimits& limits,
                    const PromptRegistry* prompts, int jobs) {
  std::unique_ptr<PromptRegistry> owned;
  if (prompts == nullptr) {
    owned = std::make_unique<PromptRegistry>();
    prompts = owned.get();
  }
  LoopOptions options;
  options.core.limits = limits;
  options.jobs = jobs;
  LoopOrchestrator loop(request, gateway, *prompts, options);
  return loop.run();
}

}  // namespace mimo
