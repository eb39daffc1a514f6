#include "mimo/core.hpp"

#include <memory>

#include "corrective.hpp"
#include "mimo/error.hpp"
#include "mimo/protocol.hpp"

namespace mimo {
namespace {

constexpr protocol::AgentChoice kCreateAgents[] = {
    {"Copywriter", AgentKind::Copywriter},
    {"LayoutPlanner", AgentKind::LayoutPlanner},
    {"ImageResearcher", AgentKind::ImageResearcher},
};

constexpr protocol::AgentChoice kEvalAgents[] = {
    {"TextContentEvaluator", AgentKind::TextEvaluator},
    {"TextEvaluator", AgentKind::TextEvaluator},
    {"BackgroundImageEvaluator", AgentKind::BackgroundEvaluator},
    {"BackgroundEvaluator", AgentKind::BackgroundEvaluator},
    {"LayoutEvaluator", AgentKind::LayoutEvaluator},
};

constexpr const char* kRouteInstruction =
    "Decide which team acts next. Reply with exactly one of: ContentCreationTeam, EvaluationTeam, "
    "GraphicRevisor, FINISH. You may add a short instruction for the team after a colon.";

constexpr const char* kLayoutPlannerPrompt =
    "You are a Layout Planner responsible for arranging the AD banner: where the headline, subheadline, CTA "
    "button, logo and product imagery go, and how they are sized relative to each other. Reply with one short "
    "layout directive for the image generation request.";

bool contains(const std::vector<AgentKind>& kinds, AgentKind kind) {
  return std::find(kinds.begin(), kinds.end(), kind) != kinds.end();
}

std::string join_names(const std::vector<AgentKind>& kinds) {
  std::string out;
  for (AgentKind k : kinds) {
    if (!out.empty()) out += ",";
    out += AgentRole(k).name();
  }
  return out;
}

}  // namespace

void CoreLimits::validate() const {
  require(max_revisions >= 0, "max_revisions must be non-negative");
  require(max_steps >= 1, "max_steps must be positive");
  require(max_steps >= max_revisions + 2, "max_steps must leave room for a create and an evaluate step");
}

CoreInstance::CoreInstance(const CampaignRequest& request, StylePrompt style, AgentSession& session,
                           const PromptRegistry& prompts, CoreOptions options)
    : request_(request), style_(std::move(style)), session_(session), prompts_(prompts), options_(options) {
  request_.validate();
  options_.limits.validate();
}

std::string CoreInstance::memory_text(const ContextMemory& memory) const {
  std::string out = "Shared memory:\n";
  for (const auto& entry : memory.entries()) {
    out += "[" + std::to_string(entry.seq) + "] " + entry.author.name() + " (" + std::string(to_string(entry.kind)) +
           "): " + entry.body;
    for (const auto& image : entry.attachments) out += " <image " + image.locator + ">";
    out += "\n";
  }
  return out;
}

std::vector<ImageRef> CoreInstance::visual_context(const CoreState& state) const {
  std::vector<ImageRef> images{request_.logo};
  if (state.draft) images.push_back(state.draft->image);
  return images;
}

CoreState CoreInstance::commit(const CoreState& before, CoreState after, RunAction action, json extra) {
  json added = json::array();
  for (std::size_t i = before.memory.size(); i < after.memory.size(); ++i) added.push_back(after.memory.entries()[i]);
  extra["type"] = "step";
  extra["new_entries"] = std::move(added);
  extra["memory_len"] = after.memory.size();
  extra["memory_digest"] = memory_digest(after.memory);
  extra["step"] = after.step;
  extra["revisions"] = after.revisions;
  extra["draft"] = after.draft ? json(*after.draft) : json(nullptr);
  session_.note("engine", action, std::move(extra));
  return after;
}

CoreState CoreInstance::initial_state() {
  CoreState state;
  state.memory = state.memory.append(AgentKind::CoreSupervisor, MemoryKind::user_input, "Prompt: " + request_.prompt,
                                     {request_.logo});
  if (!request_.product.empty()) {
    state.memory = state.memory.append(AgentKind::CoreSupervisor, MemoryKind::user_input,
                                       "Product information: " + request_.product);
  }
  if (!style_.description.empty()) {
    state.memory = state.memory.append(AgentKind::CoreSupervisor, MemoryKind::user_input,
                                       "Visual style: " + style_.description);
  }
  return commit(CoreState{}, std::move(state), RunAction::route, json{{"phase", "init"}});
}

RoutingDecision CoreInstance::route_supervisor(const CoreState& state) {
  require(!state.finished, "route_supervisor called on a finished core");
  std::string status = "Revisions applied: " + std::to_string(state.revisions) + " of at most " +
                       std::to_string(options_.limits.max_revisions) + ".\n";
  status += state.draft ? "A banner draft exists (attached after the logo)"
                        : "No banner draft exists yet.";
  if (state.draft && state.revisions > 0) status += "; it is a revised image";
  if (state.draft) status += ".";
  const std::vector<ChatTurn> turns{
      {TurnRole::system, prompts_.render(TemplateId::core_team_root, {{"item", request_.prompt}}), {}},
      {TurnRole::user, memory_text(state.memory) + "\n" + status + "\n\n" + kRouteInstruction, visual_context(state)},
  };
  auto decision = detail::ask_with_correction(
      session_, AgentKind::CoreSupervisor, turns, RunAction::route,
      "That reply is not a valid routing token. Reply with exactly one of: ContentCreationTeam, EvaluationTeam, "
      "GraphicRevisor, FINISH.",
      [](const std::string& reply) { return protocol::parse_route(reply); });
  if (!decision) fail(ErrorCode::RoutingParseFailure, "supervisor reply did not name a team after one correction");

  if (!state.draft && decision->target != RouteTarget::CreateTeam) {
    session_.note("engine", RunAction::route,
                  json{{"type", "override"},
                       {"requested", to_string(decision->target)},
                       {"applied", to_string(RouteTarget::CreateTeam)},
                       {"reason", "no draft exists yet"}});
    decision = RoutingDecision{RouteTarget::CreateTeam, ""};
  }
  return *decision;
}

CoreState CoreInstance::step_create(const CoreState& state, const std::string& directive) {
  const std::string supervisor_note = directive.empty() ? "" : "Supervisor instruction: " + directive + "\n";
  std::vector<protocol::AgentChoice> choices;
  for (const auto& choice : kCreateAgents) {
    if (choice.kind == AgentKind::LayoutPlanner && !options_.layout_planner_enabled) continue;
    choices.push_back(choice);
  }
  std::string menu;
  for (const auto& c : choices) menu += (menu.empty() ? "" : ", ") + std::string(c.token);

  const Completion pick = session_.complete(
      AgentKind::CreateSupervisor,
      {{TurnRole::system, prompts_.render(TemplateId::content_creation_team), {}},
       {TurnRole::user,
        memory_text(state.memory) + supervisor_note + "\nChoose the agents to act now. Reply with a comma-separated list from: " + menu + ".",
        visual_context(state)}},
      RunAction::create);
  auto selected = protocol::parse_agent_list(pick.text, choices);
  json routing{{"phase", "create"}};
  if (!selected) {
    routing["override"] = "unparseable agent list; selecting the whole team";
    selected.emplace();
    for (const auto& c : choices) selected->push_back(c.kind);
  }
  if (!contains(*selected, AgentKind::ImageResearcher)) {
    routing["forced"] = "ImageResearcher";
    selected->push_back(AgentKind::ImageResearcher);
  }
  routing["agents"] = join_names(*selected);

  CoreState next = state;
  const ContextMemory& seen = state.memory;
  std::string layout_directive;

  if (contains(*selected, AgentKind::Copywriter)) {
    const Completion copy = session_.complete(
        AgentKind::Copywriter,
        {{TurnRole::system, prompts_.render(TemplateId::copywriter), {}},
         {TurnRole::user,
          memory_text(seen) + supervisor_note + "\nWrite the headline, subheadline, and CTA text for the banner.",
          {request_.logo}}},
        RunAction::create);
    next.memory = next.memory.append(AgentKind::Copywriter, MemoryKind::creation, copy.text);
  }

  if (contains(*selected, AgentKind::LayoutPlanner)) {
    const Completion layout = session_.complete(
        AgentKind::LayoutPlanner,
        {{TurnRole::system, kLayoutPlannerPrompt, {}},
         {TurnRole::user, memory_text(next.memory) + supervisor_note, visual_context(state)}},
        RunAction::create);
    layout_directive = protocol::trim(layout.text);
    next.memory = next.memory.append(AgentKind::LayoutPlanner, MemoryKind::creation, layout.text);
  }

  const Completion request = session_.complete(
      AgentKind::ImageResearcher,
      {{TurnRole::system, prompts_.render(TemplateId::image_researcher), {}},
       {TurnRole::user,
        memory_text(next.memory) + supervisor_note +
            "\nWrite one detailed ad image generation request for the banner, including the exact text to render.",
        visual_context(state)}},
      RunAction::create);

  std::string image_prompt = protocol::trim(request.text);
  if (!style_.description.empty()) {
    if (!image_prompt.empty()) image_prompt += "\n";
    image_prompt += "Visual style: " + style_.description;
  }
  if (!layout_directive.empty()) image_prompt += "\nLayout: " + layout_directive;
  image_prompt += "\nBanner size: " + std::to_string(request_.banner_width) + "x" +
                  std::to_string(request_.banner_height) + " pixels.";

  const GeneratedImage image = session_.generate_image(AgentKind::ImageResearcher, image_prompt,
                                                       request_.banner_width, request_.banner_height,
                                                       RunAction::create);
  next.memory = next.memory.append(AgentKind::ImageResearcher, MemoryKind::creation, image_prompt, {image.image});
  next.step = state.step + 1;
  next.draft = BannerDraft{image.image, style_.style_id, next.step, state.revisions};
  next.pending_feedback.clear();
  return commit(state, std::move(next), RunAction::create, routing);
}

std::pair<CoreState, std::vector<FeedbackItem>> CoreInstance::step_evaluate(const CoreState& state,
                                                                             const std::string& directive) {
  require(state.draft.has_value(), "step_evaluate needs an existing draft");
  const std::string supervisor_note = directive.empty() ? "" : "Supervisor instruction: " + directive + "\n";
  const std::string revised_note =
      state.revisions > 0 ? "The attached draft is a revised image (revision " + std::to_string(state.revisions) + ").\n"
                          : "";

  const Completion pick = session_.complete(
      AgentKind::EvalSupervisor,
      {{TurnRole::system, prompts_.render(TemplateId::evaluation_team), {}},
       {TurnRole::user,
        memory_text(state.memory) + supervisor_note + revised_note +
            "\nChoose the evaluators to act now. Reply with a comma-separated list from: TextContentEvaluator, "
            "BackgroundImageEvaluator, LayoutEvaluator.",
        visual_context(state)}},
      RunAction::evaluate);
  auto selected = protocol::parse_agent_list(pick.text, kEvalAgents);
  json routing{{"phase", "evaluate"}};
  if (!selected) {
    routing["override"] = "unparseable evaluator list; selecting the whole team";
    selected = std::vector<AgentKind>{AgentKind::TextEvaluator, AgentKind::BackgroundEvaluator,
                                      AgentKind::LayoutEvaluator};
  }
  // Canonical order regardless of how the supervisor listed them.
  std::vector<AgentKind> order;
  for (AgentKind k : {AgentKind::TextEvaluator, AgentKind::BackgroundEvaluator, AgentKind::LayoutEvaluator}) {
    if (contains(*selected, k)) order.push_back(k);
  }
  routing["agents"] = join_names(order);

  CoreState next = state;
  std::vector<FeedbackItem> feedback;
  const std::string context = "Campaign prompt: " + request_.prompt + "\n" + memory_text(state.memory) +
                              supervisor_note + revised_note +
                              "\nThe logo and the current banner draft are attached. Give your feedback. If nothing "
                              "is wrong, say 'No changes needed'.";
  for (AgentKind kind : order) {
    const TemplateId tmpl = kind == AgentKind::TextEvaluator         ? TemplateId::text_evaluator
                            : kind == AgentKind::BackgroundEvaluator ? TemplateId::background_evaluator
                                                                     : TemplateId::layout_evaluator;
    const Completion reply = session_.complete(
        kind, {{TurnRole::system, prompts_.render(tmpl), {}}, {TurnRole::user, context, visual_context(state)}},
        RunAction::evaluate);
    feedback.emplace_back(AgentRole(kind), reply.text);
    next.memory = next.memory.append(kind, MemoryKind::feedback, reply.text);
  }
  next.pending_feedback.insert(next.pending_feedback.end(), feedback.begin(), feedback.end());
  next.step = state.step + 1;
  return {commit(state, std::move(next), RunAction::evaluate, routing), feedback};
}

CoreState CoreInstance::step_revise(const CoreState& state, std::span<const FeedbackItem> feedback) {
  require(state.draft.has_value(), "step_revise needs an existing draft");
  if (state.revisions >= options_.limits.max_revisions) {
    fail(ErrorCode::RevisionCapReached,
         "draft already revised " + std::to_string(state.revisions) + " times (cap " +
             std::to_string(options_.limits.max_revisions) + ")");
  }
  require(!feedback.empty(), "step_revise needs feedback");

  std::string comments;
  for (const auto& item : feedback) comments += "- " + item.agent.name() + ": " + item.comment + "\n";
  const Completion reply = session_.complete(
      AgentKind::GraphicRevisor,
      {{TurnRole::system, prompts_.render(TemplateId::graphic_revisor), {}},
       {TurnRole::user,
        "Evaluation feedback on the attached banner draft:\n" + comments +
            "\nWrite one clear edit instruction for the image editing tool.",
        {state.draft->image}}},
      RunAction::revise);
  std::string instruction = protocol::trim(reply.text);
  if (instruction.empty()) instruction = "Apply this feedback:\n" + comments;

  const GeneratedImage edited = session_.edit_image(AgentKind::GraphicRevisor, state.draft->image, instruction,
                                                    RunAction::revise);
  CoreState next = state;
  next.memory = next.memory.append(AgentKind::GraphicRevisor, MemoryKind::revision_instruction, instruction,
                                   {edited.image});
  next.revisions = state.revisions + 1;
  next.step = state.step + 1;
  next.draft = BannerDraft{edited.image, style_.style_id, next.step, next.revisions};
  next.pending_feedback.clear();
  return commit(state, std::move(next), RunAction::revise);
}

CoreState CoreInstance::drive(CoreState state) {
  const auto& limits = options_.limits;
  while (!state.finished && state.step < limits.max_steps) {
    RoutingDecision decision = route_supervisor(state);

    if (decision.target == RouteTarget::Revisor) {
      std::string reason;
      if (state.revisions >= limits.max_revisions) {
        reason = "revision cap reached";
        decision = RoutingDecision{RouteTarget::Finish, ""};
      } else if (state.pending_feedback.empty()) {
        reason = "no feedback since the last revision";
        decision = RoutingDecision{RouteTarget::EvalTeam, ""};
      }
      if (!reason.empty()) {
        session_.note("engine", RunAction::route,
                      json{{"type", "override"},
                           {"requested", to_string(RouteTarget::Revisor)},
                           {"applied", to_string(decision.target)},
                           {"reason", reason}});
      }
    }

    switch (decision.target) {
      case RouteTarget::CreateTeam:
        state = step_create(state, decision.directive);
        break;
      case RouteTarget::EvalTeam:
        state = step_evaluate(state, decision.directive).first;
        break;
      case RouteTarget::Revisor: {
        const std::vector<FeedbackItem> feedback = state.pending_feedback;
        state = step_revise(state, feedback);
        break;
      }
      case RouteTarget::Finish: {
        CoreState done = state;
        done.step = state.step + 1;
        done.finished = true;
        state = commit(state, std::move(done), RunAction::finish, json{{"reason", "supervisor"}});
        break;
      }
    }
  }
  if (!state.finished) {
    CoreState done = state;
    done.finished = true;
    state = commit(state, std::move(done), RunAction::finish, json{{"reason", "max_steps"}});
  }
  if (!state.draft) fail(ErrorCode::NoDraftProduced, "core terminated without producing a draft");
  return state;
}

CoreResult CoreInstance::run() { return result(drive(initial_state())); }

CoreState CoreInstance::refine(const CoreState& state, std::span<const JudgeVerdict> verdicts) {
  require(state.draft.has_value(), "refine needs an existing draft");
  CoreState next = state;
  next.finished = false;
  for (const auto& verdict : verdicts) {
    next.memory = next.memory.append(verdict.judge, MemoryKind::judge_feedback,
                                     "Style " + verdict.candidate.key() + " " + std::string(to_string(verdict.vote)) +
                                         ": " + verdict.reason);
  }
  next = commit(state, std::move(next), RunAction::judge, json{{"phase", "judge_feedback"}});
  next = step_evaluate(next).first;

  const RoutingDecision decision = route_supervisor(next);
  const bool can_revise = next.revisions < options_.limits.max_revisions && !next.pending_feedback.empty();
  if (decision.target == RouteTarget::Revisor && can_revise) {
    const std::vector<FeedbackItem> feedback = next.pending_feedback;
    next = step_revise(next, feedback);
  } else if (decision.target != RouteTarget::Finish) {
    session_.note("engine", RunAction::route,
                  json{{"type", "override"},
                       {"requested", to_string(decision.target)},
                       {"applied", to_string(RouteTarget::Finish)},
                       {"reason", can_revise ? "refinement allows one evaluate and revise cycle"
                                             : "revision not possible"}});
  }
  CoreState done = next;
  done.finished = true;
  return commit(next, std::move(done), RunAction::finish, json{{"reason", "refinement"}});
}

CoreResult CoreInstance::result(const CoreState& state) const {
  if (!state.draft) fail(ErrorCode::NoDraftProduced, "no draft to report");
  return CoreResult{*state.draft, state.memory.entries(), session_.ledger(), state.step};
}

CoreResult run_core(const CampaignRequest& request, const StylePrompt& style, ModelGateway& gateway,
                    const CoreLimits& limits, EventLog* log, const PromptRegistry* prompts) {
  std::unique_ptr<PromptRegistry> owned;
  if (prompts == nullptr) {
    owned = std::make_unique<PromptRegistry>();
    prompts = owned.get();
  }
  AgentSession session(gateway, "style:" + style.style_id.key(), log);
  CoreInstance core(request, style, session, *prompts, CoreOptions{limits, true});
  return core.run();
}

}  // namespace mimo
