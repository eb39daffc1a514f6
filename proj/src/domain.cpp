#include "mimo/domain.hpp"

#include <array>
#include <utility>

#include "mimo/error.hpp"
#include "mimo/hash.hpp"

namespace mimo {
namespace {

constexpr std::array<std::pair<AgentKind, std::string_view>, 15> kAgentNames{{
    {AgentKind::CoreSupervisor, "CoreSupervisor"},
    {AgentKind::CreateSupervisor, "CreateSupervisor"},
    {AgentKind::Copywriter, "Copywriter"},
    {AgentKind::ImageResearcher, "ImageResearcher"},
    {AgentKind::LayoutPlanner, "LayoutPlanner"},
    {AgentKind::EvalSupervisor, "EvalSupervisor"},
    {AgentKind::TextEvaluator, "TextEvaluator"},
    {AgentKind::BackgroundEvaluator, "BackgroundEvaluator"},
    {AgentKind::LayoutEvaluator, "LayoutEvaluator"},
    {AgentKind::GraphicRevisor, "GraphicRevisor"},
    {AgentKind::StyleProposer, "StyleProposer"},
    {AgentKind::StyleSelector, "StyleSelector"},
    {AgentKind::Judge, "Judge"},
    {AgentKind::Scorer, "Scorer"},
    {AgentKind::SingleAgent, "SingleAgent"},
}};

constexpr std::array<std::pair<MemoryKind, std::string_view>, 6> kMemoryKinds{{
    {MemoryKind::user_input, "user_input"},
    {MemoryKind::creation, "creation"},
    {MemoryKind::feedback, "feedback"},
    {MemoryKind::revision_instruction, "revision_instruction"},
    {MemoryKind::judge_feedback, "judge_feedback"},
    {MemoryKind::tool_log, "tool_log"},
}};

}  // namespace

std::string_view to_string(MediaType type) { return type == MediaType::png ? "png" : "jpeg"; }

MediaType media_type_from_string(std::string_view text) {
  if (text == "png") return MediaType::png;
  if (text == "jpeg" || text == "jpg") return MediaType::jpeg;
  fail(ErrorCode::InvalidArgument, "unknown media type '" + std::string(text) + "'");
}

std::string_view file_extension(MediaType type) { return type == MediaType::png ? "png" : "jpg"; }

std::string_view to_string(JudgeCriterion criterion) {
  switch (criterion) {
    case JudgeCriterion::VisualDesign: return "VisualDesign";
    case JudgeCriterion::CopywritingQuality: return "CopywritingQuality";
    case JudgeCriterion::BrandConsistency: return "BrandConsistency";
    case JudgeCriterion::UserExperience: return "UserExperience";
    case JudgeCriterion::TechnicalFidelity: return "TechnicalFidelity";
  }
  return "";
}

JudgeCriterion criterion_from_string(std::string_view text) {
  for (auto c : kAllCriteria) {
    if (to_string(c) == text) return c;
  }
  fail(ErrorCode::InvalidArgument, "unknown judge criterion '" + std::string(text) + "'");
}

AgentRole::AgentRole(AgentKind kind) : kind_(kind) {
  require(kind != AgentKind::Judge, "a Judge role needs a criterion; use AgentRole::judge()");
}

AgentRole AgentRole::judge(JudgeCriterion criterion) { return AgentRole(AgentKind::Judge, criterion); }

std::string AgentRole::name() const {
  for (const auto& [kind, name] : kAgentNames) {
    if (kind != kind_) continue;
    if (criterion_) return std::string(name) + ":" + std::string(to_string(*criterion_));
    return std::string(name);
  }
  return "?";
}

AgentRole AgentRole::parse(std::string_view text) {
  if (text.starts_with("Judge:")) return judge(criterion_from_string(text.substr(6)));
  for (const auto& [kind, name] : kAgentNames) {
    if (name == text && kind != AgentKind::Judge) return AgentRole(kind);
  }
  fail(ErrorCode::InvalidArgument, "unknown agent role '" + std::string(text) + "'");
}

bool is_evaluator(const AgentRole& role) {
  switch (role.kind()) {
    case AgentKind::EvalSupervisor:
    case AgentKind::TextEvaluator:
    case AgentKind::BackgroundEvaluator:
    case AgentKind::LayoutEvaluator:
      return true;
    default:
      return false;
  }
}

void CampaignRequest::validate() const {
  require(!prompt.empty(), "campaign prompt must be non-empty");
  require(!logo.id.empty(), "campaign logo is required");
  require(style_pool_size >= 1, "style_pool_size must be positive");
  require(styles_to_run >= 1, "styles_to_run must be at least 1");
  require(styles_to_run <= style_pool_size, "styles_to_run must not exceed style_pool_size");
  require(banner_width > 0 && banner_height > 0, "banner dimensions must be positive");
}

std::string_view to_string(MemoryKind kind) {
  for (const auto& [k, name] : kMemoryKinds) {
    if (k == kind) return name;
  }
  return "";
}

MemoryKind memory_kind_from_string(std::string_view text) {
  for (const auto& [k, name] : kMemoryKinds) {
    if (name == text) return k;
  }
  fail(ErrorCode::InvalidArgument, "unknown memory kind '" + std::string(text) + "'");
}

ContextMemory ContextMemory::append(MemoryEntry entry) const {
  if (entry.seq != static_cast<std::int64_t>(entries_.size())) {
    fail(ErrorCode::SeqMismatch, "memory entry seq " + std::to_string(entry.seq) +
                                     " does not match memory length " +
                                     std::to_string(entries_.size()));
  }
  ContextMemory next = *this;
  next.entries_.push_back(std::move(entry));
  return next;
}

ContextMemory ContextMemory::append(const AgentRole& author, MemoryKind kind, std::string body,
                                    std::vector<ImageRef> attachments) const {
  return append(MemoryEntry{static_cast<std::int64_t>(entries_.size()), author, kind,
                            std::move(body), std::move(attachments)});
}

bool ContextMemory::is_prefix_of(const ContextMemory& other) const {
  if (entries_.size() > other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (!(entries_[i] == other.entries_[i])) return false;
  }
  return true;
}

ContextMemory memory_append(const ContextMemory& memory, MemoryEntry entry) {
  return memory.append(std::move(entry));
}

std::string memory_digest(const ContextMemory& memory) {
  std::string encoding;
  for (const auto& entry : memory.entries()) {
    encoding += json(entry).dump();
    encoding += '\n';
  }
  return sha256_hex(encoding);
}

FeedbackItem::FeedbackItem(AgentRole agent_role, std::string text)
    : agent(agent_role), comment(std::move(text)) {
  require(is_evaluator(agent), "feedback author " + agent.name() + " is not on the evaluation team");
}

std::string_view to_string(Vote vote) { return vote == Vote::RECOMMENDED ? "RECOMMENDED" : "REJECTED"; }

std::string_view to_string(RouteTarget target) {
  switch (target) {
    case RouteTarget::CreateTeam: return "CreateTeam";
    case RouteTarget::EvalTeam: return "EvalTeam";
    case RouteTarget::Revisor: return "Revisor";
    case RouteTarget::Finish: return "Finish";
  }
  return "";
}

void to_json(json& j, const ImageRef& ref) {
  j = json{{"id", ref.id}, {"media_type", to_string(ref.media_type)}, {"locator", ref.locator}};
}

void from_json(const json& j, ImageRef& ref) {
  ref.id = j.at("id").get<std::string>();
  ref.media_type = media_type_from_string(j.at("media_type").get<std::string>());
  ref.locator = j.at("locator").get<std::string>();
}

void to_json(json& j, const MemoryEntry& entry) {
  j = json{{"seq", entry.seq},
           {"author", entry.author.name()},
           {"kind", to_string(entry.kind)},
           {"body", entry.body},
           {"attachments", entry.attachments}};
}

void from_json(const json& j, MemoryEntry& entry) {
  entry.seq = j.at("seq").get<std::int64_t>();
  entry.author = AgentRole::parse(j.at("author").get<std::string>());
  entry.kind = memory_kind_from_string(j.at("kind").get<std::string>());
  entry.body = j.at("body").get<std::string>();
  entry.attachments = j.at("attachments").get<std::vector<ImageRef>>();
}

void to_json(json& j, const BannerDraft& draft) {
  j = json{{"image", draft.image},
           {"style_id", draft.style_id.value},
           {"step", draft.step},
           {"revisions_applied", draft.revisions_applied}};
}

void from_json(const json& j, BannerDraft& draft) {
  draft.image = j.at("image").get<ImageRef>();
  draft.style_id = StyleId{j.at("style_id").get<int>()};
  draft.step = j.at("step").get<int>();
  draft.revisions_applied = j.at("revisions_applied").get<int>();
}

void to_json(json& j, const StylePrompt& style) {
  j = json{{"style_id", style.style_id.value}, {"description", style.description}};
}

void to_json(json& j, const JudgeVerdict& verdict) {
  j = json{{"judge", verdict.judge.name()},
           {"candidate", verdict.candidate.value},
           {"vote", to_string(verdict.vote)},
           {"reason", verdict.reason}};
}

void to_json(json& j, const FeedbackItem& item) {
  j = json{{"agent", item.agent.name()}, {"comment", item.comment}};
}

}  // namespace mimo
