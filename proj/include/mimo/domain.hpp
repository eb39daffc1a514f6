#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace mimo {

using json = nlohmann::json;

enum class MediaType { png, jpeg };

std::string_view to_string(MediaType type);
MediaType media_type_from_string(std::string_view text);
std::string_view file_extension(MediaType type);

/// Reference to an image persisted in an ImageStore. `id` is the SHA-256 of the bytes.
struct ImageRef {
  std::string id;
  MediaType media_type = MediaType::png;
  std::string locator;

  bool operator==(const ImageRef&) const = default;
};

enum class JudgeCriterion {
  VisualDesign,
  CopywritingQuality,
  BrandConsistency,
  UserExperience,
  TechnicalFidelity,
};

inline constexpr JudgeCriterion kAllCriteria[] = {
    JudgeCriterion::VisualDesign,     JudgeCriterion::CopywritingQuality,
    JudgeCriterion::BrandConsistency, JudgeCriterion::UserExperience,
    JudgeCriterion::TechnicalFidelity,
};

std::string_view to_string(JudgeCriterion criterion);
JudgeCriterion criterion_from_string(std::string_view text);

enum class AgentKind {
  CoreSupervisor,
  CreateSupervisor,
  Copywriter,
  ImageResearcher,
  LayoutPlanner,
  EvalSupervisor,
  TextEvaluator,
  BackgroundEvaluator,
  LayoutEvaluator,
  GraphicRevisor,
  StyleProposer,
  StyleSelector,
  Judge,
  // Not part of the banner pipeline: harness scorer and the one-prompt ablation agent.
  Scorer,
  SingleAgent,
};

/// An agent identity. Only Judge carries a criterion.
class AgentRole {
 public:
  AgentRole(AgentKind kind);  // NOLINT(google-explicit-constructor)
  static AgentRole judge(JudgeCriterion criterion);

  AgentKind kind() const noexcept { return kind_; }
  std::optional<JudgeCriterion> criterion() const noexcept { return criterion_; }

  /// "Copywriter", "Judge:BrandConsistency", ...
  std::string name() const;
  static AgentRole parse(std::string_view text);

  bool operator==(const AgentRole&) const = default;
  auto operator<=>(const AgentRole&) const = default;

 private:
  AgentRole(AgentKind kind, std::optional<JudgeCriterion> criterion)
      : kind_(kind), criterion_(criterion) {}

  AgentKind kind_;
  std::optional<JudgeCriterion> criterion_;
};

bool is_evaluator(const AgentRole& role);

struct StyleId {
  int value = 0;

  auto operator<=>(const StyleId&) const = default;
  std::string key() const { return std::to_string(value); }
};

struct CampaignRequest {
  std::string prompt;
  ImageRef logo;
  std::string product;
  int style_pool_size = 5;
  int styles_to_run = 3;
  int banner_width = 1024;
  int banner_height = 1024;

  /// Throws InvalidArgument on any violated invariant.
  void validate() const;
};

struct BannerDraft {
  ImageRef image;
  StyleId style_id;
  int step = 0;
  int revisions_applied = 0;

  bool operator==(const BannerDraft&) const = default;
};

enum class MemoryKind { user_input, creation, feedback, revision_instruction, judge_feedback, tool_log };

std::string_view to_string(MemoryKind kind);
MemoryKind memory_kind_from_string(std::string_view text);

struct MemoryEntry {
  std::int64_t seq = 0;
  AgentRole author = AgentKind::CoreSupervisor;
  MemoryKind kind = MemoryKind::user_input;
  std::string body;
  std::vector<ImageRef> attachments;

  bool operator==(const MemoryEntry&) const = default;
};

/// Append-only ordered log shared by the agents of one core instance.
/// Value semantic: append() yields a new version and leaves this one untouched.
class ContextMemory {
 public:
  ContextMemory() = default;

  ContextMemory append(MemoryEntry entry) const;
  /// Convenience: builds the entry with the next seq.
  ContextMemory append(const AgentRole& author, MemoryKind kind, std::string body,
                       std::vector<ImageRef> attachments = {}) const;

  const std::vector<MemoryEntry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  bool is_prefix_of(const ContextMemory& other) const;

  bool operator==(const ContextMemory&) const = default;

 private:
  std::vector<MemoryEntry> entries_;
};

ContextMemory memory_append(const ContextMemory& memory, MemoryEntry entry);

/// SHA-256 over the canonical encoding (one key-sorted JSON line per entry).
std::string memory_digest(const ContextMemory& memory);

struct FeedbackItem {
  AgentRole agent = AgentKind::TextEvaluator;
  std::string comment;

  FeedbackItem(AgentRole agent_role, std::string text);
  bool operator==(const FeedbackItem&) const = default;
};

struct StylePrompt {
  StyleId style_id;
  std::string description;

  bool operator==(const StylePrompt&) const = default;
};

enum class Vote { RECOMMENDED, REJECTED };

std::string_view to_string(Vote vote);

struct JudgeVerdict {
  AgentRole judge = AgentRole::judge(JudgeCriterion::VisualDesign);
  StyleId candidate;
  Vote vote = Vote::RECOMMENDED;
  std::string reason;

  bool operator==(const JudgeVerdict&) const = default;
};

enum class RouteTarget { CreateTeam, EvalTeam, Revisor, Finish };

std::string_view to_string(RouteTarget target);

struct RoutingDecision {
  RouteTarget target = RouteTarget::CreateTeam;
  std::string directive;
};

// JSON encodings, key-sorted through nlohmann's default std::map object.
void to_json(json& j, const ImageRef& ref);
void from_json(const json& j, ImageRef& ref);
void to_json(json& j, const MemoryEntry& entry);
void from_json(const json& j, MemoryEntry& entry);
void to_json(json& j, const BannerDraft& draft);
void from_json(const json& j, BannerDraft& draft);
void to_json(json& j, const StylePrompt& style);
void to_json(json& j, const JudgeVerdict& verdict);
void to_json(json& j, const FeedbackItem& item);

}  // namespace mimo
