#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace mimo {

enum class TemplateId {
  core_team_root,
  content_creation_team,
  copywriter,
  image_researcher,
  evaluation_team,
  text_evaluator,
  layout_evaluator,
  background_evaluator,
  graphic_revisor,
  pairwise_eval,
  six_way_eval,
  single_agent_ablation,
  style_prompting,
  baseline_t2i_generator,
};

inline constexpr std::size_t kTemplateCount = 14;

std::string_view to_string(TemplateId id);
TemplateId template_id_from_string(std::string_view text);

using Bindings = std::map<std::string, std::string, std::less<>>;

/// Placeholder names ({name}) appearing in a template body. `{{` and `}}` are literal braces.
std::set<std::string> placeholders(std::string_view body);

/// Substitutes {name} slots and unescapes {{ / }}. Braces that do not form a
/// placeholder are kept literally. Bindings must cover the placeholders exactly.
std::string render_text(std::string_view body, const Bindings& bindings);

struct PromptTemplate {
  TemplateId id;
  std::string body;
  std::set<std::string> required_bindings;
};

/// Template directory used when none is given: $MIMO_TEMPLATE_DIR, else the source tree copy.
std::filesystem::path default_template_dir();

/// Loads templates/<template_id>.txt for all ids. Read-only after construction.
class PromptRegistry {
 public:
  explicit PromptRegistry(const std::filesystem::path& directory = default_template_dir());

  std::string render(TemplateId id, const Bindings& bindings = {}) const;
  /// Throws UnknownTemplate for names outside the closed set.
  std::string render(std::string_view id, const Bindings& bindings = {}) const;
  const PromptTemplate& get(TemplateId id) const;

  static std::vector<TemplateId> list_templates();

 private:
  std::array<PromptTemplate, kTemplateCount> templates_;
};

}  // namespace mimo
