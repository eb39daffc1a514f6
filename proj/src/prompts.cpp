#include "mimo/prompts.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "mimo/error.hpp"

#ifndef MIMO_DEFAULT_TEMPLATE_DIR
#define MIMO_DEFAULT_TEMPLATE_DIR "templates"
#endif

namespace mimo {
namespace {

constexpr std::array<std::string_view, kTemplateCount> kTemplateNames{
    "core_team_root",       "content_creation_team", "copywriter",          "image_researcher",
    "evaluation_team",      "text_evaluator",        "layout_evaluator",    "background_evaluator",
    "graphic_revisor",      "pairwise_eval",         "six_way_eval",        "single_agent_ablation",
    "style_prompting",      "baseline_t2i_generator",
};

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

/// Length of a `{name}` placeholder starting at body[pos], or 0.
std::size_t placeholder_length(std::string_view body, std::size_t pos) {
  if (body[pos] != '{' || pos + 1 >= body.size() || !is_ident_start(body[pos + 1])) return 0;
  std::size_t end = pos + 2;
  while (end < body.size() && is_ident_char(body[end])) ++end;
  if (end >= body.size() || body[end] != '}') return 0;
  return end - pos + 1;
}

template <typename OnText, typename OnSlot>
void scan(std::string_view body, OnText&& on_text, OnSlot&& on_slot) {
  for (std::size_t i = 0; i < body.size();) {
    if ((body[i] == '{' || body[i] == '}') && i + 1 < body.size() && body[i + 1] == body[i]) {
      on_text(body.substr(i, 1));
      i += 2;
      continue;
    }
    if (const auto len = placeholder_length(body, i); len > 0) {
      on_slot(body.substr(i + 1, len - 2));
      i += len;
      continue;
    }
    on_text(body.substr(i, 1));
    ++i;
  }
}

}  // namespace

std::string_view to_string(TemplateId id) { return kTemplateNames[static_cast<std::size_t>(id)]; }

TemplateId template_id_from_string(std::string_view text) {
  for (std::size_t i = 0; i < kTemplateNames.size(); ++i) {
    if (kTemplateNames[i] == text) return static_cast<TemplateId>(i);
  }
  fail(ErrorCode::UnknownTemplate, "no template named '" + std::string(text) + "'");
}

std::set<std::string> placeholders(std::string_view body) {
  std::set<std::string> names;
  scan(body, [](std::string_view) {}, [&](std::string_view name) { names.emplace(name); });
  return names;
}

std::string render_text(std::string_view body, const Bindings& bindings) {
  const auto required = placeholders(body);
  for (const auto& name : required) {
    if (!bindings.contains(name)) fail(ErrorCode::MissingBinding, "no value bound for {" + name + "}");
  }
  for (const auto& [name, value] : bindings) {
    if (!required.contains(name)) fail(ErrorCode::ExtraBinding, "template has no slot {" + name + "}");
  }
  std::string out;
  out.reserve(body.size());
  scan(body, [&](std::string_view text) { out += text; },
       [&](std::string_view name) { out += bindings.find(name)->second; });
  return out;
}

std::filesystem::path default_template_dir() {
  if (const char* env = std::getenv("MIMO_TEMPLATE_DIR"); env != nullptr && *env != '\0') return env;
  return MIMO_DEFAULT_TEMPLATE_DIR;
}

PromptRegistry::PromptRegistry(const std::filesystem::path& directory) {
  for (std::size_t i = 0; i < kTemplateCount; ++i) {
    const auto id = static_cast<TemplateId>(i);
    const auto path = directory / (std::string(to_string(id)) + ".txt");
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::NotFound, "missing prompt template " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    std::string body = buffer.str();
    if (!body.empty() && body.back() == '\n') body.pop_back();
    templates_[i] = PromptTemplate{id, body, placeholders(body)};
  }
}

const PromptTemplate& PromptRegistry::get(TemplateId id) const { return templates_[static_cast<std::size_t>(id)]; }

std::string PromptRegistry::render(TemplateId id, const Bindings& bindings) const {
  return render_text(get(id).body, bindings);
}

std::string PromptRegistry::render(std::string_view id, const Bindings& bindings) const {
  return render(template_id_from_string(id), bindings);
}

std::vector<TemplateId> PromptRegistry::list_templates() {
  std::vector<TemplateId> ids;
  for (std::size_t i = 0; i < kTemplateCount; ++i) ids.push_back(static_cast<TemplateId>(i));
  return ids;
}

}  // namespace mimo
