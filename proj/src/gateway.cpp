#include "mimo/gateway.hpp"

#include <sstream>
#include <fstream>

#include "mimo/error.hpp"

namespace mimo {

std::string_view to_string(TurnRole role) {
  switch (role) {
    case TurnRole::system: return "system";
    case TurnRole::user: return "user";
    case TurnRole::assistant: return "assistant";
  }
  return "";
}

Completion ModelGateway::complete(const AgentRole& actor, std::span<const ChatTurn> turns,
                                  std::string_view scope) {
  require(!turns.empty(), "complete() needs at least one chat turn");
  for (std::size_t i = 0; i < turns.size(); ++i) {
    require(turns[i].role != TurnRole::system || i == 0, "system turns may only appear first");
    for (const auto& image : turns[i].attachments) store_.require_resolvable(image);
  }
  return do_complete(actor, turns, scope);
}

GeneratedImage ModelGateway::generate_image(const AgentRole& actor, std::string_view prompt, int width,
                                            int height, std::string_view scope) {
  require(!prompt.empty(), "image prompt must be non-empty");
  require(width > 0 && height > 0, "image dimensions must be positive");
  return do_generate_image(actor, prompt, width, height, scope);
}

GeneratedImage ModelGateway::edit_image(const AgentRole& actor, const ImageRef& base,
                                        std::string_view instruction, std::string_view scope) {
  store_.require_resolvable(base);
  require(!instruction.empty(), "edit instruction must be non-empty");
  return do_edit_image(actor, base, instruction, scope);
}

// ---------------------------------------------------------------------------

std::string_view to_string(ScriptStrictness strictness) {
  return strictness == ScriptStrictness::strict_order ? "strict_order" : "keyed_lookup";
}

ScriptStrictness strictness_from_string(std::string_view text) {
  if (text == "strict_order" || text == "strict") return ScriptStrictness::strict_order;
  if (text == "keyed_lookup" || text == "keyed") return ScriptStrictness::keyed_lookup;
  fail(ErrorCode::ConfigError, "unknown script strictness '" + std::string(text) + "'");
}

ScriptedBackendSpec parse_script(std::string_view ndjson, ScriptStrictness strictness) {
  ScriptedBackendSpec spec;
  spec.strictness = strictness;
  std::istringstream in{std::string(ndjson)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto where = "script line " + std::to_string(line_no);
    json event;
    try {
      event = json::parse(line);
    } catch (const json::parse_error& e) {
      fail(ErrorCode::CorruptTranscript, where + ": " + e.what());
    }
    if (event.value("action", "") != "respond") {
      fail(ErrorCode::CorruptTranscript, where + ": expected action \"respond\"");
    }
    try {
      const json& payload = event.at("payload");
      ScriptStep step;
      step.actor = AgentRole::parse(event.at("actor").get<std::string>());
      step.call_kind = call_kind_from_string(payload.value("call_kind", "complete"));
      step.scope = payload.value("scope", "");
      step.text = payload.value("text", "");
      step.repeat = payload.value("repeat", false);
      if (event.contains("usage") && !event.at("usage").is_null()) {
        UsageEvent usage = event.at("usage").get<UsageEvent>();
        if (step.call_kind != CallKind::complete && usage.images_generated < 1) {
          fail(ErrorCode::InvalidArgument, where + ": image steps must generate at least one image");
        }
        step.usage = usage;
      }
      spec.steps.push_back(std::move(step));
    } catch (const json::exception& e) {
      fail(ErrorCode::CorruptTranscript, where + ": " + e.what());
    }
  }
  return spec;
}

ScriptedBackendSpec load_script(const std::filesystem::path& path, ScriptStrictness strictness) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::NotFound, "cannot open script " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_script(buffer.str(), strictness);
}

json script_step_to_json(const ScriptStep& step, std::int64_t seq) {
  json payload{{"call_kind", to_string(step.call_kind)}, {"text", step.text}};
  if (!step.scope.empty()) payload["scope"] = step.scope;
  if (step.repeat) payload["repeat"] = true;
  json usage = nullptr;
  if (step.usage) usage = *step.usage;
  return json{{"seq", seq},   {"clock", 0},        {"actor", step.actor.name()},
              {"action", "respond"}, {"payload", payload}, {"usage", usage}};
}

ScriptedGateway::ScriptedGateway(ImageStore& store, ScriptedBackendSpec spec)
    : ModelGateway(store), strictness_(spec.strictness), steps_(std::move(spec.steps)) {
  for (std::size_t i = 0; i < steps_.size(); ++i) {
    const auto& s = steps_[i];
    queues_[Key{s.scope, s.actor.name(), s.call_kind}].push_back(i);
  }
}

std::size_t ScriptedGateway::calls_made() const {
  std::lock_guard lock(mutex_);
  return calls_;
}

const ScriptStep& ScriptedGateway::next_step(const AgentRole& actor, CallKind kind, std::string_view scope) {
  // Caller holds mutex_.
  ++calls_;
  const auto describe = [&] {
    return actor.name() + "/" + std::string(to_string(kind)) +
           (scope.empty() ? std::string() : " in scope " + std::string(scope));
  };

  if (strictness_ == ScriptStrictness::strict_order) {
    if (cursor_ >= steps_.size()) fail(ErrorCode::ScriptExhausted, "no step left for " + describe());
    const ScriptStep& step = steps_[cursor_];
    if (step.actor != actor || step.call_kind != kind || (!step.scope.empty() && step.scope != scope)) {
      fail(ErrorCode::ScriptExhausted, "step " + std::to_string(cursor_) + " expects " + step.actor.name() +
                                           "/" + std::string(to_string(step.call_kind)) + " but got " +
                                           describe());
    }
    ++cursor_;
    return step;
  }

  for (const std::string& s : {std::string(scope), std::string()}) {
    auto it = queues_.find(Key{s, actor.name(), kind});
    if (it == queues_.end() || it->second.empty()) continue;
    const std::size_t index = it->second.front();
    if (!(steps_[index].repeat && it->second.size() == 1)) it->second.pop_front();
    return steps_[index];
  }
  fail(ErrorCode::ScriptExhausted, "no scripted step matches " + describe());
}

UsageEvent ScriptedGateway::usage_for(const ScriptStep& step, const AgentRole& actor, CallKind kind) const {
  UsageEvent usage = step.usage.value_or(UsageEvent{});
  usage.actor = actor;
  usage.call_kind = kind;
  if (kind != CallKind::complete && !step.usage) usage.images_generated = 1;
  return usage;
}

Completion ScriptedGateway::do_complete(const AgentRole& actor, std::span<const ChatTurn>,
                                        std::string_view scope) {
  std::lock_guard lock(mutex_);
  const ScriptStep& step = next_step(actor, CallKind::complete, scope);
  return Completion{step.text, usage_for(step, actor, CallKind::complete)};
}

GeneratedImage ScriptedGateway::do_generate_image(const AgentRole& actor, std::string_view prompt, int, int,
                                                  std::string_view scope) {
  UsageEvent usage;
  {
    std::lock_guard lock(mutex_);
    usage = usage_for(next_step(actor, CallKind::generate_image, scope), actor, CallKind::generate_image);
  }
  return GeneratedImage{store().put(placeholder_png(prompt), MediaType::png), usage};
}

GeneratedImage ScriptedGateway::do_edit_image(const AgentRole& actor, const ImageRef& base,
                                              std::string_view instruction, std::string_view scope) {
  UsageEvent usage;
  {
    std::lock_guard lock(mutex_);
    usage = usage_for(next_step(actor, CallKind::edit_image, scope), actor, CallKind::edit_image);
  }
  return GeneratedImage{store().put(placeholder_png(base.id + std::string(instruction)), MediaType::png),
                        usage};
}

}  // namespace mimo
