#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "mimo/cost.hpp"
#include "mimo/domain.hpp"
#include "mimo/image_store.hpp"

namespace mimo {

enum class TurnRole { system, user, assistant };

std::string_view to_string(TurnRole role);

struct ChatTurn {
  TurnRole role = TurnRole::user;
  std::string text;
  std::vector<ImageRef> attachments;
};

struct Completion {
  std::string text;
  UsageEvent usage;
};

struct GeneratedImage {
  ImageRef image;
  UsageEvent usage;
};

/// Multimodal model access. Every call returns exactly one UsageEvent.
///
/// `scope` names the calling context (e.g. "style:2"). Live backends ignore it;
/// the scripted backend uses it to keep concurrent core instances apart.
/// Implementations must be safe for concurrent callers.
class ModelGateway {
 public:
  explicit ModelGateway(ImageStore& store) : store_(store) {}
  virtual ~ModelGateway() = default;

  ModelGateway(const ModelGateway&) = delete;
  ModelGateway& operator=(const ModelGateway&) = delete;

  Completion complete(const AgentRole& actor, std::span<const ChatTurn> turns, std::string_view scope = {});
  GeneratedImage generate_image(const AgentRole& actor, std::string_view prompt, int width, int height,
                                std::string_view scope = {});
  GeneratedImage edit_image(const AgentRole& actor, const ImageRef& base, std::string_view instruction,
                            std::string_view scope = {});

  ImageStore& store() noexcept { return store_; }
  const ImageStore& store() const noexcept { return store_; }

 protected:
  virtual Completion do_complete(const AgentRole& actor, std::span<const ChatTurn> turns,
                                 std::string_view scope) = 0;
  virtual GeneratedImage do_generate_image(const AgentRole& actor, std::string_view prompt, int width,
                                           int height, std::string_view scope) = 0;
  virtual GeneratedImage do_edit_image(const AgentRole& actor, const ImageRef& base,
                                       std::string_view instruction, std::string_view scope) = 0;

 private:
  ImageStore& store_;
};

// ---------------------------------------------------------------------------
// Scripted backend

enum class ScriptStrictness { strict_order, keyed_lookup };

std::string_view to_string(ScriptStrictness strictness);
ScriptStrictness strictness_from_string(std::string_view text);

struct ScriptStep {
  AgentRole actor = AgentKind::CoreSupervisor;
  CallKind call_kind = CallKind::complete;
  /// Empty matches any scope.
  std::string scope;
  std::string text;
  std::optional<UsageEvent> usage;
  /// keyed_lookup only: once reached, the step answers every later call for its key.
  bool repeat = false;
};

struct ScriptedBackendSpec {
  std::vector<ScriptStep> steps;
  ScriptStrictness strictness = ScriptStrictness::strict_order;
};

/// Reads a script file: one run-store event per line with action "respond".
ScriptedBackendSpec load_script(const std::filesystem::path& path, ScriptStrictness strictness);
ScriptedBackendSpec parse_script(std::string_view ndjson, ScriptStrictness strictness);
json script_step_to_json(const ScriptStep& step, std::int64_t seq);

/// Deterministic stand-in for a live model.
///
/// strict_order: calls must match steps in sequence; a mismatch is ScriptExhausted.
/// keyed_lookup: each (scope, actor, call_kind) key owns a FIFO queue; steps
/// without a scope form a fallback queue per (actor, call_kind).
/// Images are placeholder PNGs seeded from the prompt (or base id + instruction).
class ScriptedGateway final : public ModelGateway {
 public:
  ScriptedGateway(ImageStore& store, ScriptedBackendSpec spec);

  std::size_t calls_made() const;

 protected:
  Completion do_complete(const AgentRole& actor, std::span<const ChatTurn> turns,
                         std::string_view scope) override;
  GeneratedImage do_generate_image(const AgentRole& actor, std::string_view prompt, int width, int height,
                                   std::string_view scope) override;
  GeneratedImage do_edit_image(const AgentRole& actor, const ImageRef& base, std::string_view instruction,
                               std::string_view scope) override;

 private:
  using Key = std::tuple<std::string, std::string, CallKind>;

  const ScriptStep& next_step(const AgentRole& actor, CallKind kind, std::string_view scope);
  UsageEvent usage_for(const ScriptStep& step, const AgentRole& actor, CallKind kind) const;

  ScriptStrictness strictness_;
  std::vector<ScriptStep> steps_;
  std::size_t cursor_ = 0;
  std::map<Key, std::deque<std::size_t>> queues_;
  std::size_t calls_ = 0;
  mutable std::mutex mutex_;
};

// ---------------------------------------------------------------------------
// Live backend (OpenAI-compatible wire protocol)

struct LiveOptions {
  /// e.g. "https://api.openai.com/v1"; paths are appended to it.
  std::string base_url = "https://api.openai.com/v1";
  std::string model = "gpt-4o";
  std::string image_model = "gpt-image-1";
  std::string api_key;
  double temperature = 0.0;
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{500};
  std::chrono::milliseconds max_backoff{4000};
  std::chrono::seconds timeout{120};
};

/// Reads MIMO_API_KEY; throws ConfigError when absent.
std::string api_key_from_environment();

class LiveGateway final : public ModelGateway {
 public:
  LiveGateway(ImageStore& store, LiveOptions options);

  /// Request body for chat completions; exposed for tests.
  json chat_request_body(std::span<const ChatTurn> turns) const;

 protected:
  Completion do_complete(const AgentRole& actor, std::span<const ChatTurn> turns,
                         std::string_view scope) override;
  GeneratedImage do_generate_image(const AgentRole& actor, std::string_view prompt, int width, int height,
                                   std::string_view scope) override;
  GeneratedImage do_edit_image(const AgentRole& actor, const ImageRef& base, std::string_view instruction,
                               std::string_view scope) override;

 private:
  json post_json(const std::string& path, const json& body) const;
  GeneratedImage store_image_response(const json& response, const AgentRole& actor, CallKind kind);

  LiveOptions options_;
  std::string scheme_host_port_;
  std::string path_prefix_;
};

}  // namespace mimo
