#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mimo/cost.hpp"
#include "mimo/domain.hpp"
#include "mimo/image_store.hpp"

namespace mimo {

enum class RunAction {
  route,
  create,
  evaluate,
  revise,
  propose_styles,
  select_styles,
  judge,
  eliminate,
  finish,
  error,
  respond,  // scripted-backend files only
};

std::string_view to_string(RunAction action);
RunAction run_action_from_string(std::string_view text);

struct RunEvent {
  std::int64_t seq = 0;
  std::int64_t clock = 0;
  /// An AgentRole name or "engine".
  std::string actor = "engine";
  RunAction action = RunAction::route;
  json payload = json::object();
  std::optional<UsageEvent> usage;

  bool operator==(const RunEvent&) const = default;
};

void to_json(json& j, const RunEvent& event);
void from_json(const json& j, RunEvent& event);
/// One key-sorted JSON line, without the trailing newline.
std::string serialize_event(const RunEvent& event);

class Clock {
 public:
  virtual ~Clock() = default;
  virtual std::int64_t now() = 0;
};

/// 0, 1, 2, ... per instance.
class CounterClock final : public Clock {
 public:
  std::int64_t now() override { return next_++; }

 private:
  std::atomic<std::int64_t> next_{0};
};

/// Milliseconds since the Unix epoch.
class WallClock final : public Clock {
 public:
  std::int64_t now() override;
};

using ClockFactory = std::function<std::unique_ptr<Clock>()>;
ClockFactory counter_clocks();
ClockFactory wall_clocks();

/// Append-only event transcript, optionally mirrored to an NDJSON file that is
/// flushed after every append. One writer per log.
class EventLog {
 public:
  explicit EventLog(std::unique_ptr<Clock> clock, std::optional<std::filesystem::path> file = std::nullopt);

  /// Throws SeqMismatch unless event.seq equals the current event count.
  void append_event(RunEvent event);
  /// Stamps seq and clock, then appends.
  const RunEvent& record(std::string actor, RunAction action, json payload,
                         std::optional<UsageEvent> usage = std::nullopt);

  const std::vector<RunEvent>& events() const noexcept { return events_; }
  std::size_t size() const noexcept { return events_.size(); }

 private:
  std::unique_ptr<Clock> clock_;
  std::optional<std::filesystem::path> file_;
  std::ofstream out_;
  std::vector<RunEvent> events_;
};

struct RunConfigSnapshot {
  json config;
  std::optional<std::uint64_t> seed;
};

/// `YYYYMMDD-xxxxxx` (UTC date plus six hex digits drawn from `seed`).
std::string make_run_id(std::uint64_t seed);

/// Directory layout runs/<run_id>/{config.json, transcript.ndjson, report.json, images/, candidates/}.
class Run {
 public:
  Run(std::filesystem::path dir, std::string run_id, ClockFactory clocks);

  const std::filesystem::path& dir() const noexcept { return dir_; }
  const std::string& id() const noexcept { return id_; }
  EventLog& transcript() noexcept { return transcript_; }
  ImageStore& images() noexcept { return images_; }

  /// Per-style sub-transcript at candidates/<style_id>/transcript.ndjson.
  EventLog& candidate_log(StyleId style);
  void write_report(const json& report) const;

 private:
  std::filesystem::path dir_;
  std::string id_;
  ClockFactory clocks_;
  ImageStore images_;
  EventLog transcript_;
  std::mutex candidates_mutex_;
  std::map<StyleId, std::unique_ptr<EventLog>> candidates_;
};

/// Creates <root>/<run_id>/ with config.json, an empty transcript and images/.
std::unique_ptr<Run> create_run(const std::filesystem::path& root, const json& config, std::uint64_t seed,
                                ClockFactory clocks);

std::vector<RunEvent> parse_transcript(std::string_view ndjson);
std::pair<json, std::vector<RunEvent>> load_run(const std::filesystem::path& root, const std::string& run_id);
std::vector<RunEvent> load_transcript(const std::filesystem::path& file);

/// Writes key-sorted JSON with a trailing newline.
void write_json_file(const std::filesystem::path& path, const json& value);
json read_json_file(const std::filesystem::path& path);

}  // namespace mimo
