#include "mimo/run_store.hpp"

#include <array>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <random>
#include <sstream>

#include "mimo/error.hpp"

namespace mimo {
namespace {

constexpr std::array<std::pair<RunAction, std::string_view>, 11> kActions{{
    {RunAction::route, "route"},
    {RunAction::create, "create"},
    {RunAction::evaluate, "evaluate"},
    {RunAction::revise, "revise"},
    {RunAction::propose_styles, "propose_styles"},
    {RunAction::select_styles, "select_styles"},
    {RunAction::judge, "judge"},
    {RunAction::eliminate, "eliminate"},
    {RunAction::finish, "finish"},
    {RunAction::error, "error"},
    {RunAction::respond, "respond"},
}};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::NotFound, "cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

std::string_view to_string(RunAction action) {
  for (const auto& [a, name] : kActions) {
    if (a == action) return name;
  }
  return "";
}

RunAction run_action_from_string(std::string_view text) {
  for (const auto& [a, name] : kActions) {
    if (name == text) return a;
  }
  fail(ErrorCode::InvalidArgument, "unknown run action '" + std::string(text) + "'");
}

void to_json(json& j, const RunEvent& event) {
  j = json{{"seq", event.seq},
           {"clock", event.clock},
           {"actor", event.actor},
           {"action", to_string(event.action)},
           {"payload", event.payload},
           {"usage", event.usage ? json(*event.usage) : json(nullptr)}};
}

void from_json(const json& j, RunEvent& event) {
  event.seq = j.at("seq").get<std::int64_t>();
  event.clock = j.at("clock").get<std::int64_t>();
  event.actor = j.at("actor").get<std::string>();
  event.action = run_action_from_string(j.at("action").get<std::string>());
  event.payload = j.at("payload");
  if (j.contains("usage") && !j.at("usage").is_null()) {
    event.usage = j.at("usage").get<UsageEvent>();
  } else {
    event.usage.reset();
  }
}

std::string serialize_event(const RunEvent& event) { return json(event).dump(); }

std::int64_t WallClock::now() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

ClockFactory counter_clocks() {
  return [] { return std::make_unique<CounterClock>(); };
}

ClockFactory wall_clocks() {
  return [] { return std::make_unique<WallClock>(); };
}

EventLog::EventLog(std::unique_ptr<Clock> clock, std::optional<std::filesystem::path> file)
    : clock_(std::move(clock)), file_(std::move(file)) {
  if (file_) {
    std::error_code ec;
    std::filesystem::create_directories(file_->parent_path(), ec);
    out_.open(*file_, std::ios::binary | std::ios::app);
    if (!out_) fail(ErrorCode::IoError, "cannot open transcript " + file_->string());
  }
}

void EventLog::append_event(RunEvent event) {
  if (event.seq != static_cast<std::int64_t>(events_.size())) {
    fail(ErrorCode::SeqMismatch, "event seq " + std::to_string(event.seq) + " but transcript holds " +
                                     std::to_string(events_.size()) + " events");
  }
  if (!events_.empty() && event.clock < events_.back().clock) {
    fail(ErrorCode::InvalidArgument, "event clock went backwards");
  }
  if (file_) {
    out_ << serialize_event(event) << '\n';
    out_.flush();
    if (!out_) fail(ErrorCode::IoError, "cannot append to " + file_->string());
  }
  events_.push_back(std::move(event));
}

const RunEvent& EventLog::record(std::string actor, RunAction action, json payload,
                                 std::optional<UsageEvent> usage) {
  append_event(RunEvent{static_cast<std::int64_t>(events_.size()), clock_->now(), std::move(actor), action,
                        std::move(payload), std::move(usage)});
  return events_.back();
}

std::string make_run_id(std::uint64_t seed) {
  const std::time_t now = std::time(nullptr);
  std::tm utc{};
  gmtime_r(&now, &utc);
  char date[16];
  std::strftime(date, sizeof date, "%Y%m%d", &utc);
  std::mt19937_64 rng(seed);
  char suffix[8];
  std::snprintf(suffix, sizeof suffix, "%06x", static_cast<unsigned>(rng() & 0xffffff));
  return std::string(date) + "-" + suffix;
}

Run::Run(std::filesystem::path dir, std::string run_id, ClockFactory clocks)
    : dir_(std::move(dir)),
      id_(std::move(run_id)),
      clocks_(std::move(clocks)),
      images_(dir_),
      transcript_(clocks_(), dir_ / "transcript.ndjson") {}

EventLog& Run::candidate_log(StyleId style) {
  std::lock_guard lock(candidates_mutex_);
  auto& slot = candidates_[style];
  if (!slot) {
    slot = std::make_unique<EventLog>(clocks_(), dir_ / "candidates" / style.key() / "transcript.ndjson");
  }
  return *slot;
}

void Run::write_report(const json& report) const { write_json_file(dir_ / "report.json", report); }

std::unique_ptr<Run> create_run(const std::filesystem::path& root, const json& config, std::uint64_t seed,
                                ClockFactory clocks) {
  const std::string run_id = make_run_id(seed);
  const auto dir = root / run_id;
  std::error_code ec;
  if (std::filesystem::exists(dir, ec)) fail(ErrorCode::IoError, "run directory already exists: " + dir.string());
  std::filesystem::create_directories(dir / "images", ec);
  if (ec) fail(ErrorCode::IoError, "cannot create run directory " + dir.string() + ": " + ec.message());
  write_json_file(dir / "config.json", config);
  return std::make_unique<Run>(dir, run_id, std::move(clocks));
}

std::vector<RunEvent> parse_transcript(std::string_view ndjson) {
  std::vector<RunEvent> events;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < ndjson.size()) {
    ++line_no;
    const auto newline = ndjson.find('\n', pos);
    const auto where = "line " + std::to_string(line_no);
    if (newline == std::string_view::npos) fail(ErrorCode::CorruptTranscript, where + ": truncated (no newline)");
    const std::string_view line = ndjson.substr(pos, newline - pos);
    pos = newline + 1;
    RunEvent event;
    try {
      event = json::parse(line).get<RunEvent>();
    } catch (const json::exception& e) {
      fail(ErrorCode::CorruptTranscript, where + ": " + e.what());
    } catch (const Error& e) {
      fail(ErrorCode::CorruptTranscript, where + ": " + e.what());
    }
    if (event.seq != static_cast<std::int64_t>(events.size())) {
      fail(ErrorCode::CorruptTranscript, where + ": seq " + std::to_string(event.seq) + " out of order");
    }
    if (!events.empty() && event.clock < events.back().clock) {
      fail(ErrorCode::CorruptTranscript, where + ": clock went backwards");
    }
    events.push_back(std::move(event));
  }
  return events;
}

std::vector<RunEvent> load_transcript(const std::filesystem::path& file) { return parse_transcript(read_file(file)); }

std::pair<json, std::vector<RunEvent>> load_run(const std::filesystem::path& root, const std::string& run_id) {
  const auto dir = root / run_id;
  if (run_id.empty() || !std::filesystem::is_directory(dir)) fail(ErrorCode::NotFound, "no run '" + run_id + "'");
  return {read_json_file(dir / "config.json"), load_transcript(dir / "transcript.ndjson")};
}

void write_json_file(const std::filesystem::path& path, const json& value) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << value.dump(2) << '\n';
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
}

json read_json_file(const std::filesystem::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    fail(ErrorCode::CorruptTranscript, path.string() + ": " + e.what());
  }
}

}  // namespace mimo
