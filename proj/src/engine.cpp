#include "mimo/engine.hpp"

#include <charconv>
#include <set>

#include "mimo/error.hpp"
#include "mimo/protocol.hpp"

namespace mimo {
namespace {

constexpr std::string_view kScriptedPrefix = "scripted:";

const std::set<std::string> kConfigKeys{"backend", "base_url",  "model_name",  "image_model",
                                        "temperature", "max_revisions", "max_steps", "k",
                                        "n", "pricing", "layout_planner_enabled", "seed",
                                        "script_order", "clock", "jobs"};

template <typename T>
T config_value(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorCode::ConfigError, std::string("config key '") + key + "': " + e.what());
  }
}

CampaignRequest make_request(const EngineConfig& config, const CampaignInput& input, ImageStore& store) {
  if (input.prompt.empty()) fail(ErrorCode::InvalidArgument, "a prompt is required");
  std::error_code ec;
  if (!std::filesystem::is_regular_file(input.logo, ec)) {
    fail(ErrorCode::NotFound, "logo file not found: " + input.logo.string());
  }
  CampaignRequest request;
  request.prompt = input.prompt;
  request.product = input.product;
  request.logo = store.import_file(input.logo);
  request.style_pool_size = config.k;
  request.styles_to_run = config.n;
  request.banner_width = input.width;
  request.banner_height = input.height;
  request.validate();
  return request;
}

json error_json(const Error& e) { return json{{"code", to_string(e.code())}, {"message", e.what()}}; }

/// Records the failure in the run before handing it back to the caller.
[[noreturn]] void fail_run(Run& run, const Error& e) {
  run.transcript().record("engine", RunAction::error, json{{"type", "failure"}, {"error", error_json(e)}});
  run.write_report(json{{"status", "error"}, {"error", error_json(e)}});
  throw e;
}

}  // namespace

bool EngineConfig::scripted() const { return backend.starts_with(kScriptedPrefix); }

std::filesystem::path EngineConfig::script_path() const {
  require(scripted(), "backend is not scripted");
  return backend.substr(kScriptedPrefix.size());
}

int EngineConfig::effective_jobs() const { return jobs > 0 ? jobs : n; }

void EngineConfig::validate() const {
  if (backend != "live" && !scripted()) {
    fail(ErrorCode::ConfigError, "backend must be 'live' or 'scripted:<path>', got '" + backend + "'");
  }
  if (scripted() && script_path().empty()) fail(ErrorCode::ConfigError, "scripted backend requires a path");
  if (temperature < 0) fail(ErrorCode::ConfigError, "temperature must be non-negative");
  if (k < 1) fail(ErrorCode::ConfigError, "k must be at least 1");
  if (n < 1 || n > k) fail(ErrorCode::ConfigError, "n must lie in 1..k");
  if (jobs < 0) fail(ErrorCode::ConfigError, "jobs must be non-negative");
  if (clock != "wall" && clock != "counter") fail(ErrorCode::ConfigError, "clock must be 'wall' or 'counter'");
  try {
    limits.validate();
  } catch (const Error& e) {
    fail(ErrorCode::ConfigError, e.what());
  }
}

void to_json(json& j, const EngineConfig& c) {
  j = json{{"backend", c.backend},
           {"base_url", c.base_url},
           {"model_name", c.model_name},
           {"image_model", c.image_model},
           {"temperature", c.temperature},
           {"max_revisions", c.limits.max_revisions},
           {"max_steps", c.limits.max_steps},
           {"k", c.k},
           {"n", c.n},
           {"pricing", c.pricing},
           {"layout_planner_enabled", c.layout_planner_enabled},
           {"seed", c.seed},
           {"script_order", to_string(c.script_order)},
           {"clock", c.clock},
           {"jobs", c.jobs}};
}

void apply_config_json(const json& j, EngineConfig& c) {
  if (!j.is_object()) fail(ErrorCode::ConfigError, "config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!kConfigKeys.contains(key)) fail(ErrorCode::ConfigError, "unknown config key '" + key + "'");
  }
  if (j.contains("backend")) c.backend = config_value<std::string>(j, "backend");
  if (j.contains("base_url")) c.base_url = config_value<std::string>(j, "base_url");
  if (j.contains("model_name")) c.model_name = config_value<std::string>(j, "model_name");
  if (j.contains("image_model")) c.image_model = config_value<std::string>(j, "image_model");
  if (j.contains("temperature")) c.temperature = config_value<double>(j, "temperature");
  if (j.contains("max_revisions")) c.limits.max_revisions = config_value<int>(j, "max_revisions");
  if (j.contains("max_steps")) c.limits.max_steps = config_value<int>(j, "max_steps");
  if (j.contains("k")) c.k = config_value<int>(j, "k");
  if (j.contains("n")) c.n = config_value<int>(j, "n");
  if (j.contains("pricing")) {
    try {
      c.pricing = j.at("pricing").get<PricingTable>();
    } catch (const json::exception& e) {
      fail(ErrorCode::ConfigError, std::string("config key 'pricing': ") + e.what());
    }
  }
  if (j.contains("layout_planner_enabled")) c.layout_planner_enabled = config_value<bool>(j, "layout_planner_enabled");
  if (j.contains("seed")) c.seed = config_value<std::uint64_t>(j, "seed");
  if (j.contains("script_order")) c.script_order = strictness_from_string(config_value<std::string>(j, "script_order"));
  if (j.contains("clock")) c.clock = config_value<std::string>(j, "clock");
  if (j.contains("jobs")) c.jobs = config_value<int>(j, "jobs");
}

EngineConfig load_config(const std::filesystem::path& path) {
  json j;
  try {
    j = read_json_file(path);
  } catch (const Error& e) {
    fail(ErrorCode::ConfigError, e.what());
  }
  EngineConfig config;
  apply_config_json(j, config);
  return config;
}

ClockFactory clock_factory(const EngineConfig& config) {
  return config.clock == "counter" ? counter_clocks() : wall_clocks();
}

std::unique_ptr<ModelGateway> make_gateway(const EngineConfig& config, ImageStore& store) {
  config.validate();
  if (config.scripted()) {
    return std::make_unique<ScriptedGateway>(store, load_script(config.script_path(), config.script_order));
  }
  LiveOptions options;
  options.base_url = config.base_url;
  options.model = config.model_name;
  options.image_model = config.image_model;
  options.temperature = config.temperature;
  options.api_key = api_key_from_environment();
  return std::make_unique<LiveGateway>(store, options);
}

RunOutcome generate(const EngineConfig& config, const CampaignInput& input, const std::filesystem::path& out_dir,
                    const LoopOptions* overrides) {
  config.validate();
  auto run = create_run(out_dir, json(config), config.seed, clock_factory(config));
  try {
    const CampaignRequest request = make_request(config, input, run->images());
    auto gateway = make_gateway(config, run->images());
    const PromptRegistry prompts;
    LoopOptions options = overrides ? *overrides : LoopOptions{};
    options.core.limits = config.limits;
    options.core.layout_planner_enabled = config.layout_planner_enabled;
    options.jobs = config.effective_jobs();
    LoopOrchestrator loop(request, *gateway, prompts, options, run_logs(*run));
    const LoopResult result = loop.run();
    json report = encode(result, config.pricing);
    report["status"] = "ok";
    report["mode"] = "loop";
    run->write_report(report);
    return RunOutcome{run->id(), run->dir(), report};
  } catch (const Error& e) {
    fail_run(*run, e);
  }
}

RunOutcome run_core_command(const EngineConfig& config, const CampaignInput& input,
                            const std::filesystem::path& out_dir, bool single_agent) {
  config.validate();
  auto run = create_run(out_dir, json(config), config.seed, clock_factory(config));
  try {
    const CampaignRequest request = make_request(config, input, run->images());
    auto gateway = make_gateway(config, run->images());
    const PromptRegistry prompts;
    json report{{"status", "ok"}};
    CostLedger ledger;
    if (single_agent) {
      AgentSession session(*gateway, "style:0", &run->transcript());
      std::string item = request.prompt;
      if (!request.product.empty()) item += " (" + request.product + ")";
      const Completion design = session.complete(
          AgentKind::SingleAgent,
          {{TurnRole::user, prompts.render(TemplateId::single_agent_ablation, {{"item", item}}), {request.logo}}},
          RunAction::create);
      std::string image_prompt = protocol::trim(design.text);
      if (image_prompt.empty()) image_prompt = item;
      const GeneratedImage image = session.generate_image(AgentKind::SingleAgent, image_prompt, request.banner_width,
                                                          request.banner_height, RunAction::create);
      const BannerDraft draft{image.image, StyleId{0}, 1, 0};
      session.note("engine", RunAction::finish, json{{"type", "single_agent"}, {"final_draft", draft}});
      ledger = session.ledger();
      report["mode"] = "single_agent";
      report["final_draft"] = draft;
    } else {
      CoreOptions options{config.limits, config.layout_planner_enabled};
      AgentSession session(*gateway, "style:0", &run->transcript());
      CoreInstance core(request, StylePrompt{StyleId{0}, ""}, session, prompts, options);
      const CoreState state = core.drive(core.initial_state());
      const CoreResult result = core.result(state);
      ledger = result.ledger;
      report["mode"] = "core";
      report["final_draft"] = result.final_draft;
      report["steps_taken"] = result.steps_taken;
      report["revisions"] = state.revisions;
      report["memory_len"] = result.transcript.size();
    }
    report["cost"] = cost_report(ledger, config.pricing);
    run->write_report(report);
    return RunOutcome{run->id(), run->dir(), report};
  } catch (const Error& e) {
    fail_run(*run, e);
  }
}

json cost_from_run(const std::filesystem::path& run_dir) {
  const auto dir = std::filesystem::absolute(run_dir).lexically_normal();
  const auto name = dir.filename().empty() ? dir.parent_path().filename() : dir.filename();
  const auto root = dir.filename().empty() ? dir.parent_path().parent_path() : dir.parent_path();
  const auto [config_json, events] = load_run(root, name.string());
  EngineConfig config;
  apply_config_json(config_json, config);
  CostLedger ledger;
  for (const auto& event : events) {
    if (event.usage) ledger.record(*event.usage);
  }
  return cost_report(ledger, config.pricing);
}

SweepSpec parse_sweep(std::string_view text) {
  const auto eq = text.find('=');
  if (eq == std::string_view::npos) fail(ErrorCode::ConfigError, "sweep must look like judges=1,2,3 or styles=1,3,5");
  SweepSpec spec{std::string(text.substr(0, eq)), {}};
  if (spec.axis != "judges" && spec.axis != "styles") {
    fail(ErrorCode::ConfigError, "sweep axis must be 'judges' or 'styles', got '" + spec.axis + "'");
  }
  std::string_view rest = text.substr(eq + 1);
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const std::string item = protocol::trim(rest.substr(0, comma));
    int value = 0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), value);
    if (item.empty() || ec != std::errc{} || ptr != item.data() + item.size()) {
      fail(ErrorCode::ConfigError, "bad sweep value '" + item + "'");
    }
    spec.values.push_back(value);
    rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
  }
  if (spec.values.empty()) fail(ErrorCode::ConfigError, "sweep needs at least one value");
  for (int v : spec.values) {
    if (spec.axis == "judges" && (v < 1 || v > 5)) fail(ErrorCode::ConfigError, "judges must lie in 1..5");
    if (spec.axis == "styles" && v < 1) fail(ErrorCode::ConfigError, "styles must be at least 1");
  }
  return spec;
}

json ablate(const EngineConfig& config, const CampaignInput& input, const SweepSpec& sweep,
            const std::filesystem::path& out_dir) {
  json rows = json::array();
  for (int value : sweep.values) {
    EngineConfig setting = config;
    LoopOptions options;
    if (sweep.axis == "styles") {
      setting.n = value;
      setting.k = std::max(config.k, value);
    } else {
      options.panel.assign(std::begin(kAllCriteria), std::begin(kAllCriteria) + value);
    }
    const auto setting_dir = out_dir / (sweep.axis + "-" + std::to_string(value));
    const RunOutcome outcome = generate(setting, input, setting_dir, &options);

    // Score the winner against its own first draft on the pairwise protocol.
    ImageStore store(outcome.run_dir);
    auto gateway = make_gateway(setting, store);
    AgentSession session(*gateway, "ablate");
    const PromptRegistry prompts;
    const auto winner = outcome.report.at("winner").get<BannerDraft>();
    const json& initial = outcome.report.at("per_style").at(std::to_string(winner.style_id.value)).at("initial_draft");
    json scores = nullptr;
    if (!initial.is_null()) {
      const PairReport pair = evaluate_pair(initial.get<BannerDraft>().image, winner.image, session, prompts);
      scores = json::object();
      for (const auto& [metric, s] : pair.metrics) {
        scores[metric] = json{{"initial", s.image_1_score}, {"final", s.image_2_score}};
      }
    }
    rows.push_back(json{{"axis", sweep.axis},
                        {"value", value},
                        {"rounds", outcome.report.at("rounds").size()},
                        {"winner_style", winner.style_id.value},
                        {"cost", outcome.report.at("cost").at("total").at("cost")},
                        {"scores", scores},
                        {"run", setting_dir.filename().string() + "/" + outcome.run_id}});
  }
  return json{{"sweep", sweep.axis}, {"grid", rows}};
}

std::string check_memory_law(std::span<const RunEvent> events) {
  std::map<std::string, ContextMemory> streams;
  for (const auto& event : events) {
    const json& p = event.payload;
    if (!p.is_object() || p.value("type", "") != "step") continue;
    const std::string stream = p.contains("style_id") ? p.at("style_id").dump() : "core";
    const std::string where = "event " + std::to_string(event.seq) + " (stream " + stream + ")";
    ContextMemory& memory = streams[stream];
    const std::size_t before = memory.size();
    try {
      for (const auto& entry : p.at("new_entries")) memory = memory.append(entry.get<MemoryEntry>());
    } catch (const std::exception& e) {
      return where + ": new entries do not extend the previous memory: " + e.what();
    }
    if (p.at("memory_len").get<std::size_t>() != memory.size()) return where + ": memory_len disagrees with replay";
    if (p.at("memory_digest").get<std::string>() != memory_digest(memory)) {
      return where + ": memory_digest disagrees with replay";
    }
    if (event.action != RunAction::finish && memory.size() <= before) {
      return where + ": " + std::string(to_string(event.action)) + " step did not grow memory";
    }
  }
  return {};
}

}  // namespace mimo
