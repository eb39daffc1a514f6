#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mimo/core.hpp"
#include "mimo/cost.hpp"
#include "mimo/evaluation.hpp"
#include "mimo/gateway.hpp"
#include "mimo/loop.hpp"
#include "mimo/run_store.hpp"

namespace mimo {

struct EngineConfig {
  /// "live" or "scripted:<path>".
  std::string backend = "live";
  std::string base_url = "https://api.openai.com/v1";
  std::string model_name = "gpt-4o";
  std::string image_model = "gpt-image-1";
  double temperature = 0;
  CoreLimits limits;
  int k = 5;
  int n = 3;
  PricingTable pricing;
  bool layout_planner_enabled = true;
  std::uint64_t seed = 0;
  ScriptStrictness script_order = ScriptStrictness::keyed_lookup;
  /// "wall" or "counter".
  std::string clock = "wall";
  /// Worker threads; 0 means one per selected style.
  int jobs = 0;

  bool scripted() const;
  std::filesystem::path script_path() const;
  int effective_jobs() const;
  void validate() const;
};

void to_json(json& j, const EngineConfig& config);
/// Overlays the keys present in `j` onto `config`; unknown keys are a ConfigError.
void apply_config_json(const json& j, EngineConfig& config);
EngineConfig load_config(const std::filesystem::path& path);

ClockFactory clock_factory(const EngineConfig& config);
std::unique_ptr<ModelGateway> make_gateway(const EngineConfig& config, ImageStore& store);

struct CampaignInput {
  std::string prompt;
  std::filesystem::path logo;
  std::string product;
  int width = 1024;
  int height = 1024;
};

struct RunOutcome {
  std::string run_id;
  std::filesystem::path run_dir;
  json report;
};

/// Full pipeline: writes runs/<run_id>/ under `out_dir` and returns the report.
RunOutcome generate(const EngineConfig& config, const CampaignInput& input, const std::filesystem::path& out_dir,
                    const LoopOptions* overrides = nullptr);

/// One core run without a style prompt, or a single prompt plus one image call.
RunOutcome run_core_command(const EngineConfig& config, const CampaignInput& input,
                            const std::filesystem::path& out_dir, bool single_agent);

/// Recomputes the cost report from a run's transcript and its config snapshot.
json cost_from_run(const std::filesystem::path& run_dir);

struct SweepSpec {
  std::string axis;  // "judges" or "styles"
  std::vector<int> values;
};

SweepSpec parse_sweep(std::string_view text);

/// Runs the full pipeline once per sweep value and scores each winner against
/// its style's first draft with the pairwise protocol.
json ablate(const EngineConfig& config, const CampaignInput& input, const SweepSpec& sweep,
            const std::filesystem::path& out_dir);

/// Replays step events and checks every committed memory strictly extends the previous one.
/// Returns an empty string on success, otherwise a description of the first violation.
std::string check_memory_law(std::span<const RunEvent> events);

}  // namespace mimo
