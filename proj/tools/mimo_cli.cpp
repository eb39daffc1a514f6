// mimo: command line front end for the banner engine.
#include <CLI11.hpp>

#include <iostream>

#include "mimo/engine.hpp"
#include "mimo/error.hpp"
#include "mimo/evaluation.hpp"

namespace {

using namespace mimo;

struct EngineFlags {
  std::string config_path;
  std::string backend;
  std::string base_url;
  std::string model;
  int n = 0;
  int k = 0;
  int max_revisions = 0;
  int max_steps = 0;
  int jobs = 0;
  std::uint64_t seed = 0;
  std::string clock;
  std::string script_order;
  bool no_layout_planner = false;
  std::vector<CLI::Option*> options;

  void add(CLI::App& app, bool loop_flags) {
    app.add_option("--config", config_path, "Engine config JSON (flags override it)")->check(CLI::ExistingFile);
    options.push_back(app.add_option("--backend", backend, "live or scripted:<path>"));
    options.push_back(app.add_option("--base-url", base_url, "OpenAI-compatible endpoint"));
    options.push_back(app.add_option("--model", model, "Chat model name"));
    if (loop_flags) {
      options.push_back(app.add_option("--n", n, "Styles to run")->check(CLI::PositiveNumber));
      options.push_back(app.add_option("--k", k, "Style pool size")->check(CLI::PositiveNumber));
      options.push_back(app.add_option("--jobs", jobs, "Worker threads (default n)")->check(CLI::PositiveNumber));
    }
    options.push_back(app.add_option("--max-revisions", max_revisions, "Revision cap")->check(CLI::NonNegativeNumber));
    options.push_back(app.add_option("--max-steps", max_steps, "Supervisor step cap")->check(CLI::PositiveNumber));
    options.push_back(app.add_option("--seed", seed, "Run id seed"));
    options.push_back(app.add_option("--clock", clock, "wall or counter")->check(CLI::IsMember({"wall", "counter"})));
    options.push_back(app.add_option("--script-order", script_order, "keyed or strict script matching")
                          ->check(CLI::IsMember({"keyed", "strict"})));
    options.push_back(app.add_flag("--no-layout-planner", no_layout_planner, "Disable the layout planner agent"));
  }

  EngineConfig resolve() const {
    EngineConfig config = config_path.empty() ? EngineConfig{} : load_config(config_path);
    auto given = [&](std::string_view name) {
      for (const auto* opt : options) {
        if (opt->check_name(std::string(name)) && opt->count() > 0) return true;
      }
      return false;
    };
    if (given("--backend")) config.backend = backend;
    if (given("--base-url")) config.base_url = base_url;
    if (given("--model")) config.model_name = model;
    if (given("--n")) config.n = n;
    if (given("--k")) config.k = k;
    if (given("--jobs")) config.jobs = jobs;
    if (given("--max-revisions")) config.limits.max_revisions = max_revisions;
    if (given("--max-steps")) config.limits.max_steps = max_steps;
    if (given("--seed")) config.seed = seed;
    if (given("--clock")) config.clock = clock;
    if (given("--script-order")) config.script_order = strictness_from_string(script_order);
    if (given("--no-layout-planner")) config.layout_planner_enabled = false;
    // A lowered revision cap pulls the step cap along unless it was set explicitly.
    if (given("--max-revisions") && !given("--max-steps") && config.limits.max_steps < config.limits.max_revisions + 2) {
      config.limits.max_steps = config.limits.max_revisions + 2;
    }
    config.validate();
    return config;
  }
};

struct CampaignFlags {
  CampaignInput input;
  void add(CLI::App& app) {
    app.add_option("--prompt", input.prompt, "Advertiser prompt")->required();
    app.add_option("--logo", input.logo, "Logo image (PNG or JPEG)")->required();
    app.add_option("--product", input.product, "Optional product information");
    app.add_option("--width", input.width, "Banner width")->check(CLI::PositiveNumber);
    app.add_option("--height", input.height, "Banner height")->check(CLI::PositiveNumber);
  }
};

void print_run(const RunOutcome& outcome, const json& cost) {
  std::cout << "run: " << outcome.run_id << "\n";
  std::cout << "run_dir: " << outcome.run_dir.string() << "\n";
  const json& draft = outcome.report.contains("winner") ? outcome.report.at("winner") : outcome.report.at("final_draft");
  std::cout << "image: " << (outcome.run_dir / draft.at("image").at("locator").get<std::string>()).string() << "\n";
  std::cout << "cost: " << cost.at("total").at("display").get<std::string>() << " (exact "
            << cost.at("total").at("cost").get<std::string>() << ")\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-agent ad banner generation engine"};
  app.require_subcommand(1);

  auto* generate_cmd = app.add_subcommand("generate", "Run the full style tournament");
  EngineFlags generate_engine;
  CampaignFlags generate_campaign;
  std::string generate_out = "runs";
  generate_engine.add(*generate_cmd, true);
  generate_campaign.add(*generate_cmd);
  generate_cmd->add_option("--out-dir", generate_out, "Directory holding run directories");

  auto* core_cmd = app.add_subcommand("core", "Run a single core pipeline");
  EngineFlags core_engine;
  CampaignFlags core_campaign;
  std::string core_out = "runs";
  bool single_agent = false;
  core_engine.add(*core_cmd, false);
  core_campaign.add(*core_cmd);
  core_cmd->add_option("--out-dir", core_out, "Directory holding run directories");
  core_cmd->add_flag("--single-agent", single_agent, "One prompt and one image call instead of the team");

  auto* eval_cmd = app.add_subcommand("eval", "Score images or correlate score files");
  EngineFlags eval_engine;
  std::vector<std::string> pair_images;
  std::vector<std::string> six_images;
  std::vector<std::string> spearman_files;
  std::string aggregate_file;
  std::string eval_report;
  eval_engine.add(*eval_cmd, false);
  auto* pair_opt = eval_cmd->add_option("--pair", pair_images, "Two images for pairwise scoring")->expected(2);
  auto* six_opt = eval_cmd->add_option("--six-way", six_images, "Six images for six-way scoring")->expected(6);
  auto* sp_opt = eval_cmd->add_option("--spearman", spearman_files, "human.csv machine.csv")->expected(2);
  auto* agg_opt = eval_cmd->add_option("--aggregate", aggregate_file, "Score CSV to summarize");
  eval_cmd->add_option("--report", eval_report, "Also write the JSON result here");
  for (auto* opt : {pair_opt, six_opt, sp_opt, agg_opt}) {
    for (auto* other : {pair_opt, six_opt, sp_opt, agg_opt}) {
      if (opt != other) opt->excludes(other);
    }
  }
  for (auto* opt : {pair_opt, six_opt}) opt->check(CLI::ExistingFile);
  sp_opt->check(CLI::ExistingFile);
  agg_opt->check(CLI::ExistingFile);

  auto* cost_cmd = app.add_subcommand("cost", "Recompute a run's cost from its transcript");
  std::string cost_run;
  cost_cmd->add_option("run_dir", cost_run, "Run directory (runs/<run_id>)")->required()->check(CLI::ExistingDirectory);

  auto* ablate_cmd = app.add_subcommand("ablate", "Sweep judges or styles and emit a score grid");
  EngineFlags ablate_engine;
  CampaignFlags ablate_campaign;
  std::string sweep_text;
  std::string ablate_out = "runs";
  ablate_engine.add(*ablate_cmd, true);
  ablate_campaign.add(*ablate_cmd);
  ablate_cmd->add_option("--sweep", sweep_text, "judges=1,2,3,4,5 or styles=1,3,5")->required();
  ablate_cmd->add_option("--out-dir", ablate_out, "Directory holding the sweep runs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*generate_cmd) {
      const EngineConfig config = generate_engine.resolve();
      const RunOutcome outcome = generate(config, generate_campaign.input, generate_out);
      std::cout << "rounds: " << outcome.report.at("rounds").size() << "\n";
      print_run(outcome, outcome.report.at("cost"));
    } else if (*core_cmd) {
      EngineConfig config = core_engine.resolve();
      const RunOutcome outcome = run_core_command(config, core_campaign.input, core_out, single_agent);
      if (outcome.report.contains("steps_taken")) {
        std::cout << "steps: " << outcome.report.at("steps_taken") << ", revisions: " << outcome.report.at("revisions")
                  << "\n";
      }
      print_run(outcome, outcome.report.at("cost"));
    } else if (*eval_cmd) {
      json result;
      if (!spearman_files.empty()) {
        const auto human = load_score_csv(spearman_files[0]);
        const auto machine = load_score_csv(spearman_files[1]);
        const CorrelationResult c = correlate_scores(human, machine);
        json keys = json::array();
        for (const auto& [method, metric] : c.keys) keys.push_back(json::array({method, metric}));
        result = json{{"spearman", c.rho}, {"pairs", keys}, {"human", c.human}, {"machine", c.machine}};
        std::cout << "spearman: " << format_fixed(c.rho, 4) << " over " << c.keys.size() << " method/metric pairs\n";
      } else if (!aggregate_file.empty()) {
        result = to_json(aggregate(load_score_csv(aggregate_file)));
        std::cout << result.dump(2) << "\n";
      } else if (!pair_images.empty() || !six_images.empty()) {
        const EngineConfig config = eval_engine.resolve();
        ImageStore store;
        auto gateway = make_gateway(config, store);
        AgentSession session(*gateway, "eval");
        const PromptRegistry prompts;
        if (!pair_images.empty()) {
          const ImageRef a = store.import_file(pair_images[0]);
          const ImageRef b = store.import_file(pair_images[1]);
          result = json{{"pairwise", evaluate_pair(a, b, session, prompts)}};
        } else {
          std::vector<ImageRef> refs;
          for (const auto& path : six_images) refs.push_back(store.import_file(path));
          result = json{{"six_way", evaluate_six_way(refs, session, prompts)}};
        }
        result["cost"] = cost_report(session.ledger(), config.pricing);
        std::cout << result.dump(2) << "\n";
      } else {
        std::cerr << "eval needs one of --pair, --six-way, --spearman or --aggregate\n";
        return 2;
      }
      if (!eval_report.empty()) write_json_file(eval_report, result);
    } else if (*cost_cmd) {
      const json report = cost_from_run(cost_run);
      std::cout << "total: " << report.at("total").at("display").get<std::string>() << " (exact "
                << report.at("total").at("cost").get<std::string>() << ")\n";
      std::cout << report.dump(2) << "\n";
    } else if (*ablate_cmd) {
      const EngineConfig config = ablate_engine.resolve();
      const json grid = ablate(config, ablate_campaign.input, parse_sweep(sweep_text), ablate_out);
      std::filesystem::create_directories(ablate_out);
      write_json_file(std::filesystem::path(ablate_out) / "grid.json", grid);
      std::cout << grid.dump(2) << "\n";
    }
  } catch (const Error& e) {
    const bool usage = e.code() == ErrorCode::ConfigError;
    std::cerr << json{{"error", {{"code", to_string(e.code())}, {"message", e.what()}}}}.dump() << "\n";
    return usage ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", {{"code", "Internal"}, {"message", e.what()}}}}.dump() << "\n";
    return 1;
  }
  return 0;
}
