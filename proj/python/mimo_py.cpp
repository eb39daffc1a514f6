// Python bindings. Structured results cross the boundary as JSON text and are
// decoded by the mimo package, so the C++ encoders stay the single source of truth.

#include <fstream>
#include <sstream>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "mimo/cost.hpp"
#include "mimo/engine.hpp"
#include "mimo/error.hpp"
#include "mimo/evaluation.hpp"
#include "mimo/loop.hpp"
#include "mimo/prompts.hpp"

namespace py = pybind11;
using namespace mimo;

namespace {

EngineConfig config_from(const std::string& config_json) {
  EngineConfig config;
  if (!config_json.empty()) apply_config_json(json::parse(config_json), config);
  config.validate();
  return config;
}

CampaignInput campaign(const std::string& prompt, const std::filesystem::path& logo, const std::string& product,
                       int width, int height) {
  return CampaignInput{prompt, logo, product, width, height};
}

std::string outcome_json(const RunOutcome& outcome) {
  return json{{"run_id", outcome.run_id}, {"run_dir", outcome.run_dir.string()}, {"report", outcome.report}}.dump();
}

}  // namespace

PYBIND11_MODULE(_mimo, m) {
  m.doc() = "Native core of the mimo banner engine";

  static py::exception<Error> error_type(m, "Error");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      const py::tuple args = py::make_tuple(std::string(to_string(e.code())), e.what());
      PyErr_SetObject(error_type.ptr(), args.ptr());
    }
  });

  m.def("list_templates", [] {
    std::vector<std::string> names;
    for (TemplateId id : PromptRegistry::list_templates()) names.emplace_back(to_string(id));
    return names;
  });
  m.def(
      "render",
      [](const std::string& template_id, const std::map<std::string, std::string>& bindings,
         const std::string& template_dir) {
        const PromptRegistry registry = template_dir.empty() ? PromptRegistry() : PromptRegistry(template_dir);
        return registry.render(template_id, Bindings(bindings.begin(), bindings.end()));
      },
      py::arg("template_id"), py::arg("bindings") = std::map<std::string, std::string>{},
      py::arg("template_dir") = "");

  m.def(
      "cost",
      [](std::int64_t input_tokens, std::int64_t output_tokens, std::int64_t images) {
        CostLedger ledger;
        ledger.record(UsageEvent{input_tokens, output_tokens, 0, AgentKind::Copywriter, CallKind::complete});
        for (std::int64_t i = 0; i < images; ++i) {
          ledger.record(UsageEvent{0, 0, 1, AgentKind::ImageResearcher, CallKind::generate_image});
        }
        const Money money = total(ledger, PricingTable{});
        return py::make_tuple(money.micros, money.exact(), money.display());
      },
      py::arg("input_tokens"), py::arg("output_tokens"), py::arg("images") = 0);

  m.def("spearman", [](const std::vector<double>& a, const std::vector<double>& b) { return spearman(a, b); });

  m.def("aggregate", [](const std::vector<std::tuple<std::string, std::string, std::string, double>>& rows) {
    std::vector<ScoreRecord> records;
    for (const auto& [method, metric, rater, score] : rows) records.push_back({method, metric, rater, score});
    return to_json(aggregate(records)).dump();
  });

  m.def("parse_metric_payload", [](const std::string& text, const std::string& schema) {
    if (schema != "pairwise" && schema != "six_way") fail(ErrorCode::InvalidArgument, "unknown schema " + schema);
    const MetricReport report =
        parse_metric_payload(text, schema == "pairwise" ? MetricSchema::pairwise : MetricSchema::six_way);
    return std::visit([](const auto& r) { return json(r).dump(); }, report);
  });

  m.def("eliminate", [](const std::map<int, std::vector<bool>>& rejected) {
    VerdictMatrix matrix;
    for (const auto& [id, votes] : rejected) {
      if (votes.size() > std::size(kAllCriteria)) fail(ErrorCode::InvalidArgument, "at most five votes per candidate");
      for (std::size_t c = 0; c < votes.size(); ++c) {
        const JudgeCriterion criterion = kAllCriteria[c];
        matrix.verdicts[{criterion, StyleId{id}}] =
            JudgeVerdict{AgentRole::judge(criterion), StyleId{id}, votes[c] ? Vote::REJECTED : Vote::RECOMMENDED, ""};
      }
    }
    return json(eliminate(matrix)).dump();
  });

  m.def(
      "generate",
      [](const std::string& config_json, const std::string& prompt, const std::filesystem::path& logo,
         const std::string& product, int width, int height, const std::filesystem::path& out_dir) {
        const EngineConfig config = config_from(config_json);
        py::gil_scoped_release release;
        return outcome_json(generate(config, campaign(prompt, logo, product, width, height), out_dir));
      },
      py::arg("config_json"), py::arg("prompt"), py::arg("logo"), py::arg("product") = "", py::arg("width") = 1024,
      py::arg("height") = 1024, py::arg("out_dir") = "runs");

  m.def(
      "run_core",
      [](const std::string& config_json, const std::string& prompt, const std::filesystem::path& logo,
         const std::string& product, int width, int height, const std::filesystem::path& out_dir, bool single_agent) {
        const EngineConfig config = config_from(config_json);
        py::gil_scoped_release release;
        return outcome_json(
            run_core_command(config, campaign(prompt, logo, product, width, height), out_dir, single_agent));
      },
      py::arg("config_json"), py::arg("prompt"), py::arg("logo"), py::arg("product") = "", py::arg("width") = 1024,
      py::arg("height") = 1024, py::arg("out_dir") = "runs", py::arg("single_agent") = false);

  m.def("cost_from_run", [](const std::filesystem::path& run_dir) { return cost_from_run(run_dir).dump(); });

  m.def("check_memory_law", [](const std::filesystem::path& run_dir) {
    std::ifstream in(run_dir / "transcript.ndjson", std::ios::binary);
    if (!in) fail(ErrorCode::NotFound, "no transcript in " + run_dir.string());
    std::stringstream text;
    text << in.rdbuf();
    return check_memory_law(parse_transcript(text.str()));
  });
}
