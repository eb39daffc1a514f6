#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mimo/domain.hpp"
#include "mimo/prompts.hpp"
#include "mimo/session.hpp"

namespace mimo {

inline constexpr std::array<std::string_view, 6> kPairMetrics{"TAA", "LPS", "CTAE", "CPYQ", "BIS", "AQS"};
inline constexpr std::array<std::string_view, 5> kSixWayMetrics{"LPC", "EKI", "LAY", "TYP", "TRA"};

enum class MetricSchema { pairwise, six_way };

struct PairScore {
  int image_1_score = 0;
  std::string image_1_reason;
  int image_2_score = 0;
  std::string image_2_reason;
  bool operator==(const PairScore&) const = default;
};

struct PairReport {
  std::map<std::string, PairScore> metrics;
  bool operator==(const PairReport&) const = default;
};

struct ImageScore {
  int score = 1;
  std::string reason;
  bool operator==(const ImageScore&) const = default;
};

struct SixWayReport {
  std::map<std::string, std::array<ImageScore, 6>> metrics;
  bool operator==(const SixWayReport&) const = default;
};

void to_json(json& j, const PairReport& report);
void to_json(json& j, const SixWayReport& report);

using MetricReport = std::variant<PairReport, SixWayReport>;

/// Extracts the first balanced brace block and validates it strictly.
/// Pairwise scores must lie in 0..5, six-way scores in 1..5. Reasons may be empty.
MetricReport parse_metric_payload(std::string_view text, MetricSchema schema);
PairReport parse_pair_payload(std::string_view text);
SixWayReport parse_six_way_payload(std::string_view text);

/// The JSON shape the engine asks six-way scorers to answer in.
std::string six_way_format_instruction();

PairReport evaluate_pair(const ImageRef& image_a, const ImageRef& image_b, AgentSession& session,
                         const PromptRegistry& prompts);
SixWayReport evaluate_six_way(std::span<const ImageRef> images, AgentSession& session, const PromptRegistry& prompts);

/// Rank correlation with average ranks for ties (Pearson correlation of the rank vectors).
double spearman(std::span<const double> a, std::span<const double> b);

struct ScoreRecord {
  std::string method;
  std::string metric;
  std::string rater;
  double score = 0;
};

struct ScoreStat {
  double mean = 0;
  double std = 0;  // population
  std::size_t n = 0;
};

struct ScoreTable {
  std::map<std::string, std::map<std::string, ScoreStat>> rows;  // method -> metric -> stat
};

ScoreTable aggregate(std::span<const ScoreRecord> scores);
json to_json(const ScoreTable& table);

/// Reads a method,metric,rater,score CSV with a header row.
std::vector<ScoreRecord> load_score_csv(const std::filesystem::path& path);
std::vector<ScoreRecord> parse_score_csv(std::string_view text);

struct CorrelationResult {
  double rho = 0;
  std::vector<std::pair<std::string, std::string>> keys;  // aligned (method, metric) pairs
  std::vector<double> human;
  std::vector<double> machine;
};

/// Aggregates both score sets to per-(method, metric) means, aligns them on the
/// keys both contain, and correlates the aligned means.
CorrelationResult correlate_scores(std::span<const ScoreRecord> human, std::span<const ScoreRecord> machine);

std::string format_fixed(double value, int decimals);

}  // namespace mimo
