#include "mimo/evaluation.hpp"

#include <algorithm>
#include <boost/tokenizer.hpp>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "mimo/error.hpp"
#include "mimo/protocol.hpp"

namespace mimo {
namespace {

json payload_object(std::string_view text) {
  const auto block = protocol::extract_brace_block(text);
  if (!block) fail(ErrorCode::NoPayloadFound, "no JSON object found in scorer reply");
  try {
    json value = json::parse(*block);
    if (!value.is_object()) fail(ErrorCode::SchemaError, "payload is not a JSON object");
    return value;
  } catch (const json::parse_error& e) {
    fail(ErrorCode::SchemaError, std::string("payload is not valid JSON: ") + e.what());
  }
}

const json& member(const json& object, std::string_view key, const std::string& where) {
  const auto it = object.find(key);
  if (it == object.end()) fail(ErrorCode::SchemaError, "missing key \"" + std::string(key) + "\" in " + where);
  return *it;
}

template <std::size_t N>
void reject_unknown_keys(const json& object, const std::array<std::string_view, N>& allowed,
                         const std::string& where) {
  for (const auto& [key, value] : object.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      fail(ErrorCode::SchemaError, "unexpected key \"" + key + "\" in " + where);
    }
  }
}

int score_field(const json& value, int lo, int hi, const std::string& where) {
  if (!value.is_number_integer()) fail(ErrorCode::SchemaError, where + " must be an integer");
  const auto score = value.get<std::int64_t>();
  if (score < lo || score > hi) {
    fail(ErrorCode::RangeError, where + " = " + std::to_string(score) + " is outside " + std::to_string(lo) + ".." +
                                    std::to_string(hi));
  }
  return static_cast<int>(score);
}

std::string reason_field(const json& value, const std::string& where) {
  if (!value.is_string()) fail(ErrorCode::SchemaError, where + " must be a string");
  return value.get<std::string>();
}

constexpr std::array<std::string_view, 4> kPairFields{"image_1_score", "image_1_reason", "image_2_score",
                                                      "image_2_reason"};
constexpr std::array<std::string_view, 6> kImageKeys{"image_1", "image_2", "image_3",
                                                     "image_4", "image_5", "image_6"};
constexpr std::array<std::string_view, 2> kImageFields{"score", "reason"};

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) { return values[l] < values[r]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = (static_cast<double>(i + j) / 2.0) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = rank;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

void to_json(json& j, const PairReport& report) {
  j = json::object();
  for (const auto& [metric, s] : report.metrics) {
    j[metric] = json{{"image_1_score", s.image_1_score},
                     {"image_1_reason", s.image_1_reason},
                     {"image_2_score", s.image_2_score},
                     {"image_2_reason", s.image_2_reason}};
  }
}

void to_json(json& j, const SixWayReport& report) {
  j = json::object();
  for (const auto& [metric, images] : report.metrics) {
    json row = json::object();
    for (std::size_t i = 0; i < images.size(); ++i) {
      row[std::string(kImageKeys[i])] = json{{"score", images[i].score}, {"reason", images[i].reason}};
    }
    j[metric] = row;
  }
}

PairReport parse_pair_payload(std::string_view text) {
  const json root = payload_object(text);
  PairReport report;
  for (std::string_view metric : kPairMetrics) {
    const std::string name(metric);
    const json& entry = member(root, metric, "payload");
    if (!entry.is_object()) fail(ErrorCode::SchemaError, name + " must be an object");
    PairScore s;
    s.image_1_score = score_field(member(entry, "image_1_score", name), 0, 5, name + ".image_1_score");
    s.image_1_reason = reason_field(member(entry, "image_1_reason", name), name + ".image_1_reason");
    s.image_2_score = score_field(member(entry, "image_2_score", name), 0, 5, name + ".image_2_score");
    s.image_2_reason = reason_field(member(entry, "image_2_reason", name), name + ".image_2_reason");
    reject_unknown_keys(entry, kPairFields, name);
    report.metrics.emplace(name, std::move(s));
  }
  reject_unknown_keys(root, kPairMetrics, "payload");
  return report;
}

SixWayReport parse_six_way_payload(std::string_view text) {
  const json root = payload_object(text);
  SixWayReport report;
  for (std::string_view metric : kSixWayMetrics) {
    const std::string name(metric);
    const json& entry = member(root, metric, "payload");
    if (!entry.is_object()) fail(ErrorCode::SchemaError, name + " must be an object");
    std::array<ImageScore, 6> images;
    for (std::size_t i = 0; i < kImageKeys.size(); ++i) {
      const std::string where = name + "." + std::string(kImageKeys[i]);
      const json& cell = member(entry, kImageKeys[i], name);
      if (!cell.is_object()) fail(ErrorCode::SchemaError, where + " must be an object");
      images[i].score = score_field(member(cell, "score", where), 1, 5, where + ".score");
      images[i].reason = reason_field(member(cell, "reason", where), where + ".reason");
      reject_unknown_keys(cell, kImageFields, where);
    }
    reject_unknown_keys(entry, kImageKeys, name);
    report.metrics.emplace(name, images);
  }
  reject_unknown_keys(root, kSixWayMetrics, "payload");
  return report;
}

MetricReport parse_metric_payload(std::string_view text, MetricSchema schema) {
  if (schema == MetricSchema::pairwise) return parse_pair_payload(text);
  return parse_six_way_payload(text);
}

std::string six_way_format_instruction() {
  std::string out = "Return your response in the following JSON format, with one entry per image (image_1 to image_6) "
                    "under every criterion and integer scores from 1 to 5:\n\n{\n";
  for (std::size_t m = 0; m < kSixWayMetrics.size(); ++m) {
    out += "   \"" + std::string(kSixWayMetrics[m]) + "\": { ";
    for (std::size_t i = 0; i < kImageKeys.size(); ++i) {
      out += "\"" + std::string(kImageKeys[i]) + "\": { \"score\": 1, \"reason\": \"Your explanation here.\" }";
      if (i + 1 < kImageKeys.size()) out += ", ";
    }
    out += m + 1 < kSixWayMetrics.size() ? " },\n" : " }\n";
  }
  return out + "}";
}

PairReport evaluate_pair(const ImageRef& image_a, const ImageRef& image_b, AgentSession& session,
                         const PromptRegistry& prompts) {
  const Completion reply =
      session.complete(AgentKind::Scorer, {{TurnRole::user, prompts.render(TemplateId::pairwise_eval), {image_a, image_b}}},
                       RunAction::evaluate);
  return parse_pair_payload(reply.text);
}

SixWayReport evaluate_six_way(std::span<const ImageRef> images, AgentSession& session, const PromptRegistry& prompts) {
  if (images.size() != 6) {
    fail(ErrorCode::InvalidArgument, "six-way evaluation needs exactly 6 images, got " + std::to_string(images.size()));
  }
  const std::string text = prompts.render(TemplateId::six_way_eval) + "\n\n" + six_way_format_instruction();
  const Completion reply = session.complete(
      AgentKind::Scorer, {{TurnRole::user, text, std::vector<ImageRef>(images.begin(), images.end())}},
      RunAction::evaluate);
  return parse_six_way_payload(reply.text);
}

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    fail(ErrorCode::LengthMismatch,
         "spearman needs equal lengths, got " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
  }
  if (a.size() < 2) fail(ErrorCode::LengthMismatch, "spearman needs at least 2 observations");
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  // Mean rank is (n+1)/2 regardless of ties.
  const double mean = (n + 1.0) / 2.0;
  double cov = 0, va = 0, vb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    const double da = ra[i] - mean;
    const double db = rb[i] - mean;
    cov += da * db;
    va += da * da;
    vb += db * db;
  }
  if (va == 0 || vb == 0) fail(ErrorCode::DegenerateInput, "spearman is undefined for a constant ranking");
  const double rho = va == vb ? cov / va : cov / std::sqrt(va * vb);
  return std::clamp(rho, -1.0, 1.0);
}

ScoreTable aggregate(std::span<const ScoreRecord> scores) {
  require(!scores.empty(), "aggregate needs at least one score");
  std::map<std::string, std::map<std::string, std::vector<double>>> groups;
  for (const auto& s : scores) groups[s.method][s.metric].push_back(s.score);
  ScoreTable table;
  for (auto& [method, metrics] : groups) {
    for (auto& [metric, values] : metrics) {
      // Sorting first makes the floating-point sums independent of input order.
      std::sort(values.begin(), values.end());
      const double n = static_cast<double>(values.size());
      double sum = 0;
      for (double v : values) sum += v;
      const double mean = sum / n;
      double ss = 0;
      for (double v : values) ss += (v - mean) * (v - mean);
      table.rows[method][metric] = ScoreStat{mean, std::sqrt(ss / n), values.size()};
    }
  }
  return table;
}

std::string format_fixed(double value, int decimals) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(decimals);
  out << (value == 0 ? 0.0 : value);
  return out.str();
}

json to_json(const ScoreTable& table) {
  json rows = json::object();
  for (const auto& [method, metrics] : table.rows) {
    json row = json::object();
    for (const auto& [metric, stat] : metrics) {
      row[metric] = json{{"mean", format_fixed(stat.mean, 2)}, {"std", format_fixed(stat.std, 2)}, {"n", stat.n}};
    }
    rows[method] = row;
  }
  return rows;
}

std::vector<ScoreRecord> parse_score_csv(std::string_view text) {
  using Tokenizer = boost::tokenizer<boost::escaped_list_separator<char>>;
  std::vector<ScoreRecord> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (protocol::trim(line).empty()) continue;
    std::vector<std::string> cells;
    try {
      Tokenizer tokens(line);
      for (const auto& cell : tokens) cells.push_back(protocol::trim(cell));
    } catch (const boost::escaped_list_error& e) {
      fail(ErrorCode::InvalidArgument, "csv line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!header_seen) {
      header_seen = true;
      if (cells == std::vector<std::string>{"method", "metric", "rater", "score"}) continue;
      fail(ErrorCode::InvalidArgument, "csv header must be method,metric,rater,score");
    }
    if (cells.size() != 4) {
      fail(ErrorCode::InvalidArgument, "csv line " + std::to_string(line_no) + ": expected 4 fields");
    }
    double score = 0;
    const auto& s = cells[3];
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), score);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(score)) {
      fail(ErrorCode::InvalidArgument, "csv line " + std::to_string(line_no) + ": bad score '" + s + "'");
    }
    out.push_back(ScoreRecord{cells[0], cells[1], cells[2], score});
  }
  return out;
}

std::vector<ScoreRecord> load_score_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::NotFound, "cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_score_csv(buffer.str());
}

CorrelationResult correlate_scores(std::span<const ScoreRecord> human, std::span<const ScoreRecord> machine) {
  const ScoreTable h = aggregate(human);
  const ScoreTable m = aggregate(machine);
  CorrelationResult result;
  for (const auto& [method, metrics] : h.rows) {
    const auto mrow = m.rows.find(method);
    if (mrow == m.rows.end()) continue;
    for (const auto& [metric, stat] : metrics) {
      const auto cell = mrow->second.find(metric);
      if (cell == mrow->second.end()) continue;
      result.keys.emplace_back(method, metric);
      result.human.push_back(stat.mean);
      result.machine.push_back(cell->second.mean);
    }
  }
  result.rho = spearman(result.human, result.machine);
  return result;
}

}  // namespace mimo
