#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "mimo/error.hpp"
#include "mimo/evaluation.hpp"
#include "test_support.hpp"

using namespace mimo;
using testkit::say;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::InvalidArgument;
}

// Independent oracle: textbook average ranks, then Pearson in long double.
std::vector<long double> average_ranks(const std::vector<double>& v) {
  std::vector<long double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    long double less = 0, equal = 0;
    for (double x : v) {
      less += x < v[i];
      equal += x == v[i];
    }
    r[i] = less + (equal + 1) / 2;
  }
  return r;
}

double spearman_oracle(const std::vector<double>& a, const std::vector<double>& b) {
  const auto ra = average_ranks(a), rb = average_ranks(b);
  const long double n = ra.size();
  const long double ma = std::accumulate(ra.begin(), ra.end(), 0.0L) / n;
  const long double mb = std::accumulate(rb.begin(), rb.end(), 0.0L) / n;
  long double cov = 0, va = 0, vb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    cov += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  return static_cast<double>(cov / std::sqrt(va * vb));
}

json valid_pair_json() {
  json j = json::object();
  int s = 0;
  for (auto metric : kPairMetrics) {
    j[std::string(metric)] = {{"image_1_score", s % 6},
                              {"image_1_reason", "first " + std::string(metric)},
                              {"image_2_score", (s + 2) % 6},
                              {"image_2_reason", ""}};
    ++s;
  }
  return j;
}

json valid_six_way_json() {
  json j = json::object();
  for (auto metric : kSixWayMetrics) {
    json per = json::object();
    for (int i = 1; i <= 6; ++i) per["image_" + std::to_string(i)] = {{"score", 1 + (i % 5)}, {"reason", "ok"}};
    j[std::string(metric)] = per;
  }
  return j;
}

}  // namespace

TEST(Spearman, PerfectAgreementAndReversal) {
  const std::vector<double> a{1, 2, 3, 4, 5};
  const std::vector<double> rev{5, 4, 3, 2, 1};
  EXPECT_EQ(spearman(a, a), 1.0);
  EXPECT_EQ(spearman(a, rev), -1.0);
}

TEST(Spearman, RankDifferenceFormula) {
  // No ties: rho = 1 - 6 * sum(d^2) / (n (n^2 - 1)) = 1 - 6 * 4 / 120.
  const std::vector<double> a{1, 2, 3, 4, 5};
  const std::vector<double> b{2, 1, 4, 3, 5};
  EXPECT_NEAR(spearman(a, b), 0.8, 1e-12);
}

TEST(Spearman, TiesUseAverageRanks) {
  const std::vector<double> a{1, 2, 2, 3, 4, 4, 4};
  const std::vector<double> b{3, 1, 2, 5, 4, 7, 6};
  EXPECT_NEAR(spearman(a, b), spearman_oracle(a, b), 1e-12);
}

TEST(Spearman, Errors) {
  const std::vector<double> three{1, 2, 3};
  const std::vector<double> two{1, 2};
  const std::vector<double> one{1};
  const std::vector<double> flat{2, 2, 2};
  EXPECT_EQ(code_of([&] { spearman(three, two); }), ErrorCode::LengthMismatch);
  EXPECT_EQ(code_of([&] { spearman(one, one); }), ErrorCode::LengthMismatch);
  EXPECT_EQ(code_of([&] { spearman(three, flat); }), ErrorCode::DegenerateInput);
}

TEST(SpearmanProperty, MatchesOracleSymmetricAndRankInvariant) {
  std::mt19937 rng(20240601);
  std::uniform_int_distribution<int> len(2, 40);
  std::uniform_int_distribution<int> value(0, 9);  // small range forces ties
  int checked = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const int n = len(rng);
    std::vector<double> a(n), b(n);
    for (int i = 0; i < n; ++i) {
      a[i] = value(rng);
      b[i] = value(rng);
    }
    const bool degenerate = std::all_of(a.begin(), a.end(), [&](double x) { return x == a[0]; }) ||
                            std::all_of(b.begin(), b.end(), [&](double x) { return x == b[0]; });
    if (degenerate) {
      EXPECT_EQ(code_of([&] { spearman(a, b); }), ErrorCode::DegenerateInput);
      continue;
    }
    const double rho = spearman(a, b);
    EXPECT_NEAR(rho, spearman_oracle(a, b), 1e-12);
    EXPECT_EQ(rho, spearman(b, a));
    EXPECT_GE(rho, -1.0);
    EXPECT_LE(rho, 1.0);
    // Strictly increasing transforms keep ranks, so rho is unchanged.
    std::vector<double> transformed(n);
    for (int i = 0; i < n; ++i) transformed[i] = std::exp(a[i]) * 3 + 7;
    EXPECT_NEAR(spearman(transformed, b), rho, 1e-12);
    ++checked;
  }
  EXPECT_GT(checked, 400);
}

TEST(Aggregate, MeansAndPopulationStd) {
  const std::vector<ScoreRecord> records{
      {"mimo", "AQS", "r1", 4}, {"mimo", "AQS", "r2", 4}, {"mimo", "AQS", "r3", 4},
      {"base", "AQS", "r1", 3}, {"base", "AQS", "r2", 5},
  };
  const ScoreTable table = aggregate(records);
  EXPECT_EQ(table.rows.at("mimo").at("AQS").mean, 4.0);
  EXPECT_EQ(table.rows.at("mimo").at("AQS").std, 0.0);
  EXPECT_EQ(table.rows.at("base").at("AQS").mean, 4.0);
  EXPECT_EQ(table.rows.at("base").at("AQS").std, 1.0);
  EXPECT_EQ(table.rows.at("base").at("AQS").n, 2u);
  const json j = to_json(table);
  EXPECT_EQ(j.at("base").at("AQS").at("mean"), "4.00");
  EXPECT_EQ(j.at("base").at("AQS").at("std"), "1.00");
}

TEST(Aggregate, PermutationInvariant) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> score(0, 5);
  std::vector<ScoreRecord> records;
  for (int i = 0; i < 60; ++i) {
    records.push_back({i % 2 ? "a" : "b", i % 3 ? "TAA" : "BIS", "r" + std::to_string(i), score(rng)});
  }
  const json reference = to_json(aggregate(records));
  const ScoreTable base = aggregate(records);
  for (int t = 0; t < 20; ++t) {
    std::shuffle(records.begin(), records.end(), rng);
    const ScoreTable shuffled = aggregate(records);
    EXPECT_EQ(to_json(shuffled), reference);
    for (const auto& [method, metrics] : base.rows) {
      for (const auto& [metric, stat] : metrics) {
        EXPECT_EQ(shuffled.rows.at(method).at(metric).mean, stat.mean);
        EXPECT_EQ(shuffled.rows.at(method).at(metric).std, stat.std);
      }
    }
  }
}

TEST(Aggregate, EmptyInputIsRejected) {
  EXPECT_EQ(code_of([] { aggregate({}); }), ErrorCode::InvalidArgument);
}

TEST(PairPayload, ParsesThroughProse) {
  const std::string text = "Here is my assessment:\n```json\n" + valid_pair_json().dump(2) + "\n```\nThanks!";
  const PairReport report = parse_pair_payload(text);
  EXPECT_EQ(report.metrics.size(), 6u);
  EXPECT_EQ(report.metrics.at("LPS").image_1_score, 1);
  EXPECT_EQ(report.metrics.at("LPS").image_2_score, 3);
  EXPECT_EQ(report.metrics.at("TAA").image_2_reason, "");
}

TEST(PairPayload, Errors) {
  EXPECT_EQ(code_of([] { parse_pair_payload("no json here"); }), ErrorCode::NoPayloadFound);
  json missing = valid_pair_json();
  missing.erase("AQS");
  EXPECT_EQ(code_of([&] { parse_pair_payload(missing.dump()); }), ErrorCode::SchemaError);
  json high = valid_pair_json();
  high["TAA"]["image_1_score"] = 7;
  EXPECT_EQ(code_of([&] { parse_pair_payload(high.dump()); }), ErrorCode::RangeError);
  json fractional = valid_pair_json();
  fractional["TAA"]["image_1_score"] = 2.5;
  EXPECT_EQ(code_of([&] { parse_pair_payload(fractional.dump()); }), ErrorCode::SchemaError);
}

TEST(SixWayPayload, ParsesAndRejectsZero) {
  const SixWayReport report = parse_six_way_payload(valid_six_way_json().dump());
  EXPECT_EQ(report.metrics.size(), 5u);
  EXPECT_EQ(report.metrics.at("LAY")[0].score, 2);
  json zero = valid_six_way_json();
  zero["TYP"]["image_3"]["score"] = 0;
  EXPECT_EQ(code_of([&] { parse_six_way_payload(zero.dump()); }), ErrorCode::RangeError);
  json short_row = valid_six_way_json();
  short_row["TYP"].erase("image_6");
  EXPECT_EQ(code_of([&] { parse_six_way_payload(short_row.dump()); }), ErrorCode::SchemaError);
  EXPECT_NE(six_way_format_instruction().find("image_6"), std::string::npos);
}

TEST(Payload, ParseSerializeParseIsFixedPoint) {
  const PairReport pair = parse_pair_payload(valid_pair_json().dump());
  EXPECT_EQ(parse_pair_payload(json(pair).dump()), pair);
  EXPECT_EQ(json(parse_pair_payload(json(pair).dump())), json(pair));
  const SixWayReport six = parse_six_way_payload(valid_six_way_json().dump());
  EXPECT_EQ(parse_six_way_payload(json(six).dump()), six);
  const auto via_variant = parse_metric_payload(valid_pair_json().dump(), MetricSchema::pairwise);
  EXPECT_EQ(std::get<PairReport>(via_variant), pair);
}

TEST(PayloadProperty, EverySingleMutationIsCaught) {
  std::mt19937 rng(99);
  const json base = valid_pair_json();
  std::vector<std::string> metrics(kPairMetrics.begin(), kPairMetrics.end());
  const std::vector<std::string> fields{"image_1_score", "image_1_reason", "image_2_score", "image_2_reason"};
  for (int trial = 0; trial < 400; ++trial) {
    json j = base;
    const std::string& metric = metrics[rng() % metrics.size()];
    const std::string& field = fields[rng() % fields.size()];
    ErrorCode expected = ErrorCode::SchemaError;
    switch (rng() % 6) {
      case 0:
        j.erase(metric);
        break;
      case 1:
        j[metric].erase(field);
        break;
      case 2:
        j["EXTRA"] = j[metric];
        break;
      case 3:
        j[metric][field] = field.ends_with("score") ? json("3") : json(3);
        break;
      case 4:
        if (field.ends_with("score")) {
          j[metric][field] = rng() % 2 ? 6 + static_cast<int>(rng() % 5) : -1 - static_cast<int>(rng() % 5);
          expected = ErrorCode::RangeError;
        } else {
          j[metric][field] = nullptr;
        }
        break;
      default:
        j[metric]["image_3_score"] = 1;
        break;
    }
    SCOPED_TRACE(j.dump());
    EXPECT_EQ(code_of([&] { parse_pair_payload(j.dump()); }), expected);
  }
}

TEST(Evaluate, PairUsesScorerAndParsesReply) {
  ImageStore store;
  const ImageRef a = store.put(placeholder_png("a"), MediaType::png);
  const ImageRef b = store.put(placeholder_png("b"), MediaType::png);
  ScriptedGateway gw(store, {{say(AgentKind::Scorer, "Scores follow. " + valid_pair_json().dump())},
                             ScriptStrictness::strict_order});
  AgentSession session(gw);
  const PromptRegistry prompts(std::filesystem::path(MIMO_TEST_DATA_DIR).parent_path() / "templates");
  const PairReport report = evaluate_pair(a, b, session, prompts);
  EXPECT_EQ(report.metrics.at("AQS").image_1_score, 5);
  EXPECT_EQ(session.ledger().size(), 1u);
}

TEST(Evaluate, SixWayNeedsSixImages) {
  ImageStore store;
  std::vector<ImageRef> five;
  for (int i = 0; i < 5; ++i) five.push_back(store.put(placeholder_png(std::to_string(i)), MediaType::png));
  ScriptedGateway gw(store, {{}, ScriptStrictness::strict_order});
  AgentSession session(gw);
  const PromptRegistry prompts(std::filesystem::path(MIMO_TEST_DATA_DIR).parent_path() / "templates");
  EXPECT_EQ(code_of([&] { evaluate_six_way(five, session, prompts); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(session.ledger().size(), 0u);
}

TEST(ScoreCsv, ParsesQuotedFieldsAndChecksHeader) {
  const auto records = parse_score_csv("method,metric,rater,score\n\"mimo, full\",AQS,r1,4.5\nbase,AQS,r2,3\n");
  ASSERT_EQ(records.size(), 2u);
  EXPECT_EQ(records[0].method, "mimo, full");
  EXPECT_EQ(records[0].score, 4.5);
  EXPECT_THROW(parse_score_csv("a,b,c,d\nx,y,z,1\n"), Error);
  EXPECT_THROW(parse_score_csv("method,metric,rater,score\nx,y,z,abc\n"), Error);
}

TEST(ScoreCsv, CorrelationAlignsOnSharedKeys) {
  const std::vector<ScoreRecord> human{
      {"a", "AQS", "h", 1}, {"b", "AQS", "h", 2}, {"c", "AQS", "h", 3}, {"only-human", "AQS", "h", 5}};
  const std::vector<ScoreRecord> machine{
      {"a", "AQS", "m", 10}, {"b", "AQS", "m", 20}, {"c", "AQS", "m", 30}, {"only-machine", "AQS", "m", 1}};
  const CorrelationResult r = correlate_scores(human, machine);
  EXPECT_EQ(r.keys.size(), 3u);
  EXPECT_EQ(r.rho, 1.0);
}

TEST(FormatFixed, RoundsToDecimals) {
  EXPECT_EQ(format_fixed(0.8, 4), "0.8000");
  EXPECT_EQ(format_fixed(-1.0, 2), "-1.00");
  EXPECT_EQ(format_fixed(3.14159, 3), "3.142");
}
