#include <gtest/gtest.h>

#include <httplib.h>

#include <atomic>
#include <thread>

#include "mimo/error.hpp"
#include "mimo/gateway.hpp"
#include "mimo/hash.hpp"
#include "mimo/session.hpp"
#include "test_support.hpp"

using namespace mimo;
using testkit::image_step;
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

std::vector<ChatTurn> user(std::string text) { return {{TurnRole::user, std::move(text), {}}}; }

}  // namespace

TEST(Scripted, EchoesScriptedTextAndUsage) {
  ImageStore store;
  ScriptStep step = say(AgentKind::CoreSupervisor, "ContentCreationTeam");
  step.usage = UsageEvent{12, 3, 0, AgentKind::CoreSupervisor, CallKind::complete};
  ScriptedGateway gw(store, {{step}, ScriptStrictness::strict_order});
  const Completion c = gw.complete(AgentKind::CoreSupervisor, user("route"));
  EXPECT_EQ(c.text, "ContentCreationTeam");
  EXPECT_EQ(c.usage.input_tokens, 12);
  EXPECT_EQ(c.usage.output_tokens, 3);
  EXPECT_EQ(c.usage.actor, AgentRole(AgentKind::CoreSupervisor));
  EXPECT_EQ(c.usage.call_kind, CallKind::complete);
}

TEST(Scripted, Preconditions) {
  ImageStore store;
  ScriptedGateway gw(store, {{say(AgentKind::Copywriter, "x", {}, true)}, ScriptStrictness::keyed_lookup});
  EXPECT_EQ(code_of([&] { gw.complete(AgentKind::Copywriter, {}); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([&] {
              gw.complete(AgentKind::Copywriter,
                          std::vector<ChatTurn>{{TurnRole::user, "a", {}}, {TurnRole::system, "late", {}}});
            }),
            ErrorCode::InvalidArgument);
  const ImageRef ghost{"0000", MediaType::png, "images/0000.png"};
  EXPECT_EQ(code_of([&] { gw.complete(AgentKind::Copywriter, std::vector<ChatTurn>{{TurnRole::user, "a", {ghost}}}); }),
            ErrorCode::AttachmentMissing);
  EXPECT_EQ(code_of([&] { gw.generate_image(AgentKind::ImageResearcher, "prompt", 0, 10); }),
            ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([&] { gw.generate_image(AgentKind::ImageResearcher, "", 10, 10); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([&] { gw.edit_image(AgentKind::GraphicRevisor, ghost, "fix"); }), ErrorCode::AttachmentMissing);
}

TEST(Scripted, StrictOrderRejectsOutOfOrderCall) {
  ImageStore store;
  ScriptedGateway gw(store, {{say(AgentKind::CoreSupervisor, "ContentCreationTeam"), say(AgentKind::Copywriter, "c")},
                             ScriptStrictness::strict_order});
  EXPECT_EQ(code_of([&] { gw.complete(AgentKind::Copywriter, user("x")); }), ErrorCode::ScriptExhausted);
}

TEST(Scripted, StrictOrderExhaustion) {
  ImageStore store;
  ScriptedGateway gw(store, {{say(AgentKind::Copywriter, "c")}, ScriptStrictness::strict_order});
  gw.complete(AgentKind::Copywriter, user("x"));
  EXPECT_EQ(code_of([&] { gw.complete(AgentKind::Copywriter, user("x")); }), ErrorCode::ScriptExhausted);
}

TEST(Scripted, KeyedLookupByScopeWithFallbackAndRepeat) {
  ImageStore store;
  ScriptedGateway gw(store, {{say(AgentKind::Copywriter, "scoped-1", "style:1"),
                              say(AgentKind::Copywriter, "shared", {}, true),
                              say(AgentKind::Copywriter, "scoped-0", "style:0")},
                             ScriptStrictness::keyed_lookup});
  EXPECT_EQ(gw.complete(AgentKind::Copywriter, user("x"), "style:0").text, "scoped-0");
  EXPECT_EQ(gw.complete(AgentKind::Copywriter, user("x"), "style:1").text, "scoped-1");
  EXPECT_EQ(gw.complete(AgentKind::Copywriter, user("x"), "style:1").text, "shared");
  EXPECT_EQ(gw.complete(AgentKind::Copywriter, user("x"), "style:0").text, "shared");
  EXPECT_EQ(code_of([&] { gw.complete(AgentKind::ImageResearcher, user("x")); }), ErrorCode::ScriptExhausted);
}

TEST(Scripted, GenerateIsDeterministicInPrompt) {
  ImageStore store;
  ScriptedGateway gw(store, {{image_step(AgentKind::ImageResearcher, CallKind::generate_image, {}, true)},
                             ScriptStrictness::keyed_lookup});
  const auto a1 = gw.generate_image(AgentKind::ImageResearcher, "A", 64, 64);
  const auto a2 = gw.generate_image(AgentKind::ImageResearcher, "A", 64, 64);
  const auto b = gw.generate_image(AgentKind::ImageResearcher, "B", 64, 64);
  EXPECT_EQ(a1.image.id, a2.image.id);
  EXPECT_NE(a1.image.id, b.image.id);
  EXPECT_EQ(a1.usage.images_generated, 1);
  EXPECT_EQ(a1.image.id, sha256_hex(store.read(a1.image)));
}

TEST(Scripted, EditDerivesFromBaseAndInstruction) {
  ImageStore store;
  ScriptedGateway gw(store, {{image_step(AgentKind::ImageResearcher, CallKind::generate_image, {}, true),
                              image_step(AgentKind::GraphicRevisor, CallKind::edit_image, {}, true)},
                             ScriptStrictness::keyed_lookup});
  const ImageRef base = gw.generate_image(AgentKind::ImageResearcher, "base", 8, 8).image;
  const auto e1 = gw.edit_image(AgentKind::GraphicRevisor, base, "bigger CTA");
  const auto e2 = gw.edit_image(AgentKind::GraphicRevisor, base, "bigger CTA");
  const auto e3 = gw.edit_image(AgentKind::GraphicRevisor, base, "smaller logo");
  EXPECT_EQ(e1.image.id, e2.image.id);
  EXPECT_NE(e1.image.id, e3.image.id);
  EXPECT_NE(e1.image.id, base.id);
  EXPECT_TRUE(store.contains(base));
  EXPECT_EQ(e1.usage.call_kind, CallKind::edit_image);
}

TEST(Scripted, ParseScriptFile) {
  const auto spec = load_script(testkit::fixture("core_script.ndjson"), ScriptStrictness::strict_order);
  ASSERT_EQ(spec.steps.size(), 20u);
  EXPECT_EQ(spec.steps.front().actor, AgentRole(AgentKind::CoreSupervisor));
  EXPECT_EQ(spec.steps.front().text, "ContentCreationTeam");
  EXPECT_EQ(spec.steps[5].call_kind, CallKind::generate_image);
  EXPECT_EQ(code_of([] { parse_script("{\"action\":\"route\"}\n", ScriptStrictness::strict_order); }),
            ErrorCode::CorruptTranscript);
  EXPECT_EQ(code_of([] { parse_script("not json\n", ScriptStrictness::strict_order); }), ErrorCode::CorruptTranscript);
}

TEST(Session, EveryCallIsMeteredOnce) {
  ImageStore store;
  ScriptStep s = say(AgentKind::Copywriter, "copy", {}, true);
  s.usage = UsageEvent{100, 50, 0, AgentKind::Copywriter, CallKind::complete};
  ScriptedGateway gw(store, {{s, image_step(AgentKind::ImageResearcher, CallKind::generate_image, {}, true)},
                             ScriptStrictness::keyed_lookup});
  EventLog log(std::make_unique<CounterClock>());
  AgentSession session(gw, "", &log);
  session.complete(AgentKind::Copywriter, user("x"), RunAction::create);
  session.generate_image(AgentKind::ImageResearcher, "img", 8, 8, RunAction::create);
  EXPECT_EQ(session.ledger().size(), 2u);
  ASSERT_EQ(log.events().size(), 2u);
  EXPECT_TRUE(log.events()[0].usage.has_value());
  EXPECT_EQ(log.events()[0].usage->input_tokens, 100);
  EXPECT_EQ(log.events()[1].usage->images_generated, 1);
}

TEST(Session, FailedCallIsLoggedAndRethrown) {
  ImageStore store;
  ScriptedGateway gw(store, {{}, ScriptStrictness::strict_order});
  EventLog log(std::make_unique<CounterClock>());
  AgentSession session(gw, "", &log);
  EXPECT_EQ(code_of([&] { session.complete(AgentKind::Copywriter, user("x"), RunAction::create); }),
            ErrorCode::ScriptExhausted);
  ASSERT_EQ(log.events().size(), 1u);
  EXPECT_EQ(log.events()[0].action, RunAction::error);
  EXPECT_EQ(session.ledger().size(), 0u);
}

// ---------------------------------------------------------------------------
// Live backend against a local server.

namespace {

class LocalServer {
 public:
  LocalServer() {
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~LocalServer() {
    server_.stop();
    thread_.join();
  }
  httplib::Server& server() { return server_; }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

LiveOptions fast_options(const std::string& url) {
  LiveOptions o;
  o.base_url = url;
  o.api_key = "test-key";
  o.initial_backoff = std::chrono::milliseconds(1);
  o.max_backoff = std::chrono::milliseconds(4);
  o.timeout = std::chrono::seconds(5);
  return o;
}

}  // namespace

TEST(Live, RetriesServerErrorsThenSucceeds) {
  LocalServer local;
  std::atomic<int> hits{0};
  std::string auth;
  json body;
  local.server().Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    if (++hits < 3) {
      res.status = 503;
      return;
    }
    auth = req.get_header_value("Authorization");
    body = json::parse(req.body);
    res.set_content(R"({"choices":[{"message":{"content":"FINISH"}}],"usage":{"prompt_tokens":11,"completion_tokens":2}})",
                    "application/json");
  });
  ImageStore store;
  LiveGateway gw(store, fast_options(local.url()));
  const Completion c = gw.complete(AgentKind::CoreSupervisor,
                                   std::vector<ChatTurn>{{TurnRole::system, "sys", {}}, {TurnRole::user, "u", {}}});
  EXPECT_EQ(c.text, "FINISH");
  EXPECT_EQ(c.usage.input_tokens, 11);
  EXPECT_EQ(c.usage.output_tokens, 2);
  EXPECT_EQ(hits.load(), 3);
  EXPECT_EQ(auth, "Bearer test-key");
  EXPECT_EQ(body.at("temperature"), 0.0);
  EXPECT_EQ(body.at("messages").size(), 2u);
  EXPECT_EQ(body.at("messages")[0].at("role"), "system");
}

TEST(Live, GivesUpAfterThreeAttempts) {
  LocalServer local;
  std::atomic<int> hits{0};
  local.server().Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 500;
  });
  ImageStore store;
  LiveGateway gw(store, fast_options(local.url()));
  EXPECT_EQ(code_of([&] { gw.complete(AgentKind::CoreSupervisor, user("u")); }), ErrorCode::BackendUnavailable);
  EXPECT_EQ(hits.load(), 3);
}

TEST(Live, DoesNotRetryClientErrors) {
  LocalServer local;
  std::atomic<int> hits{0};
  local.server().Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 400;
    res.set_content(R"({"error":"bad request"})", "application/json");
  });
  ImageStore store;
  LiveGateway gw(store, fast_options(local.url()));
  EXPECT_EQ(code_of([&] { gw.complete(AgentKind::CoreSupervisor, user("u")); }), ErrorCode::BackendRejected);
  EXPECT_EQ(hits.load(), 1);
}

TEST(Live, UnreachableHostIsUnavailable) {
  ImageStore store;
  auto options = fast_options("http://127.0.0.1:1/v1");
  options.timeout = std::chrono::seconds(1);
  LiveGateway gw(store, options);
  EXPECT_EQ(code_of([&] { gw.complete(AgentKind::CoreSupervisor, user("u")); }), ErrorCode::BackendUnavailable);
}

TEST(Live, ImageGenerationAndEdit) {
  LocalServer local;
  const Bytes png = placeholder_png("live");
  const std::string b64 = base64_encode(png);
  json gen_body;
  std::string edit_prompt;
  bool edit_has_image = false;
  local.server().Post("/v1/images/generations", [&](const httplib::Request& req, httplib::Response& res) {
    gen_body = json::parse(req.body);
    res.set_content(json{{"data", {{{"b64_json", b64}}}}, {"usage", {{"input_tokens", 30}}}}.dump(),
                    "application/json");
  });
  local.server().Post("/v1/images/edits", [&](const httplib::Request& req, httplib::Response& res) {
    edit_prompt = req.get_file_value("prompt").content;
    edit_has_image = req.has_file("image");
    res.set_content(json{{"data", {{{"b64_json", b64}}}}}.dump(), "application/json");
  });
  ImageStore store;
  LiveGateway gw(store, fast_options(local.url()));
  const auto generated = gw.generate_image(AgentKind::ImageResearcher, "a banner", 1024, 1024);
  EXPECT_EQ(gen_body.at("size"), "1024x1024");
  EXPECT_EQ(generated.usage.images_generated, 1);
  EXPECT_EQ(generated.usage.input_tokens, 30);
  EXPECT_EQ(generated.image.id, sha256_hex(png));
  // Billed as image_output_tokens output tokens by the default pricing table.
  CostLedger ledger;
  ledger.record(generated.usage);
  PricingTable pricing;
  EXPECT_EQ(total(ledger, pricing).micros, 30 * 40 + 1105 * 80);

  const auto edited = gw.edit_image(AgentKind::GraphicRevisor, generated.image, "enlarge CTA");
  EXPECT_EQ(edit_prompt, "enlarge CTA");
  EXPECT_TRUE(edit_has_image);
  EXPECT_EQ(edited.usage.call_kind, CallKind::edit_image);
}

TEST(Live, AttachmentsBecomeDataUrls) {
  ImageStore store;
  const ImageRef logo = store.put(placeholder_png("logo"), MediaType::png);
  LiveGateway gw(store, fast_options("http://127.0.0.1:9/v1"));
  const std::vector<ChatTurn> turns{{TurnRole::user, "look", {logo}}};
  const json body = gw.chat_request_body(turns);
  const json& content = body.at("messages")[0].at("content");
  ASSERT_EQ(content.size(), 2u);
  EXPECT_EQ(content[1].at("type"), "image_url");
  EXPECT_EQ(content[1].at("image_url").at("url").get<std::string>().rfind("data:image/png;base64,", 0), 0u);
}
