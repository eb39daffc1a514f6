#include <httplib.h>

#include <cstdlib>
#include <thread>

#include "mimo/error.hpp"
#include "mimo/gateway.hpp"
#include "mimo/hash.hpp"

namespace mimo {
namespace {

std::string data_url(const ImageRef& ref, const Bytes& bytes) {
  const std::string mime = ref.media_type == MediaType::png ? "image/png" : "image/jpeg";
  return "data:" + mime + ";base64," + base64_encode(bytes);
}

}  // namespace

std::string api_key_from_environment() {
  const char* key = std::getenv("MIMO_API_KEY");
  if (key == nullptr || *key == '\0') fail(ErrorCode::ConfigError, "MIMO_API_KEY is not set");
  return key;
}

LiveGateway::LiveGateway(ImageStore& store, LiveOptions options) : ModelGateway(store), options_(std::move(options)) {
  if (options_.max_attempts < 1) fail(ErrorCode::ConfigError, "max_attempts must be at least 1");
  if (options_.temperature < 0) fail(ErrorCode::ConfigError, "temperature must be non-negative");
  const auto scheme_end = options_.base_url.find("://");
  if (scheme_end == std::string::npos) fail(ErrorCode::ConfigError, "base_url needs a scheme: " + options_.base_url);
  const auto path_start = options_.base_url.find('/', scheme_end + 3);
  scheme_host_port_ = options_.base_url.substr(0, path_start);
  path_prefix_ = path_start == std::string::npos ? "" : options_.base_url.substr(path_start);
  while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
}

json LiveGateway::chat_request_body(std::span<const ChatTurn> turns) const {
  json messages = json::array();
  for (const auto& turn : turns) {
    json message{{"role", to_string(turn.role)}};
    if (turn.attachments.empty()) {
      message["content"] = turn.text;
    } else {
      json parts = json::array({json{{"type", "text"}, {"text", turn.text}}});
      for (const auto& image : turn.attachments) {
        parts.push_back(json{{"type", "image_url"}, {"image_url", {{"url", data_url(image, store().read(image))}}}});
      }
      message["content"] = parts;
    }
    messages.push_back(std::move(message));
  }
  return json{{"model", options_.model}, {"temperature", options_.temperature}, {"messages", messages}};
}

namespace {

/// Runs `send` until it succeeds, retrying transport failures and 5xx with
/// capped exponential backoff. 4xx responses are returned to the caller as errors immediately.
template <typename Send>
json with_retries(const LiveOptions& options, const std::string& what, Send&& send) {
  auto backoff = options.initial_backoff;
  std::string last_failure;
  for (int attempt = 1; attempt <= options.max_attempts; ++attempt) {
    httplib::Result result = send();
    if (result) {
      const int status = result->status;
      if (status >= 200 && status < 300) {
        try {
          return json::parse(result->body);
        } catch (const json::parse_error& e) {
          fail(ErrorCode::BackendRejected, what + ": response is not JSON: " + e.what());
        }
      }
      if (status >= 400 && status < 500) {
        fail(ErrorCode::BackendRejected, what + ": HTTP " + std::to_string(status) + ": " + result->body);
      }
      last_failure = "HTTP " + std::to_string(status);
    } else {
      last_failure = httplib::to_string(result.error());
    }
    if (attempt < options.max_attempts) {
      std::this_thread::sleep_for(backoff);
      backoff = std::min(backoff * 2, options.max_backoff);
    }
  }
  fail(ErrorCode::BackendUnavailable, what + " failed after " + std::to_string(options.max_attempts) +
                                          " attempts: " + last_failure);
}

}  // namespace

json LiveGateway::post_json(const std::string& path, const json& body) const {
  httplib::Client client(scheme_host_port_);
  client.set_connection_timeout(options_.timeout);
  client.set_read_timeout(options_.timeout);
  client.set_bearer_token_auth(options_.api_key);
  const std::string payload = body.dump();
  return with_retries(options_, "POST " + path, [&] {
    return client.Post(path_prefix_ + path, payload, "application/json");
  });
}

Completion LiveGateway::do_complete(const AgentRole& actor, std::span<const ChatTurn> turns, std::string_view) {
  const json response = post_json("/chat/completions", chat_request_body(turns));
  Completion out;
  try {
    out.text = response.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    fail(ErrorCode::BackendRejected, std::string("chat completion response lacks message content: ") + e.what());
  }
  out.usage.actor = actor;
  out.usage.call_kind = CallKind::complete;
  if (response.contains("usage")) {
    const json& usage = response["usage"];
    out.usage.input_tokens = usage.value("prompt_tokens", std::int64_t{0});
    out.usage.output_tokens = usage.value("completion_tokens", std::int64_t{0});
  }
  return out;
}

GeneratedImage LiveGateway::store_image_response(const json& response, const AgentRole& actor, CallKind kind) {
  std::string encoded;
  try {
    encoded = response.at("data").at(0).at("b64_json").get<std::string>();
  } catch (const json::exception&) {
    fail(ErrorCode::BackendRejected, "image response carries no b64_json payload");
  }
  const Bytes bytes = base64_decode(encoded);
  const bool is_png = bytes.size() > 4 && bytes[1] == 'P' && bytes[2] == 'N' && bytes[3] == 'G';
  GeneratedImage out{store().put(bytes, is_png ? MediaType::png : MediaType::jpeg), {}};
  out.usage.actor = actor;
  out.usage.call_kind = kind;
  out.usage.images_generated = static_cast<std::int64_t>(response.at("data").size());
  // Image output is billed through PricingTable::image_output_tokens, so only
  // the prompt side of the usage block is recorded here.
  if (response.contains("usage")) out.usage.input_tokens = response["usage"].value("input_tokens", std::int64_t{0});
  return out;
}

GeneratedImage LiveGateway::do_generate_image(const AgentRole& actor, std::string_view prompt, int width,
                                              int height, std::string_view) {
  const json body{{"model", options_.image_model},
                  {"prompt", prompt},
                  {"n", 1},
                  {"size", std::to_string(width) + "x" + std::to_string(height)}};
  return store_image_response(post_json("/images/generations", body), actor, CallKind::generate_image);
}

GeneratedImage LiveGateway::do_edit_image(const AgentRole& actor, const ImageRef& base, std::string_view instruction,
                                          std::string_view) {
  const Bytes bytes = store().read(base);
  const std::string filename = "image." + std::string(file_extension(base.media_type));
  const std::string mime = base.media_type == MediaType::png ? "image/png" : "image/jpeg";
  httplib::MultipartFormDataItems items{
      {"model", options_.image_model, "", ""},
      {"prompt", std::string(instruction), "", ""},
      {"image", std::string(bytes.begin(), bytes.end()), filename, mime},
  };
  httplib::Client client(scheme_host_port_);
  client.set_connection_timeout(options_.timeout);
  client.set_read_timeout(options_.timeout);
  client.set_bearer_token_auth(options_.api_key);
  const std::string path = path_prefix_ + "/images/edits";
  const json response = with_retries(options_, "POST /images/edits", [&] { return client.Post(path, items); });
  return store_image_response(response, actor, CallKind::edit_image);
}

}  // namespace mimo
