#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "ctxgov/errors.hpp"
#include "ctxgov/model_io.hpp"

namespace ctxgov {

namespace {

using json = nlohmann::json;

struct ParsedUrl {
  std::string base;  // scheme://host[:port]
  std::string path_prefix;
};

ParsedUrl parse_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw ConfigError("endpoint '" + url + "' needs an http:// or https:// scheme");
  }
  const auto scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw ConfigError("unsupported endpoint scheme '" + scheme + "'");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  ParsedUrl p;
  p.base = url.substr(0, path_start);
  if (path_start != std::string::npos) p.path_prefix = url.substr(path_start);
  while (!p.path_prefix.empty() && p.path_prefix.back() == '/') p.path_prefix.pop_back();
  return p;
}

bool transient(int status) { return status == 408 || status == 429 || status >= 500; }

class SlotGuard {
 public:
  explicit SlotGuard(std::counting_semaphore<1024>& s) : s_(s) { s_.acquire(); }
  ~SlotGuard() { s_.release(); }
  SlotGuard(const SlotGuard&) = delete;
  SlotGuard& operator=(const SlotGuard&) = delete;

 private:
  std::counting_semaphore<1024>& s_;
};

}  // namespace

std::string build_chat_request(const EndpointDescriptor& ep, const DecisionState& state,
                               const SamplingParams& gen) {
  json body;
  body["model"] = ep.model;
  body["messages"] = json::array();
  const auto context = state.render_context();
  if (!context.empty()) body["messages"].push_back({{"role", "system"}, {"content", context}});
  body["messages"].push_back({{"role", "user"}, {"content", state.query.text}});
  body["temperature"] = gen.temperature;
  body["max_tokens"] = gen.max_tokens;
  return body.dump();
}

ModelOutput parse_chat_response(std::string_view body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("chat response is not JSON: ") + e.what());
  }
  try {
    ModelOutput out;
    out.backend = Backend::remote;
    out.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
    if (j.contains("usage") && j["usage"].contains("completion_tokens")) {
      out.tokens_out = j["usage"]["completion_tokens"].get<std::size_t>();
    } else {
      out.tokens_out = count_tokens(out.text);
    }
    return out;
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("chat response lacks choices[0].message.content: ") +
                        e.what());
  }
}

ChatClient::ChatClient(EndpointDescriptor ep) : ep_(std::move(ep)) {
  if (ep_.attempts < 1) throw ConfigError("endpoint attempts must be at least 1");
  if (ep_.max_concurrency < 1 || ep_.max_concurrency > 1024) {
    throw ConfigError("endpoint concurrency must lie in [1, 1024]");
  }
  slots_ = std::make_unique<std::counting_semaphore<1024>>(ep_.max_concurrency);
}

ModelOutput ChatClient::call(const DecisionState& state, const SamplingParams& gen) {
  if (ep_.is_mock()) return mock_respond(state, mock_profile(ep_.url.substr(5)));
  SlotGuard slot(*slots_);
  return call_remote(state, gen);
}

ModelOutput ChatClient::call_remote(const DecisionState& state, const SamplingParams& gen) {
  const auto url = parse_url(ep_.url);
  httplib::Headers headers;
  if (!ep_.api_key_env.empty()) {
    const char* key = std::getenv(ep_.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
      throw AuthError("credential variable " + ep_.api_key_env + " is not set");
    }
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }
  const auto body = build_chat_request(ep_, state, gen);
  const auto path = url.path_prefix + "/v1/chat/completions";

  httplib::Client cli(url.base);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(ep_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(ep_.timeout - secs);
  cli.set_connection_timeout(secs.count(), usecs.count());
  cli.set_read_timeout(secs.count(), usecs.count());
  cli.set_write_timeout(secs.count(), usecs.count());

  std::string last_error;
  auto wait = ep_.backoff;
  for (int attempt = 1; attempt <= ep_.attempts; ++attempt) {
    auto res = cli.Post(path, headers, body, "application/json");
    if (res) {
      if (res->status == 401 || res->status == 403) {
        throw AuthError("endpoint rejected credentials (HTTP " + std::to_string(res->status) + ")");
      }
      if (res->status >= 200 && res->status < 300) return parse_chat_response(res->body);
      if (!transient(res->status)) {
        throw ProtocolError("endpoint answered HTTP " + std::to_string(res->status));
      }
      last_error = "HTTP " + std::to_string(res->status);
    } else {
      last_error = httplib::to_string(res.error());
    }
    if (attempt < ep_.attempts) {
      std::this_thread::sleep_for(wait);
      wait *= 2;
    }
  }
  throw TransportError(ep_.url + ": " + last_error + " after " + std::to_string(ep_.attempts) +
                           " attempts",
                       ep_.attempts);
}

ModelOutput call_chat(const EndpointDescriptor& ep, const DecisionState& state,
                      const SamplingParams& gen) {
  ChatClient client(ep);
  return client.call(state, gen);
}

}  // namespace ctxgov
