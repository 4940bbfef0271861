#include "ctxgov/campaign_config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ctxgov/digest.hpp"
#include "ctxgov/errors.hpp"

namespace ctxgov {

namespace {

using json = nlohmann::json;

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, _] : j.items()) {
    if (allowed.count(key) == 0) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read(const json& j, const char* key, T& into) {
  if (!j.contains(key)) return;
  try {
    into = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

}  // namespace

std::string Condition::name() const {
  if (mitigation == Mitigation::none) return "none";
  return std::string(to_string(mitigation)) + (mode == RoutingMode::oracle ? "_O" : "_A");
}

Condition condition_from_string(std::string_view s) {
  if (s == "none") return {};
  if (s.size() > 2 && s[s.size() - 2] == '_' && (s.back() == 'O' || s.back() == 'A')) {
    return {mitigation_from_string(s.substr(0, s.size() - 2)),
            s.back() == 'O' ? RoutingMode::oracle : RoutingMode::autonomous};
  }
  throw ConfigError("unknown condition '" + std::string(s) +
                    "' (expected none or <mitigation>_O / <mitigation>_A)");
}

std::vector<Condition> default_conditions() {
  std::vector<Condition> out{Condition{}};
  for (auto m : {Mitigation::SCP, Mitigation::SCP_ICE, Mitigation::SCP_Cache,
                 Mitigation::SCP_Cache_ICE}) {
    for (auto mode : {RoutingMode::oracle, RoutingMode::autonomous}) out.push_back({m, mode});
  }
  return out;
}

CampaignConfig CampaignConfig::from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("campaign config is not valid JSON: ") + e.what());
  }
  check_keys(j,
             {"models", "model_urls", "endpoint", "families", "seeds", "conditions", "policy",
              "budget", "tau", "shl_reference", "instances", "constraints", "session_turns",
              "overflow", "workers", "bootstrap", "quotas", "ice_cap", "classifier",
              "classifier_fingerprint", "tokenizer", "temperature"},
             "campaign config");
  CampaignConfig c;
  read(j, "models", c.models);
  read(j, "model_urls", c.model_urls);
  if (j.contains("endpoint")) {
    const auto& e = j["endpoint"];
    check_keys(e, {"url", "api_key_env", "attempts", "backoff_ms", "timeout_ms", "max_concurrency"},
               "endpoint");
    read(e, "url", c.endpoint.url);
    read(e, "api_key_env", c.endpoint.api_key_env);
    read(e, "attempts", c.endpoint.attempts);
    read(e, "max_concurrency", c.endpoint.max_concurrency);
    long long ms = c.endpoint.backoff.count();
    read(e, "backoff_ms", ms);
    c.endpoint.backoff = std::chrono::milliseconds(ms);
    ms = c.endpoint.timeout.count();
    read(e, "timeout_ms", ms);
    c.endpoint.timeout = std::chrono::milliseconds(ms);
  }
  if (j.contains("families")) {
    std::vector<std::string> names;
    read(j, "families", names);
    c.families.clear();
    for (const auto& n : names) c.families.push_back(family_from_string(n));
  }
  read(j, "seeds", c.seeds);
  if (j.contains("conditions")) {
    std::vector<std::string> names;
    read(j, "conditions", names);
    c.conditions.clear();
    for (const auto& n : names) c.conditions.push_back(condition_from_string(n));
  }
  if (j.contains("policy")) {
    std::string p;
    read(j, "policy", p);
    c.policy = policy_from_string(p);
  }
  if (j.contains("budget")) {
    const auto& b = j["budget"];
    check_keys(b, {"total", "control_floor_fraction", "generation_cap"}, "budget");
    read(b, "total", c.budget.total);
    read(b, "control_floor_fraction", c.budget.control_floor_fraction);
    read(b, "generation_cap", c.budget.generation_cap);
  }
  read(j, "tau", c.tau);
  if (j.contains("shl_reference") && !j["shl_reference"].is_null()) {
    std::size_t h = 0;
    read(j, "shl_reference", h);
    c.shl_reference = h;
  }
  read(j, "instances", c.instances);
  read(j, "constraints", c.constraints);
  read(j, "session_turns", c.session_turns);
  read(j, "overflow", c.overflow);
  read(j, "workers", c.workers);
  if (j.contains("bootstrap")) {
    const auto& b = j["bootstrap"];
    check_keys(b, {"resamples", "level", "seed"}, "bootstrap");
    read(b, "resamples", c.bootstrap.resamples);
    read(b, "level", c.bootstrap.level);
    read(b, "seed", c.bootstrap.seed);
  }
  if (j.contains("quotas")) {
    const auto& q = j["quotas"];
    check_keys(q, {"tool_output", "retrieved_snippet", "planner_note", "execution_log", "other"},
               "quotas");
    read(q, "tool_output", c.quotas.tool_output);
    read(q, "retrieved_snippet", c.quotas.retrieved_snippet);
    read(q, "planner_note", c.quotas.planner_note);
    read(q, "execution_log", c.quotas.execution_log);
    read(q, "other", c.quotas.other);
  }
  read(j, "ice_cap", c.ice_cap);
  read(j, "classifier", c.classifier_path);
  read(j, "temperature", c.temperature);
  if (j.contains("tokenizer") && j["tokenizer"] != std::string(default_tokenizer().name())) {
    throw ConfigError("config was written for tokenizer " + j["tokenizer"].dump());
  }
  c.validate();
  return c;
}

CampaignConfig CampaignConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read campaign config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

void CampaignConfig::validate() const {
  if (models.empty()) throw ConfigError("no models configured");
  if (families.empty()) throw ConfigError("no families configured");
  if (seeds.empty()) throw ConfigError("no seeds configured");
  if (conditions.empty()) throw ConfigError("no conditions configured");
  if (budget.total < 1) throw ConfigError("budget total must be positive");
  if (budget.generation_cap < 1) throw ConfigError("generation cap must be positive");
  if (budget.control_floor_fraction < 0.0 || budget.control_floor_fraction > 1.0) {
    throw ConfigError("control floor fraction must lie in [0, 1]");
  }
  if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("tau must lie in (0, 1]");
  if (shl_reference && *shl_reference == 0) throw ConfigError("shl_reference must be positive");
  if (instances == 0 || instances % 2 != 0) {
    throw ConfigError("instances per cell must be a positive even number");
  }
  if (session_turns == 0) throw ConfigError("session_turns must be positive");
  if (workers == 0) throw ConfigError("workers must be positive");
  if (ice_cap == 0) throw ConfigError("ice_cap must be positive");
  if (bootstrap.resamples == 0) throw ConfigError("bootstrap resamples must be positive");
  if (!(bootstrap.level > 0.0 && bootstrap.level < 1.0)) {
    throw ConfigError("bootstrap level must lie in (0, 1)");
  }
  if (endpoint.attempts < 1) throw ConfigError("endpoint attempts must be at least 1");
  if (endpoint.max_concurrency < 1) throw ConfigError("endpoint concurrency must be positive");
  std::set<std::string> seen;
  for (const auto& m : models) {
    if (!seen.insert(m).second) throw ConfigError("model '" + m + "' listed twice");
  }
  for (const auto& c : conditions) {
    if (c.mitigation == Mitigation::none && c.mode != RoutingMode::oracle) {
      throw ConfigError("condition none takes no routing mode");
    }
  }
  for (const auto& [model, url] : model_urls) {
    if (!seen.count(model)) throw ConfigError("model_urls names unknown model '" + model + "'");
  }
  if (endpoint.is_mock()) mock_profile(endpoint.url.substr(5));
}

std::string CampaignConfig::to_json() const {
  json j;
  j["models"] = models;
  j["model_urls"] = model_urls;
  j["endpoint"] = {{"url", endpoint.url},
                   {"api_key_env", endpoint.api_key_env},
                   {"attempts", endpoint.attempts},
                   {"backoff_ms", endpoint.backoff.count()},
                   {"timeout_ms", endpoint.timeout.count()},
                   {"max_concurrency", endpoint.max_concurrency}};
  j["families"] = json::array();
  for (auto f : families) j["families"].push_back(to_string(f));
  j["seeds"] = seeds;
  j["conditions"] = json::array();
  for (const auto& c : conditions) j["conditions"].push_back(c.name());
  j["policy"] = to_string(policy);
  j["budget"] = {{"total", budget.total},
                 {"control_floor_fraction", budget.control_floor_fraction},
                 {"generation_cap", budget.generation_cap}};
  j["tau"] = tau;
  j["shl_reference"] = shl_reference ? json(*shl_reference) : json(nullptr);
  j["instances"] = instances;
  j["constraints"] = constraints;
  j["session_turns"] = session_turns;
  j["overflow"] = overflow;
  j["workers"] = workers;
  j["bootstrap"] = {{"resamples", bootstrap.resamples},
                    {"level", bootstrap.level},
                    {"seed", bootstrap.seed}};
  j["quotas"] = {{"tool_output", quotas.tool_output},
                 {"retrieved_snippet", quotas.retrieved_snippet},
                 {"planner_note", quotas.planner_note},
                 {"execution_log", quotas.execution_log},
                 {"other", quotas.other}};
  j["ice_cap"] = ice_cap;
  j["classifier"] = classifier_path;
  j["classifier_fingerprint"] = classifier().fingerprint();
  j["tokenizer"] = std::string(default_tokenizer().name());
  j["temperature"] = temperature;
  return j.dump(2);
}

std::string CampaignConfig::hash() const { return sha256_hex(to_json()); }

EndpointDescriptor CampaignConfig::endpoint_for(const std::string& model) const {
  EndpointDescriptor ep = endpoint;
  if (auto it = model_urls.find(model); it != model_urls.end()) ep.url = it->second;
  ep.model = model;
  return ep;
}

ClassifierWeights CampaignConfig::classifier() const {
  return classifier_path.empty() ? ClassifierWeights{} : ClassifierWeights::load(classifier_path);
}

std::size_t CampaignConfig::cell_count() const {
  return models.size() * families.size() * seeds.size() * conditions.size();
}

}  // namespace ctxgov
