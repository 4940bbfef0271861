#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ctxgov/admission.hpp"
#include "ctxgov/assembler.hpp"
#include "ctxgov/metrics.hpp"
#include "ctxgov/model_io.hpp"
#include "ctxgov/policies.hpp"
#include "ctxgov/scenario.hpp"

namespace ctxgov {

struct Condition {
  Mitigation mitigation = Mitigation::none;
  RoutingMode mode = RoutingMode::oracle;

  // "none", or the mitigation plus "_O" (oracle) / "_A" (autonomous).
  std::string name() const;
  auto operator<=>(const Condition&) const = default;
};

Condition condition_from_string(std::string_view s);
// none plus {SCP, SCP_ICE, SCP_Cache, SCP_Cache_ICE} x {oracle, autonomous}.
std::vector<Condition> default_conditions();

struct CampaignConfig {
  std::vector<std::string> models{"mock-a", "mock-b", "mock-c"};
  std::map<std::string, std::string> model_urls;  // per-model endpoint overrides
  EndpointDescriptor endpoint;
  std::vector<Family> families{Family::eviction, Family::aliasing, Family::binding_instability};
  std::vector<std::uint64_t> seeds = kDefaultSeeds;
  std::vector<Condition> conditions = default_conditions();
  PolicyId policy = PolicyId::B1_truncation;
  TokenBudget budget;
  double tau = 0.8;
  std::optional<std::size_t> shl_reference;
  std::size_t instances = 24;  // per cell; even, half of them attack order
  std::size_t constraints = 3;
  std::size_t session_turns = 10;
  bool overflow = true;
  std::size_t workers = 4;
  BootstrapConfig bootstrap;
  StructuredQuotas quotas;
  std::size_t ice_cap = 12;
  std::string classifier_path;  // empty: compiled-in weights
  double temperature = 0.0;

  // Throws ConfigError on an unknown key or a bad value.
  static CampaignConfig from_json(std::string_view text);
  static CampaignConfig load(const std::filesystem::path& path);
  // Canonical form: every field, defaults filled in, keys sorted.
  std::string to_json() const;
  std::string hash() const;
  void validate() const;

  EndpointDescriptor endpoint_for(const std::string& model) const;
  ClassifierWeights classifier() const;
  std::size_t cell_count() const;
};

}  // namespace ctxgov
