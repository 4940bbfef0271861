#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "ctxgov/admission.hpp"
#include "ctxgov/audit.hpp"
#include "ctxgov/policies.hpp"
#include "ctxgov/types.hpp"

namespace ctxgov {

enum class Mitigation { none, SCP, SCP_ICE, SCP_Cache, SCP_Cache_ICE, recency_replay };

std::string_view to_string(Mitigation m);
// Also accepts the "+" spellings ("SCP+Cache+ICE").
Mitigation mitigation_from_string(std::string_view s);

bool uses_pinning(Mitigation m);
bool uses_cache(Mitigation m);
bool uses_ice(Mitigation m);

struct AssemblyConfig {
  PolicyId policy = PolicyId::B1_truncation;
  Mitigation mitigation = Mitigation::none;
  RoutingMode routing_mode = RoutingMode::oracle;
  TokenBudget budget;
  double tau = 0.8;
  std::optional<std::size_t> shl_reference;
  ClassifierWeights classifier;
  PolicyParams policy_params;
  IceParams ice;
};

struct AssemblyResult {
  DecisionState state;
  AbsReport abs;
  Telemetry telem;
};

// Pinned prefix, then data plane, then the query. Throws InvariantError when
// the parts exceed `budget_total`.
DecisionState compose(const std::vector<Segment>& pinned, const std::vector<Segment>& data,
                      const Segment& query,
                      std::size_t budget_total = static_cast<std::size_t>(-1));

// One pass of the per-turn assembly. `expected` feeds the binding audit; when
// empty, the marker/text pairs found anywhere in the history are used.
// `cache` may be null; it is consulted only by the cache mitigations.
AssemblyResult assemble_turn(const RawHistory& h, const AssemblyConfig& cfg,
                             ControlCache* cache = nullptr, const std::string& session = {},
                             std::span<const Constraint> expected = {});

}  // namespace ctxgov
