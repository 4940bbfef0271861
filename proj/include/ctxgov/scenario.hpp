#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ctxgov/types.hpp"

namespace ctxgov {

enum class Family { eviction, aliasing, binding_instability, agentic };
enum class PromptOrder { attack, control_last };

std::string_view to_string(Family f);
std::string_view to_string(PromptOrder o);
Family family_from_string(std::string_view s);
PromptOrder order_from_string(std::string_view s);

struct ScenarioInstance {
  std::string id;
  std::string base_id;
  Family family = Family::eviction;
  std::uint64_t seed = 0;
  PromptOrder order = PromptOrder::attack;
  TokenBudget budget;
  bool overflow = false;
  std::vector<Constraint> constraints;
  std::vector<Segment> segments;
  Segment final_query;

  RawHistory history() const { return {segments, final_query}; }
  bool operator==(const ScenarioInstance&) const = default;
};

struct GenerationParams {
  TokenBudget budget;
  std::size_t constraints = 3;
  bool overflow = true;
  // Minimum filler volume; overrides the overflow sizing when set.
  std::optional<std::size_t> filler_tokens;
  std::size_t instance = 0;
  // Reject pairs whose intended failure is not visible under none + B1.
  bool check_identifiable = true;
};

inline const std::vector<std::uint64_t> kDefaultSeeds{7, 11, 19};

// Deterministic in (family, seed, params). Throws GenerationError when the
// directives and query alone exceed the budget or the failure is not
// identifiable.
std::pair<ScenarioInstance, ScenarioInstance> generate_scenario(Family family,
                                                                std::uint64_t seed,
                                                                const GenerationParams& params);

std::string base_id_for(Family family, std::uint64_t seed, std::size_t instance);

// Weakened rewrite of a prohibition; fails the entailment table for at least
// one forbidden class. Throws GenerationError for require-polarity rules or
// rules with no rewrite family.
std::string apply_alias_transform(const Constraint& c, std::uint64_t seed);

// Rebinds "binding(cK) -> old_object" anchors in `s` to new_object; the rule
// sentence is left as is. Throws GenerationError when no anchor names
// old_object.
Segment apply_rebind_transform(const Segment& s, std::string_view old_object,
                               std::string_view new_object);

// Scenario JSON Lines. Segment ids are positional ("s0", "s1", ...), the
// query id is "q".
std::string to_jsonl(const ScenarioInstance& inst);
ScenarioInstance from_jsonl(std::string_view line);
void write_scenarios(const std::filesystem::path& path,
                     const std::vector<ScenarioInstance>& instances);
std::vector<ScenarioInstance> read_scenarios(const std::filesystem::path& path);

}  // namespace ctxgov
