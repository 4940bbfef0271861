#pragma once

#include <chrono>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "ctxgov/tokenizer.hpp"

namespace ctxgov {

enum class SegmentKind {
  system,
  user,
  assistant,
  tool_output,
  planner_note,
  retrieved_snippet,
  execution_log,
  filler,
  directive,
  summary,
  ice_reminder,
};

enum class Polarity { forbid, require, conditional };
enum class RoutingMode { oracle, autonomous };
enum class Route { policy, data };

inline constexpr std::string_view kPolicyLabel = "POLICY";
inline constexpr std::string_view kDataLabel = "DATA";

struct Segment {
  std::string id;
  SegmentKind kind = SegmentKind::user;
  std::string text;
  std::size_t turn_index = 0;
  std::size_t token_count = 0;  // count_tokens(text) under the configured tokenizer
  std::set<std::string> labels;

  bool has_label(std::string_view label) const {
    return labels.find(std::string(label)) != labels.end();
  }
  bool operator==(const Segment&) const = default;
};

Segment make_segment(std::string id, SegmentKind kind, std::string text,
                     std::size_t turn_index,
                     std::set<std::string> labels = {},
                     const Tokenizer& tok = default_tokenizer());

// A directive-bearing control rule. `forbidden_actions` holds action-class
// identifiers (external_tool, delete, disclose, bypass_condition).
struct Constraint {
  std::string marker;  // "c1", "c2", ...
  std::string text;    // operative directive sentence, without the marker
  std::string actor;
  std::string action;
  std::string object;
  std::string condition;
  Polarity polarity = Polarity::forbid;
  std::set<std::string> forbidden_actions;

  std::string marker_tag() const { return "[" + marker + "]"; }
  bool operator==(const Constraint&) const = default;
};

struct RawHistory {
  std::vector<Segment> segments;
  Segment final_query;
};

struct TokenBudget {
  std::size_t total = 260;
  double control_floor_fraction = 0.40;
  std::size_t generation_cap = 96;

  bool operator==(const TokenBudget&) const = default;
};

struct DecisionState {
  std::vector<Segment> pinned;
  std::vector<Segment> data_plane;
  Segment query;
  std::size_t total_tokens = 0;

  // Segments in model-visible order: pinned, data plane, query.
  std::vector<const Segment*> ordered() const;
  // Model-visible text, one segment per line.
  std::string render() const;
  // Everything except the final query, one segment per line.
  std::string render_context() const;
  bool operator==(const DecisionState&) const = default;
};

struct Telemetry {
  RoutingMode routing_mode = RoutingMode::oracle;
  std::size_t b_ctrl = 0;
  std::size_t b_data = 0;
  std::size_t pressure_estimate = 0;
  double tau = 0.8;
  std::optional<std::size_t> shl_reference;  // nullopt: window proxy in use
  bool ice_fired = false;
  std::map<std::string, std::chrono::nanoseconds> stage_timings;
  std::size_t tokens_serialized = 0;
  std::size_t tokens_reused = 0;
  std::vector<std::string> control_dropped;  // ids of admitted but unpinned segments
  std::vector<std::string> ice_dropped;      // markers left out of the reminder
  std::string classifier;                    // fingerprint of the admission table
};

std::size_t total_tokens(const std::vector<Segment>& segments);

std::string_view to_string(SegmentKind k);
std::string_view to_string(Polarity p);
std::string_view to_string(RoutingMode m);
SegmentKind segment_kind_from_string(std::string_view s);
Polarity polarity_from_string(std::string_view s);
RoutingMode routing_mode_from_string(std::string_view s);

}  // namespace ctxgov
