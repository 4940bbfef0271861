#include "ctxgov/types.hpp"

#include <array>
#include <utility>

#include "ctxgov/errors.hpp"

namespace ctxgov {

namespace {

constexpr std::array<std::pair<SegmentKind, std::string_view>, 11> kKindNames{{
    {SegmentKind::system, "system"},
    {SegmentKind::user, "user"},
    {SegmentKind::assistant, "assistant"},
    {SegmentKind::tool_output, "tool_output"},
    {SegmentKind::planner_note, "planner_note"},
    {SegmentKind::retrieved_snippet, "retrieved_snippet"},
    {SegmentKind::execution_log, "execution_log"},
    {SegmentKind::filler, "filler"},
    {SegmentKind::directive, "directive"},
    {SegmentKind::summary, "summary"},
    {SegmentKind::ice_reminder, "ice_reminder"},
}};

template <typename Enum, std::size_t N>
std::string_view name_of(const std::array<std::pair<Enum, std::string_view>, N>& table,
                         Enum value) {
  for (const auto& [e, name] : table) {
    if (e == value) return name;
  }
  return "?";
}

template <typename Enum, std::size_t N>
Enum value_of(const std::array<std::pair<Enum, std::string_view>, N>& table,
              std::string_view name, std::string_view what) {
  for (const auto& [e, n] : table) {
    if (n == name) return e;
  }
  throw ConfigError("unknown " + std::string(what) + ": '" + std::string(name) + "'");
}

constexpr std::array<std::pair<Polarity, std::string_view>, 3> kPolarityNames{{
    {Polarity::forbid, "forbid"},
    {Polarity::require, "require"},
    {Polarity::conditional, "conditional"},
}};

constexpr std::array<std::pair<RoutingMode, std::string_view>, 2> kModeNames{{
    {RoutingMode::oracle, "oracle"},
    {RoutingMode::autonomous, "autonomous"},
}};

void append_lines(std::string& out, const std::vector<Segment>& segs) {
  for (const auto& s : segs) {
    if (!out.empty()) out += '\n';
    out += s.text;
  }
}

}  // namespace

Segment make_segment(std::string id, SegmentKind kind, std::string text,
                     std::size_t turn_index, std::set<std::string> labels,
                     const Tokenizer& tok) {
  Segment s;
  s.id = std::move(id);
  s.kind = kind;
  s.token_count = tok.count(text);
  s.text = std::move(text);
  s.turn_index = turn_index;
  s.labels = std::move(labels);
  return s;
}

std::vector<const Segment*> DecisionState::ordered() const {
  std::vector<const Segment*> out;
  out.reserve(pinned.size() + data_plane.size() + 1);
  for (const auto& s : pinned) out.push_back(&s);
  for (const auto& s : data_plane) out.push_back(&s);
  out.push_back(&query);
  return out;
}

std::string DecisionState::render_context() const {
  std::string out;
  append_lines(out, pinned);
  append_lines(out, data_plane);
  return out;
}

std::string DecisionState::render() const {
  std::string out = render_context();
  if (!out.empty()) out += '\n';
  out += query.text;
  return out;
}

std::size_t total_tokens(const std::vector<Segment>& segments) {
  std::size_t n = 0;
  for (const auto& s : segments) n += s.token_count;
  return n;
}

std::string_view to_string(SegmentKind k) { return name_of(kKindNames, k); }
std::string_view to_string(Polarity p) { return name_of(kPolarityNames, p); }
std::string_view to_string(RoutingMode m) { return name_of(kModeNames, m); }

SegmentKind segment_kind_from_string(std::string_view s) {
  return value_of(kKindNames, s, "segment kind");
}
Polarity polarity_from_string(std::string_view s) {
  return value_of(kPolarityNames, s, "polarity");
}
RoutingMode routing_mode_from_string(std::string_view s) {
  return value_of(kModeNames, s, "routing mode");
}

}  // namespace ctxgov
