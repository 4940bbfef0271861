#include "ctxgov/history.hpp"

#include <map>
#include <set>

#include "ctxgov/text_util.hpp"

namespace ctxgov {

namespace {

// Marker a directive line opens with, e.g. "[c1] Never delete data." -> "c1".
std::string leading_marker(const std::string& text) {
  auto markers = text::find_markers(text);
  if (markers.empty()) return {};
  const auto t = text::trim(text);
  if (t.rfind("[" + markers.front().marker + "]", 0) != 0) return {};
  return markers.front().marker;
}

}  // namespace

std::vector<Violation> validate_history(const RawHistory& h) {
  std::vector<Violation> out;
  std::map<std::string, std::string> marker_owner;
  std::set<std::string> ids;

  for (std::size_t i = 0; i < h.segments.size(); ++i) {
    const auto& s = h.segments[i];
    if (i > 0 && s.turn_index < h.segments[i - 1].turn_index) {
      out.push_back({"turn_order", "segment '" + s.id + "' has turn_index " +
                                       std::to_string(s.turn_index) + " after " +
                                       std::to_string(h.segments[i - 1].turn_index)});
    }
    if (s.kind == SegmentKind::summary || s.kind == SegmentKind::ice_reminder) {
      out.push_back({"pipeline_kind", "segment '" + s.id + "' has pipeline-only kind " +
                                          std::string(to_string(s.kind))});
    }
    if (!ids.insert(s.id).second) {
      out.push_back({"duplicate_id", "segment id '" + s.id + "' repeats"});
    }
    if ((!h.final_query.id.empty() && s.id == h.final_query.id) ||
        (!h.final_query.text.empty() && s.text == h.final_query.text)) {
      out.push_back({"query_in_segments", "final query appears as segment '" + s.id + "'"});
    }
    const auto marker = leading_marker(s.text);
    if (!marker.empty()) {
      auto [it, fresh] = marker_owner.emplace(marker, s.id);
      if (!fresh) {
        out.push_back({"duplicate_marker", "marker [" + marker + "] opens both '" +
                                               it->second + "' and '" + s.id + "'"});
      }
    }
  }
  return out;
}

std::vector<Violation> validate_history(const RawHistory& h,
                                        std::span<const Constraint> constraints) {
  auto out = validate_history(h);
  std::set<std::string> seen;
  for (const auto& c : constraints) {
    if (!seen.insert(c.marker).second) {
      out.push_back({"duplicate_marker", "two constraints use marker " + c.marker});
    }
    if (c.polarity != Polarity::require && c.forbidden_actions.empty()) {
      out.push_back({"empty_forbidden_actions",
                     "constraint " + c.marker + " forbids no action class"});
    }
  }
  return out;
}

}  // namespace ctxgov
