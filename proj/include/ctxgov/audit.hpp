#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ctxgov/types.hpp"

namespace ctxgov {

// ---------------------------------------------------------------------------
// Pressure and ICE

struct PressureReading {
  std::size_t k_hat = 0;  // tokens of pre-compaction data candidates
  double tau = 0.8;
  std::optional<std::size_t> h_reference;  // reference SHL; nullopt -> window proxy
  std::size_t window = 260;                // TokenBudget.total, used as the proxy

  std::size_t reference() const { return h_reference.value_or(window); }
  bool triggers() const;
};

PressureReading estimate_pressure(const std::vector<Segment>& pinned,
                                  const std::vector<Segment>& data_candidates,
                                  double tau = 0.8,
                                  std::optional<std::size_t> shl_reference = std::nullopt,
                                  std::size_t window = 260);

// k_hat >= tau * h, compared exactly enough for integer token counts.
bool ice_trigger(std::size_t k_hat, double tau, std::size_t h);

struct IceParams {
  std::size_t per_constraint_cap = 12;  // tokens, marker included
};

inline constexpr std::string_view kIceTag = "[ICE-REMINDER]";

struct IceResult {
  std::vector<Segment> pinned;  // input pinned list plus the reminder, if any
  std::vector<Segment> data;
  bool added = false;
  std::size_t reminder_tokens = 0;
  std::vector<std::string> dropped_markers;  // left out of the reminder for lack of room
  std::vector<std::string> evicted_data;     // data ids removed to make room
};

// Builds the "[ICE-REMINDER] [c1] ... [c2] ..." line from the constraints'
// first clauses and places it after the pinned control prefix. `room` is the
// token allowance for pinned + reminder + data; data is evicted oldest-first
// and the reminder truncated at constraint granularity to respect it.
IceResult apply_ice(const std::vector<Segment>& pinned, const std::vector<Segment>& data,
                    std::span<const Constraint> constraints, std::size_t room,
                    const IceParams& params = {},
                    const Tokenizer& tok = default_tokenizer());

// Marker/first-text pairs found in admitted control segments, first
// occurrence per marker. Feeds apply_ice when no scenario constraints exist.
std::vector<Constraint> constraints_from_segments(const std::vector<Segment>& control);

// ---------------------------------------------------------------------------
// Audits

// Per action class, phrasings that count as forbidding it.
class EntailmentTable {
 public:
  static EntailmentTable defaults();
  explicit EntailmentTable(std::map<std::string, std::vector<std::string>> phrases);

  // Throws ConfigError for an action class the table does not know.
  bool forbids(std::string_view text, const std::string& action_class) const;
  bool knows(const std::string& action_class) const;
  std::set<std::string> forbidden_by(std::string_view text) const;
  const std::map<std::string, std::vector<std::string>>& phrases() const { return phrases_; }

 private:
  std::map<std::string, std::vector<std::string>> phrases_;
};

enum class BindingStatus { bound, drifted, missing };
enum class EquivalenceLabel { equivalent, weakened, missing };

std::string_view to_string(BindingStatus s);
std::string_view to_string(EquivalenceLabel e);
EquivalenceLabel equivalence_from_string(std::string_view s);

struct AbsReport {
  std::map<std::string, BindingStatus> per_tuple;
  double score = 0.0;  // bound / max(1, applicable)
};

// Object resolution: the last "binding(cK) -> <object>" anchor in the state
// wins; otherwise the expected object must appear in the surviving rule text.
// A non-empty condition must survive in the rule text.
AbsReport abs_audit(const DecisionState& state, std::span<const Constraint> expected);

struct DprResult {
  std::size_t p = 0;
  double dpr = 0.0;
  std::vector<std::string> visible;
};

// A constraint is visible when its marker is immediately followed by its
// operative text (normalized) somewhere in the model-visible state.
DprResult dpr_audit(const DecisionState& state, std::span<const Constraint> applicable);
bool marker_text_visible(std::string_view rendered, const Constraint& c);

EquivalenceLabel equivalence_audit(const DecisionState& state, const Constraint& c,
                                   const EntailmentTable& table = EntailmentTable::defaults());

}  // namespace ctxgov
