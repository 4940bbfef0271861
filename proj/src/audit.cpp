#include "ctxgov/audit.hpp"

#include <algorithm>
#include <cctype>

#include "ctxgov/actions.hpp"
#include "ctxgov/errors.hpp"
#include "ctxgov/text_util.hpp"

namespace ctxgov {

namespace {

bool is_word(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_'; }

std::string strip_end_punct(std::string s) {
  while (!s.empty() && (s.back() == '.' || s.back() == '!' || s.back() == '?')) s.pop_back();
  return s;
}

// normalize(text) opens with normalize(rule), at a word boundary.
bool opens_with(std::string_view text, std::string_view rule) {
  const auto t = text::normalize(text);
  const auto r = strip_end_punct(text::normalize(rule));
  if (r.empty() || t.compare(0, r.size(), r) != 0) return false;
  return t.size() == r.size() || !is_word(t[r.size()]);
}

std::string render_segments(const std::vector<Segment>& segs) {
  std::string out;
  for (const auto& s : segs) {
    if (!out.empty()) out += '\n';
    out += s.text;
  }
  return out;
}

std::vector<std::string> texts_for(const std::vector<text::MarkerOccurrence>& occs,
                                   const std::string& marker) {
  std::vector<std::string> out;
  for (const auto& o : occs) {
    if (o.marker == marker) out.push_back(o.text);
  }
  return out;
}

// Object of the last "binding(cK) -> object" anchor in `s`.
std::optional<std::string> last_anchor(std::string_view s, const std::string& marker) {
  const std::string key = "binding(" + marker + ")";
  std::optional<std::string> found;
  std::size_t pos = s.find(key);
  while (pos != std::string_view::npos) {
    std::size_t i = pos + key.size();
    while (i < s.size() && s[i] == ' ') ++i;
    if (s.compare(i, 2, "->") == 0) {
      i += 2;
      std::size_t j = i;
      while (j < s.size() && s[j] != '\n' && s[j] != '[' &&
             !(s[j] == '.' && (j + 1 == s.size() || s[j + 1] == ' ' || s[j + 1] == '\n'))) {
        ++j;
      }
      found = text::trim(s.substr(i, j - i));
    }
    pos = s.find(key, pos + 1);
  }
  return found;
}

bool mentions(const std::vector<std::string>& texts, const std::string& slot) {
  const auto want = text::normalize(slot);
  return std::any_of(texts.begin(), texts.end(), [&](const std::string& t) {
    return text::normalize(t).find(want) != std::string::npos;
  });
}

std::string reminder_piece(const std::string& marker, const std::string& rule,
                           std::size_t cap, const Tokenizer& tok) {
  const std::string tag = "[" + marker + "]";
  const auto clause = text::first_clause(text::first_sentence(rule));
  const std::size_t tag_tokens = tok.count(tag);
  if (tag_tokens >= cap) return tag;
  for (std::size_t words = cap - tag_tokens; words > 0; --words) {
    auto piece = tag + " " + text::first_words(clause, words);
    if (tok.count(piece) <= cap) return piece;
  }
  return tag;
}

}  // namespace

bool ice_trigger(std::size_t k_hat, double tau, std::size_t h) {
  return static_cast<double>(k_hat) + 1e-9 >= tau * static_cast<double>(h);
}

bool PressureReading::triggers() const { return ice_trigger(k_hat, tau, reference()); }

PressureReading estimate_pressure(const std::vector<Segment>& /*pinned*/,
                                  const std::vector<Segment>& data_candidates, double tau,
                                  std::optional<std::size_t> shl_reference,
                                  std::size_t window) {
  PressureReading r;
  r.k_hat = total_tokens(data_candidates);
  r.tau = tau;
  r.h_reference = shl_reference;
  r.window = window;
  return r;
}

std::vector<Constraint> constraints_from_segments(const std::vector<Segment>& control) {
  std::vector<Constraint> out;
  for (const auto& s : control) {
    for (const auto& occ : text::find_markers(s.text)) {
      const bool seen = std::any_of(out.begin(), out.end(),
                                    [&](const Constraint& c) { return c.marker == occ.marker; });
      if (seen) continue;
      Constraint c;
      c.marker = occ.marker;
      c.text = text::first_sentence(occ.text);
      out.push_back(std::move(c));
    }
  }
  return out;
}

IceResult apply_ice(const std::vector<Segment>& pinned, const std::vector<Segment>& data,
                    std::span<const Constraint> constraints, std::size_t room,
                    const IceParams& params, const Tokenizer& tok) {
  IceResult r;
  r.pinned = pinned;
  r.data = data;
  if (constraints.empty()) return r;

  std::vector<std::string> pieces;
  for (const auto& c : constraints) {
    pieces.push_back(reminder_piece(c.marker, c.text, params.per_constraint_cap, tok));
  }
  auto build = [&](std::size_t n) {
    std::string line(kIceTag);
    for (std::size_t i = 0; i < n; ++i) line += " " + pieces[i];
    return line;
  };

  const std::size_t pinned_tokens = total_tokens(pinned);
  std::size_t n = pieces.size();
  std::string line = build(n);
  std::size_t cost = tok.count(line);
  std::size_t first_kept = 0;
  std::size_t data_tokens = total_tokens(data);
  while (pinned_tokens + cost + data_tokens > room && first_kept < data.size()) {
    data_tokens -= data[first_kept].token_count;
    r.evicted_data.push_back(data[first_kept].id);
    ++first_kept;
  }
  while (n > 0 && pinned_tokens + cost + data_tokens > room) {
    --n;
    line = build(n);
    cost = tok.count(line);
  }
  for (std::size_t i = n; i < constraints.size(); ++i) {
    r.dropped_markers.push_back(constraints[i].marker);
  }
  if (n == 0) return r;

  r.data.assign(data.begin() + static_cast<std::ptrdiff_t>(first_kept), data.end());
  const std::size_t turn = pinned.empty() && data.empty()
                               ? 0
                               : std::max(pinned.empty() ? 0 : pinned.back().turn_index,
                                          data.empty() ? 0 : data.back().turn_index);
  r.pinned.push_back(make_segment("ice@" + std::to_string(turn), SegmentKind::ice_reminder,
                                  std::move(line), turn, {}, tok));
  r.reminder_tokens = r.pinned.back().token_count;
  r.added = true;
  return r;
}

EntailmentTable::EntailmentTable(std::map<std::string, std::vector<std::string>> phrases)
    : phrases_(std::move(phrases)) {}

EntailmentTable EntailmentTable::defaults() {
  std::map<std::string, std::vector<std::string>> m;
  for (const auto& a : action_catalog()) m[a.id] = a.forbid_phrases;
  return EntailmentTable(std::move(m));
}

bool EntailmentTable::knows(const std::string& action_class) const {
  return phrases_.count(action_class) > 0;
}

bool EntailmentTable::forbids(std::string_view text, const std::string& action_class) const {
  auto it = phrases_.find(action_class);
  if (it == phrases_.end()) {
    throw ConfigError("entailment table has no action class '" + action_class + "'");
  }
  const auto norm = text::normalize(text);
  return std::any_of(it->second.begin(), it->second.end(),
                     [&](const std::string& p) { return text::contains_term(norm, p); });
}

std::set<std::string> EntailmentTable::forbidden_by(std::string_view text) const {
  std::set<std::string> out;
  for (const auto& [cls, _] : phrases_) {
    if (forbids(text, cls)) out.insert(cls);
  }
  return out;
}

std::string_view to_string(BindingStatus s) {
  switch (s) {
    case BindingStatus::bound: return "bound";
    case BindingStatus::drifted: return "drifted";
    case BindingStatus::missing: return "missing";
  }
  return "?";
}

std::string_view to_string(EquivalenceLabel e) {
  switch (e) {
    case EquivalenceLabel::equivalent: return "equivalent";
    case EquivalenceLabel::weakened: return "weakened";
    case EquivalenceLabel::missing: return "missing";
  }
  return "?";
}

EquivalenceLabel equivalence_from_string(std::string_view s) {
  if (s == "equivalent") return EquivalenceLabel::equivalent;
  if (s == "weakened") return EquivalenceLabel::weakened;
  if (s == "missing") return EquivalenceLabel::missing;
  throw ConfigError("unknown equivalence label '" + std::string(s) + "'");
}

AbsReport abs_audit(const DecisionState& state, std::span<const Constraint> expected) {
  AbsReport r;
  const auto pinned_text = render_segments(state.pinned);
  auto rest_text = render_segments(state.data_plane);
  rest_text += '\n';
  rest_text += state.query.text;
  const auto pinned_occ = text::find_markers(pinned_text);
  const auto rest_occ = text::find_markers(rest_text);

  std::size_t bound = 0;
  for (const auto& c : expected) {
    auto texts = texts_for(pinned_occ, c.marker);
    const std::string* source = &pinned_text;
    if (texts.empty()) {
      texts = texts_for(rest_occ, c.marker);
      source = &rest_text;
    }
    if (texts.empty()) {
      r.per_tuple[c.marker] = BindingStatus::missing;
      continue;
    }
    bool ok = true;
    if (!c.object.empty()) {
      if (auto anchor = last_anchor(*source, c.marker)) {
        ok = text::normalize(*anchor) == text::normalize(c.object);
      } else {
        ok = mentions(texts, c.object);
      }
    }
    if (ok && !c.condition.empty()) ok = mentions(texts, c.condition);
    r.per_tuple[c.marker] = ok ? BindingStatus::bound : BindingStatus::drifted;
    if (ok) ++bound;
  }
  r.score = static_cast<double>(bound) /
            static_cast<double>(std::max<std::size_t>(1, expected.size()));
  return r;
}

bool marker_text_visible(std::string_view rendered, const Constraint& c) {
  for (const auto& occ : text::find_markers(rendered)) {
    if (occ.marker == c.marker && opens_with(occ.text, c.text)) return true;
  }
  return false;
}

DprResult dpr_audit(const DecisionState& state, std::span<const Constraint> applicable) {
  DprResult r;
  const auto rendered = state.render();
  for (const auto& c : applicable) {
    if (marker_text_visible(rendered, c)) {
      ++r.p;
      r.visible.push_back(c.marker);
    }
  }
  r.dpr = static_cast<double>(r.p) /
          static_cast<double>(std::max<std::size_t>(1, applicable.size()));
  return r;
}

EquivalenceLabel equivalence_audit(const DecisionState& state, const Constraint& c,
                                   const EntailmentTable& table) {
  for (const auto& cls : c.forbidden_actions) {
    if (!table.knows(cls)) {
      throw ConfigError("constraint " + c.marker + " names unknown action class '" + cls + "'");
    }
  }
  const auto texts = texts_for(text::find_markers(state.render()), c.marker);
  if (texts.empty()) return EquivalenceLabel::missing;
  for (const auto& t : texts) {
    const bool all = std::all_of(c.forbidden_actions.begin(), c.forbidden_actions.end(),
                                 [&](const std::string& cls) { return table.forbids(t, cls); });
    if (all) return EquivalenceLabel::equivalent;
  }
  return EquivalenceLabel::weakened;
}

}  // namespace ctxgov
