#include "ctxgov/policies.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <utility>

#include "ctxgov/admission.hpp"
#include "ctxgov/digest.hpp"
#include "ctxgov/errors.hpp"
#include "ctxgov/text_util.hpp"

namespace ctxgov {

namespace {

constexpr std::array<std::pair<PolicyId, std::string_view>, 4> kPolicyNames{{
    {PolicyId::B1_truncation, "B1_truncation"},
    {PolicyId::B2_rolling_summary, "B2_rolling_summary"},
    {PolicyId::B3_hybrid, "B3_hybrid"},
    {PolicyId::B2plus_structured, "B2plus_structured"},
}};

constexpr std::string_view kSummaryHeader = "summary:";

std::size_t floor_fraction(double fraction, std::size_t total) {
  if (fraction <= 0.0) return 0;
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(total)));
}

Segment summary_segment(const std::vector<std::string>& items, std::size_t turn_index,
                        const Tokenizer& tok) {
  std::string body(kSummaryHeader);
  for (const auto& item : items) {
    body += ' ';
    body += item;
  }
  return make_segment("summary@" + std::to_string(turn_index), SegmentKind::summary,
                      std::move(body), turn_index, {}, tok);
}

std::vector<Segment> truncate_oldest(const std::vector<Segment>& data, std::size_t b_data) {
  std::size_t total = total_tokens(data);
  std::size_t first = 0;
  while (first < data.size() && total > b_data) {
    total -= data[first].token_count;
    ++first;
  }
  return {data.begin() + static_cast<std::ptrdiff_t>(first), data.end()};
}

// Rolling summary: first sentence of each compacted segment, kind tag
// in-line; oldest items fall out first when the summary overflows.
std::vector<Segment> rolling_summary(const std::vector<Segment>& data, std::size_t b_data,
                                     const Tokenizer& tok) {
  if (total_tokens(data) <= b_data) return data;
  const std::size_t n = data.size();
  for (std::size_t keep = n; keep-- > 0;) {
    const std::vector<Segment> recent(data.begin() + static_cast<std::ptrdiff_t>(n - keep),
                                      data.end());
    const std::size_t recent_tokens = total_tokens(recent);
    if (recent_tokens >= b_data) continue;
    const std::size_t room = b_data - recent_tokens;

    std::vector<std::string> items;
    for (std::size_t i = 0; i < n - keep; ++i) {
      auto sentence = text::first_sentence(data[i].text);
      if (sentence.empty()) continue;
      items.push_back("[" + std::string(to_string(data[i].kind)) + "] " + sentence);
    }
    std::size_t dropped = 0;
    while (dropped < items.size()) {
      std::vector<std::string> kept(items.begin() + static_cast<std::ptrdiff_t>(dropped),
                                    items.end());
      auto summary = summary_segment(kept, data[n - keep - 1].turn_index, tok);
      if (summary.token_count <= room) {
        std::vector<Segment> out;
        out.reserve(recent.size() + 1);
        out.push_back(std::move(summary));
        out.insert(out.end(), recent.begin(), recent.end());
        return out;
      }
      ++dropped;
    }
  }
  return {};
}

std::vector<Segment> hybrid(const std::vector<Segment>& data, std::size_t b_data,
                            const Tokenizer& tok) {
  if (data.empty()) return {};
  const std::size_t median_turn = data[(data.size() - 1) / 2].turn_index;
  std::vector<Segment> older;
  std::vector<Segment> newer;
  for (const auto& s : data) (s.turn_index <= median_turn ? older : newer).push_back(s);
  auto newer_out = truncate_oldest(newer, b_data);
  const std::size_t room = b_data - total_tokens(newer_out);
  auto out = rolling_summary(older, room, tok);
  out.insert(out.end(), newer_out.begin(), newer_out.end());
  return out;
}

enum class Bucket { tool_output, retrieved_snippet, planner_note, execution_log, other };

Bucket bucket_of(SegmentKind k) {
  switch (k) {
    case SegmentKind::tool_output: return Bucket::tool_output;
    case SegmentKind::retrieved_snippet: return Bucket::retrieved_snippet;
    case SegmentKind::planner_note: return Bucket::planner_note;
    case SegmentKind::execution_log: return Bucket::execution_log;
    default: return Bucket::other;
  }
}

double quota_of(const StructuredQuotas& q, Bucket b) {
  switch (b) {
    case Bucket::tool_output: return q.tool_output;
    case Bucket::retrieved_snippet: return q.retrieved_snippet;
    case Bucket::planner_note: return q.planner_note;
    case Bucket::execution_log: return q.execution_log;
    case Bucket::other: return q.other;
  }
  return 0.0;
}

// Drops every bracketed tag, markers included; the item is re-keyed by kind.
std::string strip_tags(std::string_view s) {
  std::string out;
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] == '[') {
      const auto close = s.find(']', i);
      if (close != std::string_view::npos) {
        i = close + 1;
        continue;
      }
    }
    out += s[i++];
  }
  return text::normalize(out).empty() ? std::string() : text::trim(out);
}

struct Item {
  std::size_t segment = 0;
  std::size_t sentence = 0;
  Bucket bucket = Bucket::other;
  bool rule_like = false;
  std::string text;
  std::size_t tokens = 0;
};

// Rule-like first, then newest segment first, then sentence order.
bool ranks_before(const Item& a, const Item& b) {
  if (a.rule_like != b.rule_like) return a.rule_like;
  if (a.segment != b.segment) return a.segment > b.segment;
  return a.sentence < b.sentence;
}

std::vector<Segment> structured_compaction(const std::vector<Segment>& data,
                                           std::size_t b_data, const PolicyParams& params) {
  if (total_tokens(data) <= b_data) return data;
  const Tokenizer& tok = *params.tokenizer;
  const ClassifierWeights lexicon;

  std::vector<Item> items;
  std::set<std::string> seen;
  std::vector<std::vector<std::string>> segment_items(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto sentences = text::split_sentences(data[i].text);
    for (std::size_t j = 0; j < sentences.size(); ++j) {
      auto body = strip_tags(sentences[j]);
      if (body.empty()) continue;
      Item it;
      it.segment = i;
      it.sentence = j;
      it.bucket = bucket_of(data[i].kind);
      const auto norm = text::normalize(body);
      it.rule_like = std::any_of(lexicon.deontic_lexicon.begin(), lexicon.deontic_lexicon.end(),
                                 [&](const std::string& t) { return text::contains_term(norm, t); });
      it.text = "[" + std::string(to_string(data[i].kind)) + "] " + body;
      it.tokens = tok.count(it.text);
      segment_items[i].push_back(it.text);
      if (!seen.insert(text::normalize(it.text)).second) continue;
      items.push_back(std::move(it));
    }
  }
  std::sort(items.begin(), items.end(), ranks_before);

  const std::size_t header = tok.count(kSummaryHeader);
  const std::size_t room = b_data > header ? b_data - header : 0;
  std::vector<bool> chosen(items.size(), false);
  std::size_t used = 0;
  constexpr std::array<Bucket, 5> kBuckets{Bucket::tool_output, Bucket::retrieved_snippet,
                                           Bucket::planner_note, Bucket::execution_log,
                                           Bucket::other};
  for (Bucket b : kBuckets) {
    std::size_t left = floor_fraction(quota_of(params.quotas, b), room);
    for (std::size_t k = 0; k < items.size(); ++k) {
      if (items[k].bucket != b || items[k].tokens > left) continue;
      chosen[k] = true;
      left -= items[k].tokens;
      used += items[k].tokens;
    }
  }
  for (std::size_t k = 0; k < items.size(); ++k) {
    if (chosen[k] || used + items[k].tokens > room) continue;
    chosen[k] = true;
    used += items[k].tokens;
  }

  auto build = [&]() {
    std::vector<const Item*> picked;
    for (std::size_t k = 0; k < items.size(); ++k) {
      if (chosen[k]) picked.push_back(&items[k]);
    }
    std::sort(picked.begin(), picked.end(), [](const Item* a, const Item* b) {
      return std::pair(a->segment, a->sentence) < std::pair(b->segment, b->sentence);
    });
    std::vector<std::string> texts;
    texts.reserve(picked.size());
    for (const auto* p : picked) texts.push_back(p->text);
    return texts;
  };

  std::vector<Segment> out;
  std::set<std::string> covered;
  auto texts = build();
  if (!texts.empty()) {
    auto summary = summary_segment(texts, data.back().turn_index, tok);
    // Tokenizers need not be additive; shed the lowest-ranked items until it fits.
    for (std::size_t k = items.size(); summary.token_count > b_data && k-- > 0;) {
      if (!chosen[k]) continue;
      chosen[k] = false;
      texts = build();
      summary = summary_segment(texts, data.back().turn_index, tok);
    }
    if (!texts.empty() && summary.token_count <= b_data) {
      for (const auto& t : texts) covered.insert(text::normalize(t));
      out.push_back(std::move(summary));
    }
  }

  std::size_t left = b_data - total_tokens(out);
  std::vector<std::size_t> whole;
  for (std::size_t i = data.size(); i-- > 0;) {
    const bool all_covered =
        !segment_items[i].empty() &&
        std::all_of(segment_items[i].begin(), segment_items[i].end(),
                    [&](const std::string& t) { return covered.count(text::normalize(t)) > 0; });
    if (all_covered) continue;
    if (data[i].token_count > left) break;
    left -= data[i].token_count;
    whole.push_back(i);
  }
  std::reverse(whole.begin(), whole.end());
  for (auto i : whole) out.push_back(data[i]);
  return out;
}

}  // namespace

std::string_view to_string(PolicyId p) {
  for (const auto& [id, name] : kPolicyNames) {
    if (id == p) return name;
  }
  return "?";
}

PolicyId policy_from_string(std::string_view s) {
  for (const auto& [id, name] : kPolicyNames) {
    if (name == s) return id;
  }
  if (s == "B1") return PolicyId::B1_truncation;
  if (s == "B2") return PolicyId::B2_rolling_summary;
  if (s == "B3") return PolicyId::B3_hybrid;
  if (s == "B2+" || s == "B2plus") return PolicyId::B2plus_structured;
  throw ConfigError("unknown policy '" + std::string(s) + "'");
}

BudgetSplit budget_split(const TokenBudget& budget, const std::vector<Segment>& control,
                         const Segment& query) {
  if (budget.total < 1) throw BudgetError("budget total must be at least 1 token");
  if (query.token_count > budget.total) {
    throw BudgetError("final query needs " + std::to_string(query.token_count) +
                      " tokens but the budget is " + std::to_string(budget.total));
  }
  BudgetSplit split;
  split.query_reserve = query.token_count;
  const std::size_t available = budget.total - split.query_reserve;
  const std::size_t floor_cap = floor_fraction(budget.control_floor_fraction, budget.total);
  split.b_ctrl = std::min({total_tokens(control), floor_cap, available});
  split.b_data = available - split.b_ctrl;
  return split;
}

std::optional<ControlCache::Entry> ControlCache::lookup(const std::string& session) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find(session);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ControlCache::store(const std::string& session, Entry entry) {
  std::lock_guard lock(mu_);
  entries_[session] = std::move(entry);
}

std::size_t ControlCache::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

std::string control_prefix_hash(const std::vector<Segment>& pinned, std::size_t count) {
  std::string canon;
  for (std::size_t i = 0; i < count && i < pinned.size(); ++i) {
    canon += to_string(pinned[i].kind);
    canon += '\x1f';
    canon += pinned[i].text;
    canon += '\x1e';
  }
  return sha256_hex(canon);
}

PinResult pin_control(const std::vector<Segment>& control, std::size_t b_ctrl,
                      ControlCache* cache, const std::string& session) {
  PinResult r;
  std::size_t used = 0;
  std::size_t i = 0;
  for (; i < control.size(); ++i) {
    if (used + control[i].token_count > b_ctrl) break;
    used += control[i].token_count;
    r.pinned.push_back(control[i]);
  }
  for (; i < control.size(); ++i) r.dropped.push_back(control[i].id);

  r.tokens_serialized = used;
  if (cache == nullptr) return r;

  if (auto hit = cache->lookup(session);
      hit && hit->pinned.size() <= r.pinned.size() &&
      control_prefix_hash(r.pinned, hit->pinned.size()) == hit->prefix_hash) {
    r.tokens_reused = hit->tokens_already_serialized;
    r.tokens_serialized = used - r.tokens_reused;
  }
  cache->store(session, {control_prefix_hash(r.pinned, r.pinned.size()), r.pinned, used});
  return r;
}

std::vector<Segment> apply_reference_policy(PolicyId policy, const std::vector<Segment>& data,
                                            std::size_t b_data, const PolicyParams& params) {
  if (b_data == 0) return {};
  switch (policy) {
    case PolicyId::B1_truncation: return truncate_oldest(data, b_data);
    case PolicyId::B2_rolling_summary: return rolling_summary(data, b_data, *params.tokenizer);
    case PolicyId::B3_hybrid: return hybrid(data, b_data, *params.tokenizer);
    case PolicyId::B2plus_structured: return structured_compaction(data, b_data, params);
  }
  return {};
}

std::vector<Segment> replay_recency(const std::vector<Segment>& control) {
  std::vector<Segment> out;
  out.reserve(control.size());
  for (const auto& s : control) {
    Segment copy = s;
    copy.id += "#replay";
    copy.labels.insert("replay");
    out.push_back(std::move(copy));
  }
  return out;
}

}  // namespace ctxgov
