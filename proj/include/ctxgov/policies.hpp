#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ctxgov/types.hpp"

namespace ctxgov {

enum class PolicyId { B1_truncation, B2_rolling_summary, B3_hybrid, B2plus_structured };

std::string_view to_string(PolicyId p);
PolicyId policy_from_string(std::string_view s);

// Share of the B2+ summary budget each segment kind may claim before unused
// quota spills over to the rest.
struct StructuredQuotas {
  double tool_output = 0.30;
  double retrieved_snippet = 0.25;
  double planner_note = 0.20;
  double execution_log = 0.15;
  double other = 0.10;

  bool operator==(const StructuredQuotas&) const = default;
};

struct PolicyParams {
  StructuredQuotas quotas;
  const Tokenizer* tokenizer = &default_tokenizer();
};

struct BudgetSplit {
  std::size_t b_ctrl = 0;
  std::size_t b_data = 0;
  std::size_t query_reserve = 0;
};

// Reserves the query first, then gives control min(need, floor(fraction * total)).
// Throws BudgetError when the query alone exceeds the total.
BudgetSplit budget_split(const TokenBudget& budget, const std::vector<Segment>& control,
                         const Segment& query);

// Orchestration-level reuse of a retained control prefix, keyed by session.
// Entries for distinct sessions may be touched from different threads; a
// single session must not be assembled concurrently.
class ControlCache {
 public:
  struct Entry {
    std::string prefix_hash;
    std::vector<Segment> pinned;
    std::size_t tokens_already_serialized = 0;
  };

  std::optional<Entry> lookup(const std::string& session) const;
  void store(const std::string& session, Entry entry);
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, Entry> entries_;
};

// Content hash of a pinned prefix (kinds and texts, not ids).
std::string control_prefix_hash(const std::vector<Segment>& pinned, std::size_t count);

struct PinResult {
  std::vector<Segment> pinned;
  std::size_t tokens_serialized = 0;
  std::size_t tokens_reused = 0;
  std::vector<std::string> dropped;  // ids that did not fit under b_ctrl
};

// Pins control segments oldest-first, whole, until the next one no longer
// fits in b_ctrl. With a cache, a hit on the previously pinned prefix charges
// only the newly added control text.
PinResult pin_control(const std::vector<Segment>& control, std::size_t b_ctrl,
                      ControlCache* cache = nullptr, const std::string& session = {});

// Reference context policy E0 over the data plane. The output never exceeds
// b_data tokens.
std::vector<Segment> apply_reference_policy(PolicyId policy, const std::vector<Segment>& data,
                                            std::size_t b_data, const PolicyParams& params = {});

// Verbatim copies of the control segments, meant to sit just before the query
// inside the data budget. Ablation arm only.
std::vector<Segment> replay_recency(const std::vector<Segment>& control);

}  // namespace ctxgov
