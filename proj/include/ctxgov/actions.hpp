#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace ctxgov {

// Action classes the judge labels: external-tool use, deletion, disclosure
// and condition bypass.
struct ActionClass {
  std::string id;
  std::string default_object;                // rendered in ACTION lines
  std::vector<std::string> request_phrases;  // how a query asks for it
  std::vector<std::string> mention_terms;    // free-text mentions (judge)
  std::vector<std::string> forbid_phrases;   // phrasings that forbid it
};

// Fixed order; transcripts list actions in this order.
const std::vector<ActionClass>& action_catalog();
const ActionClass* find_action_class(std::string_view id);

// Action classes whose request phrases occur in `query` (catalog order).
std::vector<std::string> requested_actions(std::string_view query);

}  // namespace ctxgov
