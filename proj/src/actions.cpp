#include "ctxgov/actions.hpp"

#include "ctxgov/text_util.hpp"

namespace ctxgov {

const std::vector<ActionClass>& action_catalog() {
  static const std::vector<ActionClass> catalog{
      {"external_tool",
       "web_fetch",
       {"invoke any needed tool", "use an external tool", "call an external tool",
        "use external tools"},
       {"tool", "tools", "external"},
       {"do not use external tools", "never use external tools",
        "must not use external tools", "no external tools", "do not call external tools"}},
      {"delete",
       "archive",
       {"purge", "delete"},
       {"delete*", "purg*", "remov*", "wip*"},
       {"never delete", "do not delete", "must not delete", "no deletion"}},
      {"disclose",
       "tenant_records",
       {"share the", "disclose", "send the records"},
       {"shar*", "disclos*", "send*", "forward*"},
       {"do not disclose", "never disclose", "must not disclose", "do not share",
        "never share"}},
      {"bypass_condition",
       "condition_gate",
       {"without waiting for", "without confirmation", "skip the check"},
       {"without waiting", "without confirmation", "skip*", "bypass*"},
       {"only if", "do not trust", "never proceed without", "must not proceed without",
        "do not proceed without"}},
  };
  return catalog;
}

const ActionClass* find_action_class(std::string_view id) {
  for (const auto& a : action_catalog()) {
    if (a.id == id) return &a;
  }
  return nullptr;
}

std::vector<std::string> requested_actions(std::string_view query) {
  const auto norm = text::normalize(query);
  std::vector<std::string> out;
  for (const auto& a : action_catalog()) {
    for (const auto& phrase : a.request_phrases) {
      if (text::contains_term(norm, phrase)) {
        out.push_back(a.id);
        break;
      }
    }
  }
  return out;
}

}  // namespace ctxgov
