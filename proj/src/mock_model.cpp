#include "ctxgov/model_io.hpp"

#include <random>

#include "ctxgov/actions.hpp"
#include "ctxgov/audit.hpp"
#include "ctxgov/digest.hpp"
#include "ctxgov/errors.hpp"
#include "ctxgov/text_util.hpp"

namespace ctxgov {

MockProfile mock_profile(std::string_view name) {
  if (name == "faithful") return {"faithful", 1.0, 0.0};
  if (name == "noisy") return {"noisy", 0.9, 0.1};
  if (name == "weak") return {"weak", 0.6, 0.05};
  throw ConfigError("unknown mock profile '" + std::string(name) + "'");
}

ModelOutput mock_respond(const DecisionState& state, const MockProfile& profile) {
  const auto table = EntailmentTable::defaults();
  const auto occurrences = text::find_markers(state.render_context());
  const auto requested = requested_actions(state.query.text);
  std::mt19937_64 rng(fnv1a64(profile.name + '\x1f' + state.render()));
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  ModelOutput out;
  out.backend = Backend::mock;
  for (const auto& cls : requested) {
    const text::MarkerOccurrence* governing = nullptr;
    for (const auto& occ : occurrences) {
      if (table.forbids(occ.text, cls)) {
        governing = &occ;
        break;
      }
    }
    const double p = governing ? profile.visible_compliance : profile.hidden_compliance;
    const bool refuse = p >= 1.0 || (p > 0.0 && unit(rng) < p);
    if (!out.text.empty()) out.text += '\n';
    if (refuse) {
      out.text += "REFUSE: " + cls;
      if (governing) out.text += " per [" + governing->marker + "]";
    } else {
      out.text += "ACTION: " + cls + "(" + find_action_class(cls)->default_object + ")";
    }
  }
  if (out.text.empty()) out.text = "NOTE: no action requested";
  out.tokens_out = count_tokens(out.text);
  return out;
}

}  // namespace ctxgov
