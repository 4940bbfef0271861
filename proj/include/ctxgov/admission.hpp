#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "ctxgov/types.hpp"

namespace ctxgov {

// Feature weights of the lightweight policy classifier. Loadable from a
// key = value file; see ClassifierWeights::parse for the keys.
struct ClassifierWeights {
  double marker = 1.0;          // explicit [cK] marker, saturates the score
  double deontic = 0.5;         // per distinct deontic lexicon hit
  double imperative = 0.15;     // sentence opens with an imperative verb
  double second_person = 0.15;  // addresses "you"
  double threshold = 0.5;
  std::vector<std::string> deontic_lexicon{"do not", "never", "must", "only if",
                                           "require*", "forbid*"};
  std::vector<std::string> imperative_verbs{
      "do", "don't", "never", "always", "use", "proceed", "avoid", "ensure",
      "keep", "delete", "call", "invoke", "share", "send", "stop", "wait",
      "check", "verify", "finalize"};

  // Parses "key = value" lines; '#' starts a comment. Lists are
  // comma-separated. Unknown keys are a ConfigError.
  static ClassifierWeights parse(std::string_view text);
  static ClassifierWeights load(const std::filesystem::path& path);

  // Stable description reported in telemetry.
  std::string fingerprint() const;
};

double score_directive_likelihood(const Segment& s,
                                  const ClassifierWeights& weights = {});

struct AdmissionResult {
  std::vector<Segment> control;  // S_ctrl, history order
  std::vector<Segment> data;     // S_data, history order
  Segment query;
  std::map<std::string, Route> per_segment_route;
  RoutingMode mode = RoutingMode::oracle;
};

// Oracle mode copies the POLICY/DATA labels; autonomous mode routes on the
// classifier score or an explicit marker. Throws ConfigError in oracle mode
// when a segment carries no oracle label.
AdmissionResult admit_control(const RawHistory& h, RoutingMode mode,
                              const ClassifierWeights& weights = {});

}  // namespace ctxgov
