#pragma once

#include <span>
#include <string>
#include <vector>

#include "ctxgov/types.hpp"

namespace ctxgov {

struct Violation {
  std::string code;  // duplicate_marker, turn_order, query_in_segments, ...
  std::string detail;
};

// Checks the structural invariants of a raw history. An empty report means
// the history is valid.
std::vector<Violation> validate_history(const RawHistory& h);

// Same, plus marker uniqueness and oracle-completeness of a scenario's
// constraint list.
std::vector<Violation> validate_history(const RawHistory& h,
                                        std::span<const Constraint> constraints);

}  // namespace ctxgov
