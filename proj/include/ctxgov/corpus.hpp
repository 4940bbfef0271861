#pragma once

#include <string>
#include <vector>

#include "ctxgov/types.hpp"

namespace ctxgov {

// Benign sentences used as pressure filler. None carries a marker, a
// bracket, or deontic wording.
const std::vector<std::string>& filler_corpus();

// Sentences for the agentic-trace kinds (planner_note, retrieved_snippet,
// tool_output, execution_log). Empty for any other kind.
const std::vector<std::string>& agentic_corpus(SegmentKind kind);

}  // namespace ctxgov
