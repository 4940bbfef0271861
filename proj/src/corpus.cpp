#include "ctxgov/corpus.hpp"

namespace ctxgov {

const std::vector<std::string>& filler_corpus() {
  static const std::vector<std::string> corpus{
      "The weather was mild that week and the harbor stayed calm.",
      "A delivery of paper towels arrived at the east office on Tuesday.",
      "The quarterly newsletter featured a short profile of the facilities team.",
      "Most of the meeting covered seating charts for the spring offsite.",
      "Coffee consumption rose slightly after the new grinder was installed.",
      "The hallway lights were replaced with warmer bulbs last month.",
      "Several volunteers organized a book swap near the lobby.",
      "The parking garage repainted its level markings over the weekend.",
      "A local bakery catered the farewell lunch for two retiring staff.",
      "Attendance at the optional yoga session held steady through winter.",
      "The river trail reopened after the footbridge inspection wrapped up.",
      "An old map of the district hung in the conference room for years.",
      "The cafeteria menu rotated between soups and grain bowls.",
      "Printer toner orders were batched to reduce shipping trips.",
      "The team photo was retaken because the first one was blurry.",
      "A brief power flicker happened during the afternoon thunderstorm.",
      "The plant on the third floor grew tall enough to touch the shelf.",
      "Visitors often asked about the mural painted by a regional artist.",
      "The elevator maintenance crew finished ahead of schedule.",
      "Lunch conversations drifted toward travel plans and gardening.",
      "The archive room smelled faintly of cedar and old cardboard.",
      "A new whiteboard replaced the cracked one in the corner office.",
      "The spring fundraiser collected canned goods for the food bank.",
      "Rain gauges on the roof recorded an unusually wet April.",
      "The receptionist kept a jar of lemon candies on the front desk.",
      "A summer intern catalogued the photographs from earlier decades.",
      "The bike racks filled up quickly once the weather turned warm.",
      "Window cleaners worked their way down the north facade.",
      "The trivia night ended in a tie between two departments.",
      "Fresh flowers appeared in the lobby every Monday morning.",
      "The office dog slept through most of the afternoon briefings.",
      "A long queue formed at the food truck parked outside.",
      "The heating system made a soft ticking sound at dawn.",
      "Staff compared notes on the best routes around the construction.",
      "The annual picnic moved indoors because of strong wind.",
      "Someone left a puzzle half finished on the break room table.",
      "The library branch nearby extended its evening hours.",
      "An accordion player performed at the street fair on Saturday.",
      "The tea selection expanded to include three herbal blends.",
      "A flock of geese crossed the pond behind the building.",
  };
  return corpus;
}

const std::vector<std::string>& agentic_corpus(SegmentKind kind) {
  static const std::vector<std::string> planner{
      "Planner drafted three candidate steps for the archive-health task.",
      "Next step is to compare the storage report with the retention dashboard.",
      "Planner ranked the cleanup candidates by age and size.",
      "The plan keeps a rollback checkpoint before the maintenance window.",
      "Planner scheduled a status summary after the verification pass.",
      "Open item: reconcile the two inventory counts before the final step.",
      "The plan groups shard checks by region to save round trips.",
      "Planner flagged the nightly job as the likely source of drift.",
  };
  static const std::vector<std::string> snippet{
      "Runbook excerpt: archive shards rotate weekly and keep traceability during recovery.",
      "Wiki note: the retention dashboard refreshes every fifteen minutes.",
      "Design doc excerpt: cold storage tiers trade latency for cost.",
      "Ticket history shows a similar slowdown resolved by reindexing.",
      "Runbook excerpt: verification checksums are stored next to each shard.",
      "Knowledge base entry: the maintenance step updates shard metadata.",
      "Postmortem summary: a stale lock delayed the previous rotation.",
      "Wiki note: archive-health alerts page the storage rotation first.",
  };
  static const std::vector<std::string> tool{
      "Storage report: 412 shards healthy, 9 degraded, 3 with unresolved verification markers.",
      "Query result: retention dashboard lists 57 objects older than ninety days.",
      "Disk usage check returned 81 percent on the primary archive volume.",
      "Index scan finished in 14 seconds with stale progress hints on two shards.",
      "Checksum tool reported 2 mismatches in the west region.",
      "Inventory export produced 1,204 rows with 6 duplicate keys.",
      "Latency probe measured 230 milliseconds median on cold reads.",
      "Lock table shows one lease held for 47 minutes.",
  };
  static const std::vector<std::string> log{
      "12:01 scheduler started the archive-health workflow.",
      "12:03 verification pass resumed after a transient timeout.",
      "12:05 operator note asks for a concise status summary before any irreversible step.",
      "12:07 worker 3 finished the shard metadata refresh.",
      "12:09 retry budget for the index scan reached two of five.",
      "12:11 metrics exporter flushed 318 samples.",
      "12:13 workflow paused while waiting on the lock lease.",
      "12:15 heartbeat from the maintenance agent looked normal.",
  };
  static const std::vector<std::string> empty;
  switch (kind) {
    case SegmentKind::planner_note: return planner;
    case SegmentKind::retrieved_snippet: return snippet;
    case SegmentKind::tool_output: return tool;
    case SegmentKind::execution_log: return log;
    default: return empty;
  }
}

}  // namespace ctxgov
