#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>

#include "ctxgov/errors.hpp"
#include "ctxgov/policies.hpp"

using namespace ctxgov;

namespace {

std::string words(std::size_t n, const std::string& w = "word") {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s += (i ? " " : "") + w;
  return s;
}

Segment seg(std::string id, std::size_t tokens, std::size_t turn = 0,
            SegmentKind k = SegmentKind::directive) {
  return make_segment(std::move(id), k, words(tokens), turn);
}

}  // namespace

TEST_CASE("budget_split") {
  TokenBudget b;
  auto q = seg("q", 10, 9, SegmentKind::user);
  auto empty = budget_split(b, {}, q);
  CHECK(empty.b_ctrl == 0);
  CHECK(empty.b_data == 250);

  auto s60 = budget_split(b, {seg("c", 60)}, q);
  CHECK(s60.b_ctrl == 60);
  CHECK(s60.b_data == 190);

  auto s150 = budget_split(b, {seg("c", 150)}, q);
  CHECK(s150.b_ctrl == 104);
  CHECK(s150.b_data == 146);
  CHECK(s150.b_ctrl + s150.b_data + s150.query_reserve <= b.total);

  CHECK_THROWS_AS(budget_split(b, {}, seg("q", 261, 0, SegmentKind::user)), BudgetError);
}

TEST_CASE("pin_control") {
  auto zero = pin_control({seg("a", 10)}, 0);
  CHECK(zero.pinned.empty());
  CHECK(zero.tokens_serialized == 0);
  CHECK(zero.tokens_reused == 0);

  auto partial = pin_control({seg("a", 30), seg("b", 40, 1)}, 50);
  REQUIRE(partial.pinned.size() == 1);
  CHECK(partial.pinned[0].id == "a");
  REQUIRE(partial.dropped.size() == 1);
  CHECK(partial.dropped[0] == "b");

  ControlCache cache;
  std::vector<Segment> ctrl{seg("a", 40)};
  auto first = pin_control(ctrl, 104, &cache, "sess");
  CHECK(first.tokens_serialized == 40);
  CHECK(first.tokens_reused == 0);
  auto second = pin_control(ctrl, 104, &cache, "sess");
  CHECK(second.tokens_serialized == 0);
  CHECK(second.tokens_reused == 40);

  auto grown = pin_control({seg("a", 40), seg("b", 5, 1)}, 104, &cache, "sess");
  CHECK(grown.tokens_serialized == 5);
  CHECK(grown.tokens_reused == 40);

  auto other = pin_control(ctrl, 104, &cache, "other");
  CHECK(other.tokens_serialized == 40);
}

TEST_CASE("cache accounting over a session") {
  std::vector<Segment> ctrl{seg("a", 40)};
  ControlCache cache;
  std::size_t with = 0, without = 0;
  for (int t = 0; t < 10; ++t) {
    with += pin_control(ctrl, 104, &cache, "s").tokens_serialized;
    without += pin_control(ctrl, 104).tokens_serialized;
  }
  CHECK(with == 40);
  CHECK(without == 400);
}

TEST_CASE("B1 truncation keeps the newest whole segments") {
  std::vector<Segment> data{seg("d0", 50, 0, SegmentKind::filler), seg("d1", 50, 1, SegmentKind::filler),
                            seg("d2", 50, 2, SegmentKind::filler)};
  auto out = apply_reference_policy(PolicyId::B1_truncation, data, 90);
  REQUIRE(out.size() == 1);
  CHECK(out[0].id == "d2");
}

TEST_CASE("every policy respects b_data") {
  std::vector<Segment> data;
  const SegmentKind kinds[] = {SegmentKind::planner_note, SegmentKind::retrieved_snippet,
                               SegmentKind::tool_output, SegmentKind::execution_log};
  for (std::size_t i = 0; i < 12; ++i)
    data.push_back(make_segment("d" + std::to_string(i), kinds[i % 4],
                                "Entry " + std::to_string(i) + " recorded. " + words(8 + i), i));
  for (auto p : {PolicyId::B1_truncation, PolicyId::B2_rolling_summary, PolicyId::B3_hybrid,
                 PolicyId::B2plus_structured}) {
    CAPTURE(to_string(p));
    CHECK(apply_reference_policy(p, data, 0).empty());
    for (std::size_t b : {5u, 20u, 60u, 120u, 400u})
      CHECK(total_tokens(apply_reference_policy(p, data, b)) <= b);
  }
}

TEST_CASE("B2 output is a tagged summary") {
  std::vector<Segment> data{
      make_segment("d0", SegmentKind::planner_note, "Plan the archive cleanup. Then review the export carefully before lunch.", 0),
      make_segment("d1", SegmentKind::retrieved_snippet, "Archive policy dates from 2019. It was revised twice since then.", 1),
      make_segment("d2", SegmentKind::tool_output, words(40, "rows"), 2)};
  auto out = apply_reference_policy(PolicyId::B2_rolling_summary, data, 52);
  REQUIRE_FALSE(out.empty());
  CHECK(out[0].text.rfind("summary: [planner_note] Plan the archive cleanup.", 0) == 0);
  CHECK(out[0].text.find("[retrieved_snippet]") != std::string::npos);
}

TEST_CASE("replay_recency") {
  CHECK(replay_recency({}).empty());
  auto one = replay_recency({seg("a", 6)});
  REQUIRE(one.size() == 1);
  CHECK(one[0].text == words(6));
}

TEST_CASE("policy names") {
  CHECK(policy_from_string("B2plus_structured") == PolicyId::B2plus_structured);
  CHECK(to_string(PolicyId::B1_truncation) == "B1_truncation");
}
