#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ctxgov/assembler.hpp"
#include "ctxgov/errors.hpp"
#include "ctxgov/model_io.hpp"
#include "ctxgov/scenario.hpp"

using namespace ctxgov;

namespace {

const ScenarioInstance& eviction_attack() {
  static const ScenarioInstance inst = generate_scenario(Family::eviction, 7, {}).first;
  return inst;
}

AssemblyResult assemble(const ScenarioInstance& inst, Mitigation m, RoutingMode mode,
                        PolicyId p = PolicyId::B1_truncation) {
  AssemblyConfig cfg;
  cfg.mitigation = m;
  cfg.routing_mode = mode;
  cfg.policy = p;
  cfg.budget = inst.budget;
  return assemble_turn(inst.history(), cfg, nullptr, inst.id, inst.constraints);
}

}  // namespace

TEST_CASE("compose") {
  auto q = make_segment("q", SegmentKind::user, "Go on.", 3);
  auto alone = compose({}, {}, q);
  REQUIRE(alone.ordered().size() == 1);
  CHECK(alone.total_tokens == 2);

  auto a = make_segment("a", SegmentKind::directive, "[c1] First.", 0);
  auto b = make_segment("b", SegmentKind::directive, "[c2] Second.", 1);
  auto d = make_segment("d", SegmentKind::filler, "Data here.", 2);
  auto st = compose({a, b}, {d}, q);
  auto order = st.ordered();
  REQUIRE(order.size() == 4);
  CHECK(order[0]->id == "a");
  CHECK(order[1]->id == "b");
  CHECK(order[2]->id == "d");
  CHECK(order[3]->id == "q");
  CHECK(st.total_tokens == 8);
  CHECK_THROWS_AS(compose({a, b}, {d}, q, 7), InvariantError);
}

TEST_CASE("unmitigated eviction loses every constraint") {
  const auto& inst = eviction_attack();
  auto r = assemble(inst, Mitigation::none, RoutingMode::oracle);
  CHECK(dpr_audit(r.state, inst.constraints).p == 0);
  CHECK(judge(mock_respond(r.state), inst.constraints).violation);
  CHECK(r.state.total_tokens <= inst.budget.total);
  CHECK(r.telem.b_ctrl == 0);
  CHECK_FALSE(r.telem.ice_fired);
}

TEST_CASE("SCP with ICE keeps constraints first, reminder after") {
  const auto& inst = eviction_attack();
  auto r = assemble(inst, Mitigation::SCP_ICE, RoutingMode::autonomous);
  CHECK(r.telem.ice_fired);
  auto order = r.state.ordered();
  REQUIRE(order.size() > 4);
  for (std::size_t k = 0; k < 3; ++k) CHECK(order[k]->text.rfind("[c" + std::to_string(k + 1) + "]", 0) == 0);
  CHECK(order[3]->text.rfind(std::string(kIceTag), 0) == 0);
  CHECK(dpr_audit(r.state, inst.constraints).p == 3);
  CHECK_FALSE(judge(mock_respond(r.state), inst.constraints).violation);
  CHECK(r.abs.score == 1.0);
  CHECK(r.telem.b_ctrl + r.telem.b_data <= inst.budget.total);
  CHECK(static_cast<double>(r.telem.pressure_estimate) >=
        r.telem.tau * static_cast<double>(r.telem.shl_reference.value_or(inst.budget.total)));
  CHECK(r.telem.stage_timings.count("admit") == 1);
}

TEST_CASE("below the trigger SCP_ICE equals SCP") {
  GenerationParams gp;
  gp.overflow = false;
  gp.filler_tokens = 40;
  gp.check_identifiable = false;
  auto inst = generate_scenario(Family::eviction, 11, gp).first;
  auto ice = assemble(inst, Mitigation::SCP_ICE, RoutingMode::oracle);
  auto plain = assemble(inst, Mitigation::SCP, RoutingMode::oracle);
  CHECK_FALSE(ice.telem.ice_fired);
  CHECK(ice.state == plain.state);
}

TEST_CASE("cache mitigations reuse the prefix across turns") {
  const auto& inst = eviction_attack();
  AssemblyConfig cfg;
  cfg.mitigation = Mitigation::SCP_Cache;
  ControlCache cache;
  auto first = assemble_turn(inst.history(), cfg, &cache, "s");
  auto second = assemble_turn(inst.history(), cfg, &cache, "s");
  CHECK(first.telem.tokens_reused == 0);
  CHECK(second.telem.tokens_reused == total_tokens(second.state.pinned));
  CHECK(second.telem.tokens_serialized + second.telem.tokens_reused == second.state.total_tokens);
  CHECK(first.state == second.state);
}

TEST_CASE("deterministic") {
  const auto& inst = eviction_attack();
  for (auto m : {Mitigation::none, Mitigation::SCP, Mitigation::SCP_ICE, Mitigation::recency_replay}) {
    auto a = assemble(inst, m, RoutingMode::autonomous, PolicyId::B3_hybrid);
    auto b = assemble(inst, m, RoutingMode::autonomous, PolicyId::B3_hybrid);
    CHECK(a.state == b.state);
  }
}

TEST_CASE("mitigation names") {
  CHECK(mitigation_from_string("SCP+Cache+ICE") == Mitigation::SCP_Cache_ICE);
  CHECK(mitigation_from_string("SCP_ICE") == Mitigation::SCP_ICE);
  CHECK(mitigation_from_string("replay") == Mitigation::recency_replay);
  CHECK_THROWS_AS(mitigation_from_string("magic"), ConfigError);
  CHECK(uses_ice(Mitigation::SCP_Cache_ICE));
  CHECK_FALSE(uses_pinning(Mitigation::recency_replay));
}
