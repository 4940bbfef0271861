#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "closed_port.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ctxgov/campaign.hpp"
#include "ctxgov/errors.hpp"
#include "ctxgov/report.hpp"

using namespace ctxgov;
namespace fs = std::filesystem;

namespace {

CampaignConfig small() {
  CampaignConfig cfg;
  cfg.models = {"mock-a"};
  cfg.families = {Family::eviction};
  cfg.seeds = {7};
  cfg.conditions = {Condition{}, Condition{Mitigation::SCP, RoutingMode::oracle}};
  cfg.instances = 4;
  cfg.session_turns = 3;
  return cfg;
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / "ctxgov_campaign_test" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config") {
  CampaignConfig cfg;
  CHECK(cfg.cell_count() == 243);
  CHECK(default_conditions().size() == 9);
  CHECK(condition_from_string("SCP_Cache_ICE_A") ==
        Condition{Mitigation::SCP_Cache_ICE, RoutingMode::autonomous});
  CHECK(Condition{Mitigation::SCP_ICE, RoutingMode::oracle}.name() == "SCP_ICE_O");
  CHECK_THROWS_AS(condition_from_string("SCP_X"), ConfigError);

  auto round = CampaignConfig::from_json(cfg.to_json());
  CHECK(round.to_json() == cfg.to_json());
  CHECK(round.hash() == cfg.hash());

  auto changed = cfg;
  changed.seeds = {7, 11, 23};
  CHECK(changed.hash() != cfg.hash());

  CHECK_THROWS_AS(CampaignConfig::from_json(R"({"modles": ["x"]})"), ConfigError);
  CHECK_THROWS_AS(CampaignConfig::from_json(R"({"instances": 3})"), ConfigError);
  CHECK_THROWS_AS(CampaignConfig::from_json(R"({"conditions": ["bogus"]})"), ConfigError);
  auto partial = CampaignConfig::from_json(R"({"models": ["x"], "seeds": [5]})");
  CHECK(partial.cell_count() == 27);
}

TEST_CASE("restricted grid") {
  auto table = run_matrix(small());
  REQUIRE(table.cells.size() == 2);
  for (const auto& c : table.cells) {
    CHECK(c.status == CellStatus::complete);
    CHECK(c.records.size() == 4);
  }
  CHECK(table.incomplete().empty());
  CHECK_NOTHROW(require_complete(table, targeted_cells(small())));
}

TEST_CASE("session token accounting") {
  auto cfg = small();
  auto insts = generate_instances(cfg, Family::eviction, 7);
  REQUIRE(insts.size() == 4);
  ChatClient client(cfg.endpoint);
  auto run = [&](Mitigation m) {
    auto spec = RunSpec::from_config(cfg, "mock-a", Condition{m, RoutingMode::oracle});
    ControlCache cache;
    return run_instance(insts[0], spec, client, cache);
  };
  auto plain = run(Mitigation::SCP);
  auto cached = run(Mitigation::SCP_Cache);
  std::size_t prefix = total_tokens(plain.final.state.pinned);
  CHECK(plain.record.tokens_in - cached.record.tokens_in == (cfg.session_turns - 1) * prefix);
  CHECK(plain.record.p == 3);
  CHECK_FALSE(plain.verdict.violation);
  CHECK(plain.record.pressure_bin % kPressureBinWidth == 0);
}

TEST_CASE("dedup") {
  auto table = run_matrix(small());
  auto cells = table.cells;
  CHECK(dedup_cells(cells).cells == cells);

  auto dup = cells;
  dup.push_back(cells[0]);
  auto once = dedup_cells(dup);
  CHECK(once.cells.size() == 2);
  CHECK(once.log.size() == 1);
  CHECK(dedup_cells(once.cells).cells == once.cells);

  auto stale = cells;
  CellRecord failed = cells[1];
  failed.status = CellStatus::incomplete;
  failed.records.clear();
  stale.insert(stale.begin(), failed);
  auto kept = dedup_cells(stale);
  CHECK(kept.cells.size() == 2);
  CHECK(kept.incomplete().empty());

  auto conflict = cells;
  conflict.push_back(cells[0]);
  conflict.back().content_hash = "deadbeef";
  CHECK_THROWS_AS(dedup_cells(conflict), IntegrityError);
}

TEST_CASE("master table round trip and freeze") {
  auto cfg = small();
  auto dir = scratch("freeze");
  auto table = run_matrix(cfg, dir);
  write_master_table(table, dir);
  std::ofstream(dir / "config.json") << cfg.to_json();
  auto back = read_master_table(dir);
  CHECK(back.cells == table.cells);
  CHECK(master_csv(back) == master_csv(table));
  CHECK(back.scenario_hashes == table.scenario_hashes);

  auto m1 = freeze_manifest(table, cfg);
  auto m2 = freeze_manifest(run_matrix(cfg), cfg);
  CHECK(m1 == m2);
  CHECK(FreezeManifest::from_json(m1.to_json()) == m1);
  CHECK(m1.tool_version == kToolVersion);
  CHECK(verify_manifest(m1, dir).empty());

  auto other = cfg;
  other.seeds = {11};
  CHECK(freeze_manifest(run_matrix(other), other).config_hash != m1.config_hash);

  auto scen = dir / "scenarios" / scenario_file_name(Family::eviction, 7);
  auto bytes = slurp(scen);
  bytes[bytes.size() / 2] ^= 0x01;
  std::ofstream(scen, std::ios::binary | std::ios::trunc) << bytes;
  auto bad = verify_manifest(m1, dir);
  REQUIRE(bad.size() == 1);
  CHECK(bad[0] == "scenarios/" + scenario_file_name(Family::eviction, 7));
}

TEST_CASE("unreachable model leaves its cells incomplete") {
  auto cfg = small();
  cfg.models = {"mock-a", "remote-x"};
  cfg.model_urls["remote-x"] = "http://127.0.0.1:" + std::to_string(closed_port());
  cfg.endpoint.backoff = std::chrono::milliseconds(1);
  cfg.endpoint.timeout = std::chrono::milliseconds(300);
  auto table = run_matrix(cfg);
  CHECK(table.cells.size() == 4);
  auto missing = table.incomplete();
  REQUIRE(missing.size() == 2);
  for (const auto& k : missing) CHECK(k.model == "remote-x");
  for (const auto& c : table.cells) {
    if (c.key.model == "remote-x") {
      CHECK(c.records.empty());
      CHECK(c.error.find("3") != std::string::npos);
    }
  }
  try {
    require_complete(table, targeted_cells(cfg));
    FAIL("expected IncompleteMatrixError");
  } catch (const IncompleteMatrixError& e) {
    CHECK(std::string(e.what()).find("remote-x|eviction|7|none") != std::string::npos);
  }
  CHECK_THROWS_AS(freeze_manifest(table, cfg), IncompleteMatrixError);
  CHECK_THROWS_AS(emit_report(table, scratch("blocked")), IncompleteMatrixError);
}

TEST_CASE("missing targeted cells block analysis") {
  auto table = run_matrix(small());
  auto wider = small();
  wider.seeds = {7, 11};
  CHECK_THROWS_AS(require_complete(table, targeted_cells(wider)), IncompleteMatrixError);
}

TEST_CASE("report") {
  auto cfg = small();
  cfg.families = {Family::eviction, Family::agentic};
  cfg.conditions = {Condition{}, Condition{Mitigation::SCP, RoutingMode::oracle},
                    Condition{Mitigation::SCP_Cache_ICE, RoutingMode::autonomous}};
  auto table = run_matrix(cfg);
  auto summaries = summarize_slices(table.records(), BootstrapConfig{100, 0.95, 7});
  auto deltas = delta_table(summaries);
  REQUIRE_FALSE(deltas.empty());
  for (const auto& d : deltas) {
    if (d.key.mitigation == "none") {
      CHECK(d.d_ecr == 0.0);
      CHECK(d.d_dpr == 0.0);
      CHECK(d.d_tokens == 0.0);
    }
    if (d.key.family == "eviction" && d.key.mitigation == "SCP") CHECK(d.d_dpr > 0.0);
  }
  auto cost = cost_table(deltas);
  bool cache_row = false;
  for (const auto& c : cost) {
    if (c.mitigation == "SCP_Cache_ICE") {
      cache_row = true;
      CHECK(c.mean_d_tokens < 0.0);
    }
  }
  CHECK(cache_row);
  auto curves = pressure_curves(table.records());
  CHECK_FALSE(curves.empty());

  auto dir = scratch("report");
  auto files = emit_report(table, dir);
  CHECK(files.size() == 5);
  for (const auto& f : files) CHECK(fs::file_size(f) > 0);
  CHECK(slurp(dir / "shl.csv").rfind("model,condition,shl", 0) == 0);
}
