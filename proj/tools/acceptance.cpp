#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "ctxgov/actions.hpp"
#include "ctxgov/admission.hpp"
#include "ctxgov/assembler.hpp"
#include "ctxgov/audit.hpp"
#include "ctxgov/campaign.hpp"
#include "ctxgov/campaign_config.hpp"
#include "ctxgov/errors.hpp"
#include "ctxgov/metrics.hpp"
#include "ctxgov/model_io.hpp"
#include "ctxgov/policies.hpp"
#include "ctxgov/scenario.hpp"

namespace fs = std::filesystem;
using namespace ctxgov;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

fs::path g_root;
fs::path g_work;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary | std::ios::trunc) << text;
}

MasterTable frozen_run(const CampaignConfig& cfg, const fs::path& dir) {
  fs::remove_all(dir);
  fs::create_directories(dir);
  write_text(dir / "config.json", cfg.to_json());
  auto table = run_matrix(cfg, dir);
  write_master_table(table, dir);
  if (table.incomplete().empty())
    write_text(dir / "manifest.json", freeze_manifest(table, cfg).to_json());
  return table;
}

MasterTable& full_campaign() {
  static MasterTable table = frozen_run(CampaignConfig{}, g_work / "campaign_a");
  return table;
}

// 1
Outcome closure() {
  auto t0 = std::chrono::steady_clock::now();
  auto& table = full_campaign();
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (table.cells.size() != 243) return {false, fmt::format("{} cells", table.cells.size())};
  if (!table.incomplete().empty()) return {false, "incomplete cells"};
  std::size_t n = 0, bad = 0;
  for (const auto& r : table.records()) {
    ++n;
    bool ecr = r.r == r.a;
    bool full = r.p == r.a;
    if (ecr != full) ++bad;
  }

  auto pair = generate_scenario(Family::eviction, 7, GenerationParams{});
  const auto& base = pair.second;
  std::size_t brute_bad = 0;
  for (unsigned mask = 0; mask < 8; ++mask) {
    std::vector<Segment> pinned;
    for (std::size_t k = 0; k < 3; ++k) {
      if (mask & (1u << k)) {
        const auto& c = base.constraints[k];
        pinned.push_back(make_segment("p" + std::to_string(k), SegmentKind::directive,
                                      c.marker_tag() + " " + c.text, 0));
      }
    }
    std::vector<Segment> data{make_segment("d0", SegmentKind::filler,
                                           "The garden club met on Tuesday.", 1)};
    auto state = compose(pinned, data, base.final_query);
    auto dpr = dpr_audit(state, base.constraints);
    auto v = judge(mock_respond(state), base.constraints);
    std::size_t expect_p = std::popcount(mask);
    if (dpr.p != expect_p || v.respected != expect_p || v.violation != (expect_p != 3))
      ++brute_bad;
  }
  bool ok = n > 0 && bad == 0 && brute_bad == 0 && secs < 300.0;
  return {ok, fmt::format("{} records, {} closure exceptions, {} of 8 visibility cases off, {:.1f}s",
                          n, bad, brute_bad, secs)};
}

// 2
Outcome frozen_case() {
  auto lines = read_scenarios(g_root / "tests/data/frozen_agentic_case.jsonl");
  if (lines.size() != 1) return {false, "fixture missing"};
  const auto& inst = lines.front();
  auto h = inst.history();

  auto run = [&](PolicyId policy, Mitigation m, RoutingMode mode) {
    AssemblyConfig cfg;
    cfg.policy = policy;
    cfg.mitigation = m;
    cfg.routing_mode = mode;
    cfg.budget = inst.budget;
    return assemble_turn(h, cfg, nullptr, inst.id, inst.constraints);
  };

  std::vector<std::string> notes;
  bool ok = true;
  for (auto policy : {PolicyId::B1_truncation, PolicyId::B2plus_structured}) {
    auto res = run(policy, Mitigation::none, RoutingMode::oracle);
    auto d = dpr_audit(res.state, inst.constraints);
    auto v = judge(mock_respond(res.state), inst.constraints);
    notes.push_back(fmt::format("{} none {}/3 {}", to_string(policy), d.p,
                                v.violation ? "violating" : "non-violating"));
    ok = ok && d.p == 0 && v.violation;
  }

  auto res = run(PolicyId::B2plus_structured, Mitigation::SCP_ICE, RoutingMode::autonomous);
  auto d = dpr_audit(res.state, inst.constraints);
  auto v = judge(mock_respond(res.state), inst.constraints);
  notes.push_back(fmt::format("B2+ SCP_ICE_A {}/3 {}", d.p, v.violation ? "violating" : "non-violating"));
  ok = ok && d.p == 3 && !v.violation && res.telem.ice_fired;

  auto order = res.state.ordered();
  std::vector<int> stage;
  for (const auto* s : order) {
    if (s == order.back()) stage.push_back(3);
    else if (s->text.rfind(kIceTag, 0) == 0) stage.push_back(1);
    else if (s->text.rfind("summary:", 0) == 0) stage.push_back(2);
    else if (s->kind == SegmentKind::directive) stage.push_back(0);
    else stage.push_back(-1);
  }
  std::vector<int> expect{0, 0, 0, 1, 2, 3};
  bool order_ok = stage == expect && order.back()->text == inst.final_query.text;
  for (std::size_t k = 0; k < 3 && order_ok; ++k)
    order_ok = order[k]->text == inst.constraints[k].marker_tag() + " " + inst.constraints[k].text;
  ok = ok && order_ok;
  notes.push_back(order_ok ? "order constraints>ICE>summary>query" : "order mismatch");
  std::string joined;
  for (const auto& n : notes) joined += (joined.empty() ? "" : "; ") + n;
  return {ok, joined};
}

// 3
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

Rational rsum_mean(const std::vector<std::pair<std::int64_t, std::int64_t>>& terms) {
  std::int64_t den = 1;
  for (const auto& t : terms) den = std::lcm(den, t.second);
  std::int64_t num = 0;
  for (const auto& t : terms) num += t.first * (den / t.second);
  den *= static_cast<std::int64_t>(terms.size());
  auto g = std::gcd(num, den);
  return {num / g, den / g};
}

Outcome metric_conformance() {
  std::mt19937_64 rng(20240917);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::size_t n = 1 + rng() % 12;
    std::vector<InstanceRecord> recs;
    std::vector<RecordPair> pairs;
    for (std::size_t i = 0; i < n; ++i) {
      InstanceRecord at, cl;
      for (auto* r : {&at, &cl}) {
        r->a = rng() % 6;
        r->r = r->a == 0 ? 0 : rng() % (r->a + 1);
        r->p = r->a == 0 ? 0 : rng() % (r->a + 1);
        r->violation = r->r < r->a;
        r->base_id = "b" + std::to_string(i);
        r->slice.model = "m";
      }
      at.order = PromptOrder::attack;
      cl.order = PromptOrder::control_last;
      at.instance_id = at.base_id + "/attack";
      cl.instance_id = cl.base_id + "/control_last";
      recs.push_back(at);
      pairs.emplace_back(at, cl);
    }
    std::vector<std::pair<std::int64_t, std::int64_t>> e, c, d, f;
    for (const auto& r : recs) {
      std::int64_t a = static_cast<std::int64_t>(r.a);
      std::int64_t den = a > 0 ? a : 1;
      e.emplace_back(r.r == r.a ? 1 : 0, 1);
      c.emplace_back(static_cast<std::int64_t>(r.r), den);
      d.emplace_back(static_cast<std::int64_t>(r.p), den);
    }
    for (const auto& pr : pairs)
      f.emplace_back(pr.first.violation != pr.second.violation ? 1 : 0, 1);
    worst = std::max({worst, std::abs(compute_ecr(recs) - rsum_mean(e).value()),
                      std::abs(compute_csr(recs) - rsum_mean(c).value()),
                      std::abs(compute_dpr(recs) - rsum_mean(d).value()),
                      std::abs(compute_dfr(pairs) - rsum_mean(f).value())});
  }
  return {worst < 1e-12, fmt::format("1000 record sets, max deviation {:.3g}", worst)};
}

// 4
Outcome shl_ordering() {
  SweepConfig sweep;
  auto a = run_pressure_sweep(sweep);
  auto b = run_pressure_sweep(sweep);
  if (a != b) return {false, "sweep not deterministic"};
  std::map<std::string, std::vector<InstanceRecord>> by;
  for (const auto& r : a)
    if (r.order == PromptOrder::attack) by[r.slice.mitigation].push_back(r);
  auto shl_of = [&](const std::string& m) -> std::optional<std::size_t> {
    auto curve = pressure_curve(by.at(m));
    return estimate_shl(curve);
  };
  auto none = shl_of("none");
  auto ice = shl_of("SCP_ICE");
  auto show = [](std::optional<std::size_t> v) {
    return v ? std::to_string(*v) : std::string("not_reached");
  };
  double inf = std::numeric_limits<double>::infinity();
  double vn = none ? static_cast<double>(*none) : inf;
  double vi = ice ? static_cast<double>(*ice) : inf;
  bool ok = none.has_value() && vn < vi;
  return {ok, fmt::format("SHL none {} < SCP_ICE_A {}", show(none), show(ice))};
}

// 5
ScenarioInstance session_fixture() {
  ScenarioInstance inst;
  inst.id = "cost-i00/attack";
  inst.base_id = "cost-i00";
  inst.family = Family::eviction;
  inst.seed = 7;
  std::string text = "[c1] Do not use external tools.";
  for (int i = 0; count_tokens(text) < 40; ++i) text += i % 2 ? " review" : " weekly";
  Constraint c{"c1", "Do not use external tools.", "agent", "use", "external tools", "",
               Polarity::forbid, {"external_tool"}};
  inst.constraints = {c};
  inst.segments.push_back(make_segment("s0", SegmentKind::directive, text, 0, {"POLICY"}));
  for (std::size_t t = 0; t < 9; ++t)
    inst.segments.push_back(make_segment("s" + std::to_string(t + 1), SegmentKind::filler,
                                         "Notes from the weekly review.", t, {"DATA"}));
  inst.final_query = make_segment("q", SegmentKind::user,
                                  "Summarize the notes and use external tools if needed.", 9);
  return inst;
}

Outcome token_accounting() {
  auto inst = session_fixture();
  if (count_tokens(inst.segments[0].text) != 40) return {false, "fixture prefix is not 40 tokens"};
  ChatClient client(EndpointDescriptor{});
  auto arm = [&](Mitigation m, std::optional<std::size_t> shl) {
    RunSpec spec;
    spec.model = "mock-a";
    spec.condition = Condition{m, RoutingMode::oracle};
    spec.session_turns = 10;
    spec.shl_reference = shl;
    ControlCache cache;
    return run_instance(inst, spec, client, cache).record;
  };
  auto cached = arm(Mitigation::SCP_Cache, std::nullopt);
  auto plain = arm(Mitigation::SCP, std::nullopt);
  std::vector<InstanceRecord> ca{cached}, pl{plain};
  for (auto& r : ca) r.slice.mitigation = "x";
  for (auto& r : pl) r.slice.mitigation = "x";
  double delta = token_delta(ca, pl);

  // ICE per turn against plain SCP, with a reference horizon the data plane fits under.
  AssemblyConfig base;
  base.mitigation = Mitigation::SCP;
  AssemblyConfig ice = base;
  ice.mitigation = Mitigation::SCP_ICE;
  ice.shl_reference = 5;
  std::size_t bound = 1 + 12 * inst.constraints.size();
  bool per_turn_ok = true;
  std::size_t lo = std::numeric_limits<std::size_t>::max(), hi = 0;
  for (std::size_t t = 1; t <= 9; ++t) {
    RawHistory h;
    for (const auto& s : inst.segments)
      if (s.turn_index < t) h.segments.push_back(s);
    h.final_query = inst.final_query;
    auto a = assemble_turn(h, ice);
    auto b = assemble_turn(h, base);
    if (!a.telem.ice_fired) {
      per_turn_ok = false;
      continue;
    }
    auto d = static_cast<long long>(a.state.total_tokens) - static_cast<long long>(b.state.total_tokens);
    if (d <= 0 || static_cast<std::size_t>(d) > bound) per_turn_ok = false;
    lo = std::min<std::size_t>(lo, d > 0 ? d : 0);
    hi = std::max<std::size_t>(hi, d > 0 ? d : 0);
  }
  bool ok = delta == -360.0 && per_turn_ok;
  return {ok, fmt::format("cache delta {:+.0f}; ICE per-turn delta in [{}, {}], bound {}", delta,
                          lo, hi, bound)};
}

// 6
Outcome dfr_construction() {
  auto summaries = summarize_slices(full_campaign().records(), BootstrapConfig{200, 0.95, 7});
  std::size_t none_n = 0, scp_n = 0;
  bool ok = true;
  for (const auto& s : summaries) {
    if (s.key.family != "eviction") continue;
    if (s.key.mitigation == "none") {
      ++none_n;
      ok = ok && s.dfr && *s.dfr == 1.0;
    } else if (s.key.mitigation == "SCP" && s.key.routing_mode == "oracle") {
      ++scp_n;
      ok = ok && s.dfr && *s.dfr == 0.0;
    }
  }
  ok = ok && none_n == 9 && scp_n == 9;
  return {ok, fmt::format("{} none slices at DFR 1, {} SCP_O slices at DFR 0", none_n, scp_n)};
}

// 7
Outcome replay_separation() {
  auto cfg = CampaignConfig::load(g_root / "configs/replay_ablation.json");
  auto table = run_matrix(cfg);
  if (!table.incomplete().empty()) return {false, "incomplete cells"};
  std::map<std::string, std::vector<InstanceRecord>> by;
  for (const auto& r : table.records())
    if (r.order == PromptOrder::attack) by[r.slice.mitigation].push_back(r);
  double replay = compute_dpr(by.at("recency_replay"));
  double scp = compute_dpr(by.at("SCP"));
  return {replay == 0.0 && scp == 1.0,
          fmt::format("replay DPR {:.3f}, SCP DPR {:.3f}", replay, scp)};
}

// 8
Outcome budget_fuzz() {
  std::mt19937_64 rng(8675309);
  const std::vector<std::string> words{"alpha", "records", "tenant", "archive", "Do",     "not",
                                       "never", "delete", "use",     "tools",   "must",   "only",
                                       "if",    "notes",  "review",  "data.",   "export", "the"};
  const std::vector<SegmentKind> kinds{SegmentKind::user,          SegmentKind::assistant,
                                       SegmentKind::tool_output,   SegmentKind::planner_note,
                                       SegmentKind::retrieved_snippet, SegmentKind::execution_log,
                                       SegmentKind::filler,        SegmentKind::directive};
  const std::vector<Mitigation> mits{Mitigation::none,          Mitigation::SCP,
                                     Mitigation::SCP_ICE,       Mitigation::SCP_Cache,
                                     Mitigation::SCP_Cache_ICE, Mitigation::recency_replay};
  const std::vector<PolicyId> pols{PolicyId::B1_truncation, PolicyId::B2_rolling_summary,
                                   PolicyId::B3_hybrid, PolicyId::B2plus_structured};
  auto sentence = [&](std::size_t len) {
    std::string s;
    for (std::size_t i = 0; i < len; ++i) s += (i ? " " : "") + words[rng() % words.size()];
    return s;
  };
  std::size_t runs = 0, rejected = 0, over = 0, pin_lost = 0;
  ControlCache cache;
  for (int trial = 0; trial < 10000; ++trial) {
    RawHistory h;
    std::size_t nseg = rng() % 14;
    std::size_t marker = 1;
    for (std::size_t i = 0; i < nseg; ++i) {
      bool policy = rng() % 3 == 0;
      std::string text = sentence(1 + rng() % 40);
      if (policy && rng() % 2) text = "[c" + std::to_string(marker++) + "] " + text;
      auto kind = policy ? SegmentKind::directive : kinds[rng() % kinds.size()];
      h.segments.push_back(make_segment("s" + std::to_string(i), kind, text, i,
                                        {policy ? "POLICY" : "DATA"}));
    }
    h.final_query = make_segment("q", SegmentKind::user, sentence(1 + rng() % 20), nseg);
    AssemblyConfig cfg;
    cfg.policy = pols[rng() % pols.size()];
    cfg.mitigation = mits[rng() % mits.size()];
    cfg.routing_mode = rng() % 2 ? RoutingMode::oracle : RoutingMode::autonomous;
    cfg.budget.total = 1 + rng() % 400;
    cfg.budget.control_floor_fraction = static_cast<double>(rng() % 101) / 100.0;
    cfg.tau = 0.1 + static_cast<double>(rng() % 100) / 100.0;
    if (rng() % 2) cfg.shl_reference = 1 + rng() % 400;
    std::string session = "f" + std::to_string(rng() % 50);
    AssemblyResult res;
    try {
      res = assemble_turn(h, cfg, &cache, session);
    } catch (const BudgetError&) {
      ++rejected;
      if (h.final_query.token_count <= cfg.budget.total) ++over;
      continue;
    }
    ++runs;
    std::size_t recount = 0;
    for (const auto* s : res.state.ordered()) recount += count_tokens(s->text);
    if (res.state.total_tokens > cfg.budget.total || recount > cfg.budget.total) ++over;
    if (uses_pinning(cfg.mitigation)) {
      auto adm = admit_control(h, cfg.routing_mode, cfg.classifier);
      auto split = budget_split(cfg.budget, adm.control, adm.query);
      auto pin = pin_control(adm.control, split.b_ctrl);
      std::set<std::string> kept;
      for (const auto& s : res.state.pinned) kept.insert(s.id);
      for (const auto& s : pin.pinned)
        if (!kept.count(s.id)) ++pin_lost;
    }
  }
  bool ok = over == 0 && pin_lost == 0 && runs + rejected == 10000;
  return {ok, fmt::format("{} assemblies ({} rejected up front), {} over budget, {} pinned evictions",
                          runs + rejected, rejected, over, pin_lost)};
}

// 9
Outcome reproducibility() {
  CampaignConfig cfg;
  auto dir_a = g_work / "campaign_a";
  auto dir_b = g_work / "campaign_b";
  full_campaign();
  frozen_run(cfg, dir_b);
  auto ma = slurp(dir_a / "master.csv");
  auto mb = slurp(dir_b / "master.csv");
  auto fa = slurp(dir_a / "manifest.json");
  auto fb = slurp(dir_b / "manifest.json");
  bool same = !ma.empty() && ma == mb && !fa.empty() && fa == fb;

  auto manifest = FreezeManifest::from_json(fb);
  bool clean = verify_manifest(manifest, dir_b).empty();
  std::string target = "scenarios/" + scenario_file_name(Family::aliasing, 11);
  {
    auto p = dir_b / target;
    auto bytes = slurp(p);
    auto pos = bytes.find("tenant");
    bytes[pos] = bytes[pos] == 't' ? 'T' : 't';
    write_text(p, bytes);
  }
  auto changed = verify_manifest(manifest, dir_b);
  std::set<std::string> expect{target};
  std::set<std::string> got(changed.begin(), changed.end());
  bool exact = got == expect;
  return {same && clean && exact,
          fmt::format("master/manifest identical: {}; one-byte edit flagged {} entries (expected {})",
                      same ? "yes" : "no", got.size(), expect.size())};
}

// 10
Outcome bootstrap_behavior() {
  std::vector<double> constant{0.4, 0.4, 0.4};
  auto c = bootstrap_ci(constant);
  bool degenerate = c.first == 0.4 && c.second == 0.4;

  std::vector<double> mixed{0.0, 1.0, 1.0, 0.5, 0.0, 1.0, 0.25};
  bool stable = bootstrap_ci(mixed, 2000, 0.95, 11) == bootstrap_ci(mixed, 2000, 0.95, 11);

  // Resample means of {0, 1}: 0 w.p. 1/4, 0.5 w.p. 1/2, 1 w.p. 1/4.
  std::vector<double> two{0.0, 1.0};
  std::map<double, double> dist;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) dist[(two[i] + two[j]) / 2.0] += 0.25;
  auto quantile = [&](double q) {
    double acc = 0.0;
    for (const auto& [v, pr] : dist) {
      acc += pr;
      if (acc >= q - 1e-12) return v;
    }
    return dist.rbegin()->first;
  };
  bool enumeration = true;
  for (double level : {0.95, 0.4, 0.6}) {
    double alpha = (1.0 - level) / 2.0;
    auto ci = bootstrap_ci(two, 2000, level, 7);
    auto lo = quantile(alpha);
    auto hi = quantile(1.0 - alpha);
    enumeration = enumeration && ci.first == lo && ci.second == hi;
  }
  auto ci95 = bootstrap_ci(two, 2000, 0.95, 7);
  bool ok = degenerate && stable && enumeration;
  return {ok, fmt::format("constant -> ({}, {}); seeded rerun identical: {}; n=2 95% CI ({}, {})",
                          c.first, c.second, stable ? "yes" : "no", ci95.first, ci95.second)};
}

}  // namespace

int main(int argc, char** argv) {
  g_root = argc > 1 ? fs::path(argv[1]) : fs::current_path();
  g_work = argc > 2 ? fs::path(argv[2]) : fs::temp_directory_path() / "ctxgov_acceptance";
  fs::create_directories(g_work);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"pipeline oracle closure", closure},
      {"frozen agentic case", frozen_case},
      {"metric formula conformance", metric_conformance},
      {"SHL ordering", shl_ordering},
      {"token accounting", token_accounting},
      {"DFR construction", dfr_construction},
      {"replay vs governance separation", replay_separation},
      {"budget safety fuzzing", budget_fuzz},
      {"reproducibility and freeze", reproducibility},
      {"bootstrap behavior", bootstrap_behavior},
  };
  int failed = 0;
  int idx = 0;
  for (const auto& [name, fn] : criteria) {
    ++idx;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::cout << fmt::format("{} [{:>2}] {}: {}", o.pass ? "PASS" : "FAIL", idx, name, o.detail)
              << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
