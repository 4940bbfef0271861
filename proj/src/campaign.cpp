#include "ctxgov/campaign.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <json.hpp>

#include "ctxgov/digest.hpp"
#include "ctxgov/errors.hpp"

namespace ctxgov {

namespace {

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string scenarios_jsonl(const std::vector<ScenarioInstance>& instances) {
  std::string out;
  for (const auto& inst : instances) out += to_jsonl(inst) + '\n';
  return out;
}

std::string scenario_key(Family family, std::uint64_t seed) {
  return "scenarios/" + scenario_file_name(family, seed);
}

}  // namespace

std::string CellKey::str() const {
  return fmt::format("{}|{}|{}|{}", model, family, seed, condition);
}

std::string_view to_string(CellStatus s) {
  return s == CellStatus::complete ? "complete" : "incomplete";
}

CellStatus cell_status_from_string(std::string_view s) {
  if (s == "complete") return CellStatus::complete;
  if (s == "incomplete") return CellStatus::incomplete;
  throw ConfigError("unknown cell status '" + std::string(s) + "'");
}

std::vector<InstanceRecord> MasterTable::records() const {
  std::vector<InstanceRecord> out;
  for (const auto& c : cells) out.insert(out.end(), c.records.begin(), c.records.end());
  return out;
}

std::vector<CellKey> MasterTable::incomplete() const {
  std::vector<CellKey> out;
  for (const auto& c : cells) {
    if (c.status != CellStatus::complete) out.push_back(c.key);
  }
  return out;
}

RunSpec RunSpec::from_config(const CampaignConfig& cfg, const std::string& model,
                             const Condition& condition) {
  RunSpec s;
  s.model = model;
  s.condition = condition;
  s.policy = cfg.policy;
  s.budget = cfg.budget;
  s.tau = cfg.tau;
  s.shl_reference = cfg.shl_reference;
  s.session_turns = cfg.session_turns;
  s.classifier = cfg.classifier();
  s.quotas = cfg.quotas;
  s.ice_cap = cfg.ice_cap;
  s.sampling.temperature = cfg.temperature;
  s.sampling.max_tokens = cfg.budget.generation_cap;
  return s;
}

AssemblyConfig RunSpec::assembly() const {
  AssemblyConfig a;
  a.policy = policy;
  a.mitigation = condition.mitigation;
  a.routing_mode = condition.mode;
  a.budget = budget;
  a.tau = tau;
  a.shl_reference = shl_reference;
  a.classifier = classifier;
  a.policy_params.quotas = quotas;
  a.ice.per_constraint_cap = ice_cap;
  return a;
}

SliceKey RunSpec::slice(const ScenarioInstance& inst) const {
  SliceKey k;
  k.model = model;
  k.family = std::string(to_string(inst.family));
  k.policy = std::string(to_string(policy));
  k.mitigation = std::string(to_string(condition.mitigation));
  k.routing_mode =
      condition.mitigation == Mitigation::none ? "na" : std::string(to_string(condition.mode));
  k.seed = inst.seed;
  return k;
}

InstanceRun run_instance(const ScenarioInstance& inst, const RunSpec& spec, ChatClient& client,
                         ControlCache& cache) {
  const auto acfg = spec.assembly();
  const std::size_t turns = std::max<std::size_t>(1, spec.session_turns);
  const std::size_t horizon = inst.final_query.turn_index;

  InstanceRun run;
  std::size_t tokens_in = 0;
  for (std::size_t j = 1; j <= turns; ++j) {
    const std::size_t cutoff = (j * horizon + turns - 1) / turns;
    RawHistory h;
    h.final_query = inst.final_query;
    for (const auto& s : inst.segments) {
      if (s.turn_index < cutoff || j == turns) h.segments.push_back(s);
    }
    run.final = assemble_turn(h, acfg, &cache, inst.id, inst.constraints);
    tokens_in += run.final.telem.tokens_serialized;
  }

  run.output = client.call(run.final.state, spec.sampling);
  run.verdict = judge(run.output, inst.constraints);
  const auto dpr = dpr_audit(run.final.state, inst.constraints);

  auto& r = run.record;
  r.instance_id = inst.id;
  r.slice = spec.slice(inst);
  r.a = inst.constraints.size();
  r.r = run.verdict.respected;
  r.p = dpr.p;
  r.violation = run.verdict.violation;
  r.unparseable = run.verdict.unparseable;
  r.order = inst.order;
  r.base_id = inst.base_id;
  r.tokens_in = tokens_in;
  r.tokens_out = run.output.tokens_out;
  r.pressure_bin = pressure_bin(total_tokens(inst.segments) + inst.final_query.token_count);
  r.abs_score = run.final.abs.score;
  for (const auto& c : inst.constraints) r.equivalence.push_back(equivalence_audit(run.final.state, c));
  return run;
}

std::string scenario_file_name(Family family, std::uint64_t seed) {
  return fmt::format("{}-s{}.jsonl", to_string(family), seed);
}

std::vector<ScenarioInstance> generate_instances(const CampaignConfig& cfg, Family family,
                                                 std::uint64_t seed) {
  GenerationParams params;
  params.budget = cfg.budget;
  params.constraints = cfg.constraints;
  params.overflow = cfg.overflow;
  std::vector<ScenarioInstance> out;
  for (std::size_t i = 0; i < cfg.instances / 2; ++i) {
    params.instance = i;
    auto [attack, last] = generate_scenario(family, seed, params);
    out.push_back(std::move(attack));
    out.push_back(std::move(last));
  }
  return out;
}

std::string cell_content_hash(const CellRecord& cell, const std::string& config_hash,
                              const std::string& scenario_hash) {
  MasterTable one;
  one.cells.push_back(cell);
  return sha256_hex(config_hash + '\n' + scenario_hash + '\n' + cell.key.str() + '\n' +
                    master_csv(one));
}

std::vector<CellKey> targeted_cells(const CampaignConfig& cfg) {
  std::vector<CellKey> out;
  for (const auto& m : cfg.models) {
    for (auto f : cfg.families) {
      for (auto seed : cfg.seeds) {
        for (const auto& c : cfg.conditions) {
          out.push_back({m, std::string(to_string(f)), seed, c.name()});
        }
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

MasterTable run_matrix(const CampaignConfig& cfg, const std::filesystem::path& out_dir) {
  cfg.validate();
  const auto config_hash = cfg.hash();

  std::map<std::pair<Family, std::uint64_t>, std::vector<ScenarioInstance>> scenarios;
  std::map<std::string, std::string> scenario_hashes;
  for (auto f : cfg.families) {
    for (auto seed : cfg.seeds) {
      const auto key = scenario_key(f, seed);
      std::vector<ScenarioInstance> insts;
      if (!out_dir.empty() && std::filesystem::exists(out_dir / key)) {
        insts = read_scenarios(out_dir / key);
        scenario_hashes[key] = sha256_file_hex(out_dir / key);
      } else {
        insts = generate_instances(cfg, f, seed);
        const auto body = scenarios_jsonl(insts);
        scenario_hashes[key] = sha256_hex(body);
        if (!out_dir.empty()) {
          std::filesystem::create_directories((out_dir / key).parent_path());
          std::ofstream(out_dir / key, std::ios::binary) << body;
        }
      }
      for (auto& inst : insts) inst.budget = cfg.budget;
      scenarios[{f, seed}] = std::move(insts);
    }
  }

  std::map<std::string, std::unique_ptr<ChatClient>> clients;
  for (const auto& m : cfg.models) clients[m] = std::make_unique<ChatClient>(cfg.endpoint_for(m));

  struct Task {
    CellKey key;
    Family family;
    Condition condition;
  };
  std::vector<Task> tasks;
  for (const auto& m : cfg.models) {
    for (auto f : cfg.families) {
      for (auto seed : cfg.seeds) {
        for (const auto& c : cfg.conditions) {
          tasks.push_back({{m, std::string(to_string(f)), seed, c.name()}, f, c});
        }
      }
    }
  }

  std::vector<CellRecord> cells(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      const auto& t = tasks[i];
      CellRecord cell;
      cell.key = t.key;
      try {
        const auto spec = RunSpec::from_config(cfg, t.key.model, t.condition);
        ControlCache cache;
        for (const auto& inst : scenarios.at({t.family, t.key.seed})) {
          cell.records.push_back(run_instance(inst, spec, *clients.at(t.key.model), cache).record);
        }
        cell.status = CellStatus::complete;
        cell.content_hash =
            cell_content_hash(cell, config_hash, scenario_hashes.at(scenario_key(t.family, t.key.seed)));
      } catch (const TransportError& e) {
        cell.records.clear();
        cell.status = CellStatus::incomplete;
        cell.error = e.what();
      } catch (const ProtocolError& e) {
        cell.records.clear();
        cell.status = CellStatus::incomplete;
        cell.error = e.what();
      } catch (const AuthError& e) {
        cell.records.clear();
        cell.status = CellStatus::incomplete;
        cell.error = e.what();
      }
      cells[i] = std::move(cell);
    }
  };
  const std::size_t n_threads = std::min(cfg.workers, std::max<std::size_t>(1, tasks.size()));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < n_threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  auto table = dedup_cells(cells);
  table.scenario_hashes = std::move(scenario_hashes);
  return table;
}

MasterTable dedup_cells(const std::vector<CellRecord>& cells) {
  MasterTable out;
  std::map<CellKey, CellRecord> kept;
  for (const auto& c : cells) {
    auto it = kept.find(c.key);
    if (it == kept.end()) {
      kept.emplace(c.key, c);
      continue;
    }
    auto& prev = it->second;
    const bool prev_done = prev.status == CellStatus::complete;
    const bool cur_done = c.status == CellStatus::complete;
    if (prev_done && cur_done && prev.content_hash != c.content_hash) {
      throw IntegrityError("cell " + c.key.str() + " has conflicting complete records (" +
                           prev.content_hash + " vs " + c.content_hash + ")");
    }
    if (cur_done || !prev_done) {
      out.log.push_back("duplicate " + c.key.str() + ": kept the later " +
                        std::string(to_string(c.status)) + " record");
      prev = c;
    } else {
      out.log.push_back("duplicate " + c.key.str() + ": dropped a later incomplete record");
    }
  }
  for (auto& [_, c] : kept) out.cells.push_back(std::move(c));
  return out;
}

void require_complete(const MasterTable& table, const std::vector<CellKey>& targeted) {
  std::map<CellKey, const CellRecord*> index;
  for (const auto& c : table.cells) index[c.key] = &c;
  std::vector<std::string> problems;
  for (const auto& k : targeted) {
    auto it = index.find(k);
    if (it == index.end()) {
      problems.push_back(k.str() + " (missing)");
    } else if (it->second->status != CellStatus::complete) {
      problems.push_back(k.str() + " (incomplete: " + it->second->error + ")");
    }
  }
  for (const auto& c : table.cells) {
    if (c.status != CellStatus::complete &&
        std::find(targeted.begin(), targeted.end(), c.key) == targeted.end()) {
      problems.push_back(c.key.str() + " (incomplete: " + c.error + ")");
    }
  }
  if (problems.empty()) return;
  std::string msg = fmt::format("{} targeted cell(s) not complete:", problems.size());
  for (const auto& p : problems) msg += "\n  " + p;
  throw IncompleteMatrixError(msg);
}

std::string FreezeManifest::to_json() const {
  nlohmann::json j;
  j["config_hash"] = config_hash;
  j["scenario_file_hashes"] = scenario_file_hashes;
  j["cell_hashes"] = cell_hashes;
  j["tool_version"] = tool_version;
  return j.dump(2) + "\n";
}

FreezeManifest FreezeManifest::from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    FreezeManifest m;
    m.config_hash = j.at("config_hash").get<std::string>();
    m.scenario_file_hashes =
        j.at("scenario_file_hashes").get<std::map<std::string, std::string>>();
    m.cell_hashes = j.at("cell_hashes").get<std::map<std::string, std::string>>();
    m.tool_version = j.at("tool_version").get<std::string>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError(std::string("unreadable freeze manifest: ") + e.what());
  }
}

FreezeManifest freeze_manifest(const MasterTable& table, const CampaignConfig& cfg) {
  require_complete(table, targeted_cells(cfg));
  FreezeManifest m;
  m.config_hash = cfg.hash();
  m.scenario_file_hashes = table.scenario_hashes;
  for (const auto& c : table.cells) m.cell_hashes[c.key.str()] = c.content_hash;
  m.tool_version = std::string(kToolVersion);
  return m;
}

std::vector<std::string> verify_manifest(const FreezeManifest& manifest,
                                         const std::filesystem::path& dir) {
  std::vector<std::string> bad;
  for (const auto& [path, digest] : manifest.scenario_file_hashes) {
    if (!std::filesystem::exists(dir / path)) {
      bad.push_back(path + " (missing)");
    } else if (sha256_file_hex(dir / path) != digest) {
      bad.push_back(path);
    }
  }
  if (std::filesystem::exists(dir / "config.json") &&
      sha256_hex(read_file(dir / "config.json")) != manifest.config_hash) {
    bad.push_back("config.json");
  }
  if (std::filesystem::exists(dir / "master.csv")) {
    const auto table = read_master_table(dir);
    std::set<std::string> seen;
    for (const auto& c : table.cells) {
      const auto key = c.key.str();
      seen.insert(key);
      auto it = manifest.cell_hashes.find(key);
      const auto skey = scenario_key(family_from_string(c.key.family), c.key.seed);
      const auto sit = manifest.scenario_file_hashes.find(skey);
      const auto digest = cell_content_hash(
          c, manifest.config_hash, sit == manifest.scenario_file_hashes.end() ? "" : sit->second);
      if (it == manifest.cell_hashes.end() || it->second != digest) bad.push_back("cell " + key);
    }
    for (const auto& [key, _] : manifest.cell_hashes) {
      if (!seen.count(key)) bad.push_back("cell " + key + " (missing)");
    }
  }
  return bad;
}

std::vector<InstanceRecord> run_pressure_sweep(const SweepConfig& sweep) {
  std::vector<std::size_t> levels = sweep.filler_levels;
  if (levels.empty()) {
    for (std::size_t l = 0; l <= 400; l += 20) levels.push_back(l);
  }
  EndpointDescriptor ep;
  ep.url = sweep.endpoint;
  ChatClient client(ep);

  std::vector<InstanceRecord> out;
  for (auto seed : sweep.seeds) {
    for (std::size_t k = 0; k < levels.size(); ++k) {
      GenerationParams params;
      params.budget = sweep.budget;
      params.overflow = false;
      params.filler_tokens = levels[k];
      params.instance = k;
      params.check_identifiable = false;
      const auto [attack, last] = generate_scenario(sweep.family, seed, params);
      for (const auto& cond : sweep.conditions) {
        RunSpec spec;
        spec.model = "sweep";
        spec.condition = cond;
        spec.policy = sweep.policy;
        spec.budget = sweep.budget;
        spec.session_turns = sweep.session_turns;
        ControlCache cache;
        out.push_back(run_instance(attack, spec, client, cache).record);
        out.push_back(run_instance(last, spec, client, cache).record);
      }
    }
  }
  return out;
}

}  // namespace ctxgov
