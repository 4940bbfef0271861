#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "ctxgov/campaign.hpp"
#include "ctxgov/errors.hpp"
#include "ctxgov/report.hpp"

namespace fs = std::filesystem;
using namespace ctxgov;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitIncomplete = 3;
constexpr int kExitIntegrity = 4;

struct Overrides {
  std::string config;
  std::string out_dir = "campaign";
  std::optional<std::size_t> budget;
  std::optional<std::string> policy;
  std::vector<std::string> mitigations;
  std::vector<std::string> modes;
  std::vector<std::uint64_t> seeds;
  std::optional<double> tau;
  std::optional<std::size_t> shl_ref;
  std::optional<std::string> endpoint;
  std::optional<std::string> mock_profile;
  std::vector<std::string> families;
  std::vector<std::string> models;
  std::optional<std::size_t> instances;
  std::optional<std::size_t> workers;
};

void add_campaign_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "Campaign configuration (JSON)");
  cmd->add_option("--out-dir", o.out_dir, "Campaign directory")->capture_default_str();
  cmd->add_option("--budget", o.budget, "Context budget in tokens");
  cmd->add_option("--policy", o.policy, "Reference policy: B1, B2, B3, B2+");
  cmd->add_option("--mitigation", o.mitigations, "Mitigations to run (none, SCP, SCP_ICE, ...)")
      ->delimiter(',');
  cmd->add_option("--mode", o.modes, "Routing modes: oracle, autonomous")->delimiter(',');
  cmd->add_option("--seeds", o.seeds, "Scenario seeds")->delimiter(',');
  cmd->add_option("--tau", o.tau, "ICE trigger fraction");
  cmd->add_option("--shl-ref", o.shl_ref, "Reference SHL in tokens");
  cmd->add_option("--endpoint", o.endpoint, "mock:<profile> or http(s)://host:port");
  cmd->add_option("--mock-profile", o.mock_profile, "faithful, noisy or weak");
  cmd->add_option("--families", o.families, "Scenario families")->delimiter(',');
  cmd->add_option("--models", o.models, "Model names")->delimiter(',');
  cmd->add_option("--instances", o.instances, "Instances per cell (even)");
  cmd->add_option("--workers", o.workers, "Concurrent cells");
}

CampaignConfig resolve_config(const Overrides& o) {
  CampaignConfig cfg = o.config.empty() ? CampaignConfig{} : CampaignConfig::load(o.config);
  if (o.budget) cfg.budget.total = *o.budget;
  if (o.policy) cfg.policy = policy_from_string(*o.policy);
  if (!o.seeds.empty()) cfg.seeds = o.seeds;
  if (o.tau) cfg.tau = *o.tau;
  if (o.shl_ref) cfg.shl_reference = *o.shl_ref;
  if (o.endpoint) cfg.endpoint.url = *o.endpoint;
  if (o.mock_profile) cfg.endpoint.url = "mock:" + *o.mock_profile;
  if (!o.families.empty()) {
    cfg.families.clear();
    for (const auto& f : o.families) cfg.families.push_back(family_from_string(f));
  }
  if (!o.models.empty()) cfg.models = o.models;
  if (o.instances) cfg.instances = *o.instances;
  if (o.workers) cfg.workers = *o.workers;
  if (!o.mitigations.empty() || !o.modes.empty()) {
    std::vector<RoutingMode> modes;
    for (const auto& m : o.modes) modes.push_back(routing_mode_from_string(m));
    if (modes.empty()) modes = {RoutingMode::oracle, RoutingMode::autonomous};
    std::vector<Mitigation> mits;
    for (const auto& m : o.mitigations) mits.push_back(mitigation_from_string(m));
    if (mits.empty()) {
      for (const auto& c : cfg.conditions) {
        if (std::find(mits.begin(), mits.end(), c.mitigation) == mits.end()) {
          mits.push_back(c.mitigation);
        }
      }
    }
    cfg.conditions.clear();
    for (auto m : mits) {
      if (m == Mitigation::none) {
        cfg.conditions.push_back({});
        continue;
      }
      for (auto mode : modes) cfg.conditions.push_back({m, mode});
    }
  }
  cfg.validate();
  return cfg;
}

void write_text(const fs::path& p, const std::string& body) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + p.string());
  out << body;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IntegrityError("cannot read " + p.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

CampaignConfig stored_config(const fs::path& dir) {
  if (!fs::exists(dir / "config.json")) {
    throw ConfigError(dir.string() + " has no config.json; run the campaign first");
  }
  return CampaignConfig::load(dir / "config.json");
}

int cmd_gen(const Overrides& o) {
  const auto cfg = resolve_config(o);
  const fs::path dir(o.out_dir);
  std::size_t n = 0;
  for (auto f : cfg.families) {
    for (auto seed : cfg.seeds) {
      const auto insts = generate_instances(cfg, f, seed);
      fs::create_directories(dir / "scenarios");
      write_scenarios(dir / "scenarios" / scenario_file_name(f, seed), insts);
      n += insts.size();
    }
  }
  write_text(dir / "config.json", cfg.to_json());
  fmt::print("wrote {} scenario instances to {}\n", n, (dir / "scenarios").string());
  return kExitOk;
}

int cmd_run(const Overrides& o) {
  const auto cfg = resolve_config(o);
  const fs::path dir(o.out_dir);
  fs::create_directories(dir);
  write_text(dir / "config.json", cfg.to_json());
  const auto table = run_matrix(cfg, dir);
  write_master_table(table, dir);
  for (const auto& line : table.log) fmt::print(stderr, "{}\n", line);
  const auto missing = table.incomplete();
  fmt::print("{} cells, {} complete, {} incomplete\n", table.cells.size(),
             table.cells.size() - missing.size(), missing.size());
  if (!missing.empty()) {
    for (const auto& c : table.cells) {
      if (c.status != CellStatus::complete) fmt::print(stderr, "  {}: {}\n", c.key.str(), c.error);
    }
    return kExitIncomplete;
  }
  write_text(dir / "manifest.json", freeze_manifest(table, cfg).to_json());
  fmt::print("manifest: {}\n", (dir / "manifest.json").string());
  return kExitOk;
}

int cmd_analyze(const Overrides& o, std::size_t resamples) {
  const fs::path dir(o.out_dir);
  const auto cfg = stored_config(dir);
  const auto table = read_master_table(dir);
  require_complete(table, targeted_cells(cfg));
  auto boot = cfg.bootstrap;
  if (resamples > 0) boot.resamples = resamples;
  const auto summaries = summarize_slices(table.records(), boot);
  fs::create_directories(dir / "analysis");
  std::ofstream out(dir / "analysis" / "slices.csv", std::ios::binary);
  write_slice_csv(out, summaries);
  write_slice_csv(std::cout, summaries);
  return kExitOk;
}

int cmd_report(const Overrides& o) {
  const fs::path dir(o.out_dir);
  const auto cfg = stored_config(dir);
  const auto table = read_master_table(dir);
  require_complete(table, targeted_cells(cfg));
  for (const auto& p : emit_report(table, dir / "report", cfg.bootstrap)) {
    fmt::print("{}\n", p.string());
  }
  return kExitOk;
}

int cmd_verify(const Overrides& o) {
  const fs::path dir(o.out_dir);
  const auto manifest = FreezeManifest::from_json(read_text(dir / "manifest.json"));
  const auto bad = verify_manifest(manifest, dir);
  if (bad.empty()) {
    fmt::print("manifest verified: {} scenario files, {} cells\n",
               manifest.scenario_file_hashes.size(), manifest.cell_hashes.size());
    return kExitOk;
  }
  for (const auto& b : bad) fmt::print(stderr, "digest mismatch: {}\n", b);
  return kExitIntegrity;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decision-time context governance: scenario generation, campaigns, analysis"};
  app.require_subcommand(1);

  Overrides o;
  std::size_t resamples = 0;
  auto* gen = app.add_subcommand("gen", "Generate scenario files");
  auto* run = app.add_subcommand("run", "Run the campaign matrix and freeze the results");
  auto* analyze = app.add_subcommand("analyze", "Slice metrics with bootstrap intervals");
  auto* report = app.add_subcommand("report", "Delta tables, pressure curves, SHL and cost");
  auto* verify = app.add_subcommand("verify", "Check on-disk files against the manifest");
  add_campaign_flags(gen, o);
  add_campaign_flags(run, o);
  for (auto* cmd : {analyze, report, verify}) {
    cmd->add_option("--out-dir", o.out_dir, "Campaign directory")->capture_default_str();
  }
  analyze->add_option("--resamples", resamples, "Override bootstrap resamples");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*gen) return cmd_gen(o);
    if (*run) return cmd_run(o);
    if (*analyze) return cmd_analyze(o, resamples);
    if (*report) return cmd_report(o);
    if (*verify) return cmd_verify(o);
  } catch (const ConfigError& e) {
    fmt::print(stderr, "configuration error: {}\n", e.what());
    return kExitConfig;
  } catch (const GenerationError& e) {
    fmt::print(stderr, "configuration error: {}\n", e.what());
    return kExitConfig;
  } catch (const BudgetError& e) {
    fmt::print(stderr, "configuration error: {}\n", e.what());
    return kExitConfig;
  } catch (const IncompleteMatrixError& e) {
    fmt::print(stderr, "incomplete matrix: {}\n", e.what());
    return kExitIncomplete;
  } catch (const IntegrityError& e) {
    fmt::print(stderr, "integrity error: {}\n", e.what());
    return kExitIntegrity;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return kExitOk;
}
