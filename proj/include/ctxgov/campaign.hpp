#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ctxgov/campaign_config.hpp"
#include "ctxgov/metrics.hpp"
#include "ctxgov/model_io.hpp"
#include "ctxgov/scenario.hpp"

namespace ctxgov {

struct CellKey {
  std::string model;
  std::string family;
  std::uint64_t seed = 0;
  std::string condition;

  auto operator<=>(const CellKey&) const = default;
  std::string str() const;
};

enum class CellStatus { complete, incomplete };
std::string_view to_string(CellStatus s);
CellStatus cell_status_from_string(std::string_view s);

struct CellRecord {
  CellKey key;
  std::vector<InstanceRecord> records;
  CellStatus status = CellStatus::incomplete;
  std::string content_hash;
  std::string error;  // why the cell is incomplete

  bool operator==(const CellRecord&) const = default;
};

struct MasterTable {
  std::vector<CellRecord> cells;  // sorted by key, one per key
  std::vector<std::string> log;   // dedup notes
  std::map<std::string, std::string> scenario_hashes;  // relative path -> sha256

  std::vector<InstanceRecord> records() const;
  std::vector<CellKey> incomplete() const;
};

// Everything one instance run produced on its final turn.
struct InstanceRun {
  InstanceRecord record;
  AssemblyResult final;
  ModelOutput output;
  JudgeVerdict verdict;
};

struct RunSpec {
  std::string model;
  Condition condition;
  PolicyId policy = PolicyId::B1_truncation;
  TokenBudget budget;
  double tau = 0.8;
  std::optional<std::size_t> shl_reference;
  std::size_t session_turns = 10;
  ClassifierWeights classifier;
  StructuredQuotas quotas;
  std::size_t ice_cap = 12;
  SamplingParams sampling;

  static RunSpec from_config(const CampaignConfig& cfg, const std::string& model,
                             const Condition& condition);
  AssemblyConfig assembly() const;
  SliceKey slice(const ScenarioInstance& inst) const;
};

// Reveals the history over `session_turns` turns, assembling each one; only
// the last turn calls the model. tokens_in sums the serialized (not reused)
// state tokens of every turn.
InstanceRun run_instance(const ScenarioInstance& inst, const RunSpec& spec, ChatClient& client,
                         ControlCache& cache);

// Scenario pairs for one (family, seed): instances / 2 pairs, attack first.
std::vector<ScenarioInstance> generate_instances(const CampaignConfig& cfg, Family family,
                                                 std::uint64_t seed);
std::string scenario_file_name(Family family, std::uint64_t seed);

// Runs the full cross product. Scenario files are read from
// `out_dir/scenarios` when present and written there otherwise; an empty
// out_dir keeps everything in memory. Backend failures leave the affected
// cell incomplete.
MasterTable run_matrix(const CampaignConfig& cfg, const std::filesystem::path& out_dir = {});

// Latest complete record per key wins; complete duplicates with different
// hashes raise IntegrityError.
MasterTable dedup_cells(const std::vector<CellRecord>& cells);

std::vector<CellKey> targeted_cells(const CampaignConfig& cfg);

// Throws IncompleteMatrixError listing every targeted cell that is missing or
// incomplete.
void require_complete(const MasterTable& table, const std::vector<CellKey>& targeted);

std::string cell_content_hash(const CellRecord& cell, const std::string& config_hash,
                              const std::string& scenario_hash);

struct FreezeManifest {
  std::string config_hash;
  std::map<std::string, std::string> scenario_file_hashes;
  std::map<std::string, std::string> cell_hashes;
  std::string tool_version;

  std::string to_json() const;
  static FreezeManifest from_json(std::string_view text);
  bool operator==(const FreezeManifest&) const = default;
};

inline constexpr std::string_view kToolVersion = "ctxgov 1.0.0";

// Refuses (IncompleteMatrixError) unless every cell is complete.
FreezeManifest freeze_manifest(const MasterTable& table, const CampaignConfig& cfg);

// Entries whose digest no longer matches what is on disk under `dir`:
// scenario files, config.json, and cells recomputed from the master table.
std::vector<std::string> verify_manifest(const FreezeManifest& manifest,
                                         const std::filesystem::path& dir);

// Master table CSV (one row per instance) plus cells.csv.
void write_master_table(const MasterTable& table, const std::filesystem::path& dir);
MasterTable read_master_table(const std::filesystem::path& dir);
std::string master_csv(const MasterTable& table);
std::string cells_csv(const MasterTable& table);

// Filler-volume sweep over one family with fixed seeds, for pressure curves.
struct SweepConfig {
  Family family = Family::eviction;
  std::vector<std::uint64_t> seeds = kDefaultSeeds;
  std::vector<std::size_t> filler_levels;  // empty: 0, 20, ..., 400
  std::vector<Condition> conditions{Condition{},
                                    Condition{Mitigation::SCP_ICE, RoutingMode::autonomous}};
  PolicyId policy = PolicyId::B1_truncation;
  TokenBudget budget;
  std::string endpoint = "mock:faithful";
  std::size_t session_turns = 1;
};

std::vector<InstanceRecord> run_pressure_sweep(const SweepConfig& sweep);

}  // namespace ctxgov
