#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ctxgov/campaign.hpp"
#include "ctxgov/metrics.hpp"

namespace ctxgov {

// One slice against its matched reference arm (same model, family, policy
// and seed, mitigation none).
struct DeltaRow {
  SliceKey key;
  double d_ecr = 0.0;
  double d_csr = 0.0;
  double d_dpr = 0.0;
  std::optional<double> d_dfr;
  double d_tokens = 0.0;
};

std::vector<DeltaRow> delta_table(std::span<const SliceSummary> summaries);

struct CurveRow {
  std::string model;
  std::string condition;  // mitigation/routing_mode
  std::size_t bin = 0;
  double mean_csr = 0.0;
  std::size_t n = 0;
};

// Attack-order mean CSR per pressure bin, per model and condition.
std::vector<CurveRow> pressure_curves(std::span<const InstanceRecord> records);

struct CostRow {
  std::string mitigation;
  std::string routing_mode;
  double mean_d_ecr = 0.0;
  double mean_d_tokens = 0.0;
  std::size_t slices = 0;
};

std::vector<CostRow> cost_table(std::span<const DeltaRow> deltas);

// Writes slices.csv, deltas.csv, pressure_curves.csv, shl.csv and cost.csv
// into `dir`. Throws IncompleteMatrixError while any cell is incomplete.
std::vector<std::filesystem::path> emit_report(const MasterTable& table,
                                               const std::filesystem::path& dir,
                                               const BootstrapConfig& boot = {});

}  // namespace ctxgov
