#include "ctxgov/report.hpp"

#include <fstream>
#include <map>

#include <fmt/format.h>

#include "ctxgov/errors.hpp"

namespace ctxgov {

namespace {

SliceKey reference_key(const SliceKey& k) {
  SliceKey r = k;
  r.mitigation = "none";
  r.routing_mode = "na";
  return r;
}

std::string fmt_opt(const std::optional<double>& v) {
  return v ? fmt::format("{:.6f}", *v) : std::string("NA");
}

}  // namespace

std::vector<DeltaRow> delta_table(std::span<const SliceSummary> summaries) {
  std::map<SliceKey, const SliceSummary*> index;
  for (const auto& s : summaries) index[s.key] = &s;
  std::vector<DeltaRow> out;
  for (const auto& s : summaries) {
    auto it = index.find(reference_key(s.key));
    if (it == index.end()) continue;
    const auto& ref = *it->second;
    DeltaRow d;
    d.key = s.key;
    d.d_ecr = s.ecr - ref.ecr;
    d.d_csr = s.csr - ref.csr;
    d.d_dpr = s.dpr - ref.dpr;
    if (s.dfr && ref.dfr) d.d_dfr = *s.dfr - *ref.dfr;
    d.d_tokens = s.mean_tokens - ref.mean_tokens;
    out.push_back(d);
  }
  return out;
}

std::vector<CurveRow> pressure_curves(std::span<const InstanceRecord> records) {
  std::map<std::pair<std::string, std::string>, std::vector<InstanceRecord>> groups;
  for (const auto& r : records) {
    if (r.order != PromptOrder::attack) continue;
    groups[{r.slice.model, r.slice.mitigation + "/" + r.slice.routing_mode}].push_back(r);
  }
  std::vector<CurveRow> out;
  for (const auto& [key, recs] : groups) {
    std::map<std::size_t, std::size_t> counts;
    for (const auto& r : recs) ++counts[r.pressure_bin];
    for (const auto& [bin, csr] : pressure_curve(recs)) {
      out.push_back({key.first, key.second, bin, csr, counts[bin]});
    }
  }
  return out;
}

std::vector<CostRow> cost_table(std::span<const DeltaRow> deltas) {
  std::map<std::pair<std::string, std::string>, CostRow> rows;
  for (const auto& d : deltas) {
    if (d.key.mitigation == "none") continue;
    auto& row = rows[{d.key.mitigation, d.key.routing_mode}];
    row.mitigation = d.key.mitigation;
    row.routing_mode = d.key.routing_mode;
    row.mean_d_ecr += d.d_ecr;
    row.mean_d_tokens += d.d_tokens;
    ++row.slices;
  }
  std::vector<CostRow> out;
  for (auto& [_, row] : rows) {
    row.mean_d_ecr /= static_cast<double>(row.slices);
    row.mean_d_tokens /= static_cast<double>(row.slices);
    out.push_back(row);
  }
  return out;
}

std::vector<std::filesystem::path> emit_report(const MasterTable& table,
                                               const std::filesystem::path& dir,
                                               const BootstrapConfig& boot) {
  if (const auto missing = table.incomplete(); !missing.empty()) {
    std::string msg = fmt::format("{} cell(s) incomplete:", missing.size());
    for (const auto& k : missing) msg += "\n  " + k.str();
    throw IncompleteMatrixError(msg);
  }
  std::filesystem::create_directories(dir);
  const auto records = table.records();
  const auto summaries = summarize_slices(records, boot);
  const auto deltas = delta_table(summaries);
  std::vector<std::filesystem::path> written;

  auto open = [&](const char* name) {
    written.push_back(dir / name);
    return std::ofstream(dir / name, std::ios::binary);
  };

  {
    auto out = open("slices.csv");
    write_slice_csv(out, summaries);
  }
  {
    auto out = open("deltas.csv");
    out << "model,family,policy,mitigation,routing_mode,seed,d_ecr,d_csr,d_dpr,d_dfr,d_tokens\n";
    for (const auto& d : deltas) {
      out << fmt::format("{},{},{},{},{},{},{:.6f},{:.6f},{:.6f},{},{:.3f}\n", d.key.model,
                         d.key.family, d.key.policy, d.key.mitigation, d.key.routing_mode,
                         d.key.seed, d.d_ecr, d.d_csr, d.d_dpr, fmt_opt(d.d_dfr), d.d_tokens);
    }
  }
  const auto curves = pressure_curves(records);
  {
    auto out = open("pressure_curves.csv");
    out << "model,condition,pressure_bin,mean_csr,n\n";
    for (const auto& c : curves) {
      out << fmt::format("{},{},{},{:.6f},{}\n", c.model, c.condition, c.bin, c.mean_csr, c.n);
    }
  }
  {
    auto out = open("shl.csv");
    out << "model,condition,shl\n";
    std::map<std::pair<std::string, std::string>, std::vector<std::pair<std::size_t, double>>>
        by_group;
    for (const auto& c : curves) by_group[{c.model, c.condition}].emplace_back(c.bin, c.mean_csr);
    for (const auto& [key, curve] : by_group) {
      const auto shl = estimate_shl(curve);
      out << fmt::format("{},{},{}\n", key.first, key.second,
                         shl ? std::to_string(*shl) : std::string("not_reached"));
    }
  }
  {
    auto out = open("cost.csv");
    out << "mitigation,routing_mode,mean_d_ecr,mean_d_tokens,slices\n";
    for (const auto& c : cost_table(deltas)) {
      out << fmt::format("{},{},{:.6f},{:.3f},{}\n", c.mitigation, c.routing_mode, c.mean_d_ecr,
                         c.mean_d_tokens, c.slices);
    }
  }
  return written;
}

}  // namespace ctxgov
