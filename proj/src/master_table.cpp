#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "ctxgov/campaign.hpp"
#include "ctxgov/digest.hpp"
#include "ctxgov/errors.hpp"

namespace ctxgov {

namespace {

constexpr std::string_view kMasterHeader =
    "model,family,seed,condition,policy,mitigation,routing_mode,instance_id,base_id,order,a,r,p,"
    "violation,unparseable,tokens_in,tokens_out,pressure_bin,abs_score,equivalence";
constexpr std::string_view kCellsHeader =
    "model,family,seed,condition,status,records,content_hash,error";

std::string sanitize(std::string s) {
  for (auto& c : s) {
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  }
  return s;
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

std::size_t to_size(const std::string& s, const char* what) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw IntegrityError(fmt::format("master table: bad {} '{}'", what, s));
  }
}

bool to_bool(const std::string& s) {
  if (s == "1") return true;
  if (s == "0") return false;
  throw IntegrityError("master table: bad flag '" + s + "'");
}

std::vector<std::vector<std::string>> read_rows(const std::filesystem::path& p,
                                                std::string_view header, std::size_t width) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IntegrityError("cannot read " + p.string());
  std::string line;
  if (!std::getline(in, line) || line != header) {
    throw IntegrityError(p.string() + ": unexpected header");
  }
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto row = split_row(line);
    if (row.size() != width) {
      throw IntegrityError(fmt::format("{}: row has {} fields, expected {}", p.string(),
                                       row.size(), width));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::string master_csv(const MasterTable& table) {
  std::string out(kMasterHeader);
  out += '\n';
  for (const auto& c : table.cells) {
    for (const auto& r : c.records) {
      std::string eq;
      for (std::size_t i = 0; i < r.equivalence.size(); ++i) {
        if (i) eq += ';';
        eq += to_string(r.equivalence[i]);
      }
      out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{:.6f},{}\n",
                         c.key.model, c.key.family, c.key.seed, c.key.condition, r.slice.policy,
                         r.slice.mitigation, r.slice.routing_mode, r.instance_id, r.base_id,
                         to_string(r.order), r.a, r.r, r.p, r.violation ? 1 : 0,
                         r.unparseable ? 1 : 0, r.tokens_in, r.tokens_out, r.pressure_bin,
                         r.abs_score, eq);
    }
  }
  return out;
}

std::string cells_csv(const MasterTable& table) {
  std::string out(kCellsHeader);
  out += '\n';
  for (const auto& c : table.cells) {
    out += fmt::format("{},{},{},{},{},{},{},{}\n", c.key.model, c.key.family, c.key.seed,
                       c.key.condition, to_string(c.status), c.records.size(), c.content_hash,
                       sanitize(c.error));
  }
  return out;
}

void write_master_table(const MasterTable& table, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "master.csv", std::ios::binary) << master_csv(table);
  std::ofstream(dir / "cells.csv", std::ios::binary) << cells_csv(table);
}

MasterTable read_master_table(const std::filesystem::path& dir) {
  MasterTable table;
  std::map<CellKey, std::size_t> index;
  for (const auto& row : read_rows(dir / "cells.csv", kCellsHeader, 8)) {
    CellRecord c;
    c.key = {row[0], row[1], to_size(row[2], "seed"), row[3]};
    c.status = cell_status_from_string(row[4]);
    c.content_hash = row[6];
    c.error = row[7];
    index[c.key] = table.cells.size();
    table.cells.push_back(std::move(c));
  }
  for (const auto& row : read_rows(dir / "master.csv", kMasterHeader, 20)) {
    const CellKey key{row[0], row[1], to_size(row[2], "seed"), row[3]};
    auto it = index.find(key);
    if (it == index.end()) throw IntegrityError("master.csv row for unknown cell " + key.str());
    InstanceRecord r;
    r.slice = {row[0], row[1], row[4], row[5], row[6], key.seed};
    r.instance_id = row[7];
    r.base_id = row[8];
    r.order = order_from_string(row[9]);
    r.a = to_size(row[10], "a");
    r.r = to_size(row[11], "r");
    r.p = to_size(row[12], "p");
    r.violation = to_bool(row[13]);
    r.unparseable = to_bool(row[14]);
    r.tokens_in = to_size(row[15], "tokens_in");
    r.tokens_out = to_size(row[16], "tokens_out");
    r.pressure_bin = to_size(row[17], "pressure_bin");
    try {
      r.abs_score = std::stod(row[18]);
    } catch (const std::exception&) {
      throw IntegrityError("master table: bad abs_score '" + row[18] + "'");
    }
    std::stringstream eq(row[19]);
    std::string label;
    while (std::getline(eq, label, ';')) {
      if (!label.empty()) r.equivalence.push_back(equivalence_from_string(label));
    }
    if (r.r > r.a || r.p > r.a) throw IntegrityError("record " + r.instance_id + " exceeds a");
    table.cells[it->second].records.push_back(std::move(r));
  }
  for (const auto& c : table.cells) {
    if (c.status == CellStatus::complete && c.records.empty()) {
      throw IntegrityError("complete cell " + c.key.str() + " has no records");
    }
  }
  const auto scen = dir / "scenarios";
  if (std::filesystem::exists(scen)) {
    for (const auto& entry : std::filesystem::directory_iterator(scen)) {
      if (entry.path().extension() != ".jsonl") continue;
      table.scenario_hashes["scenarios/" + entry.path().filename().string()] =
          sha256_file_hex(entry.path());
    }
  }
  std::sort(table.cells.begin(), table.cells.end(),
            [](const CellRecord& a, const CellRecord& b) { return a.key < b.key; });
  return table;
}

}  // namespace ctxgov
