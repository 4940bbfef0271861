#include "ctxgov/assembler.hpp"

#include <array>
#include <chrono>
#include <utility>

#include "ctxgov/errors.hpp"

namespace ctxgov {

namespace {

constexpr std::array<std::pair<Mitigation, std::string_view>, 6> kMitigationNames{{
    {Mitigation::none, "none"},
    {Mitigation::SCP, "SCP"},
    {Mitigation::SCP_ICE, "SCP_ICE"},
    {Mitigation::SCP_Cache, "SCP_Cache"},
    {Mitigation::SCP_Cache_ICE, "SCP_Cache_ICE"},
    {Mitigation::recency_replay, "recency_replay"},
}};

using Clock = std::chrono::steady_clock;

class StageTimer {
 public:
  explicit StageTimer(Telemetry& t) : telem_(t), last_(Clock::now()) {}
  void mark(const std::string& stage) {
    const auto now = Clock::now();
    telem_.stage_timings[stage] += std::chrono::duration_cast<std::chrono::nanoseconds>(now - last_);
    last_ = now;
  }

 private:
  Telemetry& telem_;
  Clock::time_point last_;
};

std::size_t reserve_query(const TokenBudget& budget, const Segment& query) {
  if (query.token_count > budget.total) {
    throw BudgetError("final query needs " + std::to_string(query.token_count) +
                      " tokens but the budget is " + std::to_string(budget.total));
  }
  return budget.total - query.token_count;
}

}  // namespace

std::string_view to_string(Mitigation m) {
  for (const auto& [id, name] : kMitigationNames) {
    if (id == m) return name;
  }
  return "?";
}

Mitigation mitigation_from_string(std::string_view s) {
  std::string key(s);
  for (auto& c : key) {
    if (c == '+') c = '_';
  }
  for (const auto& [id, name] : kMitigationNames) {
    if (name == key) return id;
  }
  if (key == "replay") return Mitigation::recency_replay;
  throw ConfigError("unknown mitigation '" + std::string(s) + "'");
}

bool uses_pinning(Mitigation m) {
  return m != Mitigation::none && m != Mitigation::recency_replay;
}
bool uses_cache(Mitigation m) {
  return m == Mitigation::SCP_Cache || m == Mitigation::SCP_Cache_ICE;
}
bool uses_ice(Mitigation m) { return m == Mitigation::SCP_ICE || m == Mitigation::SCP_Cache_ICE; }

DecisionState compose(const std::vector<Segment>& pinned, const std::vector<Segment>& data,
                      const Segment& query, std::size_t budget_total) {
  DecisionState s;
  s.pinned = pinned;
  s.data_plane = data;
  s.query = query;
  s.total_tokens = total_tokens(pinned) + total_tokens(data) + query.token_count;
  if (s.total_tokens > budget_total) {
    throw InvariantError("composed state has " + std::to_string(s.total_tokens) +
                         " tokens, budget is " + std::to_string(budget_total));
  }
  return s;
}

AssemblyResult assemble_turn(const RawHistory& h, const AssemblyConfig& cfg,
                             ControlCache* cache, const std::string& session,
                             std::span<const Constraint> expected) {
  AssemblyResult out;
  Telemetry& t = out.telem;
  t.routing_mode = cfg.routing_mode;
  t.tau = cfg.tau;
  t.shl_reference = cfg.shl_reference;
  t.classifier = cfg.classifier.fingerprint();
  StageTimer timer(t);

  std::vector<Segment> pinned;
  std::vector<Segment> data;
  const std::size_t available = reserve_query(cfg.budget, h.final_query);

  if (!uses_pinning(cfg.mitigation)) {
    std::vector<Segment> candidates;
    if (cfg.mitigation == Mitigation::none) {
      candidates = h.segments;
    } else {
      auto adm = admit_control(h, cfg.routing_mode, cfg.classifier);
      timer.mark("admit");
      candidates = adm.data;
      auto replay = replay_recency(adm.control);
      candidates.insert(candidates.end(), replay.begin(), replay.end());
    }
    t.b_ctrl = 0;
    t.b_data = available;
    timer.mark("split");
    data = apply_reference_policy(cfg.policy, candidates, t.b_data, cfg.policy_params);
    timer.mark("policy");
    const auto reading = estimate_pressure({}, candidates, cfg.tau, cfg.shl_reference,
                                           cfg.budget.total);
    t.pressure_estimate = reading.k_hat;
    timer.mark("pressure");
  } else {
    auto adm = admit_control(h, cfg.routing_mode, cfg.classifier);
    timer.mark("admit");
    const auto split = budget_split(cfg.budget, adm.control, h.final_query);
    t.b_ctrl = split.b_ctrl;
    t.b_data = split.b_data;
    timer.mark("split");
    auto pin = pin_control(adm.control, split.b_ctrl,
                           uses_cache(cfg.mitigation) ? cache : nullptr, session);
    pinned = std::move(pin.pinned);
    t.tokens_reused = pin.tokens_reused;
    t.control_dropped = std::move(pin.dropped);
    timer.mark("pin");
    data = apply_reference_policy(cfg.policy, adm.data, split.b_data, cfg.policy_params);
    timer.mark("policy");
    const auto reading = estimate_pressure(pinned, adm.data, cfg.tau, cfg.shl_reference,
                                           cfg.budget.total);
    t.pressure_estimate = reading.k_hat;
    timer.mark("pressure");

    if (uses_ice(cfg.mitigation) && reading.triggers()) {
      const auto reminders = constraints_from_segments(adm.control);
      const auto tok = cfg.policy_params.tokenizer;
      // Reminder tokens come out of the data side before compaction.
      const auto probe = apply_ice({}, {}, reminders, static_cast<std::size_t>(-1), cfg.ice, *tok);
      const std::size_t shift = std::min(probe.reminder_tokens, split.b_data);
      if (shift > 0) {
        data = apply_reference_policy(cfg.policy, adm.data, split.b_data - shift,
                                      cfg.policy_params);
      }
      auto ice = apply_ice(pinned, data, reminders, available, cfg.ice, *tok);
      if (ice.added) {
        pinned = std::move(ice.pinned);
        data = std::move(ice.data);
        t.ice_fired = true;
        t.b_ctrl += ice.reminder_tokens;
        t.b_data = available - t.b_ctrl;
      }
      t.ice_dropped = std::move(ice.dropped_markers);
      timer.mark("ice");
    }
  }

  out.state = compose(pinned, data, h.final_query, cfg.budget.total);
  t.tokens_serialized = out.state.total_tokens - t.tokens_reused;
  timer.mark("compose");

  if (expected.empty()) {
    const auto derived = constraints_from_segments(h.segments);
    out.abs = abs_audit(out.state, derived);
  } else {
    out.abs = abs_audit(out.state, expected);
  }
  timer.mark("abs");
  return out;
}

}  // namespace ctxgov
