#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>
#include <sstream>

#include "ctxgov/errors.hpp"
#include "ctxgov/metrics.hpp"

using namespace ctxgov;

namespace {

InstanceRecord rec(std::size_t a, std::size_t r, std::size_t p = 0, bool violation = false,
                   std::string base = "b0", PromptOrder order = PromptOrder::attack) {
  InstanceRecord x;
  x.a = a;
  x.r = r;
  x.p = p;
  x.violation = violation;
  x.base_id = std::move(base);
  x.order = order;
  x.instance_id = x.base_id + (order == PromptOrder::attack ? "/attack" : "/control_last");
  x.slice.model = "m";
  x.slice.family = "eviction";
  x.slice.policy = "B1_truncation";
  x.slice.mitigation = "none";
  x.slice.routing_mode = "na";
  x.slice.seed = 7;
  return x;
}

RecordPair pair_of(bool va, bool vc, std::string base = "b0") {
  return {rec(3, 0, 0, va, base, PromptOrder::attack), rec(3, 0, 0, vc, base, PromptOrder::control_last)};
}

}  // namespace

TEST_CASE("ECR") {
  std::vector<InstanceRecord> all{rec(3, 3), rec(2, 2)};
  CHECK(compute_ecr(all) == 1.0);
  std::vector<InstanceRecord> half{rec(3, 3), rec(3, 2)};
  CHECK(compute_ecr(half) == 0.5);
  std::vector<InstanceRecord> zero{rec(3, 0), rec(3, 0)};
  CHECK(compute_ecr(zero) == 0.0);
  CHECK_THROWS_AS(compute_ecr(std::vector<InstanceRecord>{}), MetricError);
}

TEST_CASE("CSR") {
  CHECK(csr_score(rec(3, 3)) == 1.0);
  CHECK(csr_score(rec(3, 2)) == doctest::Approx(0.6667).epsilon(1e-4));
  CHECK(std::abs(csr_score(rec(3, 2)) - 2.0 / 3.0) < 1e-9);
  std::vector<InstanceRecord> s{rec(2, 2), rec(2, 1)};
  CHECK(compute_csr(s) == 0.75);
  CHECK_THROWS_AS(compute_csr(std::vector<InstanceRecord>{}), MetricError);
}

TEST_CASE("DPR") {
  std::vector<InstanceRecord> s{rec(3, 0, 3), rec(3, 0, 0)};
  CHECK(compute_dpr(s) == 0.5);
  CHECK(dpr_score(rec(0, 0, 0)) == 0.0);
  CHECK_THROWS_AS(compute_dpr(std::vector<InstanceRecord>{}), MetricError);
}

TEST_CASE("per-instance ordering") {
  for (std::size_t a = 1; a <= 4; ++a) {
    for (std::size_t r = 0; r <= a; ++r) {
      auto x = rec(a, r);
      CHECK((ecr_score(x) == 1.0) == (csr_score(x) == 1.0));
      CHECK(ecr_score(x) <= csr_score(x));
    }
  }
}

TEST_CASE("DFR") {
  std::vector<RecordPair> flip{pair_of(true, false)};
  CHECK(compute_dfr(flip) == 1.0);
  std::vector<RecordPair> same{pair_of(true, true)};
  CHECK(compute_dfr(same) == 0.0);
  std::vector<RecordPair> mixed{pair_of(true, false, "b0"), pair_of(false, false, "b1")};
  CHECK(compute_dfr(mixed) == 0.5);

  std::vector<RecordPair> swapped;
  for (const auto& p : mixed) swapped.emplace_back(p.second, p.first);
  CHECK(compute_dfr(swapped) == compute_dfr(mixed));

  std::vector<RecordPair> mismatched{{rec(3, 0, 0, true, "b0"), rec(3, 0, 0, false, "b9", PromptOrder::control_last)}};
  CHECK_THROWS_AS(compute_dfr(mismatched), PairingError);
  CHECK_THROWS_AS(compute_dfr(std::vector<RecordPair>{}), MetricError);
}

TEST_CASE("make_pairs") {
  std::vector<InstanceRecord> recs{rec(3, 0, 0, true, "b0"),
                                   rec(3, 3, 3, false, "b0", PromptOrder::control_last),
                                   rec(3, 0, 0, true, "b1"),
                                   rec(3, 0, 0, true, "b1", PromptOrder::control_last)};
  auto pairs = make_pairs(recs);
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0].first.order == PromptOrder::attack);
  CHECK(compute_dfr(pairs) == 0.5);

  recs.push_back(rec(3, 0, 0, true, "lonely-7"));
  try {
    make_pairs(recs);
    FAIL("expected PairingError");
  } catch (const PairingError& e) {
    CHECK(std::string(e.what()).find("lonely-7") != std::string::npos);
  }
}

TEST_CASE("estimate_shl") {
  std::vector<std::pair<std::size_t, double>> c{{50, 0.9}, {100, 0.6}, {150, 0.4}};
  CHECK(estimate_shl(c) == std::optional<std::size_t>(150));
  std::vector<std::pair<std::size_t, double>> never{{50, 0.9}, {100, 0.5}};
  CHECK_FALSE(estimate_shl(never).has_value());
  std::vector<std::pair<std::size_t, double>> early{{20, 0.3}, {40, 0.9}};
  CHECK(estimate_shl(early) == std::optional<std::size_t>(20));
  CHECK_THROWS_AS(estimate_shl(std::vector<std::pair<std::size_t, double>>{}), MetricError);
  std::vector<std::pair<std::size_t, double>> backwards{{40, 0.9}, {20, 0.3}};
  CHECK_THROWS_AS(estimate_shl(backwards), MetricError);
}

TEST_CASE("pressure curve") {
  CHECK(pressure_bin(0) == 0);
  CHECK(pressure_bin(45) == 40);
  CHECK(pressure_bin(60) == 60);
  auto a = rec(2, 2);
  a.pressure_bin = 40;
  auto b = rec(2, 0);
  b.pressure_bin = 40;
  auto c = rec(2, 1);
  c.pressure_bin = 20;
  auto curve = pressure_curve(std::vector<InstanceRecord>{a, b, c});
  REQUIRE(curve.size() == 2);
  CHECK(curve[0] == std::pair<std::size_t, double>{20, 0.5});
  CHECK(curve[1] == std::pair<std::size_t, double>{40, 0.5});
}

TEST_CASE("mean_of is exact for constant input") {
  std::vector<double> v(37, 0.1);
  CHECK(mean_of(v) == 0.1);
}

TEST_CASE("bootstrap") {
  std::vector<double> constant{0.4, 0.4, 0.4};
  auto c = bootstrap_ci(constant);
  CHECK(c.first == 0.4);
  CHECK(c.second == 0.4);

  std::vector<double> mixed{0.1, 0.9, 0.4, 0.4, 1.0, 0.0};
  CHECK(bootstrap_ci(mixed, 500, 0.9, 3) == bootstrap_ci(mixed, 500, 0.9, 3));
  auto ci = bootstrap_ci(mixed);
  CHECK(ci.first <= mean_of(mixed));
  CHECK(mean_of(mixed) <= ci.second);

  std::vector<double> two{0.0, 1.0};
  std::set<double> allowed{0.0, 0.5, 1.0};
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto r = bootstrap_ci(two, 2000, 0.95, seed);
    CHECK(allowed.count(r.first) == 1);
    CHECK(allowed.count(r.second) == 1);
  }
  CHECK_THROWS_AS(bootstrap_ci(std::vector<double>{}), MetricError);
}

TEST_CASE("token_delta") {
  auto a = rec(3, 3);
  a.tokens_in = 100;
  a.tokens_out = 10;
  auto b = a;
  b.slice.mitigation = "SCP_Cache";
  b.tokens_in = 60;
  CHECK(token_delta(std::vector<InstanceRecord>{a}, std::vector<InstanceRecord>{a}) == 0.0);
  CHECK(token_delta(std::vector<InstanceRecord>{b}, std::vector<InstanceRecord>{a}) == -40.0);
  auto other = a;
  other.slice.seed = 11;
  CHECK_THROWS_AS(token_delta(std::vector<InstanceRecord>{other}, std::vector<InstanceRecord>{a}),
                  PairingError);
}

TEST_CASE("summarize_slices") {
  std::vector<InstanceRecord> recs{rec(3, 0, 0, true, "b0"),
                                   rec(3, 3, 3, false, "b0", PromptOrder::control_last),
                                   rec(3, 3, 3, false, "b1"),
                                   rec(3, 3, 3, false, "b1", PromptOrder::control_last)};
  auto s = summarize_slices(recs, BootstrapConfig{200, 0.95, 7});
  REQUIRE(s.size() == 1);
  CHECK(s[0].n == 2);
  CHECK(s[0].ecr == 0.5);
  CHECK(s[0].dpr == 0.5);
  REQUIRE(s[0].dfr.has_value());
  CHECK(*s[0].dfr == 0.5);
  std::ostringstream out;
  write_slice_csv(out, s);
  CHECK(out.str().rfind("model,family,policy,mitigation,routing_mode,seed,n,ecr", 0) == 0);
  CHECK(out.str().find("\nm,eviction,B1_truncation,none,na,7,2,0.500000") != std::string::npos);
}
