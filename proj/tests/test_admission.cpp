#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ctxgov/admission.hpp"
#include "ctxgov/errors.hpp"

using namespace ctxgov;

namespace {

Segment seg(std::string id, SegmentKind k, std::string text, std::size_t turn,
            std::set<std::string> labels = {}) {
  return make_segment(std::move(id), k, std::move(text), turn, std::move(labels));
}

}  // namespace

TEST_CASE("oracle admission copies labels") {
  RawHistory h;
  h.segments = {seg("s0", SegmentKind::directive, "[c1] Do not use external tools.", 0, {"POLICY"}),
                seg("s1", SegmentKind::filler, "The lobby was repainted.", 1, {"DATA"}),
                seg("s2", SegmentKind::directive, "[c2] Never delete data.", 1, {"POLICY"}),
                seg("s3", SegmentKind::filler, "Lunch ran late.", 2, {"DATA"}),
                seg("s4", SegmentKind::filler, "A bird sang outside.", 3, {"DATA"})};
  h.final_query = seg("q", SegmentKind::user, "Continue.", 4);
  auto r = admit_control(h, RoutingMode::oracle);
  REQUIRE(r.control.size() == 2);
  CHECK(r.control[0].id == "s0");
  CHECK(r.control[1].id == "s2");
  CHECK(r.data.size() == 3);
  CHECK(r.control.size() + r.data.size() == h.segments.size());
  CHECK(r.per_segment_route.at("s1") == Route::data);
  CHECK(r.per_segment_route.count("q") == 0);
}

TEST_CASE("oracle admission without labels is a config error") {
  RawHistory h;
  h.segments = {seg("s0", SegmentKind::filler, "Unlabeled.", 0)};
  h.final_query = seg("q", SegmentKind::user, "Continue.", 1);
  CHECK_THROWS_AS(admit_control(h, RoutingMode::oracle), ConfigError);
}

TEST_CASE("autonomous admission") {
  RawHistory h;
  h.segments = {seg("s0", SegmentKind::user, "[c2] Never delete data.", 0),
                seg("s1", SegmentKind::user, "the weather was mild that week", 1)};
  h.final_query = seg("q", SegmentKind::user, "Continue.", 2);
  auto r = admit_control(h, RoutingMode::autonomous);
  CHECK(r.per_segment_route.at("s0") == Route::policy);
  CHECK(r.per_segment_route.at("s1") == Route::data);
}

TEST_CASE("directive likelihood") {
  CHECK(score_directive_likelihood(seg("a", SegmentKind::user, "[c1] Do not use external tools.", 0)) ==
        1.0);
  CHECK(score_directive_likelihood(seg("b", SegmentKind::user, "", 0)) == 0.0);
  CHECK(score_directive_likelihood(
            seg("c", SegmentKind::user, "Proceed only if condition Z is true.", 0)) >= 0.5);
  CHECK(score_directive_likelihood(
            seg("d", SegmentKind::user, "the weather was mild that week", 0)) < 0.5);
}

TEST_CASE("classifier weights parse") {
  auto w = ClassifierWeights::parse("# tuned\nthreshold = 0.7\ndeontic_lexicon = must, never\n");
  CHECK(w.threshold == doctest::Approx(0.7));
  REQUIRE(w.deontic_lexicon.size() == 2);
  CHECK(w.deontic_lexicon[1] == "never");
  CHECK_THROWS_AS(ClassifierWeights::parse("bogus = 1\n"), ConfigError);
}
