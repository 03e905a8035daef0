#include <catch2/catch_amalgamated.hpp>

#include "autocal/identifier.hpp"
#include "support/oracles.hpp"

using namespace autocal;

namespace {

EventTable autocal_table() { return rectified_events(oracle::load_design("autocal")); }

}  // namespace

TEST_CASE("start makes every event a candidate", "[identifier]") {
  const auto s = start(autocal_table());
  CHECK(s.status == IdentifierStatus::Ambiguous);
  CHECK(s.candidate_count() == 26);

  const auto two = start(EventTable({{0, 1, 1, 3}, {1, 2, 1, 2}}, true));
  CHECK(two.candidate_count() == 2);

  CHECK_THROWS(start(enumerate_events(oracle::load_design("autocal"))));
}

TEST_CASE("awaiting the first detection", "[identifier]") {
  auto s = make_identifier(autocal_table());
  CHECK(s.status == IdentifierStatus::AwaitingFirst);
  CHECK_THROWS_AS(observe(s, 0.5), std::logic_error);
  s = first_detection(std::move(s));
  CHECK(s.status == IdentifierStatus::Ambiguous);
  CHECK_THROWS_AS(first_detection(s), std::logic_error);
}

TEST_CASE("worked scenario narrows 26 -> 11 -> 2 -> 1", "[identifier]") {
  auto s = start(autocal_table());
  s = observe(std::move(s), 0.5);
  CHECK(s.status == IdentifierStatus::Ambiguous);
  CHECK(s.candidate_count() == 11);
  s = observe(std::move(s), 0.75);
  CHECK(s.status == IdentifierStatus::Ambiguous);
  CHECK(s.candidate_count() == 2);
  s = observe(std::move(s), 0.25);
  REQUIRE(s.status == IdentifierStatus::Identified);
  CHECK(s.candidates == std::vector<std::size_t>{7});
  CHECK(*s.current_event == 10);
  CHECK(*s.rho == 7.5);
  CHECK_THROWS_AS(observe(s, 0.5), std::logic_error);
}

TEST_CASE("impossible gap gives NoMatch", "[identifier]") {
  auto s = observe(start(autocal_table()), 99);
  CHECK(s.status == IdentifierStatus::NoMatch);
  CHECK(s.candidates.empty());
  CHECK_FALSE(s.rho.has_value());
}

TEST_CASE("candidates only shrink", "[identifier][property]") {
  const auto table = autocal_table();
  auto s = start(table);
  for (double gap : {0.5, 0.75}) {
    const auto before = s.candidates;
    s = observe(std::move(s), gap);
    for (std::size_t p : s.candidates) CHECK(std::find(before.begin(), before.end(), p) != before.end());
  }
}

TEST_CASE("no-detection rule", "[identifier]") {
  const auto d = oracle::load_design("autocal");
  const auto s = start(rectified_events(d));

  const auto hit = check_no_detection(s, d, 2.80);
  REQUIRE(hit.estimate);
  CHECK(*hit.estimate == Catch::Approx(3.75));
  CHECK(hit.state.status == IdentifierStatus::Exhausted);

  CHECK_FALSE(check_no_detection(s, d, 0.10).estimate);
  CHECK_FALSE(check_no_detection(s, d, 2.75).estimate);  // strict
}

TEST_CASE("closed-loop corrector", "[identifier][corrector]") {
  ClosedLoopCorrector c{9.0};
  c = corrector_update(std::move(c), 9.0, 0.0);
  CHECK_FALSE(c.fit());
  CHECK_FALSE(c.corrected_length(0.0));
  c = corrector_update(std::move(c), 7.5, 1.53);
  REQUIRE(c.fit());
  CHECK(c.fit()->scale == Catch::Approx(1.02));
  CHECK(c.fit()->offset == Catch::Approx(0.0).margin(1e-12));
  CHECK(*c.corrected_length(1.53) == Catch::Approx(7.5));

  ClosedLoopCorrector ideal{13.0};
  for (double rho : {12.5, 11.0, 9.75}) ideal = corrector_update(std::move(ideal), rho, 13.0 - rho);
  for (double rho : {12.0, 8.0, 2.5}) CHECK(*ideal.corrected_length(13.0 - rho) == Catch::Approx(rho));

  ClosedLoopCorrector same{5.0};
  same = corrector_update(std::move(same), 4.0, 1.0);
  same = corrector_update(std::move(same), 4.0, 1.1);
  CHECK_FALSE(same.fit());  // rho never changed
}

TEST_CASE("run_trace on the worked scenario", "[identifier][replay]") {
  const auto d = oracle::load_design("autocal");
  const auto r = run_trace(d, simulate(d, EncoderModel::ideal(), 9.05, 1));
  CHECK(r.status == IdentifierStatus::Identified);
  CHECK(*r.rho == 7.5);
  CHECK(r.detections_used == 4);
  CHECK(*r.stroke == Catch::Approx(1.5));
  CHECK(r.candidate_history == std::vector<std::size_t>{26, 11, 2, 1});
  REQUIRE(r.fit);
  CHECK(r.fit->scale == Catch::Approx(1.0));
}

TEST_CASE("run_trace recovers the encoder scale", "[identifier][replay]") {
  const auto d = oracle::load_design("autocal");
  const auto r = run_trace(d, simulate(d, EncoderModel{1.02, 0.4, 0, 0}, 9.05, 1));
  REQUIRE(r.status == IdentifierStatus::Identified);
  CHECK(*r.rho == 7.5);
  REQUIRE(r.fit);
  CHECK(r.fit->scale == Catch::Approx(1.02));
  CHECK(r.fit->offset == Catch::Approx(0.4 + 1.02 * 0.05));
}

TEST_CASE("constant gaps never identify before the table runs out", "[identifier][replay]") {
  const auto d = oracle::load_design("example1");
  // From just below the first event, every gap is 1.0 and the start cannot be pinned.
  const auto r = run_trace(d, simulate(d, EncoderModel::ideal(), 8.5, 1));
  CHECK(r.status == IdentifierStatus::Ambiguous);
  CHECK_FALSE(r.rho.has_value());

  ObservationTrace tail = simulate(d, EncoderModel::ideal(), 8.5, 1);
  tail.trailing_wound = 4.5;  // more than d_n - d_0 = 4
  const auto e = run_trace(d, tail);
  CHECK(e.status == IdentifierStatus::Exhausted);
  CHECK(*e.rho == Catch::Approx(5.0));
}

TEST_CASE("empty trace", "[identifier][replay]") {
  const auto d = oracle::load_design("autocal");
  const auto r = run_trace(d, ObservationTrace{});
  CHECK(r.status == IdentifierStatus::AwaitingFirst);
  CHECK(r.detections_used == 0);
}

TEST_CASE("jitter under half the tolerance leaves the result unchanged", "[identifier][replay]") {
  const auto d = oracle::load_design("autocal");
  const auto ideal = run_trace(d, simulate(d, EncoderModel::ideal(), 9.05, 1));
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto noisy = run_trace(d, simulate(d, EncoderModel{1, 0, 0.005, seed}, 9.05, 1));
    CHECK(noisy.status == ideal.status);
    CHECK(noisy.rho == ideal.rho);
  }
}

TEST_CASE("identified stroke matches the stroke profile", "[identifier][property]") {
  for (const auto& name : oracle::fixture_names()) {
    const auto d = oracle::load_design(name);
    const auto table = rectified_events(d);
    const auto prof = stroke_profile(table);
    for (std::size_t p = 0; p < table.size(); ++p) {
      const auto r = run_trace(d, simulate(d, EncoderModel::ideal(), table[p].rho + 0.01, d.geometry().b()));
      if (!prof.starts[p].identifiable()) {
        CHECK(r.status != IdentifierStatus::Identified);
        continue;
      }
      INFO(name << " start " << p);
      REQUIRE(r.status == IdentifierStatus::Identified);
      CHECK(*r.start_event == p);
      CHECK(r.detections_used == *prof.starts[p].k + 1);
      CHECK(*r.stroke == Catch::Approx(prof.starts[p].stroke).margin(1e-9));
      CHECK(*r.rho == table[p + *prof.starts[p].k].rho);
    }
  }
}
